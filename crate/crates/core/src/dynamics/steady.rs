//! Steady state as the null vector of the Liouvillian.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::liouville::{unvectorize, vectorize, Liouvillian};

use super::DensityMatrix;

/// The second-smallest singular value must exceed the smallest by this
/// factor for the steady state to count as unique.
pub const UNIQUENESS_RATIO: f64 = 1e3;

/// Relative residual `‖Lρ‖ / ‖L‖` accepted for the null vector.
const RESIDUAL_TOL: f64 = 1e-9;

/// Unique `ρ_ss` with `L ρ_ss = 0`, from the right singular vector of the
/// smallest singular value. Fails with
/// [`Error::DegenerateSteadyState`] when more than one singular value is
/// within [`UNIQUENESS_RATIO`] of zero.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.dim();
    let sup = l.superop();
    let svd = sup.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let scale = sv.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);

    // Anything within the uniqueness margin of the smallest value, or at
    // machine precision relative to ‖L‖, counts as a null direction.
    let floor = (sv[0] * UNIQUENESS_RATIO).max(1e-13 * scale);
    let null = sv.iter().take_while(|&&s| s <= floor).count();
    if null != 1 {
        return Err(Error::DegenerateSteadyState(null, sv.iter().take(null.max(2) + 2).copied().collect()));
    }

    let row = v_t.row(order[0]);
    let v = row.adjoint();
    let mut rho = unvectorize(&v, d);
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::DegenerateSteadyState(1, sv.iter().take(3).copied().collect()));
    }
    rho /= tr;
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);

    let resid = steady_state_residual(l, &rho);
    if resid > RESIDUAL_TOL * scale {
        return Err(Error::InvalidParameter(format!(
            "steady-state residual {resid:.3e} exceeds {:.1e}·‖L‖",
            RESIDUAL_TOL
        )));
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

/// `‖L vec(ρ)‖₂`
pub fn steady_state_residual(l: &Liouvillian, rho: &DMatrix<C64>) -> f64 {
    (l.superop() * vectorize(rho)).norm()
}
