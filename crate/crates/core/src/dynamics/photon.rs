//! Photon generation out of the dressed ground state.

use crate::error::{Error, Result};
use crate::hilbert::{Operators, SpaceSpec};
use crate::liouville::dressed_lindbladian;
use crate::models::{rabi_eigensystem, rabi_hamiltonian, Label, SystemParams};
use crate::noise::Baths;

use super::{evolve, linspace, DensityMatrix, EvolveOptions, Trajectory};

/// Relative change of the rate under four extra photons below which the
/// truncation counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone)]
pub struct PhotonRate {
    /// `Tr[a†a · L(|g̃0⟩⟨g̃0|)]`, the initial photon production rate.
    pub beta: f64,
    /// `⟨g̃0|a†a|g̃0⟩`, the virtual photon population.
    pub virtual_photons: f64,
}

/// Initial growth rate of `⟨a†a⟩` under the dressed equation over the
/// lowest `n_levels` levels, starting in the dressed ground state.
pub fn photon_rate_numeric(p: &SystemParams, n_max: usize, baths: &Baths, n_levels: usize) -> Result<PhotonRate> {
    let (rho0, l, ops) = setup(p, n_max, baths, n_levels)?;
    let drho = l.apply(rho0.matrix());
    let beta = DensityMatrix::from_matrix_unchecked(drho).expectation(&ops.n).re;
    Ok(PhotonRate { beta, virtual_photons: rho0.expectation(&ops.n).re })
}

fn setup(
    p: &SystemParams,
    n_max: usize,
    baths: &Baths,
    n_levels: usize,
) -> Result<(DensityMatrix, crate::liouville::Liouvillian, Operators)> {
    let spec = SpaceSpec::new(n_max)?;
    let h = rabi_hamiltonian(p, spec);
    let es = rabi_eigensystem(p, spec)?;
    let g0 = es.find(Label::Ground)?;
    let l = dressed_lindbladian(&es, baths, &h, n_levels)?;
    let rho0 = DensityMatrix::pure(&es.state(g0))?;
    Ok((rho0, l, Operators::new(spec)))
}

/// Linear fit of `⟨a†a⟩(t)` from the dressed ground state.
#[derive(Debug, Clone)]
pub struct PhotonGrowth {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub trajectory: Trajectory,
}

/// Evolves for `t_end` and fits a line through `samples` points.
pub fn photon_growth(
    p: &SystemParams,
    n_max: usize,
    baths: &Baths,
    n_levels: usize,
    t_end: f64,
    samples: usize,
) -> Result<PhotonGrowth> {
    if samples < 3 || !(t_end > 0.0) {
        return Err(Error::InvalidParameter("photon growth needs t_end > 0 and at least 3 samples".into()));
    }
    let (rho0, l, _) = setup(p, n_max, baths, n_levels)?;
    let trajectory = evolve(&rho0, &l, &linspace(0.0, t_end, samples), &EvolveOptions::default())?;
    let (slope, intercept, r_squared) = linear_fit(&trajectory.times(), &trajectory.photons());
    Ok(PhotonGrowth { slope, intercept, r_squared, trajectory })
}

/// Ordinary least squares `y ≈ slope·x + intercept`, with `R²`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub beta: f64,
    /// Rate with four more photons and four more levels.
    pub beta_enlarged: f64,
    pub relative_change: f64,
    pub converged: bool,
}

/// Repeats [`photon_rate_numeric`] at `n_max + 4` and `n_levels + 4`.
pub fn convergence_check(p: &SystemParams, n_max: usize, baths: &Baths, n_levels: usize) -> Result<ConvergenceReport> {
    let beta = photon_rate_numeric(p, n_max, baths, n_levels)?.beta;
    let beta_enlarged = photon_rate_numeric(p, n_max + 4, baths, n_levels + 4)?.beta;
    let relative_change = if beta_enlarged == 0.0 {
        beta.abs()
    } else {
        ((beta - beta_enlarged) / beta_enlarged).abs()
    };
    Ok(ConvergenceReport { beta, beta_enlarged, relative_change, converged: relative_change < CONVERGENCE_TOLERANCE })
}
