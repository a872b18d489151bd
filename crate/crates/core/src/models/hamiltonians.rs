use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, Operators, SpaceSpec};

use super::SystemParams;

/// `H_R = ω_r a†a + (ω_a/2)σ_z + g X σ_x`
pub fn rabi_hamiltonian(p: &SystemParams, spec: SpaceSpec) -> OperatorMatrix {
    let o = Operators::new(spec);
    &(&o.n * p.omega_r + &o.sz * (0.5 * p.omega_a)) + &(&o.x * &o.sx) * p.g
}

/// `H_JC = ω_r a†a + (ω_a/2)σ_z + g(aσ_+ + a†σ_−)`
pub fn jc_hamiltonian(p: &SystemParams, spec: SpaceSpec) -> OperatorMatrix {
    let o = Operators::new(spec);
    let i_plus = &(&o.a * &o.sp) + &(&o.a_dag * &o.sm);
    &(&o.n * p.omega_r + &o.sz * (0.5 * p.omega_a)) + &(i_plus * p.g)
}

/// Excitation number `N_q = (1 + σ_z)/2 + a†a`.
pub fn excitation_number(spec: SpaceSpec) -> OperatorMatrix {
    let o = Operators::new(spec);
    &(&o.id + &o.sz) * 0.5 + o.n
}

/// `H_disp = (ω_r + χσ_z + ζ)a†a + (ω_a + χ)/2·σ_z + ζσ_z(a†a)²`, diagonal in
/// the bare basis.
pub fn dispersive_hamiltonian(p: &SystemParams, spec: SpaceSpec) -> Result<OperatorMatrix> {
    let chi = p.chi()?;
    let zeta = p.zeta()?;
    if p.delta().abs() < 5.0 * p.g {
        log::warn!(
            "|Delta| = {:.3e} < 5g = {:.3e}: dispersive expansion is unreliable",
            p.delta().abs(),
            5.0 * p.g
        );
    }
    let diag: Vec<f64> = (0..spec.dim())
        .map(|i| {
            let (q, n) = spec.label(i);
            let sz = if q == crate::hilbert::Qubit::Excited { 1.0 } else { -1.0 };
            let n = n as f64;
            (p.omega_r + chi * sz + zeta) * n + 0.5 * (p.omega_a + chi) * sz + zeta * sz * n * n
        })
        .collect();
    Ok(OperatorMatrix::from_diagonal(&diag))
}

/// `H_BS = (ω_r + μσ_z)a†a + (ω̃_q/2)σ_z + g(aσ_+ + a†σ_−)`
pub fn bs_hamiltonian(p: &SystemParams, spec: SpaceSpec) -> OperatorMatrix {
    let o = Operators::new(spec);
    let mu = p.mu();
    let i_plus = &(&o.a * &o.sp) + &(&o.a_dag * &o.sm);
    let shifted_n = &(&o.n * p.omega_r) + &(&(&o.sz * &o.n) * mu);
    &(shifted_n + &o.sz * (0.5 * p.omega_q_tilde())) + &(i_plus * p.g)
}

/// Qubit-frequency-modulated Hamiltonian in the dispersive frame, with
/// `f(t) = ε_z cos(ω_d t)`:
///
/// `H_D(t) = H_0' + χ'(t)a†aσ_z + f σ_z − 2f(λI_+ + ΛI_CR) − 2fλΛσ_z(a² + a†²)`
///
/// where `H_0' = [ω_r + (χ+μ)σ_z]a†a + (ω_a + χ + μ)σ_z/2` and
/// `χ'(t) = −2(λ² + Λ²)f(t)`. No rotating-wave approximation is made.
pub fn modulated_dispersive_hamiltonian(
    p: &SystemParams,
    spec: SpaceSpec,
    eps_z: f64,
    omega_d: f64,
    t: f64,
) -> Result<OperatorMatrix> {
    let lam = p.lambda_disp()?;
    let chi = p.chi()?;
    let big = p.big_lambda();
    let mu = p.mu();
    let f = eps_z * (omega_d * t).cos();
    let o = Operators::new(spec);

    let nsz = &o.n * &o.sz;
    let h0 = &(&o.n * p.omega_r + &nsz * (chi + mu)) + &(&o.sz * (0.5 * (p.omega_a + chi + mu)));
    if f == 0.0 {
        return Ok(h0);
    }
    let chi_t = -2.0 * (lam * lam + big * big) * f;
    let i_plus = &(&o.a * &o.sp) + &(&o.a_dag * &o.sm);
    let i_cr = &(&o.a * &o.sm) + &(&o.a_dag * &o.sp);
    let squeeze = &o.sz * &(&(&o.a * &o.a) + &(&o.a_dag * &o.a_dag));

    let mut h = h0 + &nsz * chi_t + &o.sz * f;
    h = h - (&(&i_plus * lam) + &(&i_cr * big)) * (2.0 * f);
    h = h - squeeze * (2.0 * f * lam * big);
    if !h.is_hermitian(1e-12) {
        return Err(Error::NotHermitian(h.hermiticity_error()));
    }
    Ok(h)
}
