//! Second-order Bloch-Siegert treatment of the Rabi Hamiltonian.
//!
//! `U = exp(S)` with `S = Λ(aσ_− − a†σ_+) + ξ(a² − a†²)σ_z` maps the Rabi
//! Hamiltonian onto `H_BS − μ/2` up to third-order terms. The c-number `−μ/2`
//! is not part of [`bs_hamiltonian`](super::bs_hamiltonian) but is included in
//! every energy returned here so they approximate the Rabi spectrum.
//!
//! Doublet eigenvectors of `H_BS` use the mixing angle `θ_n ∈ (−π/2, 0)`:
//!
//! `|n,+⟩ = cos θ_n |e,n−1⟩ − sin θ_n |g,n⟩`
//! `|n,−⟩ = −sin θ_n |e,n−1⟩ − cos θ_n |g,n⟩`
//!
//! These are exact eigenvectors for every detuning and reduce to
//! `(|e,n−1⟩ ± |g,n⟩)/√2` on resonance.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, Operators, Qubit, SpaceSpec, C64};

use super::eigen::{DoubletSign, Eigensystem, Label};
use super::SystemParams;

/// Anti-Hermitian generator `S` with `U = exp(S)`.
pub fn bs_generator(p: &SystemParams, spec: SpaceSpec) -> OperatorMatrix {
    let o = Operators::new(spec);
    let a_term = &(&o.a * &o.sm) - &(&o.a_dag * &o.sp);
    let b_term = &(&(&o.a * &o.a) - &(&o.a_dag * &o.a_dag)) * &o.sz;
    &(a_term * p.big_lambda()) + &(b_term * p.xi())
}

/// `U = exp{Λ(aσ_− − a†σ_+) + ξ(a² − a†²)σ_z}` by dense matrix exponential.
pub fn bs_unitary(p: &SystemParams, spec: SpaceSpec) -> OperatorMatrix {
    p.check_perturbative();
    if p.g == 0.0 {
        return OperatorMatrix::identity(spec.dim());
    }
    OperatorMatrix::from_matrix(bs_generator(p, spec).into_matrix().exp())
}

/// Mixing angle `θ_n = arctan[(Δ_n − √(Δ_n² + 4g²n)) / (2g√n)]`, with
/// `Δ_n = Δ + 2μn`.
pub fn bs_mixing_angle(p: &SystemParams, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("mixing angle needs n >= 1".into()));
    }
    if p.g <= 0.0 {
        return Err(Error::InvalidParameter("mixing angle undefined at g = 0".into()));
    }
    let d = p.delta_bs(n);
    let c = p.g * (n as f64).sqrt();
    Ok(((d - (d * d + 4.0 * c * c).sqrt()) / (2.0 * c)).atan())
}

/// `θ_n`, continued to `g = 0` by its one-sided limit.
pub(crate) fn mixing_angle_or_limit(p: &SystemParams, n: usize) -> f64 {
    match bs_mixing_angle(p, n) {
        Ok(t) => t,
        Err(_) => {
            let d = p.delta_bs(n);
            if d > 0.0 {
                0.0
            } else if d < 0.0 {
                -FRAC_PI_2
            } else {
                -FRAC_PI_4
            }
        }
    }
}

/// Amplitudes `(c_e, c_g)` of `|n,±⟩` on `|e,n−1⟩` and `|g,n⟩`.
pub fn doublet_coefficients(p: &SystemParams, n: usize, sign: DoubletSign) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("doublets start at n = 1".into()));
    }
    let (s, c) = mixing_angle_or_limit(p, n).sin_cos();
    Ok(match sign {
        DoubletSign::Plus => (c, -s),
        DoubletSign::Minus => (-s, -c),
    })
}

/// `E_{n,±} = (n − ½)ω_r − μ ± ½√(Δ_n² + 4g²n)`
pub fn bs_doublet_energy(p: &SystemParams, n: usize, sign: DoubletSign) -> f64 {
    let d = p.delta_bs(n);
    let r = (d * d + 4.0 * p.g * p.g * n as f64).sqrt();
    (n as f64 - 0.5) * p.omega_r - p.mu() + 0.5 * sign.sign() * r
}

/// `E_g0 = −ω̃_q/2 − μ/2 = −ω_a/2 − μ`
pub fn bs_ground_energy(p: &SystemParams) -> f64 {
    -0.5 * p.omega_a - p.mu()
}

/// Perturbative eigensystem `{U|g0⟩, U|n,±⟩ : n = 1..=n_levels}` sorted by
/// energy. Phases follow the doublet convention above, not the numeric one.
pub fn bs_eigensystem(p: &SystemParams, spec: SpaceSpec, n_levels: usize) -> Result<Eigensystem> {
    if n_levels + 2 > spec.n_max() {
        return Err(Error::InsufficientTruncation(format!(
            "{n_levels} doublets need n_max >= {}, have {}",
            n_levels + 2,
            spec.n_max()
        )));
    }
    let u = bs_unitary(p, spec);
    let mut levels: Vec<(f64, Label, nalgebra::DVector<C64>)> = Vec::with_capacity(2 * n_levels + 1);
    levels.push((bs_ground_energy(p), Label::Ground, u.apply(&spec.basis_state(Qubit::Ground, 0))));
    for n in 1..=n_levels {
        for sign in [DoubletSign::Minus, DoubletSign::Plus] {
            let (ce, cg) = doublet_coefficients(p, n, sign)?;
            let bare = spec.basis_state(Qubit::Excited, n - 1) * C64::new(ce, 0.0)
                + spec.basis_state(Qubit::Ground, n) * C64::new(cg, 0.0);
            levels.push((bs_doublet_energy(p, n, sign), Label::Doublet(n, sign), u.apply(&bare)));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let energies = levels.iter().map(|l| l.0).collect();
    let parities = levels.iter().map(|l| l.1.parity()).collect();
    let labels = levels.iter().map(|l| Some(l.1)).collect();
    let states = DMatrix::from_columns(&levels.into_iter().map(|l| l.2).collect::<Vec<_>>());
    Ok(Eigensystem::from_parts(energies, states, parities, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bs_hamiltonian, rabi_eigensystem, rabi_hamiltonian};
    fn resonant(g_ghz: f64) -> SystemParams {
        SystemParams::from_ghz(6.0, 6.0, g_ghz).unwrap()
    }

    #[test]
    fn unitary_identity_at_zero_coupling() {
        let s = SpaceSpec::new(6).unwrap();
        let u = bs_unitary(&resonant(0.0), s);
        assert_eq!(u, OperatorMatrix::identity(s.dim()));
    }

    #[test]
    fn unitary_is_unitary() {
        let s = SpaceSpec::new(12).unwrap();
        let u = bs_unitary(&resonant(2.0), s);
        let err = (&u.dagger() * &u).max_abs_diff(&OperatorMatrix::identity(s.dim()));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn ground_amplitude_on_e1() {
        let s = SpaceSpec::new(12).unwrap();
        let mut prev = None;
        for g in [0.4, 0.2, 0.1] {
            let p = resonant(g);
            let u = bs_unitary(&p, s);
            let el = u.matrix()[(s.index(Qubit::Excited, 1), s.index(Qubit::Ground, 0))];
            let l = p.big_lambda();
            let resid = (el.re + l).abs();
            assert!(resid < l.powi(3), "{resid} vs {}", l.powi(3));
            if let Some(r) = prev {
                let ratio: f64 = r / resid;
                assert!((6.0..10.0).contains(&ratio), "{ratio}");
            }
            prev = Some(resid);
        }
    }

    /// Largest entry of `A − B` restricted to Fock states `n ≤ n_cut`.
    fn low_block_diff(s: SpaceSpec, a: &OperatorMatrix, b: &OperatorMatrix, n_cut: usize) -> f64 {
        let idx: Vec<usize> = (0..s.dim()).filter(|&i| s.label(i).1 <= n_cut).collect();
        let d = a.matrix() - b.matrix();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| d[(idx[r], idx[c])]);
        sub.norm()
    }

    #[test]
    fn transformed_rabi_matches_bs_to_third_order() {
        let s = SpaceSpec::new(14).unwrap();
        let ratio_at = |g: f64| {
            let p = resonant(g);
            let u = bs_unitary(&p, s);
            let hr = rabi_hamiltonian(&p, s);
            let t = &(&u.dagger() * &hr) * &u;
            let hbs = &bs_hamiltonian(&p, s) - &OperatorMatrix::identity(s.dim()).scale(0.5 * p.mu());
            low_block_diff(s, &t, &hbs, 6) / hr.norm()
        };
        let r1 = ratio_at(0.4);
        let r2 = ratio_at(0.2);
        let fall = r1 / r2;
        assert!((6.5..9.5).contains(&fall), "{fall}");
    }

    #[test]
    fn mixing_angle_values() {
        let p = resonant(1.0);
        let theta2 = bs_mixing_angle(&p, 2).unwrap();
        // independent closed form: θ = −½·atan2(2g√n, Δ_n)
        let oracle = -0.5 * (2.0 * p.g * 2f64.sqrt()).atan2(p.delta_bs(2));
        assert!((theta2 - oracle).abs() < 1e-14);
        assert!((theta2 - (-0.726_743_150_790_151_7)).abs() < 1e-13);

        // Δ_n^BS = 0 exactly for ω_a² = ω_r² − 2g²n
        let (wr, g, n) = (TAU_6, std::f64::consts::TAU * 0.5, 3usize);
        let wa = (wr * wr - 2.0 * g * g * n as f64).sqrt();
        let q = SystemParams::new(wa, wr, g).unwrap();
        assert!(q.delta_bs(n).abs() < 1e-12);
        assert!((bs_mixing_angle(&q, n).unwrap() + FRAC_PI_4).abs() < 1e-12);

        let far = SystemParams::from_ghz(60.0, 6.0, 0.01).unwrap();
        let t = bs_mixing_angle(&far, 1).unwrap();
        assert!(t < 0.0 && t > -1e-3);

        assert!(bs_mixing_angle(&resonant(0.0), 1).is_err());
        assert!(bs_mixing_angle(&p, 0).is_err());
    }

    const TAU_6: f64 = std::f64::consts::TAU * 6.0;

    #[test]
    fn doublets_are_bs_eigenvectors_off_resonance() {
        let s = SpaceSpec::new(10).unwrap();
        for p in [
            SystemParams::from_ghz(7.0, 6.0, 0.8).unwrap(),
            SystemParams::from_ghz(5.0, 6.5, 1.2).unwrap(),
            resonant(1.0),
        ] {
            let h = &bs_hamiltonian(&p, s) - &OperatorMatrix::identity(s.dim()).scale(0.5 * p.mu());
            for n in 1..=4 {
                for sign in [DoubletSign::Minus, DoubletSign::Plus] {
                    let (ce, cg) = doublet_coefficients(&p, n, sign).unwrap();
                    let v = s.basis_state(Qubit::Excited, n - 1) * C64::new(ce, 0.0)
                        + s.basis_state(Qubit::Ground, n) * C64::new(cg, 0.0);
                    let e = bs_doublet_energy(&p, n, sign);
                    let r = (h.apply(&v) - &v * C64::new(e, 0.0)).norm();
                    assert!(r < 1e-10 * h.norm(), "{n} {sign:?} {r}");
                }
            }
        }
    }

    #[test]
    fn ground_state_vacuum_weight() {
        let s = SpaceSpec::new(14).unwrap();
        let p = resonant(2.0);
        let es = bs_eigensystem(&p, s, 4).unwrap();
        let g0 = es.state(es.find(Label::Ground).unwrap());
        let w = 1.0 - g0[s.index(Qubit::Ground, 0)].norm_sqr();
        let series = p.big_lambda().powi(2) + 2.0 * p.xi().powi(2);
        assert!((w - series).abs() / series < 0.05, "{w} vs {series}");
        assert!((w - 0.029).abs() < 0.002);
        let photons = crate::hilbert::build_operator(s, crate::hilbert::OperatorKind::Number).expectation(&g0);
        assert!(photons > 0.0);
    }

    #[test]
    fn perturbative_ground_converges_to_exact() {
        let s = SpaceSpec::new(14).unwrap();
        let mut prev: Option<f64> = None;
        for g in [1.2, 0.6, 0.3] {
            let p = resonant(g);
            let l = p.big_lambda();
            assert!(l <= 0.1);
            let bs = bs_eigensystem(&p, s, 3).unwrap();
            let ex = rabi_eigensystem(&p, s).unwrap();
            let a = bs.state(bs.find(Label::Ground).unwrap());
            let b = ex.state(ex.find(Label::Ground).unwrap());
            let infid = 1.0 - a.dotc(&b).norm_sqr();
            assert!(infid < 2.0 * l.powi(4), "{infid}");
            if let Some(pr) = prev {
                assert!(pr / infid > 8.0);
            }
            prev = Some(infid);
        }
    }

    #[test]
    fn energies_scale_as_lambda_cubed() {
        let s = SpaceSpec::new(20).unwrap();
        let err_at = |g: f64| {
            let p = resonant(g);
            let bs = bs_eigensystem(&p, s, 4).unwrap();
            let ex = rabi_eigensystem(&p, s).unwrap();
            (0..6)
                .map(|j| {
                    let l = ex.label(j).unwrap();
                    (ex.energy(j) - bs.energy(bs.find(l).unwrap())).abs()
                })
                .fold(0.0, f64::max)
        };
        let (g_lo, g_hi) = (0.1, 1.0);
        let slope = (err_at(g_hi) / err_at(g_lo)).ln() / (g_hi / g_lo as f64).ln();
        assert!((slope - 3.0).abs() < 0.3, "{slope}");
    }

    #[test]
    fn weak_coupling_doublets_are_bare() {
        let s = SpaceSpec::new(8).unwrap();
        let p = SystemParams::from_ghz(7.0, 6.0, 1e-6).unwrap();
        let es = bs_eigensystem(&p, s, 3).unwrap();
        for n in 1..=3 {
            let up = es.state(es.find(Label::plus(n)).unwrap());
            let dn = es.state(es.find(Label::minus(n)).unwrap());
            assert!(up[s.index(Qubit::Excited, n - 1)].norm() > 1.0 - 1e-9);
            assert!(dn[s.index(Qubit::Ground, n)].norm() > 1.0 - 1e-9);
        }
        assert!(bs_eigensystem(&p, s, 7).is_err());
    }
}
