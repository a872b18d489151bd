//! Time integration of master equations, steady states, the driven
//! transmission sweep and the dephasing photon rate.
//!
//! Evolution never renormalizes the state: trace and Hermiticity drift are
//! recorded on every sample as quality metrics.

mod integrator;
mod photon;
mod steady;
mod transmission;

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, Operators, SpaceSpec, C64, I};
use crate::liouville::{unvectorize, vectorize, DissipatorTerm, Liouvillian};

pub use integrator::{linspace, Dopri5, StepStats, Tolerances};
pub use photon::{
    convergence_check, photon_growth, photon_rate_numeric, ConvergenceReport, PhotonGrowth, PhotonRate,
    CONVERGENCE_TOLERANCE,
};
pub use steady::{steady_state, steady_state_residual, UNIQUENESS_RATIO};
pub use transmission::{
    driven_transmission_sweep, fit_two_lorentzians, LorentzianFit, Peak, SweepPoint, TransmissionModel,
};

/// Hermiticity tolerance of a valid density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance of a valid density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated as numerical noise.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let rho = Self(m);
        let herm = rho.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr} != 1")));
        }
        let hermitized = (&rho.0 + rho.0.adjoint()) * C64::new(0.5, 0.0);
        let min = hermitized.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < POSITIVITY_FLOOR {
            return Err(Error::InvalidParameter(format!("density matrix eigenvalue {min:.3e} < 0")));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state norm {n} != 1")));
        }
        Ok(Self(psi * psi.adjoint()))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// `‖ρ − ρ†‖_max`
    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Tr[ρ O]`
    pub fn expectation(&self, o: &OperatorMatrix) -> C64 {
        trace_product(&self.0, o.matrix())
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn population(&self, psi: &DVector<C64>) -> f64 {
        psi.dotc(&(&self.0 * psi)).re
    }
}

fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    // Tr[AB] = Σ_ij A_ij B_ji
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// Observables recorded at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// `⟨a†a⟩`
    pub photons: f64,
    pub sigma_z: f64,
    pub re_a: f64,
    pub im_a: f64,
    /// `⟨ψ_ref|ρ|ψ_ref⟩` when a reference state was given.
    pub fidelity: Option<f64>,
    pub purity: f64,
    /// `|Tr ρ − 1|`
    pub trace_drift: f64,
    /// `‖ρ − ρ†‖_max`
    pub hermiticity: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Density matrices at every grid time, when requested.
    pub snapshots: Option<Vec<DMatrix<C64>>>,
    pub final_state: DensityMatrix,
    pub stats: StepStats,
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "t_ns,photons,sigma_z,re_a,im_a,fidelity,purity,trace_drift,hermiticity";

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn photons(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.photons).collect()
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.fidelity).collect()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_drift).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.hermiticity).fold(0.0, f64::max)
    }

    /// One row per sample under [`TRAJECTORY_CSV_HEADER`]; an absent
    /// fidelity is left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            let fid = s.fidelity.map(|f| format!("{f:.12e}")).unwrap_or_default();
            writeln!(
                w,
                "{:.9e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.3e},{:.3e}",
                s.t, s.photons, s.sigma_z, s.re_a, s.im_a, fid, s.purity, s.trace_drift, s.hermiticity
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvolveOptions {
    pub integrator: Dopri5,
    /// State whose population is recorded as the fidelity.
    pub reference: Option<DVector<C64>>,
    pub store_snapshots: bool,
}

impl EvolveOptions {
    pub fn with_reference(mut self, psi: DVector<C64>) -> Self {
        self.reference = Some(psi);
        self
    }

    pub fn with_snapshots(mut self) -> Self {
        self.store_snapshots = true;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.integrator.tol = tol;
        self
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.integrator.h_max = Some(h_max);
        self
    }
}

/// Qubit-resonator space implied by a density-matrix dimension.
fn space_of(dim: usize) -> Result<SpaceSpec> {
    if dim % 2 != 0 || dim < 6 {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not a qubit ⊗ Fock space with n_max >= 2"
        )));
    }
    SpaceSpec::new(dim / 2 - 1)
}

struct Recorder {
    ops: Operators,
    reference: Option<DVector<C64>>,
    samples: Vec<Sample>,
    snapshots: Option<Vec<DMatrix<C64>>>,
}

impl Recorder {
    fn new(dim: usize, opts: &EvolveOptions, n: usize) -> Result<Self> {
        let ops = Operators::new(space_of(dim)?);
        if let Some(r) = &opts.reference {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
        }
        Ok(Self {
            ops,
            reference: opts.reference.clone(),
            samples: Vec::with_capacity(n),
            snapshots: opts.store_snapshots.then(|| Vec::with_capacity(n)),
        })
    }

    fn record(&mut self, t: f64, rho: DMatrix<C64>) {
        let r = DensityMatrix::from_matrix_unchecked(rho);
        let a = r.expectation(&self.ops.a);
        self.samples.push(Sample {
            t,
            photons: r.expectation(&self.ops.n).re,
            sigma_z: r.expectation(&self.ops.sz).re,
            re_a: a.re,
            im_a: a.im,
            fidelity: self.reference.as_ref().map(|psi| r.population(psi)),
            purity: r.purity(),
            trace_drift: (r.0.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity: r.hermiticity_error(),
        });
        if let Some(s) = &mut self.snapshots {
            s.push(r.0);
        }
    }

    fn finish(self, last: DMatrix<C64>, stats: StepStats) -> Trajectory {
        Trajectory {
            samples: self.samples,
            snapshots: self.snapshots,
            final_state: DensityMatrix::from_matrix_unchecked(last),
            stats,
        }
    }
}

/// Integrates `ρ̇ = Lρ` from `grid[0]`, sampling at every grid time.
///
/// When `L` carries a secular frame the dissipator commutes with the
/// Hamiltonian part, so only the dissipator is integrated and `e^{−iHt}` is
/// applied exactly at the samples. This removes the stiffness of optical
/// frequencies against MHz rates.
pub fn evolve(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let d = l.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
    }
    integrator::check_grid(grid)?;
    let mut rec = Recorder::new(d, opts, grid.len())?;
    let t0 = grid[0];
    let mut last = rho0.0.clone();

    let stats = match l.secular_frame() {
        Some(frame) => {
            let sup = l.dissipator_superop();
            opts.integrator.integrate(
                |_, y, dy| dy.gemv(C64::new(1.0, 0.0), sup, y, C64::new(0.0, 0.0)),
                vectorize(&rho0.0),
                grid,
                |_, t, y| {
                    let u = frame.propagator(t - t0);
                    let rho = &u * unvectorize(y, d) * u.adjoint();
                    last = rho.clone();
                    rec.record(t, rho);
                    Ok(())
                },
            )?
        }
        None => {
            let sup = l.superop();
            opts.integrator.integrate(
                |_, y, dy| dy.gemv(C64::new(1.0, 0.0), sup, y, C64::new(0.0, 0.0)),
                vectorize(&rho0.0),
                grid,
                |_, t, y| {
                    let rho = unvectorize(y, d);
                    last = rho.clone();
                    rec.record(t, rho);
                    Ok(())
                },
            )?
        }
    };
    Ok(rec.finish(last, stats))
}

/// Integrates `ρ̇ = −i[H(t), ρ] + Σ rate·D[L]ρ` with `H` evaluated at every
/// Runge-Kutta stage.
pub fn evolve_time_dependent<H>(
    rho0: &DensityMatrix,
    h_of_t: H,
    terms: &[DissipatorTerm],
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory>
where
    H: Fn(f64) -> Result<OperatorMatrix>,
{
    let d = rho0.dim();
    for t in terms {
        if t.jump.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: t.jump.dim() });
        }
    }
    integrator::check_grid(grid)?;
    let mut rec = Recorder::new(d, opts, grid.len())?;
    let mut last = rho0.0.clone();

    // Precompute L, L† and L†L once per term.
    let parts: Vec<(DMatrix<C64>, DMatrix<C64>, DMatrix<C64>, f64)> = terms
        .iter()
        .filter(|t| t.rate > 0.0)
        .map(|t| {
            let l = t.jump.matrix().clone();
            let ld = l.adjoint();
            let ldl = &ld * &l;
            (l, ld, ldl, t.rate)
        })
        .collect();
    let mut h_err: Option<Error> = None;

    let stats = opts.integrator.integrate(
        |t, y, dy| {
            let rho = unvectorize(y, d);
            let h = match h_of_t(t) {
                Ok(h) if h.dim() == d => h,
                Ok(h) => {
                    h_err.get_or_insert(Error::DimensionMismatch { expected: d, found: h.dim() });
                    dy.fill(C64::new(f64::NAN, 0.0));
                    return;
                }
                Err(e) => {
                    h_err.get_or_insert(e);
                    dy.fill(C64::new(f64::NAN, 0.0));
                    return;
                }
            };
            let hm = h.matrix();
            let mut out = (hm * &rho - &rho * hm) * (-I);
            for (l, ld, ldl, rate) in &parts {
                let r = C64::new(*rate, 0.0);
                out += (l * &rho * ld - (ldl * &rho + &rho * ldl) * C64::new(0.5, 0.0)) * r;
            }
            dy.copy_from_slice(out.as_slice());
        },
        vectorize(&rho0.0),
        grid,
        |_, t, y| {
            let rho = unvectorize(y, d);
            last = rho.clone();
            rec.record(t, rho);
            Ok(())
        },
    );
    if let Some(e) = h_err {
        return Err(e);
    }
    let stats = stats?;
    Ok(rec.finish(last, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Qubit;
    use crate::liouville::{assemble, dressed_lindbladian, standard_lindbladian, Bath, TermKind, TermMeta};
    use crate::models::{rabi_eigensystem, rabi_hamiltonian, Label, SystemParams};
    use crate::noise::{Baths, NoiseSpectrum};
    use crate::units::mhz;

    #[test]
    fn density_validation() {
        let s = SpaceSpec::new(2).unwrap();
        let psi = s.basis_state(Qubit::Excited, 1);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::new(rho.matrix() * C64::new(2.0, 0.0)).is_err());
        let mut m = rho.into_matrix();
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.1, 0.0),
            C64::new(-0.1, 0.0),
        ]));
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn unitary_evolution_conserves_purity() {
        let s = SpaceSpec::new(4).unwrap();
        let p = SystemParams::from_ghz(6.0, 5.5, 0.3).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let l = assemble(&h, Vec::new()).unwrap();
        let rho0 = DensityMatrix::pure(&s.basis_state(Qubit::Excited, 0)).unwrap();
        let grid = linspace(0.0, 1000.0 / p.omega_r, 5);
        let tr = evolve(&rho0, &l, &grid, &EvolveOptions::default()).unwrap();
        for smp in &tr.samples {
            assert!((smp.purity - 1.0).abs() < 1e-8, "{}", smp.purity);
        }
        assert!(tr.max_trace_drift() < 1e-7);
    }

    #[test]
    fn photon_decay_is_exponential() {
        let s = SpaceSpec::new(3).unwrap();
        let h = OperatorMatrix::zeros(s.dim());
        let o = Operators::new(s);
        let kappa = 0.7;
        let meta = TermMeta { bath: Bath::Kappa, kind: TermKind::Bare("a"), formula: "kappa" };
        let l = assemble(&h, vec![DissipatorTerm::new(o.a.clone(), kappa, meta).unwrap()]).unwrap();
        let rho0 = DensityMatrix::pure(&s.basis_state(Qubit::Ground, 1)).unwrap();
        let grid = linspace(0.0, 5.0, 26);
        let tr = evolve(&rho0, &l, &grid, &EvolveOptions::default()).unwrap();
        for smp in &tr.samples {
            assert!((smp.photons - (-kappa * smp.t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn static_drive_matches_time_dependent_form() {
        let s = SpaceSpec::new(3).unwrap();
        let p = SystemParams::from_ghz(1.0, 1.1, 0.05).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let l = standard_lindbladian(s, mhz(50.0), mhz(20.0), mhz(10.0), &h).unwrap();
        let rho0 = DensityMatrix::pure(&s.basis_state(Qubit::Excited, 0)).unwrap();
        let grid = linspace(0.0, 20.0, 11);
        let opts = EvolveOptions::default().with_reference(s.basis_state(Qubit::Excited, 0));
        let a = evolve(&rho0, &l, &grid, &opts).unwrap();
        let b = evolve_time_dependent(&rho0, |_| Ok(h.clone()), l.terms(), &grid, &opts).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.photons - y.photons).abs() < 1e-7);
            assert!((x.fidelity.unwrap() - y.fidelity.unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn secular_frame_matches_full_generator() {
        let s = SpaceSpec::new(5).unwrap();
        let p = SystemParams::from_ghz(1.0, 1.0, 0.1).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let es = rabi_eigensystem(&p, s).unwrap();
        let baths = Baths {
            kappa: NoiseSpectrum::white(mhz(20.0)).unwrap().thermal(0.5).unwrap(),
            gamma: NoiseSpectrum::white(mhz(10.0)).unwrap(),
            gamma_phi: NoiseSpectrum::white(mhz(5.0)).unwrap().classical(),
        };
        let l = dressed_lindbladian(&es, &baths, &h, 7).unwrap();
        let plus = es.state(es.find(Label::plus(1)).unwrap());
        let minus = es.state(es.find(Label::minus(1)).unwrap());
        let psi = (plus + minus) * C64::new(0.5f64.sqrt(), 0.0);
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let grid = linspace(0.0, 10.0, 6);
        let framed = evolve(&rho0, &l, &grid, &EvolveOptions::default()).unwrap();
        let unframed = assemble(&h, l.terms().to_vec()).unwrap();
        let full = evolve(&rho0, &unframed, &grid, &EvolveOptions::default()).unwrap();
        for (x, y) in framed.samples.iter().zip(&full.samples) {
            assert!((x.photons - y.photons).abs() < 1e-6, "{} vs {}", x.photons, y.photons);
            assert!((x.re_a - y.re_a).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = SpaceSpec::new(2).unwrap();
        let l = assemble(&OperatorMatrix::zeros(s.dim()), Vec::new()).unwrap();
        let rho0 = DensityMatrix::pure(&s.basis_state(Qubit::Ground, 0)).unwrap();
        let tr = evolve(&rho0, &l, &[0.0, 1.0], &EvolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 9);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let s = SpaceSpec::new(2).unwrap();
        let l = assemble(&OperatorMatrix::zeros(s.dim()), Vec::new()).unwrap();
        let other = SpaceSpec::new(3).unwrap();
        let rho0 = DensityMatrix::pure(&other.basis_state(Qubit::Ground, 0)).unwrap();
        assert!(matches!(
            evolve(&rho0, &l, &[0.0, 1.0], &EvolveOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
