//! Weakly driven transmission computed from the dressed master equation.
//!
//! The drive `ε(a e^{iω_d t} + a† e^{−iω_d t})` is kept only between
//! neighbouring excitation manifolds, which makes the level-basis model
//! time independent in the frame rotating at `ω_d` per manifold. The
//! dissipator is unchanged by that frame.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, Operators, SpaceSpec, C64};
use crate::liouville::{assemble, dressed_level_lindbladian, DissipatorTerm};
use crate::models::{rabi_eigensystem, rabi_hamiltonian, Label, SystemParams};
use crate::noise::Baths;

use super::steady::steady_state;

/// Level-basis drive model, prepared once per parameter set.
#[derive(Debug, Clone)]
pub struct TransmissionModel {
    /// `E_j − E_0` over the retained levels.
    energies: Vec<f64>,
    /// Excitation manifold of each level: 0 for the ground state, `n` for
    /// the `n` doublet.
    manifold: Vec<usize>,
    /// `⟨j|a|k⟩` restricted to `m_k = m_j + 1`.
    a_res: DMatrix<C64>,
    terms: Vec<DissipatorTerm>,
    epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub omega_d: f64,
    /// Steady-state `⟨a⟩` in the drive frame.
    pub a: C64,
}

impl TransmissionModel {
    /// Uses the lowest `n_levels` exact Rabi eigenstates of a space with
    /// `n_max` photons. All retained levels must carry labels.
    pub fn new(p: &SystemParams, n_max: usize, baths: &Baths, n_levels: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("drive amplitude must be > 0, got {epsilon}")));
        }
        if n_levels < 3 {
            return Err(Error::InvalidParameter("transmission needs the ground state and first doublet".into()));
        }
        let spec = SpaceSpec::new(n_max)?;
        let h = rabi_hamiltonian(p, spec);
        let es = rabi_eigensystem(p, spec)?;
        let manifold = (0..n_levels)
            .map(|j| match es.label(j) {
                Some(Label::Ground) => Ok(0),
                Some(Label::Doublet(n, _)) => Ok(n),
                None => Err(Error::InsufficientTruncation(format!("level {j} has no adiabatic label"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if manifold[0] != 0 {
            return Err(Error::InvalidParameter("lowest level is not the dressed ground state".into()));
        }
        // Both members of every retained doublet are needed, or the drive
        // couples to half a doublet.
        for j in 0..n_levels {
            if manifold.iter().filter(|&&m| m == manifold[j]).count() != if manifold[j] == 0 { 1 } else { 2 } {
                return Err(Error::InvalidParameter(format!(
                    "n_levels = {n_levels} splits the {} doublet",
                    manifold[j]
                )));
            }
        }

        let o = Operators::new(spec);
        let es = es.truncated(n_levels)?;
        let a_full = es.matrix_elements(&o.a)?;
        let a_res = DMatrix::from_fn(n_levels, n_levels, |j, k| {
            if manifold[k] == manifold[j] + 1 {
                a_full[(j, k)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let e0 = es.energy(0);
        let energies = (0..n_levels).map(|j| es.energy(j) - e0).collect();
        let l = dressed_level_lindbladian(&es, baths, &h, n_levels, &OperatorMatrix::zeros(n_levels))?;
        Ok(Self { energies, manifold, a_res, terms: l.terms().to_vec(), epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `diag(E_j − E_0 − m_j ω_d) + ε(a_res + a_res†)`
    pub fn hamiltonian(&self, omega_d: f64) -> OperatorMatrix {
        let n = self.energies.len();
        let mut h = (&self.a_res + self.a_res.adjoint()) * C64::new(self.epsilon, 0.0);
        for j in 0..n {
            h[(j, j)] += C64::new(self.energies[j] - self.manifold[j] as f64 * omega_d, 0.0);
        }
        OperatorMatrix::from_matrix(h)
    }

    /// Steady-state `⟨a⟩ = Tr[ρ_ss a_res]` at drive frequency `omega_d`.
    pub fn steady_field(&self, omega_d: f64) -> Result<C64> {
        let l = assemble(&self.hamiltonian(omega_d), self.terms.clone())?;
        let rho = steady_state(&l)?;
        Ok(rho.expectation(&OperatorMatrix::from_matrix(self.a_res.clone())))
    }
}

pub fn driven_transmission_sweep(model: &TransmissionModel, omega_d: &[f64]) -> Result<Vec<SweepPoint>> {
    omega_d
        .iter()
        .map(|&w| Ok(SweepPoint { omega_d: w, a: model.steady_field(w)? }))
        .collect()
}

/// One absorptive Lorentzian `−A·Γ/(Γ² + (ω − ω₀)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub center: f64,
    /// Half width at half maximum.
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub lower: Peak,
    pub upper: Peak,
    /// RMS residual relative to the largest `|Im⟨a⟩|`.
    pub relative_rms: f64,
}

impl LorentzianFit {
    /// Width of the lower peak minus width of the upper one.
    pub fn asymmetry(&self) -> f64 {
        self.lower.width - self.upper.width
    }
}

/// Parameters `(A, x₀, ln w)` per peak in coordinates `x = (ω − ω_c)/s`.
struct TwoLorentzians {
    x: Vec<f64>,
    y: Vec<f64>,
    p: DVector<f64>,
}

fn peak_terms(p: &[f64], x: f64) -> (f64, [f64; 3]) {
    let (a, x0, w) = (p[0], p[1], p[2].exp());
    let d = x - x0;
    let den = w * w + d * d;
    let m = -a * w / den;
    let d_a = -w / den;
    let d_x0 = -a * w * 2.0 * d / (den * den);
    let d_w = -a * (d * d - w * w) / (den * den);
    (m, [d_a, d_x0, d_w * w])
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for TwoLorentzians {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let p = self.p.as_slice();
        Some(DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(&self.y).map(|(&x, &y)| peak_terms(&p[..3], x).0 + peak_terms(&p[3..], x).0 - y),
        ))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let p = self.p.as_slice();
        let mut j = DMatrix::zeros(self.x.len(), 6);
        for (r, &x) in self.x.iter().enumerate() {
            let (_, d1) = peak_terms(&p[..3], x);
            let (_, d2) = peak_terms(&p[3..], x);
            for c in 0..3 {
                j[(r, c)] = d1[c];
                j[(r, c + 3)] = d2[c];
            }
        }
        Some(j)
    }
}

/// Initial `(A, x₀, ln w)` from the deepest point of `y` on `idx` and its
/// half-depth crossings.
fn guess(x: &[f64], y: &[f64], idx: std::ops::Range<usize>) -> Option<[f64; 3]> {
    let (imin, ymin) = idx.clone().map(|i| (i, y[i])).min_by(|a, b| a.1.total_cmp(&b.1))?;
    if ymin >= 0.0 {
        return None;
    }
    let half = 0.5 * ymin;
    let left = (idx.start..imin).rev().find(|&i| y[i] > half).map(|i| x[i]);
    let right = (imin..idx.end).find(|&i| y[i] > half).map(|i| x[i]);
    let w = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => x[imin] - l,
        (None, Some(r)) => r - x[imin],
        (None, None) => 0.5 * (x[idx.end - 1] - x[idx.start]),
    }
    .max(1e-6);
    Some([-ymin * w, x[imin], w.ln()])
}

/// Fits two Lorentzians to `Im⟨a⟩` on either side of `split`. The two
/// halves seed one peak each.
pub fn fit_two_lorentzians(points: &[SweepPoint], split: f64) -> Result<LorentzianFit> {
    if points.len() < 8 {
        return Err(Error::FitFailed(format!("{} points are too few for six parameters", points.len())));
    }
    let omega: Vec<f64> = points.iter().map(|p| p.omega_d).collect();
    if omega.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::FitFailed("drive frequencies must be strictly increasing".into()));
    }
    let ymax = points.iter().map(|p| p.a.im.abs()).fold(0.0, f64::max);
    if ymax == 0.0 {
        return Err(Error::FitFailed("no absorption signal".into()));
    }
    let scale = 0.5 * (omega[omega.len() - 1] - omega[0]);
    let x: Vec<f64> = omega.iter().map(|w| (w - split) / scale).collect();
    let y: Vec<f64> = points.iter().map(|p| p.a.im / ymax).collect();
    let cut = x.partition_point(|&v| v < 0.0);
    if cut < 3 || x.len() - cut < 3 {
        return Err(Error::FitFailed("split leaves fewer than three points on one side".into()));
    }
    let lo = guess(&x, &y, 0..cut).ok_or_else(|| Error::FitFailed("no lower absorption dip".into()))?;
    let hi = guess(&x, &y, cut..x.len()).ok_or_else(|| Error::FitFailed("no upper absorption dip".into()))?;
    let p0 = DVector::from_iterator(6, lo.into_iter().chain(hi));

    let problem = TwoLorentzians { x, y, p: p0 };
    let (solved, report) = LevenbergMarquardt::new().with_patience(500).minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::FitFailed(format!("{:?}", report.termination)));
    }
    let p = solved.p.as_slice();
    let rms = (2.0 * report.objective_function / solved.x.len() as f64).sqrt();
    let peak = |q: &[f64]| Peak {
        center: split + q[1] * scale,
        width: q[2].exp() * scale,
        amplitude: q[0] * ymax * scale,
    };
    let (a, b) = (peak(&p[..3]), peak(&p[3..]));
    let (lower, upper) = if a.center <= b.center { (a, b) } else { (b, a) };
    Ok(LorentzianFit { lower, upper, relative_rms: rms })
}
