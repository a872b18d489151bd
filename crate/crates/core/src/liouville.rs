//! Lindblad generators as dense superoperators on column-stacked density
//! matrices, `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
//!
//! `D[L]ρ = LρL† − ½{L†L, ρ}`; every term carries a nonnegative rate and a
//! jump operator without the rate folded in.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, Operators, SpaceSpec, C64, I, ONE, ZERO};
use crate::models::Eigensystem;
use crate::noise::Baths;
use crate::units::{to_ghz, to_mhz};

/// Squared transition elements below this are treated as exact zeros
/// (they are rounding residue of parity-forbidden elements).
pub const ELEMENT_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bath {
    /// Resonator field `X = a + a†` (or `a` in the standard equation).
    Kappa,
    /// Qubit `σ_x` (or `σ_−` in the standard equation).
    Gamma,
    /// Qubit frequency noise coupling through `σ_z`.
    GammaPhi,
}

impl Bath {
    pub fn name(self) -> &'static str {
        match self {
            Bath::Kappa => "kappa",
            Bath::Gamma => "gamma",
            Bath::GammaPhi => "gamma_phi",
        }
    }
}

impl fmt::Display for Bath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    /// Bare-operator jump of the standard equation.
    Bare(&'static str),
    /// `Σ_j σ_z^{jj} |j⟩⟨j|`
    Collective,
    /// `|j⟩⟨k|` between eigenstates, at `Δ_kj = E_k − E_j`.
    Transition { j: usize, k: usize, parity_j: i8, parity_k: i8, delta_kj: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermMeta {
    pub bath: Bath,
    pub kind: TermKind,
    pub formula: &'static str,
}

#[derive(Debug, Clone)]
pub struct DissipatorTerm {
    pub jump: OperatorMatrix,
    pub rate: f64,
    pub meta: TermMeta,
}

impl DissipatorTerm {
    pub fn new(jump: OperatorMatrix, rate: f64, meta: TermMeta) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("dissipator rate must be >= 0, got {rate}")));
        }
        Ok(Self { jump, rate, meta })
    }

    /// `rate · D[jump]ρ`, computed directly.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let l = self.jump.matrix();
        let ld = l.adjoint();
        let ldl = &ld * l;
        let out = l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0);
        out * C64::new(self.rate, 0.0)
    }
}

/// `vec(ρ)` with column stacking.
pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// `−i(I ⊗ H − Hᵀ ⊗ I)`
fn commutator_superop(h: &DMatrix<C64>) -> DMatrix<C64> {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I)
}

/// Adds `rate·D[L]` to `sup`: `L̄ ⊗ L − ½ I ⊗ L†L − ½ (L†L)ᵀ ⊗ I`.
fn add_dissipator(sup: &mut DMatrix<C64>, l: &DMatrix<C64>, rate: f64) {
    if rate == 0.0 {
        return;
    }
    let d = l.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let ldl = l.adjoint() * l;
    let r = C64::new(rate, 0.0);
    *sup += l.conjugate().kronecker(l) * r;
    *sup -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * (r * 0.5);
}

/// Adds `rate·D[|j⟩⟨k|]` using the rank-one structure of the jump.
fn add_transition(sup: &mut DMatrix<C64>, ldl_acc: &mut DMatrix<C64>, bra_j: &DVector<C64>, bra_k: &DVector<C64>, rate: f64) {
    // L̄ ⊗ L = vec(|j⟩⟨j|-like) outer product: (k̄⊗k)† on the right, (j̄⊗j) on the left
    let u = bra_j.conjugate().kronecker(bra_j);
    let v = bra_k.conjugate().kronecker(bra_k);
    sup.gerc(C64::new(rate, 0.0), &u, &v, ONE);
    // L†L = |k⟩⟨k|
    ldl_acc.gerc(C64::new(rate, 0.0), bra_k, bra_k, ONE);
}

fn add_anticommutator_part(sup: &mut DMatrix<C64>, ldl: &DMatrix<C64>) {
    let d = ldl.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    *sup -= (id.kronecker(ldl) + ldl.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
}

/// Exact `e^{−iHt}` from the eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct UnitaryFrame {
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl UnitaryFrame {
    pub fn new(h: &OperatorMatrix) -> Self {
        let eig = SymmetricEigen::new(h.matrix().clone());
        Self { energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (c, e) in self.energies.iter().enumerate() {
            let ph = C64::from_polar(1.0, -e * t);
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= ph);
        }
        scaled * self.vectors.adjoint()
    }
}

/// A transition pair that shares a frequency within tolerance in one bath.
#[derive(Debug, Clone, PartialEq)]
pub struct NearDegeneracy {
    pub bath: Bath,
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub separation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    hamiltonian: OperatorMatrix,
    superop: DMatrix<C64>,
    dissipator: DMatrix<C64>,
    terms: Vec<DissipatorTerm>,
    frame: Option<UnitaryFrame>,
}

impl Liouvillian {
    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    /// Full generator `−i[H,·] + Σ rate·D[L]`.
    pub fn superop(&self) -> &DMatrix<C64> {
        &self.superop
    }

    /// Dissipative part only.
    pub fn dissipator_superop(&self) -> &DMatrix<C64> {
        &self.dissipator
    }

    pub fn terms(&self) -> &[DissipatorTerm] {
        &self.terms
    }

    /// Present when the dissipator commutes with `−i[H,·]`, so evolution can
    /// integrate the dissipator alone in the interaction picture.
    pub fn secular_frame(&self) -> Option<&UnitaryFrame> {
        self.frame.as_ref()
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize(&(&self.superop * vectorize(rho)), self.dim)
    }

    /// `−i[H,ρ] + Σ rate·D[L]ρ` without the superoperator.
    pub fn apply_direct(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let h = self.hamiltonian.matrix();
        let mut out = (h * rho - rho * h) * (-I);
        for t in &self.terms {
            out += t.apply(rho);
        }
        out
    }

    /// `‖vec(I)† L‖`, zero for a trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        let d = self.dim;
        let mut row = DVector::<C64>::zeros(d * d);
        for c in 0..d * d {
            let mut s = ZERO;
            for i in 0..d {
                s += self.superop[(i * d + i, c)];
            }
            row[c] = s;
        }
        row.norm()
    }

    /// Summed rate of all terms with jump `|j⟩⟨k|` from `bath`.
    pub fn transition_rate(&self, bath: Bath, j: usize, k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.meta.bath == bath)
            .filter_map(|t| match t.meta.kind {
                TermKind::Transition { j: tj, k: tk, .. } if tj == j && tk == k => Some(t.rate),
                _ => None,
            })
            .sum()
    }

    /// Population transfer rates `W[j,k] = Σ rate·|⟨j|L|k⟩|²` (`j ≠ k`)
    /// among the lowest `n` levels of `es`.
    pub fn transfer_rates(&self, es: &Eigensystem, n: usize) -> Result<DMatrix<f64>> {
        if es.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: es.dim() });
        }
        if n > es.len() {
            return Err(Error::InvalidParameter(format!("{n} levels requested, {} available", es.len())));
        }
        let v = es.states().columns(0, n).into_owned();
        let mut w = DMatrix::<f64>::zeros(n, n);
        for t in &self.terms {
            let m = v.adjoint() * t.jump.matrix() * &v;
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        w[(j, k)] += t.rate * m[(j, k)].norm_sqr();
                    }
                }
            }
        }
        Ok(w)
    }

    /// Same-bath transitions closer in frequency than `tol_factor` times the
    /// largest rate of that bath.
    pub fn near_degeneracies(&self, tol_factor: f64) -> Vec<NearDegeneracy> {
        let mut out = Vec::new();
        for bath in [Bath::Kappa, Bath::Gamma, Bath::GammaPhi] {
            let tr: Vec<(usize, usize, f64, f64)> = self
                .terms
                .iter()
                .filter(|t| t.meta.bath == bath && t.rate > 0.0)
                .filter_map(|t| match t.meta.kind {
                    TermKind::Transition { j, k, delta_kj, .. } => Some((j, k, delta_kj, t.rate)),
                    _ => None,
                })
                .collect();
            let max_rate = tr.iter().map(|x| x.3).fold(0.0, f64::max);
            let tol = tol_factor * max_rate;
            for (a, x) in tr.iter().enumerate() {
                for y in &tr[a + 1..] {
                    let sep = (x.2 - y.2).abs();
                    if sep <= tol {
                        out.push(NearDegeneracy {
                            bath,
                            first: (x.0, x.1),
                            second: (y.0, y.1),
                            separation: sep,
                            tolerance: tol,
                        });
                    }
                }
            }
        }
        out
    }

    /// One row per eigenstate transition:
    /// `bath,j,k,parity_j,parity_k,delta_kj_ghz,rate_mhz`.
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("bath,j,k,parity_j,parity_k,delta_kj_ghz,rate_mhz\n");
        for t in &self.terms {
            if let TermKind::Transition { j, k, parity_j, parity_k, delta_kj } = t.meta.kind {
                let _ = writeln!(
                    s,
                    "{},{j},{k},{parity_j},{parity_k},{:.12e},{:.12e}",
                    t.meta.bath,
                    to_ghz(delta_kj),
                    to_mhz(t.rate)
                );
            }
        }
        s
    }

    pub fn write_diagnostics(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.diagnostics_csv())?;
        Ok(())
    }
}

/// Generic assembly from a Hamiltonian and bare dissipator terms.
pub fn assemble(h: &OperatorMatrix, terms: Vec<DissipatorTerm>) -> Result<Liouvillian> {
    let d = h.dim();
    let mut dissipator = DMatrix::<C64>::zeros(d * d, d * d);
    for t in &terms {
        if t.jump.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: t.jump.dim() });
        }
        add_dissipator(&mut dissipator, t.jump.matrix(), t.rate);
    }
    let superop = commutator_superop(h.matrix()) + &dissipator;
    Ok(Liouvillian { dim: d, hamiltonian: h.clone(), superop, dissipator, terms, frame: None })
}

/// `κ D[a] + γ₁ D[σ_−] + (γ_φ/2) D[σ_z]` with Hamiltonian `h`.
pub fn standard_lindbladian(
    spec: SpaceSpec,
    kappa: f64,
    gamma1: f64,
    gamma_phi: f64,
    h: &OperatorMatrix,
) -> Result<Liouvillian> {
    standard_lindbladian_thermal(spec, kappa, gamma1, gamma_phi, 0.0, 0.0, h)
}

/// Standard equation with thermal occupations `n̄_r`, `n̄_q` of the resonator
/// and qubit baths: `κ(1+n̄_r)D[a] + κn̄_r D[a†]` and likewise for `σ_∓`.
pub fn standard_lindbladian_thermal(
    spec: SpaceSpec,
    kappa: f64,
    gamma1: f64,
    gamma_phi: f64,
    nbar_r: f64,
    nbar_q: f64,
    h: &OperatorMatrix,
) -> Result<Liouvillian> {
    if h.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: h.dim() });
    }
    for (name, x) in [("kappa", kappa), ("gamma1", gamma1), ("gamma_phi", gamma_phi), ("nbar_r", nbar_r), ("nbar_q", nbar_q)] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {x}")));
        }
    }
    let o = Operators::new(spec);
    let meta = |bath, op, formula| TermMeta { bath, kind: TermKind::Bare(op), formula };
    let mut terms = vec![
        DissipatorTerm::new(o.a.clone(), kappa * (1.0 + nbar_r), meta(Bath::Kappa, "a", "kappa(1+n)"))?,
        DissipatorTerm::new(o.sm.clone(), gamma1 * (1.0 + nbar_q), meta(Bath::Gamma, "sigma_minus", "gamma1(1+n)"))?,
        DissipatorTerm::new(o.sz.clone(), 0.5 * gamma_phi, meta(Bath::GammaPhi, "sigma_z", "gamma_phi/2"))?,
    ];
    if nbar_r > 0.0 {
        terms.push(DissipatorTerm::new(o.a_dag.clone(), kappa * nbar_r, meta(Bath::Kappa, "creation", "kappa n"))?);
    }
    if nbar_q > 0.0 {
        terms.push(DissipatorTerm::new(o.sp.clone(), gamma1 * nbar_q, meta(Bath::Gamma, "sigma_plus", "gamma1 n"))?);
    }
    terms.retain(|t| t.rate > 0.0);
    assemble(h, terms)
}

/// Standard equation with rates read off the bath spectra at the bare
/// frequencies: `κ(±ω_r)` for `a`/`a†`, `γ(±ω_a)` for `σ_∓` and `γ_φ(0)/2`
/// for `σ_z`. Classical spectra give equal up and down rates.
pub fn standard_lindbladian_from_spectra(
    spec: SpaceSpec,
    omega_r: f64,
    omega_a: f64,
    baths: &Baths,
    h: &OperatorMatrix,
) -> Result<Liouvillian> {
    if h.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: h.dim() });
    }
    let o = Operators::new(spec);
    let meta = |bath, op, formula| TermMeta { bath, kind: TermKind::Bare(op), formula };
    let mut terms = vec![
        DissipatorTerm::new(o.a.clone(), baths.kappa.eval(omega_r)?, meta(Bath::Kappa, "a", "kappa(w_r)"))?,
        DissipatorTerm::new(o.a_dag.clone(), baths.kappa.eval(-omega_r)?, meta(Bath::Kappa, "creation", "kappa(-w_r)"))?,
        DissipatorTerm::new(o.sm.clone(), baths.gamma.eval(omega_a)?, meta(Bath::Gamma, "sigma_minus", "gamma(w_a)"))?,
        DissipatorTerm::new(o.sp.clone(), baths.gamma.eval(-omega_a)?, meta(Bath::Gamma, "sigma_plus", "gamma(-w_a)"))?,
        DissipatorTerm::new(o.sz.clone(), 0.5 * baths.gamma_phi.eval(0.0)?, meta(Bath::GammaPhi, "sigma_z", "gamma_phi(0)/2"))?,
    ];
    terms.retain(|t| t.rate > 0.0);
    assemble(h, terms)
}

/// `O^{jk} = ⟨j|O|k⟩` over all levels of `es`.
pub fn transition_elements(es: &Eigensystem, o: &OperatorMatrix) -> Result<DMatrix<C64>> {
    es.matrix_elements(o)
}

/// Rates of the dressed equation over the levels of a truncated eigensystem.
#[derive(Debug, Clone)]
struct DressedRates {
    /// `(σ_z^{jj}, γ_φ(0)/2)` for the collective dephasing jump.
    collective: Option<(Vec<f64>, f64)>,
    /// `(meta, j, k, rate)` for each jump `|j⟩⟨k|`.
    transitions: Vec<(TermMeta, usize, usize, f64)>,
}

fn dressed_rates(es: &Eigensystem, baths: &Baths, o: &Operators) -> Result<DressedRates> {
    let n = es.len();
    let x = es.matrix_elements(&o.x)?;
    let sx = es.matrix_elements(&o.sx)?;
    let sz = es.matrix_elements(&o.sz)?;

    let g0 = baths.gamma_phi.eval(0.0)?;
    let collective = (g0 > 0.0).then(|| ((0..n).map(|j| sz[(j, j)].re).collect(), 0.5 * g0));

    let channels: [(Bath, &DMatrix<C64>, f64, &'static str); 3] = [
        (Bath::Kappa, &x, 1.0, "kappa(D_kj)|X^jk|^2"),
        (Bath::Gamma, &sx, 1.0, "gamma(D_kj)|sx^jk|^2"),
        (Bath::GammaPhi, &sz, 0.5, "gamma_phi(D_kj)/2 |sz^jk|^2"),
    ];
    let mut transitions = Vec::new();
    for (bath, elems, factor, formula) in channels {
        let spectrum = match bath {
            Bath::Kappa => &baths.kappa,
            Bath::Gamma => &baths.gamma,
            Bath::GammaPhi => &baths.gamma_phi,
        };
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                let w = elems[(j, k)].norm_sqr();
                if w < ELEMENT_FLOOR {
                    continue;
                }
                let delta_kj = es.delta(k, j);
                let rate = factor * spectrum.eval(delta_kj)? * w;
                if rate == 0.0 {
                    continue;
                }
                let kind = TermKind::Transition {
                    j,
                    k,
                    parity_j: es.parity(j),
                    parity_k: es.parity(k),
                    delta_kj,
                };
                transitions.push((TermMeta { bath, kind, formula }, j, k, rate));
            }
        }
    }
    Ok(DressedRates { collective, transitions })
}

const COLLECTIVE_FORMULA: &str = "gamma_phi(0)/2 (sz^jj)";

fn truncate_checked(es: &Eigensystem, h: &OperatorMatrix, n_levels: usize) -> Result<Eigensystem> {
    if es.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: es.dim() });
    }
    if n_levels > es.len() || n_levels == 0 {
        return Err(Error::InvalidParameter(format!(
            "n_levels = {n_levels} outside 1..={}",
            es.len()
        )));
    }
    let es = es.truncated(n_levels)?;
    let resid = es.max_residual(h);
    if resid > 1e-8 * h.norm().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "eigensystem does not diagonalize the Hamiltonian (residual {resid:.3e})"
        )));
    }
    Ok(es)
}

/// Dressed-state Lindbladian over the lowest `n_levels` eigenstates of `h`:
///
/// * `D[Σ_j Φ_j|j⟩⟨j|]` with `Φ_j = √(γ_φ(0)/2) σ_z^{jj}`;
/// * `γ_φ(Δ_kj)/2 · |σ_z^{jk}|² D[|j⟩⟨k|]` for `j ≠ k`;
/// * `κ(Δ_kj)|X^{jk}|² D[|j⟩⟨k|]` and `γ(Δ_kj)|σ_x^{jk}|² D[|j⟩⟨k|]` for `j ≠ k`.
///
/// Spectra are evaluated at signed `Δ_kj = E_k − E_j`; upward jumps exist only
/// where a spectrum has negative-frequency weight.
pub fn dressed_lindbladian(
    es: &Eigensystem,
    baths: &Baths,
    h: &OperatorMatrix,
    n_levels: usize,
) -> Result<Liouvillian> {
    let d = h.dim();
    let es = truncate_checked(es, h, n_levels)?;
    let o = Operators::new(SpaceSpec::new(d / 2 - 1)?);
    let rates = dressed_rates(&es, baths, &o)?;

    let mut dissipator = DMatrix::<C64>::zeros(d * d, d * d);
    let mut ldl = DMatrix::<C64>::zeros(d, d);
    let mut terms = Vec::new();

    if let Some((diag, rate)) = &rates.collective {
        let mut c = DMatrix::<C64>::zeros(d, d);
        for (j, z) in diag.iter().enumerate() {
            let v = es.state(j);
            c.gerc(C64::new(*z, 0.0), &v, &v, ONE);
        }
        let jump = OperatorMatrix::from_matrix(c);
        add_dissipator(&mut dissipator, jump.matrix(), *rate);
        let meta = TermMeta { bath: Bath::GammaPhi, kind: TermKind::Collective, formula: COLLECTIVE_FORMULA };
        terms.push(DissipatorTerm::new(jump, *rate, meta)?);
    }
    for (meta, j, k, rate) in rates.transitions {
        let (vj, vk) = (es.state(j), es.state(k));
        add_transition(&mut dissipator, &mut ldl, &vj, &vk, rate);
        let mut jump = DMatrix::<C64>::zeros(d, d);
        jump.gerc(ONE, &vj, &vk, ZERO);
        terms.push(DissipatorTerm::new(OperatorMatrix::from_matrix(jump), rate, meta)?);
    }
    add_anticommutator_part(&mut dissipator, &ldl);

    let superop = commutator_superop(h.matrix()) + &dissipator;
    let lv = Liouvillian {
        dim: d,
        hamiltonian: h.clone(),
        superop,
        dissipator,
        terms,
        frame: Some(UnitaryFrame::new(h)),
    };
    let degenerate = lv.near_degeneracies(10.0);
    if !degenerate.is_empty() {
        log::warn!(
            "{} same-bath transition pairs are not resolved in frequency; secular rates are unreliable there",
            degenerate.len()
        );
    }
    Ok(lv)
}

/// The dressed dissipator of [`dressed_lindbladian`] written in the basis of
/// the lowest `n_levels` eigenstates themselves, with a caller-supplied
/// `n_levels × n_levels` Hamiltonian (e.g. a rotating-frame drive model).
pub fn dressed_level_lindbladian(
    es: &Eigensystem,
    baths: &Baths,
    h: &OperatorMatrix,
    n_levels: usize,
    h_levels: &OperatorMatrix,
) -> Result<Liouvillian> {
    if h_levels.dim() != n_levels {
        return Err(Error::DimensionMismatch { expected: n_levels, found: h_levels.dim() });
    }
    let es = truncate_checked(es, h, n_levels)?;
    let o = Operators::new(SpaceSpec::new(h.dim() / 2 - 1)?);
    let rates = dressed_rates(&es, baths, &o)?;
    let mut terms = Vec::new();
    if let Some((diag, rate)) = rates.collective {
        let jump = OperatorMatrix::from_diagonal(&diag);
        let meta = TermMeta { bath: Bath::GammaPhi, kind: TermKind::Collective, formula: COLLECTIVE_FORMULA };
        terms.push(DissipatorTerm::new(jump, rate, meta)?);
    }
    for (meta, j, k, rate) in rates.transitions {
        let mut jump = DMatrix::<C64>::zeros(n_levels, n_levels);
        jump[(j, k)] = ONE;
        terms.push(DissipatorTerm::new(OperatorMatrix::from_matrix(jump), rate, meta)?);
    }
    assemble(h_levels, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{rabi_eigensystem, rabi_hamiltonian, Label, SystemParams};
    use crate::noise::NoiseSpectrum;
    use crate::units::{ghz, mhz};
    use proptest::prelude::*;

    fn random_density(d: usize, seed: &[f64]) -> DMatrix<C64> {
        let mut k = 0;
        let mut next = || {
            k += 1;
            seed[k % seed.len()] * (1.0 + 0.37 * k as f64).sin()
        };
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }

    fn dressed_case(g: f64, n_max: usize, gphi: NoiseSpectrum) -> (Eigensystem, Liouvillian) {
        let s = SpaceSpec::new(n_max).unwrap();
        let p = SystemParams::from_ghz(6.0, 6.0, g).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let es = rabi_eigensystem(&p, s).unwrap();
        let baths = Baths {
            kappa: NoiseSpectrum::white(mhz(1.0)).unwrap(),
            gamma: NoiseSpectrum::white(mhz(0.5)).unwrap(),
            gamma_phi: gphi,
        };
        let l = dressed_lindbladian(&es, &baths, &h, 9).unwrap();
        (es, l)
    }

    #[test]
    fn superop_matches_direct_rhs() {
        let s = SpaceSpec::new(4).unwrap();
        let p = SystemParams::from_ghz(6.0, 5.5, 0.8).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let l = standard_lindbladian(s, 0.3, 0.2, 0.1, &h).unwrap();
        for i in 0..5 {
            let rho = random_density(s.dim(), &[0.3 + i as f64, -1.1, 0.7, 2.3]);
            let diff = (l.apply(&rho) - l.apply_direct(&rho)).norm();
            assert!(diff < 1e-12 * l.superop().norm(), "{diff}");
        }
        let (_, dl) = dressed_case(1.0, 8, NoiseSpectrum::white(mhz(0.2)).unwrap().classical());
        for i in 0..5 {
            let rho = random_density(dl.dim(), &[1.3, -0.4 + i as f64, 0.9]);
            let diff = (dl.apply(&rho) - dl.apply_direct(&rho)).norm();
            assert!(diff < 1e-12 * dl.superop().norm(), "{diff}");
        }
    }

    #[test]
    fn commutator_only_spectrum_is_imaginary() {
        let s = SpaceSpec::new(3).unwrap();
        let p = SystemParams::from_ghz(1.0, 1.2, 0.3).unwrap();
        let l = assemble(&rabi_hamiltonian(&p, s), vec![]).unwrap();
        let ev = l.superop().clone().eigenvalues();
        // Hermitian H: -i[H,·] is anti-Hermitian
        let sup = l.superop();
        assert!((sup + sup.adjoint()).norm() < 1e-12);
        assert!(ev.is_none() || ev.unwrap().iter().all(|z: &C64| z.re.abs() < 1e-9));
    }

    #[test]
    fn spectra_form_matches_thermal_form() {
        let s = SpaceSpec::new(3).unwrap();
        let p = SystemParams::from_ghz(6.0, 5.0, 0.2).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let kbt = ghz(2.0);
        let baths = Baths {
            kappa: NoiseSpectrum::white(0.3).unwrap().thermal(kbt).unwrap(),
            gamma: NoiseSpectrum::white(0.2).unwrap().thermal(kbt).unwrap(),
            gamma_phi: NoiseSpectrum::white(0.1).unwrap(),
        };
        let nr = crate::noise::nbar(p.omega_r, kbt).unwrap();
        let nq = crate::noise::nbar(p.omega_a, kbt).unwrap();
        let a = standard_lindbladian_from_spectra(s, p.omega_r, p.omega_a, &baths, &h).unwrap();
        let b = standard_lindbladian_thermal(s, 0.3, 0.2, 0.1, nr, nq, &h).unwrap();
        assert!((a.superop() - b.superop()).norm() < 1e-12 * b.superop().norm());
    }

    #[test]
    fn trace_preservation() {
        let s = SpaceSpec::new(5).unwrap();
        let p = SystemParams::from_ghz(6.0, 6.0, 1.0).unwrap();
        let l = standard_lindbladian_thermal(s, 0.3, 0.2, 0.1, 0.4, 0.1, &rabi_hamiltonian(&p, s)).unwrap();
        assert!(l.trace_residual() < 1e-12);
        let (_, dl) = dressed_case(1.0, 8, NoiseSpectrum::white(mhz(1.0)).unwrap().thermal(ghz(1.0)).unwrap());
        assert!(dl.trace_residual() < 1e-10);
    }

    #[test]
    fn resonant_rwa_elements() {
        let s = SpaceSpec::new(8).unwrap();
        let p = SystemParams::from_ghz(6.0, 6.0, 0.2).unwrap();
        let es = crate::models::labeled_eigensystem(&p, s, crate::models::jc_hamiltonian, 20).unwrap();
        let o = Operators::new(s);
        let x = transition_elements(&es, &o.x).unwrap();
        let sz = transition_elements(&es, &o.sz).unwrap();
        let g0 = es.find(Label::Ground).unwrap();
        for n in 1..=3 {
            let (m, pl) = (es.find(Label::minus(n)).unwrap(), es.find(Label::plus(n)).unwrap());
            assert!(sz[(m, m)].norm() < 1e-12 && sz[(pl, pl)].norm() < 1e-12);
            assert!((sz[(m, pl)].norm() - 1.0).abs() < 1e-12);
        }
        let (m, pl) = (es.find(Label::minus(1)).unwrap(), es.find(Label::plus(1)).unwrap());
        assert!((x[(g0, m)].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((x[(g0, pl)].norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decoupled_position_elements() {
        let s = SpaceSpec::new(6).unwrap();
        let p = SystemParams::from_ghz(7.0, 6.0, 0.0).unwrap();
        let es = crate::models::diagonalize(&rabi_hamiltonian(&p, s), &Operators::new(s).parity).unwrap();
        let x = transition_elements(&es, &Operators::new(s).x).unwrap();
        for j in 0..es.len() {
            for k in 0..es.len() {
                let (vj, vk) = (es.state(j), es.state(k));
                let ij = vj.icamax();
                let ik = vk.icamax();
                let (qj, nj) = s.label(ij);
                let (qk, nk) = s.label(ik);
                let expect = if qj == qk && nj.abs_diff(nk) == 1 { (nj.max(nk) as f64).sqrt() } else { 0.0 };
                assert!((x[(j, k)].norm() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ground_state_is_dark_at_zero_temperature() {
        let (es, l) = dressed_case(2.0, 10, NoiseSpectrum::white(mhz(1.0)).unwrap());
        let g = es.state(0);
        let rho = &g * g.adjoint();
        assert!(l.apply(&rho).norm() < 1e-12);
    }

    #[test]
    fn parity_selection_in_metadata() {
        let (_, l) = dressed_case(2.0, 12, NoiseSpectrum::white(mhz(1.0)).unwrap().classical());
        let mut seen = 0;
        for t in l.terms() {
            if let TermKind::Transition { parity_j, parity_k, .. } = t.meta.kind {
                seen += 1;
                match t.meta.bath {
                    Bath::Kappa | Bath::Gamma => assert_ne!(parity_j, parity_k),
                    Bath::GammaPhi => assert_eq!(parity_j, parity_k),
                }
            }
        }
        assert!(seen > 20);
    }

    #[test]
    fn zero_temperature_has_only_downward_relaxation() {
        let (_, l) = dressed_case(1.0, 10, NoiseSpectrum::white(mhz(1.0)).unwrap());
        for t in l.terms() {
            if let TermKind::Transition { j, k, delta_kj, .. } = t.meta.kind {
                assert!(k > j && delta_kj > 0.0, "{:?}", t.meta);
            }
        }
    }

    #[test]
    fn diagnostics_rows() {
        let (_, l) = dressed_case(1.0, 8, NoiseSpectrum::white(mhz(1.0)).unwrap());
        let csv = l.diagnostics_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "bath,j,k,parity_j,parity_k,delta_kj_ghz,rate_mhz");
        let n_trans = l.terms().iter().filter(|t| matches!(t.meta.kind, TermKind::Transition { .. })).count();
        assert_eq!(rows.len(), n_trans + 1);
        assert_eq!(rows[1].split(',').count(), 7);
    }

    #[test]
    fn resonant_degeneracy_is_reported() {
        // at g = 0 and resonance all doublet transitions of a bath share ω_r
        let s = SpaceSpec::new(6).unwrap();
        let p = SystemParams::from_ghz(6.0, 6.0, 1e-7).unwrap();
        let h = rabi_hamiltonian(&p, s);
        let es = rabi_eigensystem(&p, s).unwrap();
        let l = dressed_lindbladian(&es, &Baths::white(mhz(1.0), mhz(1.0), 0.0).unwrap(), &h, 7).unwrap();
        assert!(!l.near_degeneracies(10.0).is_empty());
        let (_, ok) = dressed_case(1.0, 10, NoiseSpectrum::zero());
        assert!(ok.near_degeneracies(10.0).is_empty());
    }

    #[test]
    fn rejects_mismatched_eigensystem() {
        let s = SpaceSpec::new(6).unwrap();
        let p = SystemParams::from_ghz(6.0, 6.0, 1.0).unwrap();
        let es = rabi_eigensystem(&p, s).unwrap();
        let other = rabi_hamiltonian(&p.with_g(ghz(0.5)).unwrap(), s);
        assert!(dressed_lindbladian(&es, &Baths::white(1e-3, 1e-3, 0.0).unwrap(), &other, 5).is_err());
        let h = rabi_hamiltonian(&p, s);
        assert!(dressed_lindbladian(&es, &Baths::white(1e-3, 1e-3, 0.0).unwrap(), &h, 99).is_err());
    }

    #[test]
    fn weak_coupling_reduces_to_standard() {
        let s = SpaceSpec::new(8).unwrap();
        let (kappa, gamma, gphi) = (mhz(1.0), mhz(0.7), mhz(0.4));
        let baths = Baths {
            kappa: NoiseSpectrum::white(kappa).unwrap(),
            gamma: NoiseSpectrum::white(gamma).unwrap(),
            gamma_phi: NoiseSpectrum::white(gphi).unwrap().classical(),
        };
        let diff_at = |g: f64| {
            let p = SystemParams::from_ghz(6.5, 6.0, g).unwrap();
            let h = rabi_hamiltonian(&p, s);
            let es = rabi_eigensystem(&p, s).unwrap();
            let n = 7;
            let wd = dressed_lindbladian(&es, &baths, &h, n).unwrap().transfer_rates(&es, n).unwrap();
            let ws = standard_lindbladian(s, kappa, gamma, gphi, &h).unwrap().transfer_rates(&es, n).unwrap();
            (wd - ws).abs().max() / kappa
        };
        let (d1, d2) = (diff_at(0.02), diff_at(0.01));
        assert!(d1 < 0.05, "{d1}");
        // squared elements make the gap quadratic in g, at least linear is required
        let ratio = d1 / d2;
        assert!(ratio > 1.8, "{ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dressed_generator_preserves_trace_and_hermiticity(
            g in 0.05..1.5f64, kbt in 0.0..3.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64
        ) {
            let gphi = NoiseSpectrum::white(mhz(0.3)).unwrap().thermal(ghz(kbt)).unwrap();
            let (_, l) = dressed_case(g, 6, gphi);
            let rho = random_density(l.dim(), &[a, b, 0.5, -0.25]);
            let out = l.apply(&rho);
            prop_assert!(out.trace().norm() < 1e-10 * l.superop().norm());
            prop_assert!((&out - out.adjoint()).norm() < 1e-10 * l.superop().norm());
        }
    }
}
