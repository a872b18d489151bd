use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hilbert::{build_operator, OperatorKind, OperatorMatrix, SpaceSpec, C64};

use super::hamiltonians::{excitation_number, rabi_hamiltonian};
use super::SystemParams;

/// Continuation steps used to label eigenstates from the weak-coupling limit.
pub const ADIABATIC_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DoubletSign {
    Minus,
    Plus,
}

impl DoubletSign {
    pub fn sign(self) -> f64 {
        match self {
            DoubletSign::Minus => -1.0,
            DoubletSign::Plus => 1.0,
        }
    }
}

/// Adiabatic label of a dressed level: the ground state `g0` or a member
/// `(n, ±)` of the `n`-th doublet built from `|e, n−1⟩` and `|g, n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Ground,
    Doublet(usize, DoubletSign),
}

impl Label {
    pub fn minus(n: usize) -> Self {
        Label::Doublet(n, DoubletSign::Minus)
    }

    pub fn plus(n: usize) -> Self {
        Label::Doublet(n, DoubletSign::Plus)
    }

    /// Parity `(−1)^n` of the bare states the label connects to.
    pub fn parity(self) -> i8 {
        match self {
            Label::Ground => 1,
            Label::Doublet(n, _) => {
                if n % 2 == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Ground => f.write_str("g0"),
            Label::Doublet(n, DoubletSign::Minus) => write!(f, "{n}-"),
            Label::Doublet(n, DoubletSign::Plus) => write!(f, "{n}+"),
        }
    }
}

/// Eigenpairs sorted by ascending energy, each with a definite parity.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    energies: Vec<f64>,
    states: DMatrix<C64>,
    parities: Vec<i8>,
    labels: Vec<Option<Label>>,
}

impl Eigensystem {
    pub(crate) fn from_parts(
        energies: Vec<f64>,
        states: DMatrix<C64>,
        parities: Vec<i8>,
        labels: Vec<Option<Label>>,
    ) -> Self {
        debug_assert_eq!(energies.len(), states.ncols());
        debug_assert_eq!(energies.len(), parities.len());
        debug_assert_eq!(energies.len(), labels.len());
        Self { energies, states, parities, labels }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Dimension of the Hilbert space the states live in.
    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, j: usize) -> f64 {
        self.energies[j]
    }

    /// `Δ_kj = E_k − E_j`
    pub fn delta(&self, k: usize, j: usize) -> f64 {
        self.energies[k] - self.energies[j]
    }

    /// Columns are the eigenvectors.
    pub fn states(&self) -> &DMatrix<C64> {
        &self.states
    }

    pub fn state(&self, j: usize) -> DVector<C64> {
        self.states.column(j).into_owned()
    }

    pub fn parity(&self, j: usize) -> i8 {
        self.parities[j]
    }

    pub fn parities(&self) -> &[i8] {
        &self.parities
    }

    pub fn label(&self, j: usize) -> Option<Label> {
        self.labels[j]
    }

    pub fn labels(&self) -> &[Option<Label>] {
        &self.labels
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|l| *l == Some(label))
    }

    pub fn find(&self, label: Label) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::InvalidParameter(format!("no level labeled {label}")))
    }

    pub(crate) fn set_labels(&mut self, labels: Vec<Option<Label>>) {
        assert_eq!(labels.len(), self.len());
        self.labels = labels;
    }

    /// The lowest `n` levels.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "requested {n} levels from an eigensystem of {}",
                self.len()
            )));
        }
        Ok(Self {
            energies: self.energies[..n].to_vec(),
            states: self.states.columns(0, n).into_owned(),
            parities: self.parities[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        })
    }

    /// `max_j ‖H|j⟩ − E_j|j⟩‖`
    pub fn max_residual(&self, h: &OperatorMatrix) -> f64 {
        (0..self.len())
            .map(|j| {
                let v = self.state(j);
                (h.apply(&v) - &v * C64::new(self.energies[j], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `O^{jk} = ⟨j|O|k⟩` for all stored levels.
    pub fn matrix_elements(&self, o: &OperatorMatrix) -> Result<DMatrix<C64>> {
        if o.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: o.dim() });
        }
        Ok(self.states.adjoint() * o.matrix() * &self.states)
    }
}

/// Rotates `v` so its largest-magnitude component is real and positive.
pub(crate) fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    // first component within rounding of the maximum, for determinism
    let pivot = v.iter().position(|c| c.norm() >= max * (1.0 - 1e-9)).unwrap();
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|c| *c *= phase);
}

/// Exact eigenpairs of `h`, diagonalized separately in each eigenspace of the
/// diagonal ±1 operator `parity`.
pub fn diagonalize(h: &OperatorMatrix, parity: &OperatorMatrix) -> Result<Eigensystem> {
    let dim = h.dim();
    if parity.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: parity.dim() });
    }
    let herm = h.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    let pm = parity.matrix();
    let mut sectors: [(i8, Vec<usize>); 2] = [(1, Vec::new()), (-1, Vec::new())];
    for i in 0..dim {
        let d = pm[(i, i)];
        if (d - C64::new(1.0, 0.0)).norm() < 1e-12 {
            sectors[0].1.push(i);
        } else if (d + C64::new(1.0, 0.0)).norm() < 1e-12 {
            sectors[1].1.push(i);
        } else {
            return Err(Error::InvalidParameter(format!("parity entry {d} at {i} is not ±1")));
        }
    }
    let hm = h.matrix();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    for &i in &sectors[0].1 {
        for &j in &sectors[1].1 {
            if hm[(i, j)].norm() > 1e-10 * scale {
                return Err(Error::InvalidParameter(
                    "Hamiltonian does not conserve parity".into(),
                ));
            }
        }
    }

    let mut pairs: Vec<(f64, i8, DVector<C64>)> = Vec::with_capacity(dim);
    for (p, idx) in &sectors {
        if idx.is_empty() {
            continue;
        }
        let m = idx.len();
        let sub = DMatrix::from_fn(m, m, |r, c| hm[(idx[r], idx[c])]);
        let off_diag = (0..m)
            .flat_map(|r| (0..m).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| sub[(r, c)].norm())
            .fold(0.0, f64::max);
        if off_diag == 0.0 {
            // bare basis is already an eigenbasis; keeps degenerate levels unmixed
            for (r, &i) in idx.iter().enumerate() {
                let mut v = DVector::zeros(dim);
                v[i] = C64::new(1.0, 0.0);
                pairs.push((sub[(r, r)].re, *p, v));
            }
            continue;
        }
        let eig = SymmetricEigen::new(sub);
        for k in 0..m {
            let mut v = DVector::zeros(dim);
            for (r, &i) in idx.iter().enumerate() {
                v[i] = eig.eigenvectors[(r, k)];
            }
            fix_phase(&mut v);
            pairs.push((eig.eigenvalues[k], *p, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let energies = pairs.iter().map(|x| x.0).collect();
    let parities = pairs.iter().map(|x| x.1).collect();
    let states = DMatrix::from_columns(&pairs.iter().map(|x| x.2.clone()).collect::<Vec<_>>());
    Ok(Eigensystem::from_parts(energies, states, parities, vec![None; dim]))
}

/// Labels levels near the uncoupled limit by excitation-number manifold and
/// energy ordering inside each manifold.
fn weak_coupling_labels(es: &Eigensystem, n_q: &OperatorMatrix) -> Vec<Option<Label>> {
    let mut manifolds: Vec<(usize, usize)> = (0..es.len())
        .map(|j| (n_q.expectation(&es.state(j)).round() as usize, j))
        .collect();
    manifolds.sort();
    let mut labels = vec![None; es.len()];
    let mut i = 0;
    while i < manifolds.len() {
        let m = manifolds[i].0;
        let members: Vec<usize> =
            manifolds[i..].iter().take_while(|x| x.0 == m).map(|x| x.1).collect();
        i += members.len();
        match (m, members.as_slice()) {
            (0, [j]) => labels[*j] = Some(Label::Ground),
            (n, [a, b]) if n > 0 => {
                // members come sorted by index, which is energy order
                let (lo, hi) = if es.energy(*a) <= es.energy(*b) { (*a, *b) } else { (*b, *a) };
                labels[lo] = Some(Label::minus(n));
                labels[hi] = Some(Label::plus(n));
            }
            _ => {}
        }
    }
    labels
}

/// Carries labels from `prev` to `next` by maximal overlap.
fn continue_labels(prev: &Eigensystem, next: &Eigensystem) -> Vec<Option<Label>> {
    let overlaps = prev.states().adjoint() * next.states();
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * next.len());
    for i in 0..prev.len() {
        for j in 0..next.len() {
            let o = overlaps[(i, j)].norm_sqr();
            if o > 1e-3 {
                cand.push((o, i, j));
            }
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut used_prev = vec![false; prev.len()];
    let mut labels = vec![None; next.len()];
    let mut assigned = vec![false; next.len()];
    for (_, i, j) in cand {
        if used_prev[i] || assigned[j] {
            continue;
        }
        used_prev[i] = true;
        assigned[j] = true;
        labels[j] = prev.label(i);
    }
    labels
}

/// Exact eigensystem of `build(p, spec)` with adiabatic labels obtained by
/// continuing from a weak coupling up to `p.g` in `steps` increments.
pub fn labeled_eigensystem(
    p: &SystemParams,
    spec: SpaceSpec,
    build: fn(&SystemParams, SpaceSpec) -> OperatorMatrix,
    steps: usize,
) -> Result<Eigensystem> {
    let parity = build_operator(spec, OperatorKind::Parity);
    let n_q = excitation_number(spec);
    let g_start = p.g.min(1e-3 * p.omega_a.min(p.omega_r));
    let mut es = diagonalize(&build(&p.with_g(g_start)?, spec), &parity)?;
    let labels = weak_coupling_labels(&es, &n_q);
    es.set_labels(labels);
    if p.g == g_start {
        return Ok(es);
    }
    let steps = steps.max(1);
    for k in 1..=steps {
        let g = g_start + (p.g - g_start) * k as f64 / steps as f64;
        let mut next = diagonalize(&build(&p.with_g(g)?, spec), &parity)?;
        let labels = continue_labels(&es, &next);
        next.set_labels(labels);
        es = next;
    }
    Ok(es)
}

/// Labeled exact eigensystem of the Rabi Hamiltonian.
pub fn rabi_eigensystem(p: &SystemParams, spec: SpaceSpec) -> Result<Eigensystem> {
    labeled_eigensystem(p, spec, rabi_hamiltonian, ADIABATIC_STEPS)
}
