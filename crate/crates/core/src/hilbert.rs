//! Truncated qubit ⊗ Fock space and the elementary operators acting on it.
//!
//! Basis ordering is qubit-major: the state `|q, n⟩` with `q ∈ {g = 0, e = 1}`
//! and `n ∈ 0..=n_max` sits at index `q·(n_max + 1) + n`, so every qubit
//! operator is a 2×2 block structure over identical Fock blocks.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Qubit state label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qubit {
    Ground,
    Excited,
}

impl Qubit {
    fn index(self) -> usize {
        match self {
            Qubit::Ground => 0,
            Qubit::Excited => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    n_max: usize,
}

impl SpaceSpec {
    /// Fock states `|0⟩ … |n_max⟩`; at least `|2⟩` is needed to hold the
    /// two-photon component of the dressed ground state.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::TruncationTooSmall(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim()
    }

    pub fn index(&self, q: Qubit, n: usize) -> usize {
        debug_assert!(n <= self.n_max);
        q.index() * self.fock_dim() + n
    }

    /// Inverse of [`SpaceSpec::index`].
    pub fn label(&self, idx: usize) -> (Qubit, usize) {
        let q = if idx < self.fock_dim() {
            Qubit::Ground
        } else {
            Qubit::Excited
        };
        (q, idx % self.fock_dim())
    }

    pub fn basis_state(&self, q: Qubit, n: usize) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[self.index(q, n)] = ONE;
        v
    }

    /// Total excitation number `n + [q = e]` of a basis index.
    pub fn excitations(&self, idx: usize) -> usize {
        let (q, n) = self.label(idx);
        n + q.index()
    }
}

/// Named elementary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    SigmaMinus,
    SigmaPlus,
    SigmaZ,
    SigmaX,
    /// `X = a + a†`
    PositionX,
    /// `Π = (−1)^{a†a + σ+σ−}`
    Parity,
    Number,
    Identity,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 10] = [
        OperatorKind::Annihilation,
        OperatorKind::Creation,
        OperatorKind::SigmaMinus,
        OperatorKind::SigmaPlus,
        OperatorKind::SigmaZ,
        OperatorKind::SigmaX,
        OperatorKind::PositionX,
        OperatorKind::Parity,
        OperatorKind::Number,
        OperatorKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Annihilation => "annihilation",
            OperatorKind::Creation => "creation",
            OperatorKind::SigmaMinus => "sigma_minus",
            OperatorKind::SigmaPlus => "sigma_plus",
            OperatorKind::SigmaZ => "sigma_z",
            OperatorKind::SigmaX => "sigma_x",
            OperatorKind::PositionX => "position_X",
            OperatorKind::Parity => "parity",
            OperatorKind::Number => "number",
            OperatorKind::Identity => "identity",
        }
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dense complex operator on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl OperatorMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operators are square");
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_iterator(
            diag.len(),
            diag.iter().map(|&x| re(x)),
        )))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 + &other.0 * &self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `‖A − A†‖_F / ‖A‖_F`, zero for the zero operator.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&self.0 - self.0.adjoint()).norm() / n
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }

    /// `⟨u|A|v⟩`
    pub fn element(&self, u: &DVector<C64>, v: &DVector<C64>) -> C64 {
        u.dotc(&(&self.0 * v))
    }

    /// `⟨v|A|v⟩` (real part; callers use this on Hermitian observables).
    pub fn expectation(&self, v: &DVector<C64>) -> f64 {
        self.element(v, v).re
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&OperatorMatrix> for &OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: &OperatorMatrix) -> OperatorMatrix {
                OperatorMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $trait<OperatorMatrix> for &OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: OperatorMatrix) -> OperatorMatrix {
                OperatorMatrix(&self.0 $op rhs.0)
            }
        }
        impl $trait<&OperatorMatrix> for OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: &OperatorMatrix) -> OperatorMatrix {
                OperatorMatrix(self.0 $op &rhs.0)
            }
        }
        impl $trait<OperatorMatrix> for OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: OperatorMatrix) -> OperatorMatrix {
                OperatorMatrix(self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale(rhs)
    }
}

impl Neg for OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix(-self.0)
    }
}

/// Builds the named operator on `spec`.
///
/// Truncation is exact on the retained states: `a` maps `|n⟩ → √n |n−1⟩`
/// everywhere, `a†` sends `|n_max⟩` to zero.
pub fn build_operator(spec: SpaceSpec, kind: OperatorKind) -> OperatorMatrix {
    let d = spec.dim();
    let nf = spec.fock_dim();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for q in [Qubit::Ground, Qubit::Excited] {
        for n in 0..nf {
            let col = spec.index(q, n);
            match kind {
                OperatorKind::Annihilation => {
                    if n > 0 {
                        m[(spec.index(q, n - 1), col)] = re((n as f64).sqrt());
                    }
                }
                OperatorKind::Creation => {
                    if n + 1 < nf {
                        m[(spec.index(q, n + 1), col)] = re(((n + 1) as f64).sqrt());
                    }
                }
                OperatorKind::PositionX => {
                    if n > 0 {
                        m[(spec.index(q, n - 1), col)] = re((n as f64).sqrt());
                    }
                    if n + 1 < nf {
                        m[(spec.index(q, n + 1), col)] = re(((n + 1) as f64).sqrt());
                    }
                }
                OperatorKind::SigmaMinus => {
                    if q == Qubit::Excited {
                        m[(spec.index(Qubit::Ground, n), col)] = ONE;
                    }
                }
                OperatorKind::SigmaPlus => {
                    if q == Qubit::Ground {
                        m[(spec.index(Qubit::Excited, n), col)] = ONE;
                    }
                }
                OperatorKind::SigmaX => {
                    let other = match q {
                        Qubit::Ground => Qubit::Excited,
                        Qubit::Excited => Qubit::Ground,
                    };
                    m[(spec.index(other, n), col)] = ONE;
                }
                OperatorKind::SigmaZ => {
                    m[(col, col)] = re(if q == Qubit::Excited { 1.0 } else { -1.0 });
                }
                OperatorKind::Parity => {
                    let odd = (n + q.index()) % 2 == 1;
                    m[(col, col)] = re(if odd { -1.0 } else { 1.0 });
                }
                OperatorKind::Number => {
                    m[(col, col)] = re(n as f64);
                }
                OperatorKind::Identity => {
                    m[(col, col)] = ONE;
                }
            }
        }
    }
    OperatorMatrix(m)
}

/// Builds an operator from its name, e.g. `"sigma_x"`.
pub fn build_operator_named(spec: SpaceSpec, kind: &str) -> Result<OperatorMatrix> {
    Ok(build_operator(spec, kind.parse()?))
}

/// All elementary operators of a space, built once.
#[derive(Debug, Clone)]
pub struct Operators {
    pub spec: SpaceSpec,
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub sm: OperatorMatrix,
    pub sp: OperatorMatrix,
    pub sz: OperatorMatrix,
    pub sx: OperatorMatrix,
    pub x: OperatorMatrix,
    pub parity: OperatorMatrix,
    pub n: OperatorMatrix,
    pub id: OperatorMatrix,
}

impl Operators {
    pub fn new(spec: SpaceSpec) -> Self {
        let b = |k| build_operator(spec, k);
        Self {
            spec,
            a: b(OperatorKind::Annihilation),
            a_dag: b(OperatorKind::Creation),
            sm: b(OperatorKind::SigmaMinus),
            sp: b(OperatorKind::SigmaPlus),
            sz: b(OperatorKind::SigmaZ),
            sx: b(OperatorKind::SigmaX),
            x: b(OperatorKind::PositionX),
            parity: b(OperatorKind::Parity),
            n: b(OperatorKind::Number),
            id: b(OperatorKind::Identity),
        }
    }
}
