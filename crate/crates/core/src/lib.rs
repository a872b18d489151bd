//! Dissipative dynamics of a qubit coupled to a single resonator mode, from
//! the Jaynes-Cummings regime to ultrastrong coupling.
//!
//! Frequencies and rates are angular frequencies in rad/ns throughout; see
//! [`units`] for conversions from GHz/MHz.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod liouville;
pub mod models;
pub mod noise;
pub mod units;

pub use error::{Error, Result};
pub use hilbert::{build_operator, OperatorKind, OperatorMatrix, Operators, Qubit, SpaceSpec, C64};
