//! Named experiments. Each returns its CSV tables in sweep order; sweep
//! points are independent, so they are evaluated on the rayon pool and
//! collected in order.

mod audit;
mod heating;
mod ncrit;
mod photons;
mod sidebands;
mod splitting;

use rayon::prelude::*;
use usc_core::dynamics::{DensityMatrix, EvolveOptions, Trajectory};
use usc_core::hilbert::{Qubit, SpaceSpec};

use crate::config::{Experiment, LoadedConfig};
use crate::error::{CliError, CliResult, Guard};
use crate::output::CsvTable;

pub use ncrit::critical_numbers;

/// Largest tolerated population of the topmost Fock level.
pub const TRUNCATION_WEIGHT: f64 = 1e-6;

/// Largest tolerated trace or Hermiticity drift along a trajectory.
pub const DRIFT_LIMIT: f64 = 1e-6;

pub fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    match cfg.experiment() {
        Experiment::GroundStateHeating => heating::run(cfg),
        Experiment::RabiSplitting => splitting::run(cfg),
        Experiment::PhotonGeneration => photons::run(cfg),
        Experiment::NcritReport => ncrit::run(cfg),
        Experiment::Sidebands => sidebands::run(cfg),
        Experiment::MatrixElementAudit => audit::run(cfg),
    }
}

/// Evaluates `f` at every sweep value in parallel, preserving order.
fn map_sweep<T, F>(cfg: &LoadedConfig, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> CliResult<T> + Sync + Send,
{
    cfg.sweep_values()?.into_par_iter().map(f).collect()
}

fn top_fock_weight(spec: SpaceSpec, rho: &DensityMatrix) -> f64 {
    let n = spec.n_max();
    rho.population(&spec.basis_state(Qubit::Ground, n)) + rho.population(&spec.basis_state(Qubit::Excited, n))
}

fn check_truncation(spec: SpaceSpec, rho: &DensityMatrix, what: &str) -> CliResult<()> {
    let w = top_fock_weight(spec, rho);
    if w > TRUNCATION_WEIGHT {
        return Err(CliError::guard(
            Guard::Truncation,
            format!("{what}: population {w:.2e} in Fock level n_max = {} exceeds {TRUNCATION_WEIGHT:.0e}; raise n_max", spec.n_max()),
        ));
    }
    Ok(())
}

fn check_drift(tr: &Trajectory, what: &str) -> CliResult<()> {
    let (t, h) = (tr.max_trace_drift(), tr.max_hermiticity_drift());
    if t > DRIFT_LIMIT || h > DRIFT_LIMIT {
        return Err(CliError::guard(
            Guard::TraceDrift,
            format!("{what}: trace drift {t:.2e}, Hermiticity drift {h:.2e} (limit {DRIFT_LIMIT:.0e}); tighten tolerances"),
        ));
    }
    Ok(())
}

fn evolve_options(cfg: &LoadedConfig) -> EvolveOptions {
    EvolveOptions::default().with_tolerances(cfg.tolerances())
}

#[cfg(test)]
mod tests {
    use super::*;
    use usc_core::hilbert::C64;

    #[test]
    fn top_weight_of_basis_states() {
        let spec = SpaceSpec::new(3).unwrap();
        let top = DensityMatrix::pure(&spec.basis_state(Qubit::Excited, 3)).unwrap();
        assert!((top_fock_weight(spec, &top) - 1.0).abs() < 1e-15);
        assert!(check_truncation(spec, &top, "x").is_err());
        let mut psi = spec.basis_state(Qubit::Ground, 0) * C64::new(0.6, 0.0);
        psi[spec.index(Qubit::Ground, 1)] = C64::new(0.8, 0.0);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert_eq!(top_fock_weight(spec, &rho), 0.0);
        assert!(check_truncation(spec, &rho, "x").is_ok());
    }
}
