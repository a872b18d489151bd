//! Config-driven experiment runner on top of `usc_core`.
//!
//! A run parses one TOML config, evaluates the named experiment over its
//! sweep grid and writes versioned CSV tables plus a JSON manifest. Outputs
//! depend on the config alone: there is no randomness, and sweep points are
//! collected in grid order whatever the worker count.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod validate;

use std::path::PathBuf;

use config::LoadedConfig;
use error::{CliError, CliResult};
use output::{CsvTable, Manifest, ToleranceRecord};

/// Evaluates the experiment on a pool of `workers` threads (0 means one per
/// core) and returns its tables without writing anything.
pub fn compute(cfg: &LoadedConfig, workers: usize) -> CliResult<Vec<CsvTable>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::field("--workers", e.to_string()))?;
    pool.install(|| experiments::run(cfg))
}

/// Computes and writes all artifacts, returning the written paths.
pub fn run(cfg: &LoadedConfig, workers: usize) -> CliResult<Vec<PathBuf>> {
    let tables = compute(cfg, workers)?;
    let tol = cfg.tolerances();
    let manifest = Manifest {
        schema: output::SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment().name(),
        config_sha256: output::sha256_hex(cfg.source.as_bytes()),
        n_max: cfg.n_max(),
        n_levels: cfg.n_levels(),
        tolerances: ToleranceRecord { rtol: tol.rtol, atol: tol.atol },
        outputs: Vec::new(),
    };
    output::write_run(&cfg.output_dir(), &cfg.prefix(), &tables, manifest)
}
