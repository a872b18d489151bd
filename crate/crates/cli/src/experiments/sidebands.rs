//! Qubit-frequency modulation in the dispersive frame: red-sideband swap
//! `|e,0⟩ ↔ |g,1⟩` or parametric amplification from the vacuum.
//!
//! Drive frequencies default to the dispersively shifted transitions,
//! `Δ + 2(χ+μ)` and `2(ω_r − χ − μ)`. Dissipation, if any, enters through
//! bare-operator jumps at the spectra's bare-frequency rates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use usc_core::analytic::sideband_coefficients;
use usc_core::dynamics::{evolve_time_dependent, linspace, DensityMatrix};
use usc_core::hilbert::{OperatorMatrix, Operators, Qubit, SpaceSpec, C64};
use usc_core::liouville::standard_lindbladian_from_spectra;
use usc_core::models::modulated_dispersive_hamiltonian;
use usc_core::units::{ghz, to_ghz, to_mhz};

use super::{check_drift, check_truncation, evolve_options};
use crate::config::{LoadedConfig, SidebandMode};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, CsvTable};

pub(super) fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    let Some(sb) = cfg.config.sideband.clone() else {
        return Err(CliError::field("sideband", "section is required"));
    };
    let p = cfg.params_at(cfg.sweep_values()?[0])?;
    let spec = SpaceSpec::new(cfg.n_max())?;
    let eps = ghz(sb.eps_z_ghz);
    let dispersive = |e: usc_core::Error| CliError::field("system", format!("sidebands need a detuned qubit: {e}"));
    let shift = p.chi().map_err(dispersive)? + p.mu();
    let coeff = sideband_coefficients(&p, eps).map_err(dispersive)?;
    let (default_wd, rate) = match sb.mode {
        SidebandMode::Red => (p.delta() + 2.0 * shift, coeff.red),
        SidebandMode::Parametric => (2.0 * (p.omega_r - shift), coeff.parametric),
    };
    let wd = sb.omega_d_ghz.map_or(default_wd, ghz);
    if rate == 0.0 {
        return Err(CliError::field("system.coupling_ghz", "effective coupling vanishes"));
    }
    let t_end = sb.t_end_ns.unwrap_or(match sb.mode {
        SidebandMode::Red => PI / rate.abs(),
        SidebandMode::Parametric => 1.0 / (4.0 * rate.abs()),
    });
    let grid = linspace(0.0, t_end, sb.samples);

    let h0 = modulated_dispersive_hamiltonian(&p, spec, 0.0, wd, 0.0)?.into_matrix();
    let h1 = modulated_dispersive_hamiltonian(&p, spec, eps, wd, 0.0)?.into_matrix() - &h0;
    let h_of_t = |t: f64| Ok(OperatorMatrix::from_matrix(&h0 + &h1 * C64::new((wd * t).cos(), 0.0)));
    let terms = standard_lindbladian_from_spectra(spec, p.omega_r, p.omega_a, &cfg.baths()?, &OperatorMatrix::from_matrix(h0.clone()))?
        .terms()
        .to_vec();
    let start = match sb.mode {
        SidebandMode::Red => spec.basis_state(Qubit::Excited, 0),
        SidebandMode::Parametric => spec.basis_state(Qubit::Ground, 0),
    };
    let tr = evolve_time_dependent(&DensityMatrix::pure(&start)?, h_of_t, &terms, &grid, &evolve_options(cfg).with_snapshots())?;
    check_drift(&tr, "modulated evolution")?;
    check_truncation(spec, &tr.final_state, "final state")?;
    let snaps = tr.snapshots.as_deref().unwrap_or_default();

    let mut coefficients = CsvTable::new(
        Some("coefficients"),
        vec!["mode", "omega_d_ghz", "red_mhz", "blue_mhz", "parametric_mhz"],
    );
    coefficients.push(vec![
        Cell::from(match sb.mode {
            SidebandMode::Red => "red",
            SidebandMode::Parametric => "parametric",
        }),
        to_ghz(wd).into(),
        to_mhz(coeff.red).into(),
        to_mhz(coeff.blue).into(),
        to_mhz(coeff.parametric).into(),
    ]);

    let trajectory = match sb.mode {
        SidebandMode::Red => {
            let (e0, g1) = (spec.basis_state(Qubit::Excited, 0), spec.basis_state(Qubit::Ground, 1));
            let mut t = CsvTable::new(Some("trajectory"), vec!["t_ns", "p_e0", "p_g1", "p_g1_oracle"]);
            let pop = |rho: &DMatrix<C64>, psi: &DVector<C64>| psi.dotc(&(rho * psi)).re;
            for (&time, rho) in grid.iter().zip(snaps) {
                t.push(vec![
                    time.into(),
                    pop(rho, &e0).into(),
                    pop(rho, &g1).into(),
                    (rate * time).sin().powi(2).into(),
                ]);
            }
            t
        }
        SidebandMode::Parametric => {
            let o = Operators::new(spec);
            let a2 = o.a.matrix() * o.a.matrix();
            let mut t = CsvTable::new(
                Some("trajectory"),
                vec!["t_ns", "photons", "abs_a2", "photons_oracle", "abs_a2_oracle"],
            );
            for ((&time, rho), s) in grid.iter().zip(snaps).zip(&tr.samples) {
                t.push(vec![
                    time.into(),
                    s.photons.into(),
                    (rho * &a2).trace().norm().into(),
                    (2.0 * rate * time).sinh().powi(2).into(),
                    (0.5 * (4.0 * rate * time).sinh().abs()).into(),
                ]);
            }
            t
        }
    };
    Ok(vec![coefficients, trajectory])
}
