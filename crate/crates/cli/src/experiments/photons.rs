//! Photon generation out of the dressed ground state by qubit-frequency
//! noise, numeric trace rate against the closed forms.

use usc_core::analytic::{photon_rate_beta, photon_rate_beta_white};
use usc_core::dynamics::{convergence_check, photon_rate_numeric, CONVERGENCE_TOLERANCE};
use usc_core::units::to_mhz;

use super::map_sweep;
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult, Guard};
use crate::output::{Cell, CsvTable};

pub const HEADER: [&str; 7] = [
    "g_ghz",
    "lambda",
    "beta_numeric_mhz",
    "beta_closed_form_mhz",
    "beta_white_mhz",
    "virtual_photons",
    "truncation_change",
];

pub(super) fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    let baths = cfg.baths()?;
    let (n_max, n_levels) = (cfg.n_max(), cfg.n_levels());
    let gphi0 = baths.gamma_phi.eval(0.0)?;
    let mut header = HEADER.to_vec();
    header[0] = cfg.sweep_parameter().column();

    let rows = map_sweep(cfg, |value| {
        let p = cfg.params_at(value)?;
        let report = convergence_check(&p, n_max, &baths, n_levels)?;
        // Rates far below any bath scale are zero up to rounding.
        let floor = 1e-12 * (gphi0 + baths.kappa.eval(p.omega_r)? + baths.gamma.eval(p.omega_a)?);
        if !report.converged && (report.beta - report.beta_enlarged).abs() > floor {
            return Err(CliError::guard(
                Guard::Truncation,
                format!(
                    "at {value}: rate changes by {:.2e} (limit {CONVERGENCE_TOLERANCE:.0e}) with four more photons and levels",
                    report.relative_change
                ),
            ));
        }
        let virt = photon_rate_numeric(&p, n_max, &baths, n_levels)?.virtual_photons;
        Ok(vec![
            Cell::from(value),
            p.big_lambda().into(),
            to_mhz(report.beta).into(),
            to_mhz(photon_rate_beta(&p, &baths.gamma_phi)?).into(),
            to_mhz(photon_rate_beta_white(&p, gphi0)).into(),
            virt.into(),
            report.relative_change.into(),
        ])
    })?;

    let mut table = CsvTable::new(None, header);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![table])
}
