//! Driven transmission through the first doublet: numeric steady-state field
//! next to the closed form, and a two-Lorentzian fit of the peak widths.

use rayon::prelude::*;
use usc_core::analytic::{asymmetry_us, transmission_spectrum, RabiSplittingRates};
use usc_core::dynamics::{driven_transmission_sweep, fit_two_lorentzians, linspace, DensityMatrix, Peak, TransmissionModel};
use usc_core::hilbert::SpaceSpec;
use usc_core::models::{rabi_eigensystem, Label};
use usc_core::units::{mhz, to_ghz, to_mhz};

use super::check_truncation;
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult, Guard};
use crate::output::{Cell, CsvTable};

/// Largest tolerated relative RMS residual of the two-peak fit.
pub const FIT_RMS_LIMIT: f64 = 0.05;

fn lorentzian(peak: &Peak, w: f64) -> f64 {
    -peak.amplitude * peak.width / (peak.width * peak.width + (w - peak.center).powi(2))
}

pub(super) fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    let p = cfg.params_at(cfg.sweep_values()?[0])?;
    let baths = cfg.baths()?;
    let drive = cfg.drive();
    let spec = SpaceSpec::new(cfg.n_max())?;
    let es = rabi_eigensystem(&p, spec)?;
    check_truncation(spec, &DensityMatrix::pure(&es.state(es.find(Label::Ground)?))?, "dressed ground state")?;

    let kappa = baths.kappa.eval(p.omega_r)?;
    let gamma1 = baths.gamma.eval(p.omega_a)?;
    let epsilon = match drive.epsilon_mhz {
        Some(e) => mhz(e),
        None if kappa > 0.0 => 1e-3 * kappa,
        None => return Err(CliError::field("drive.epsilon_mhz", "required when kappa(omega_r) vanishes")),
    };
    let model = TransmissionModel::new(&p, cfg.n_max(), &baths, drive.n_levels, epsilon)?;
    let rates = RabiSplittingRates::from_baths(&p, &baths)?;
    // Windows sit on the exact dressed transitions out of the ground state.
    let e0 = es.energy(es.find(Label::Ground)?);
    let lower = es.energy(es.find(Label::minus(1))?) - e0;
    let upper = es.energy(es.find(Label::plus(1))?) - e0;
    let center = 0.5 * (lower + upper);
    let half = drive.window * rates.gamma1.max(rates.gamma2);
    if !(half > 0.0) {
        return Err(CliError::field("baths", "both dressed linewidths vanish; nothing to resolve"));
    }
    let mut grid = linspace(lower - half, lower + half, drive.points);
    grid.extend(linspace(upper - half, upper + half, drive.points));

    let sweep: Vec<_> = grid
        .par_iter()
        .map(|w| driven_transmission_sweep(&model, std::slice::from_ref(w)).map(|mut v| v.remove(0)))
        .collect::<Result<_, _>>()?;
    let closed = transmission_spectrum(&p, &rates, epsilon, &grid);
    let fit = fit_two_lorentzians(&sweep, center)?;
    if fit.relative_rms > FIT_RMS_LIMIT {
        return Err(CliError::guard(
            Guard::Fit,
            format!("two-Lorentzian fit residual {:.3} exceeds {FIT_RMS_LIMIT}", fit.relative_rms),
        ));
    }

    let mut table = CsvTable::new(
        Some("sweep"),
        vec!["omega_d_ghz", "re_a", "im_a", "im_a_closed_form", "im_a_two_lorentzian", "im_a_fit"],
    );
    for (s, c) in sweep.iter().zip(&closed) {
        let fitted = lorentzian(&fit.lower, s.omega_d) + lorentzian(&fit.upper, s.omega_d);
        table.push(vec![
            to_ghz(s.omega_d).into(),
            s.a.re.into(),
            s.a.im.into(),
            c.a.im.into(),
            c.im_lorentzian.into(),
            fitted.into(),
        ]);
    }

    let eta_us = asymmetry_us(&p, kappa, gamma1);
    let mut summary = CsvTable::new(
        Some("summary"),
        vec![
            "eta_us_mhz",
            "eta_rates_mhz",
            "eta_fit_mhz",
            "gamma1_rates_mhz",
            "gamma2_rates_mhz",
            "width_lower_fit_mhz",
            "width_upper_fit_mhz",
            "center_lower_ghz",
            "center_upper_ghz",
            "fit_relative_rms",
        ],
    );
    summary.push(vec![
        Cell::from(to_mhz(eta_us)),
        to_mhz(rates.asymmetry()).into(),
        to_mhz(fit.asymmetry()).into(),
        to_mhz(rates.gamma1).into(),
        to_mhz(rates.gamma2).into(),
        to_mhz(fit.lower.width).into(),
        to_mhz(fit.upper.width).into(),
        to_ghz(fit.lower.center).into(),
        to_ghz(fit.upper.center).into(),
        fit.relative_rms.into(),
    ]);
    log::info!(
        "eta/2pi: closed form {:.4} MHz, dressed rates {:.4} MHz, fit {:.4} MHz",
        to_mhz(eta_us),
        to_mhz(rates.asymmetry()),
        to_mhz(fit.asymmetry())
    );
    Ok(vec![table, summary])
}
