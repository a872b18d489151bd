//! Excitation numbers up to which the dressed transitions stay resolved.

use usc_core::analytic::n_crit;
use usc_core::models::SystemParams;

use super::map_sweep;
use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::output::{Cell, CsvTable};

/// `(odd_bath, even_bath)` critical numbers. Infinite where there is no
/// constraint (`g = 0`, or no linewidth for the odd bath), NaN where the
/// closed form is undefined.
pub fn critical_numbers(p: &SystemParams, kappa: f64) -> (f64, f64) {
    if p.g == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    // The even-bath number does not depend on κ; any positive value serves.
    let even = n_crit(p, 1.0).map_or(f64::NAN, |c| c.even_bath);
    let odd = if kappa > 0.0 { n_crit(p, kappa).map_or(f64::NAN, |c| c.odd_bath) } else { f64::INFINITY };
    (odd, even)
}

pub(super) fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    let baths = cfg.baths()?;
    let rows = map_sweep(cfg, |value| {
        let p = cfg.params_at(value)?;
        let (odd, even) = critical_numbers(&p, baths.kappa.eval(p.omega_r)?);
        Ok(vec![Cell::from(value), p.big_lambda().into(), odd.into(), even.into()])
    })?;
    let mut table = CsvTable::new(None, vec![cfg.sweep_parameter().column(), "lambda", "n_crit_odd", "n_crit_even"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![table])
}
