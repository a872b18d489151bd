//! Dry-run checks on a parsed config. Nothing is diagonalized or evolved;
//! every check uses closed forms only.

use std::fmt;

use usc_core::models::PERTURBATIVE_LAMBDA_LIMIT;

use crate::config::{Experiment, LoadedConfig};
use crate::error::CliResult;
use crate::experiments::critical_numbers;

/// Photons of headroom wanted above the highest retained doublet.
pub const TRUNCATION_MARGIN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarningKind {
    Perturbative,
    Resolution,
    Truncation,
    Dispersive,
}

impl fmt::Display for WarningKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarningKind::Perturbative => "perturbative",
            WarningKind::Resolution => "resolution",
            WarningKind::Truncation => "truncation",
            WarningKind::Dispersive => "dispersive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub kind: WarningKind,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warning[{}]: {}", self.kind, self.message)
    }
}

/// Whether the experiment evolves or diagonalizes a dressed equation over a
/// fixed number of levels.
fn uses_dressed_levels(e: Experiment) -> bool {
    matches!(e, Experiment::GroundStateHeating | Experiment::RabiSplitting | Experiment::PhotonGeneration)
}

pub fn validate(cfg: &LoadedConfig) -> CliResult<Vec<Warning>> {
    let mut out = Vec::new();
    let baths = cfg.baths()?;
    let column = cfg.sweep_parameter().column();
    let n_levels = cfg.n_levels();
    // Levels are the ground state plus two per doublet.
    let n_top = (n_levels - 1) / 2;
    let dressed = uses_dressed_levels(cfg.experiment());

    for value in cfg.sweep_values()? {
        let p = cfg.params_at(value)?;
        let lam = p.big_lambda();
        if lam > PERTURBATIVE_LAMBDA_LIMIT {
            out.push(Warning {
                kind: WarningKind::Perturbative,
                message: format!(
                    "{column} = {value}: Lambda = g/(w_a + w_r) = {lam:.3} exceeds {PERTURBATIVE_LAMBDA_LIMIT}; closed-form columns are outside their regime"
                ),
            });
        }
        if dressed {
            let (odd, even) = critical_numbers(&p, baths.kappa.eval(p.omega_r)?);
            for (name, n_crit) in [("sigma_z", even), ("X/sigma_x", odd)] {
                if (n_top as f64) > n_crit || n_crit.is_nan() {
                    out.push(Warning {
                        kind: WarningKind::Resolution,
                        message: format!(
                            "{column} = {value}: n_levels = {n_levels} retains doublet {n_top}, beyond the critical number {n_crit:.3} of the {name} bath; dressed transitions there may overlap and the secular rates are unreliable"
                        ),
                    });
                }
            }
        }
        if cfg.experiment() == Experiment::Sidebands {
            if let Ok(l) = p.lambda_disp() {
                if l.abs() > PERTURBATIVE_LAMBDA_LIMIT {
                    out.push(Warning {
                        kind: WarningKind::Dispersive,
                        message: format!("{column} = {value}: lambda = g/Delta = {l:.3} is not small; the dispersive frame is inaccurate"),
                    });
                }
            }
        }
    }
    if dressed && cfg.n_max() < n_top + TRUNCATION_MARGIN {
        out.push(Warning {
            kind: WarningKind::Truncation,
            message: format!(
                "n_max = {} leaves fewer than {TRUNCATION_MARGIN} photons above doublet {n_top}; use n_max >= {}",
                cfg.n_max(),
                n_top + TRUNCATION_MARGIN
            ),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;
    use std::path::{Path, PathBuf};

    fn load(text: &str) -> LoadedConfig {
        LoadedConfig::from_source(text.into(), Path::new("t.toml"), PathBuf::new(), &Overrides::default()).unwrap()
    }

    const HEATING: &str = r#"
experiment = "ground_state_heating"
[system]
qubit_ghz = 6.0
resonator_ghz = 6.0
[baths.kappa]
kind = "white"
rate_mhz = 0.1
[baths.gamma]
kind = "white"
rate_mhz = 0.1
[numerics]
n_max = 12
n_levels = 5
[sweep]
start = 0.1
stop = 2.0
points = 20
"#;

    #[test]
    fn well_formed_heating_config_is_clean() {
        assert_eq!(validate(&load(HEATING)).unwrap(), vec![]);
    }

    #[test]
    fn large_lambda_warns() {
        let w = validate(&load(&HEATING.replace("stop = 2.0", "stop = 4.0"))).unwrap();
        assert!(w.iter().any(|w| w.kind == WarningKind::Perturbative), "{w:?}");
    }

    #[test]
    fn levels_beyond_critical_number_warn() {
        let w = validate(&load(&HEATING.replace("n_levels = 5", "n_levels = 9"))).unwrap();
        let r: Vec<_> = w.iter().filter(|w| w.kind == WarningKind::Resolution).collect();
        assert!(!r.is_empty());
        assert!(r[0].message.contains("critical number"));
    }

    #[test]
    fn small_truncation_warns() {
        let w = validate(&load(&HEATING.replace("n_max = 12", "n_max = 5"))).unwrap();
        assert!(w.iter().any(|w| w.kind == WarningKind::Truncation));
    }
}
