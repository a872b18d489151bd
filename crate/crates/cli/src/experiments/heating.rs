//! Heating of the dressed ground state: the standard master equation drives
//! it to a state with excess photons, while the dressed equation keeps it
//! stationary at zero temperature.

use usc_core::dynamics::{evolve, linspace, steady_state, DensityMatrix};
use usc_core::hilbert::{Operators, Qubit, SpaceSpec};
use usc_core::liouville::{dressed_lindbladian, standard_lindbladian_from_spectra};
use usc_core::models::{rabi_eigensystem, rabi_hamiltonian, Label};

use super::{check_drift, check_truncation, evolve_options, map_sweep};
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, CsvTable};

pub const HEADER: [&str; 6] = [
    "g_ghz",
    "excess_photons_std",
    "one_minus_fidelity",
    "excess_photons_dressed",
    "one_minus_min_fidelity_dressed",
    "virtual_photons",
];

pub(super) fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    let spec = SpaceSpec::new(cfg.n_max())?;
    let baths = cfg.baths()?;
    let n_levels = cfg.n_levels();
    let samples = cfg.config.numerics.samples;
    let opts = evolve_options(cfg);
    let mut header = HEADER.to_vec();
    header[0] = cfg.sweep_parameter().column();

    let rows = map_sweep(cfg, |value| {
        let p = cfg.params_at(value)?;
        let t_end = match cfg.config.numerics.t_end_ns {
            Some(t) => t,
            None => {
                let kappa = baths.kappa.eval(p.omega_r)?;
                if kappa <= 0.0 {
                    return Err(CliError::field("numerics.t_end_ns", "required when kappa(omega_r) vanishes"));
                }
                10.0 / kappa
            }
        };
        let h = rabi_hamiltonian(&p, spec);
        let es = rabi_eigensystem(&p, spec)?;
        let psi = es.state(es.find(Label::Ground)?);
        let rho0 = DensityMatrix::pure(&psi)?;
        check_truncation(spec, &rho0, &format!("dressed ground state at {value}"))?;
        let o = Operators::new(spec);
        let n0 = o.n.expectation(&psi);
        let overlap = psi.dotc(&spec.basis_state(Qubit::Ground, 0)).norm_sqr();

        let l_std = standard_lindbladian_from_spectra(spec, p.omega_r, p.omega_a, &baths, &h)?;
        let ss = steady_state(&l_std)?;
        check_truncation(spec, &ss, &format!("standard steady state at {value}"))?;

        let l_dr = dressed_lindbladian(&es, &baths, &h, n_levels)?;
        let tr = evolve(&rho0, &l_dr, &linspace(0.0, t_end, samples), &opts.clone().with_reference(psi))?;
        check_drift(&tr, &format!("dressed evolution at {value}"))?;
        let worst = tr.fidelities().into_iter().fold(1.0, f64::min);
        let last = tr.samples.last().map_or(n0, |s| s.photons);

        log::info!("{} = {value}: std excess {:.4e}, dressed excess {:.2e}", header[0], ss.expectation(&o.n).re - n0, last - n0);
        Ok(vec![
            Cell::from(value),
            (ss.expectation(&o.n).re - n0).into(),
            (1.0 - overlap).into(),
            (last - n0).into(),
            (1.0 - worst).into(),
            n0.into(),
        ])
    })?;

    let mut table = CsvTable::new(None, header);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![table])
}
