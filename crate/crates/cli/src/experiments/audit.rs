//! Perturbative dressed matrix elements, derived and as-printed, against
//! exact diagonalization in the same sign convention.

use usc_core::analytic::{bs_matrix_elements, ElementConvention, ElementKind, ExactElements};

use super::map_sweep;
use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::output::{Cell, CsvTable};

pub const HEADER: [&str; 11] = [
    "g_ghz",
    "lambda",
    "kind",
    "n",
    "bra",
    "ket",
    "derived",
    "printed",
    "exact",
    "error_derived",
    "error_printed",
];

pub(super) fn run(cfg: &LoadedConfig) -> CliResult<Vec<CsvTable>> {
    let audit = cfg.audit();
    let printed = ElementConvention::AsPrinted(audit.printed.into());
    let mut header = HEADER.to_vec();
    header[0] = cfg.sweep_parameter().column();

    let blocks = map_sweep(cfg, |value| {
        let p = cfg.params_at(value)?;
        let exact = ExactElements::new(&p, audit.exact_n_max)?;
        let mut rows = Vec::new();
        let mut worst = 0.0_f64;
        for kind in [ElementKind::X, ElementKind::SigmaX, ElementKind::SigmaZ] {
            for n in 0..=audit.max_doublet {
                let d = bs_matrix_elements(&p, kind, n, ElementConvention::Derived);
                let v = bs_matrix_elements(&p, kind, n, printed);
                for (a, b) in d.elements.iter().zip(&v.elements) {
                    debug_assert_eq!((a.bra, a.ket), (b.bra, b.ket));
                    let x = exact.element(kind, a.bra, a.ket)?;
                    worst = worst.max((a.value - x).abs());
                    rows.push(vec![
                        Cell::from(value),
                        p.big_lambda().into(),
                        kind.to_string().into(),
                        n.into(),
                        a.bra.to_string().into(),
                        a.ket.to_string().into(),
                        a.value.into(),
                        b.value.into(),
                        x.into(),
                        (a.value - x).into(),
                        (b.value - x).into(),
                    ]);
                }
            }
        }
        log::info!("{value}: Lambda = {:.4}, worst derived error {worst:.3e}", p.big_lambda());
        Ok(rows)
    })?;

    let mut table = CsvTable::new(None, header);
    blocks.into_iter().flatten().for_each(|r| table.push(r));
    Ok(vec![table])
}
