//! Experiment configuration, read from TOML.
//!
//! Frequencies are given as `ν = ω/2π` in GHz and rates as `Γ/2π` in MHz;
//! conversion to rad/ns happens here and nowhere else. Unknown keys are
//! rejected so that typos surface as diagnostics instead of silent defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use usc_core::analytic::PrintedL;
use usc_core::dynamics::Tolerances;
use usc_core::models::SystemParams;
use usc_core::noise::{Baths, NoiseSpectrum, OutOfRange, Table};
use usc_core::units::{ghz, kbt_from_millikelvin, mhz};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    GroundStateHeating,
    RabiSplitting,
    PhotonGeneration,
    NcritReport,
    Sidebands,
    MatrixElementAudit,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::GroundStateHeating => "ground_state_heating",
            Experiment::RabiSplitting => "rabi_splitting",
            Experiment::PhotonGeneration => "photon_generation",
            Experiment::NcritReport => "ncrit_report",
            Experiment::Sidebands => "sidebands",
            Experiment::MatrixElementAudit => "matrix_element_audit",
        }
    }

    /// Level count of the dressed equation when `numerics.n_levels` is unset.
    fn default_n_levels(self) -> usize {
        match self {
            Experiment::PhotonGeneration => 9,
            _ => 5,
        }
    }

    fn sweeps(self) -> bool {
        !matches!(self, Experiment::RabiSplitting | Experiment::Sidebands)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub system: SystemSection,
    #[serde(default)]
    pub baths: BathsSection,
    #[serde(default)]
    pub numerics: Numerics,
    pub sweep: Option<Sweep>,
    pub drive: Option<DriveSection>,
    pub sideband: Option<SidebandSection>,
    pub audit: Option<AuditSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub qubit_ghz: f64,
    pub resonator_ghz: f64,
    /// May be omitted when the sweep runs over the coupling.
    pub coupling_ghz: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathsSection {
    #[serde(default)]
    pub kappa: BathSpec,
    #[serde(default)]
    pub gamma: BathSpec,
    #[serde(default)]
    pub gamma_phi: BathSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    #[default]
    Zero,
    White,
    Ohmic,
    OneOverF,
    BandLimitedWhite,
    Tabulated,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureKind {
    #[default]
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRangeKind {
    #[default]
    Error,
    Clamp,
}

/// One bath spectrum. Which keys are required depends on `kind`:
/// `white` needs `rate_mhz`; `ohmic` needs `rate_mhz` at `omega_ref_ghz`;
/// `one_over_f` needs `rate_mhz` at `omega_ref_ghz` and `omega_min_ghz`;
/// `band_limited_white` needs `rate_mhz` and `cutoff_ghz`; `tabulated` needs
/// `table`, a CSV path relative to the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    #[serde(default)]
    pub kind: SpectrumKind,
    pub rate_mhz: Option<f64>,
    pub omega_ref_ghz: Option<f64>,
    pub exponent: Option<f64>,
    pub omega_min_ghz: Option<f64>,
    pub cutoff_ghz: Option<f64>,
    pub table: Option<PathBuf>,
    pub out_of_range: Option<OutOfRangeKind>,
    #[serde(default)]
    pub closure: ClosureKind,
    pub temperature_mk: Option<f64>,
    pub zero_frequency_mhz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub n_levels: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub t_end_ns: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_n_max() -> usize {
    12
}

fn default_samples() -> usize {
    41
}

impl Default for Numerics {
    fn default() -> Self {
        Self { n_max: default_n_max(), n_levels: None, rtol: None, atol: None, t_end_ns: None, samples: default_samples() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    #[default]
    Coupling,
    Qubit,
    Resonator,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::Coupling => "g_ghz",
            SweepParameter::Qubit => "qubit_ghz",
            SweepParameter::Resonator => "resonator_ghz",
        }
    }
}

/// Either explicit `values` or an inclusive `start`/`stop` grid of `points`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub parameter: SweepParameter,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    /// Drive amplitude; defaults to `1e-3·κ(ω_r)`.
    pub epsilon_mhz: Option<f64>,
    /// Points per peak.
    #[serde(default = "default_drive_points")]
    pub points: usize,
    /// Half-width of each peak window in units of the larger dressed width.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_drive_levels")]
    pub n_levels: usize,
}

fn default_drive_points() -> usize {
    241
}

fn default_window() -> f64 {
    12.0
}

fn default_drive_levels() -> usize {
    5
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { epsilon_mhz: None, points: default_drive_points(), window: default_window(), n_levels: default_drive_levels() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidebandMode {
    Red,
    Parametric,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandSection {
    pub mode: SidebandMode,
    pub eps_z_ghz: f64,
    /// Overrides the drive frequency matched to the shifted transition.
    pub omega_d_ghz: Option<f64>,
    pub t_end_ns: Option<f64>,
    #[serde(default = "default_sideband_samples")]
    pub samples: usize,
}

fn default_sideband_samples() -> usize {
    201
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrintedVariant {
    #[default]
    TwoXi,
    TwoXiPlusHalfLambdaSq,
}

impl From<PrintedVariant> for PrintedL {
    fn from(v: PrintedVariant) -> Self {
        match v {
            PrintedVariant::TwoXi => PrintedL::TwoXi,
            PrintedVariant::TwoXiPlusHalfLambdaSq => PrintedL::TwoXiPlusHalfLambdaSq,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default)]
    pub printed: PrintedVariant,
    /// Truncation of the exact reference diagonalization.
    #[serde(default = "default_exact_n_max")]
    pub exact_n_max: usize,
    /// Highest doublet index `n` whose element table is audited.
    #[serde(default = "default_max_doublet")]
    pub max_doublet: usize,
}

fn default_exact_n_max() -> usize {
    24
}

fn default_max_doublet() -> usize {
    2
}

impl Default for AuditSection {
    fn default() -> Self {
        Self { printed: PrintedVariant::default(), exact_n_max: default_exact_n_max(), max_doublet: default_max_doublet() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n_max: Option<usize>,
}

/// A parsed config together with its source, for hashing and relative paths.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
    pub base_dir: PathBuf,
    pub path: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_source(source, path, base_dir, overrides)
    }

    pub fn from_source(source: String, path: &Path, base_dir: PathBuf, overrides: &Overrides) -> CliResult<Self> {
        let mut config: ExperimentConfig =
            toml::from_str(&source).map_err(|e| CliError::Parse { file: path.to_path_buf(), msg: e.to_string() })?;
        if let Some(n) = overrides.n_max {
            config.numerics.n_max = n;
        }
        if let Some(dir) = &overrides.out {
            config.output.dir = Some(dir.clone());
        }
        let loaded = Self { config, source, base_dir, path: path.to_path_buf() };
        loaded.check()?;
        Ok(loaded)
    }

    /// Semantic checks that do not require building anything large.
    fn check(&self) -> CliResult<()> {
        let c = &self.config;
        let n = &c.numerics;
        if n.n_max < 2 {
            return Err(CliError::field("numerics.n_max", format!("must be >= 2, got {}", n.n_max)));
        }
        let dim = 2 * (n.n_max + 1);
        let n_levels = self.n_levels();
        if n_levels < 3 || n_levels > dim {
            return Err(CliError::field(
                "numerics.n_levels",
                format!("must lie in [3, {dim}] (the space holds {dim} levels at n_max = {}), got {n_levels}", n.n_max),
            ));
        }
        if let Some(d) = &c.drive {
            if d.n_levels < 3 || d.n_levels > dim {
                return Err(CliError::field("drive.n_levels", format!("must lie in [3, {dim}], got {}", d.n_levels)));
            }
            if d.points < 8 {
                return Err(CliError::field("drive.points", "at least 8 points per peak are needed for the fit"));
            }
            if !(d.window > 0.0) {
                return Err(CliError::field("drive.window", "must be > 0"));
            }
        }
        for (name, x) in [("numerics.rtol", n.rtol), ("numerics.atol", n.atol), ("numerics.t_end_ns", n.t_end_ns)] {
            if let Some(x) = x {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(CliError::field(name, format!("must be finite and > 0, got {x}")));
                }
            }
        }
        if n.samples < 2 {
            return Err(CliError::field("numerics.samples", "must be >= 2"));
        }
        if c.sweep.is_some() && !c.experiment.sweeps() {
            return Err(CliError::field("sweep", format!("`{}` runs at a single operating point", c.experiment.name())));
        }
        let grid = self.sweep_values()?;
        for v in &grid {
            self.params_at(*v)?;
        }
        self.baths()?;
        match c.experiment {
            Experiment::Sidebands => {
                let s = c.sideband.as_ref().ok_or_else(|| CliError::field("sideband", "section is required"))?;
                if !(s.eps_z_ghz > 0.0 && s.eps_z_ghz.is_finite()) {
                    return Err(CliError::field("sideband.eps_z_ghz", "must be finite and > 0"));
                }
                if s.samples < 2 {
                    return Err(CliError::field("sideband.samples", "must be >= 2"));
                }
                if let Some(t) = s.t_end_ns {
                    if !(t > 0.0) {
                        return Err(CliError::field("sideband.t_end_ns", "must be > 0"));
                    }
                }
                if let Some(w) = s.omega_d_ghz {
                    if !(w > 0.0) {
                        return Err(CliError::field("sideband.omega_d_ghz", "must be > 0"));
                    }
                }
            }
            _ if c.sideband.is_some() => {
                return Err(CliError::field("sideband", "only used by the `sidebands` experiment"));
            }
            _ => {}
        }
        if c.drive.is_some() && c.experiment != Experiment::RabiSplitting {
            return Err(CliError::field("drive", "only used by the `rabi_splitting` experiment"));
        }
        if c.audit.is_some() && c.experiment != Experiment::MatrixElementAudit {
            return Err(CliError::field("audit", "only used by the `matrix_element_audit` experiment"));
        }
        if let Some(a) = &c.audit {
            if a.exact_n_max < 2 * a.max_doublet + 8 {
                return Err(CliError::field(
                    "audit.exact_n_max",
                    format!("must be at least 2·max_doublet + 8 = {}", 2 * a.max_doublet + 8),
                ));
            }
        }
        if let Some(p) = &c.output.prefix {
            if p.is_empty() || p.contains(['/', '\\']) {
                return Err(CliError::field("output.prefix", "must be a nonempty file name stem"));
            }
        }
        Ok(())
    }

    pub fn experiment(&self) -> Experiment {
        self.config.experiment
    }

    pub fn n_max(&self) -> usize {
        self.config.numerics.n_max
    }

    /// Levels of the dressed equation used by the experiment.
    pub fn n_levels(&self) -> usize {
        if self.config.experiment == Experiment::RabiSplitting {
            if let Some(d) = &self.config.drive {
                return d.n_levels;
            }
        }
        self.config.numerics.n_levels.unwrap_or_else(|| self.config.experiment.default_n_levels())
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances { rtol: self.config.numerics.rtol.unwrap_or(d.rtol), atol: self.config.numerics.atol.unwrap_or(d.atol) }
    }

    pub fn drive(&self) -> DriveSection {
        self.config.drive.clone().unwrap_or_default()
    }

    pub fn audit(&self) -> AuditSection {
        self.config.audit.clone().unwrap_or_default()
    }

    pub fn sweep_parameter(&self) -> SweepParameter {
        self.config.sweep.as_ref().map(|s| s.parameter).unwrap_or_default()
    }

    /// Swept values in GHz. Without a sweep section this is the single
    /// configured value of the coupling.
    pub fn sweep_values(&self) -> CliResult<Vec<f64>> {
        let Some(s) = &self.config.sweep else {
            let g = self
                .config
                .system
                .coupling_ghz
                .ok_or_else(|| CliError::field("system.coupling_ghz", "required when no coupling sweep is given"))?;
            return Ok(vec![g]);
        };
        let values = match (&s.values, s.start, s.stop, s.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n < 1 {
                    return Err(CliError::field("sweep.points", "must be >= 1"));
                }
                if n == 1 {
                    vec![a]
                } else {
                    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
                }
            }
            _ => {
                return Err(CliError::field(
                    "sweep",
                    "give either `values` or all of `start`, `stop`, `points`",
                ))
            }
        };
        if values.is_empty() {
            return Err(CliError::field("sweep.values", "grid is empty"));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(CliError::field("sweep", format!("non-finite grid value {x}")));
        }
        if s.parameter != SweepParameter::Coupling && self.config.system.coupling_ghz.is_none() {
            return Err(CliError::field("system.coupling_ghz", "required when sweeping a frequency"));
        }
        Ok(values)
    }

    /// System parameters with the swept parameter set to `value` GHz.
    pub fn params_at(&self, value: f64) -> CliResult<SystemParams> {
        let s = &self.config.system;
        let (mut qa, mut qr, mut g) = (s.qubit_ghz, s.resonator_ghz, s.coupling_ghz.unwrap_or(value));
        match self.sweep_parameter() {
            SweepParameter::Coupling => g = value,
            SweepParameter::Qubit => qa = value,
            SweepParameter::Resonator => qr = value,
        }
        SystemParams::from_ghz(qa, qr, g).map_err(|e| {
            let field = if self.config.sweep.is_some() { "sweep" } else { "system" };
            CliError::field(field, format!("at {} = {value}: {e}", self.sweep_parameter().column()))
        })
    }

    pub fn baths(&self) -> CliResult<Baths> {
        let b = &self.config.baths;
        Ok(Baths {
            kappa: b.kappa.build("baths.kappa", &self.base_dir)?,
            gamma: b.gamma.build("baths.gamma", &self.base_dir)?,
            gamma_phi: b.gamma_phi.build("baths.gamma_phi", &self.base_dir)?,
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.config.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn prefix(&self) -> String {
        self.config.output.prefix.clone().unwrap_or_else(|| self.experiment().name().to_string())
    }
}

impl BathSpec {
    pub fn build(&self, field: &str, base_dir: &Path) -> CliResult<NoiseSpectrum> {
        let need = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::field(format!("{field}.{key}"), format!("required for kind `{}`", self.kind_name())))
        };
        let wrap = |key: &'static str| move |e: usc_core::Error| CliError::field(format!("{field}.{key}"), e.to_string());
        let base = match self.kind {
            SpectrumKind::Zero => NoiseSpectrum::zero(),
            SpectrumKind::White => NoiseSpectrum::white(mhz(need("rate_mhz", self.rate_mhz)?)).map_err(wrap("rate_mhz"))?,
            SpectrumKind::Ohmic => NoiseSpectrum::ohmic_with_exponent(
                mhz(need("rate_mhz", self.rate_mhz)?),
                ghz(need("omega_ref_ghz", self.omega_ref_ghz)?),
                self.exponent.unwrap_or(1.0),
            )
            .map_err(wrap("omega_ref_ghz"))?,
            SpectrumKind::OneOverF => {
                let w_ref = ghz(need("omega_ref_ghz", self.omega_ref_ghz)?);
                NoiseSpectrum::one_over_f(mhz(need("rate_mhz", self.rate_mhz)?) * w_ref, ghz(need("omega_min_ghz", self.omega_min_ghz)?))
                    .map_err(wrap("omega_min_ghz"))?
            }
            SpectrumKind::BandLimitedWhite => NoiseSpectrum::band_limited_white(
                mhz(need("rate_mhz", self.rate_mhz)?),
                ghz(need("cutoff_ghz", self.cutoff_ghz)?),
            )
            .map_err(wrap("cutoff_ghz"))?,
            SpectrumKind::Tabulated => {
                let rel = self
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::field(format!("{field}.table"), "required for kind `tabulated`"))?;
                let path = base_dir.join(rel);
                let policy = match self.out_of_range.unwrap_or_default() {
                    OutOfRangeKind::Error => OutOfRange::Error,
                    OutOfRangeKind::Clamp => OutOfRange::Clamp,
                };
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                let table = Table::from_csv_str(&text, policy)
                    .map_err(|e| CliError::field(format!("{field}.table"), format!("{}: {e}", path.display())))?;
                NoiseSpectrum::tabulated(table)
            }
        };
        if self.kind != SpectrumKind::Tabulated && (self.table.is_some() || self.out_of_range.is_some()) {
            return Err(CliError::field(format!("{field}.table"), "only valid for kind `tabulated`"));
        }
        let closed = match self.closure {
            ClosureKind::Classical => {
                if self.temperature_mk.is_some() {
                    return Err(CliError::field(
                        format!("{field}.temperature_mk"),
                        "a classical closure has no temperature",
                    ));
                }
                base.classical()
            }
            ClosureKind::Quantum => {
                let t = self.temperature_mk.unwrap_or(0.0);
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(CliError::field(format!("{field}.temperature_mk"), format!("must be >= 0, got {t}")));
                }
                base.thermal(kbt_from_millikelvin(t)).map_err(wrap("temperature_mk"))?
            }
        };
        match self.zero_frequency_mhz {
            Some(r) => closed.with_zero_frequency(mhz(r)).map_err(wrap("zero_frequency_mhz")),
            None => Ok(closed),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            SpectrumKind::Zero => "zero",
            SpectrumKind::White => "white",
            SpectrumKind::Ohmic => "ohmic",
            SpectrumKind::OneOverF => "one_over_f",
            SpectrumKind::BandLimitedWhite => "band_limited_white",
            SpectrumKind::Tabulated => "tabulated",
        }
    }
}
