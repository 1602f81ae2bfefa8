//! TOML run configuration.
//!
//! Every table rejects unknown keys. Deserialization and validation errors
//! name the offending key path, e.g. `field.cycles_fwhm: must be positive`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::amplitude::Normalization;
use crate::error::{Error, Result};
use crate::incoherent::EnsembleSpec;
use crate::saddle::{ChannelPlan, ChannelStart};

/// Environment variable that replaces `output.path`.
pub const OUTPUT_ENV: &str = "SFA_FISHER_OUTPUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Worker threads; `None` uses the hardware parallelism.
    pub threads: Option<usize>,
    pub n_measurements: f64,
    pub normalization: Normalization,
    /// Ionization potential (a.u.).
    pub ip: f64,
    pub field: FieldConfig,
    pub grid: GridConfig,
    pub povm: PovmConfig,
    pub channels: ChannelConfig,
    pub time: TimeConfig,
    pub sweep: Option<SweepConfig>,
    pub ensemble: EnsembleSpec,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            threads: None,
            n_measurements: 5e4,
            normalization: Normalization::default(),
            ip: 0.5,
            field: FieldConfig::default(),
            grid: GridConfig::default(),
            povm: PovmConfig::default(),
            channels: ChannelConfig::default(),
            time: TimeConfig::default(),
            sweep: None,
            ensemble: EnsembleSpec::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    Mono,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub intensity_wcm2: f64,
    pub wavelength_nm: f64,
    pub cep_rad: f64,
    pub envelope: EnvelopeKind,
    /// Intensity FWHM in optical cycles (Gaussian only).
    pub cycles_fwhm: Option<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            intensity_wcm2: 2e14,
            wavelength_nm: 800.0,
            cep_rad: 0.5 * PI,
            envelope: EnvelopeKind::Gaussian,
            cycles_fwhm: Some(5.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// (p∥, p⊥) grid for momentum quantities, polar grid for spectra.
    Cylindrical,
    /// Polar (p, cos θ) grid for everything; coarse bins collect the polar
    /// nodes that fall inside each square.
    Polar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub kind: GridKind,
    /// Momentum cutoff; `None` uses ½p_max² = 2Up + 10ω.
    pub p_max: Option<f64>,
    /// Composite panel width and nodes per panel of the cylindrical grid.
    pub panel: f64,
    pub order: usize,
    /// Single Gauss–Legendre rule per axis instead of composite panels.
    pub n_par: Option<usize>,
    pub n_perp: Option<usize>,
    /// Radial panel width (in p) and nodes per panel of the polar grid.
    pub energy_panel: f64,
    pub energy_order: usize,
    pub n_theta: usize,
    /// Compute the spectral measurements (needs the polar grid).
    pub spectral: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            kind: GridKind::Cylindrical,
            p_max: None,
            panel: 0.02,
            order: 4,
            n_par: None,
            n_perp: None,
            energy_panel: 0.01,
            energy_order: 4,
            n_theta: 48,
            spectral: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PovmKind {
    Full,
    Coarse,
    Yield,
    Spec,
    SpecCoarse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PovmConfig {
    /// Square bin side of the coarse momentum measurement.
    pub dp: f64,
    /// Bin width of the coarse spectral measurement.
    #[serde(rename = "dE")]
    pub de: f64,
    /// Measurement used by the incoherent averaging layers.
    pub povm: PovmKind,
}

impl Default for PovmConfig {
    fn default() -> Self {
        Self { dp: 0.1, de: 0.05, povm: PovmKind::Yield }
    }
}

/// `n_channels = "all"` or a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelCount {
    Count(usize),
    Keyword(AllKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllKeyword {
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub n_channels: ChannelCount,
    /// Include the second event of every selected half-cycle pair.
    pub intra_pairs: bool,
    pub start: ChannelStart,
    /// F² threshold of the "all" selection for pulses.
    pub envelope_cut: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let plan = ChannelPlan::default();
        Self {
            n_channels: ChannelCount::Keyword(AllKeyword::All),
            intra_pairs: plan.intra_pairs,
            start: plan.start,
            envelope_cut: plan.envelope_cut,
        }
    }
}

impl ChannelConfig {
    pub fn plan(&self) -> ChannelPlan {
        ChannelPlan {
            n_channels: match self.n_channels {
                ChannelCount::Count(n) => Some(n),
                ChannelCount::Keyword(AllKeyword::All) => None,
            },
            intra_pairs: self.intra_pairs,
            start: self.start,
            envelope_cut: self.envelope_cut,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    /// Monochromatic window [0, window_cycles·T].
    pub window_cycles: f64,
    /// Pulse window [−window_tau·τ, window_tau·τ].
    pub window_tau: f64,
    /// Evaluation time (a.u.), snapped to the nearest zero of A. Defaults to
    /// the window end.
    pub t_eval: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { window_cycles: 5.0, window_tau: 3.0, t_eval: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Evaluation time in optical cycles.
    Time,
    /// Pulse FWHM in cycles, or the window length for a monochromatic field.
    Cycles,
    /// Peak intensity in W/cm².
    Intensity,
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "dE")]
    De,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    /// Explicit values; alternative to `range` + `points`.
    pub values: Option<Vec<f64>>,
    pub range: Option<[f64; 2]>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        match (&self.values, self.range, self.points) {
            (Some(v), None, None) => Ok(v.clone()),
            (None, Some([a, b]), Some(n)) => {
                if n == 0 {
                    return Err(key_err("sweep.points", "must be at least 1"));
                }
                if n == 1 {
                    return Ok(vec![a]);
                }
                let step = |k: usize| k as f64 / (n - 1) as f64;
                let mut v: Vec<f64> = match self.spacing {
                    Spacing::Linear => (0..n).map(|k| a + (b - a) * step(k)).collect(),
                    Spacing::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(key_err("sweep.range", "log spacing needs positive bounds"));
                        }
                        (0..n).map(|k| (a.ln() + (b.ln() - a.ln()) * step(k)).exp()).collect()
                    }
                };
                v[n - 1] = b;
                v[0] = a;
                Ok(v)
            }
            _ => Err(key_err("sweep", "give either `values` or both `range` and `points`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

fn key_err(path: &str, msg: &str) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(key_err(path, &format!("must be finite and positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.message().to_string();
            if path == "." {
                Error::Config(msg)
            } else {
                Error::Config(format!("{path}: {msg}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// `output.path`, replaced by the environment override when set.
    pub fn output_path(&self) -> Option<PathBuf> {
        match std::env::var_os(OUTPUT_ENV) {
            Some(p) if !p.is_empty() => Some(PathBuf::from(p)),
            _ => self.output.path.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(key_err("threads", "must be at least 1"));
        }
        if !(self.n_measurements >= 1.0) || !self.n_measurements.is_finite() {
            return Err(key_err("n_measurements", "must be at least 1"));
        }
        positive("ip", self.ip)?;

        let f = &self.field;
        if !(f.intensity_wcm2 > 0.0) || !f.intensity_wcm2.is_finite() {
            return Err(key_err("field.intensity_wcm2", "must be finite and positive"));
        }
        positive("field.wavelength_nm", f.wavelength_nm)?;
        if !f.cep_rad.is_finite() {
            return Err(key_err("field.cep_rad", "must be finite"));
        }
        match (f.envelope, f.cycles_fwhm) {
            (EnvelopeKind::Gaussian, None) => {
                return Err(key_err("field.cycles_fwhm", "required for a gaussian envelope"))
            }
            (EnvelopeKind::Gaussian, Some(c)) => positive("field.cycles_fwhm", c)?,
            (EnvelopeKind::Mono, _) => {}
        }

        let g = &self.grid;
        if let Some(p) = g.p_max {
            positive("grid.p_max", p)?;
        }
        positive("grid.panel", g.panel)?;
        if g.order == 0 {
            return Err(key_err("grid.order", "must be at least 1"));
        }
        match (g.n_par, g.n_perp) {
            (Some(a), Some(b)) => {
                if a < 16 || b < 16 {
                    return Err(key_err("grid.n_par", "node counts must be at least 16"));
                }
            }
            (None, None) => {}
            _ => return Err(key_err("grid.n_par", "set both n_par and n_perp or neither")),
        }
        positive("grid.energy_panel", g.energy_panel)?;
        if g.energy_order == 0 {
            return Err(key_err("grid.energy_order", "must be at least 1"));
        }
        if g.n_theta < 2 {
            return Err(key_err("grid.n_theta", "must be at least 2"));
        }

        positive("povm.dp", self.povm.dp)?;
        positive("povm.dE", self.povm.de)?;
        if matches!(self.povm.povm, PovmKind::Spec | PovmKind::SpecCoarse) && !g.spectral {
            return Err(key_err("povm.povm", "spectral measurement needs grid.spectral = true"));
        }

        if self.channels.n_channels == ChannelCount::Count(0) {
            return Err(key_err("channels.n_channels", "must be at least 1"));
        }
        let cut = self.channels.envelope_cut;
        if !(cut > 0.0 && cut < 1.0) {
            return Err(key_err("channels.envelope_cut", "must lie in (0, 1)"));
        }

        positive("time.window_cycles", self.time.window_cycles)?;
        positive("time.window_tau", self.time.window_tau)?;
        if let Some(t) = self.time.t_eval {
            if !t.is_finite() {
                return Err(key_err("time.t_eval", "must be finite"));
            }
        }

        if let Some(s) = &self.sweep {
            let values = s.values()?;
            if values.is_empty() {
                return Err(key_err("sweep.values", "must not be empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(key_err("sweep.values", "must be finite"));
            }
            let needs_positive = !matches!(s.variable, SweepVariable::Time);
            if needs_positive && values.iter().any(|&v| !(v > 0.0)) {
                return Err(key_err("sweep.values", "must be positive for this variable"));
            }
        }

        self.ensemble.validate().map_err(|e| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        })?;
        if let Some(fl) = &self.ensemble.fluct {
            if fl.n_nodes < 2 {
                return Err(key_err("ensemble.fluct.n_nodes", "must be at least 2"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_key_names_path() {
        let e = RunConfig::from_toml_str("[field]\ncycles_fwhn = 5.0\n").unwrap_err().to_string();
        assert!(e.contains("field"), "{e}");
        assert!(e.contains("cycles_fwhn"), "{e}");
    }

    #[test]
    fn invalid_value_names_path() {
        let e = RunConfig::from_toml_str("[field]\ncycles_fwhm = -1.0\n").unwrap_err().to_string();
        assert!(e.contains("field.cycles_fwhm"), "{e}");
        let e = RunConfig::from_toml_str("[povm]\ndE = 0.0\n").unwrap_err().to_string();
        assert!(e.contains("povm.dE"), "{e}");
        let e = RunConfig::from_toml_str("[channels]\nn_channels = \"some\"\n").unwrap_err().to_string();
        assert!(e.contains("channels.n_channels"), "{e}");
        let e = RunConfig::from_toml_str("[ensemble.fluct]\nsigma_pct = 5.0\ndelta_sigmas = 2.0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("ensemble.fluct.delta_sigmas"), "{e}");
    }

    #[test]
    fn channel_count_forms() {
        let c = RunConfig::from_toml_str("[channels]\nn_channels = 5\nintra_pairs = false\n").unwrap();
        assert_eq!(c.channels.plan().n_channels, Some(5));
        let c = RunConfig::from_toml_str("[channels]\nn_channels = \"all\"\n").unwrap();
        assert_eq!(c.channels.plan().n_channels, None);
    }

    #[test]
    fn sweep_values() {
        let c = RunConfig::from_toml_str(
            "[sweep]\nvariable = \"intensity\"\nrange = [1e14, 4e14]\npoints = 3\nspacing = \"log\"\n",
        )
        .unwrap();
        let v = c.sweep.unwrap().values().unwrap();
        assert_eq!(v.len(), 3);
        assert!((v[1] - 2e14).abs() < 1e2);
        assert!(RunConfig::from_toml_str("[sweep]\nvariable = \"dp\"\n").is_err());
        let c = RunConfig::from_toml_str("[sweep]\nvariable = \"dE\"\nvalues = [0.05, 0.1]\n").unwrap();
        assert_eq!(c.sweep.unwrap().variable, SweepVariable::De);
    }
}
