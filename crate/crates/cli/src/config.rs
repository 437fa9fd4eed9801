//! Experiment configuration read from TOML.
//!
//! Keys are documented in the README. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Qdot,
    TwoSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Lindblad,
    Redfield,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Consistent,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub mode: Mode,
    pub dot: Option<DotSection>,
    pub two_site: Option<TwoSiteSection>,
    #[serde(default)]
    pub initial: Vec<InitialState>,
    pub time: Option<TimeSection>,
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Quantum dot with its relaxation baths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DotSection {
    pub epsilon0: f64,
    pub u: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    pub temperature: f64,
    pub mu_left: f64,
    pub mu_right: f64,
    #[serde(default)]
    pub convention: Convention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSiteSection {
    pub omega1: f64,
    pub omega2: f64,
    pub delta: f64,
    pub gamma: f64,
    pub temperature1: f64,
    pub temperature2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

/// An initial state: explicit populations, or (dot only) the steady state of
/// a preparing bath pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub label: String,
    pub populations: Option<Vec<f64>>,
    /// Real and imaginary part of the single-excitation coherence.
    pub coherence: Option<[f64; 2]>,
    /// Preparing-bath chemical potentials `[left, right]`.
    pub preparing: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        mpemba_core::roots::linspace(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Boundary,
    Threshold,
    CrossingTime,
    RegionMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub kind: ScanKind,
    /// Criterion levels for boundary and threshold scans.
    #[serde(default)]
    pub targets: Vec<f64>,
    pub mu1_tilde: Option<f64>,
    pub mu3_tilde: Option<f64>,
    pub mu2: Option<Axis>,
    pub mu2_fixed: Option<f64>,
    #[serde(default)]
    pub biases: Vec<f64>,
    pub bias_axis: Option<Axis>,
    #[serde(default)]
    pub means: Vec<f64>,
    pub mean_axis: Option<Axis>,
    /// One-based population index of the dot observable.
    #[serde(default = "two")]
    pub component: usize,
}

impl ScanSection {
    pub fn bias_values(&self) -> Vec<f64> {
        self.bias_axis.map(|a| a.values()).unwrap_or_else(|| self.biases.clone())
    }

    pub fn mean_values(&self) -> Vec<f64> {
        self.mean_axis.map(|a| a.values()).unwrap_or_else(|| self.means.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: None,
            format: Format::Csv,
            precision: default_precision(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

fn default_precision() -> usize {
    12
}

pub const PRECISION_RANGE: std::ops::RangeInclusive<usize> = 6..=17;

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<Format>,
    pub precision: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(p) = o.precision {
            self.output.precision = p;
        }
    }

    pub fn dot(&self) -> Result<&DotSection, ConfigError> {
        self.dot.as_ref().ok_or_else(|| ConfigError::field("dot", "section is required for model = \"qdot\""))
    }

    pub fn two_site(&self) -> Result<&TwoSiteSection, ConfigError> {
        self.two_site
            .as_ref()
            .ok_or_else(|| ConfigError::field("two_site", "section is required for model = \"two-site\""))
    }

    pub fn time(&self) -> Result<&TimeSection, ConfigError> {
        let t = self.time.as_ref().ok_or_else(|| ConfigError::field("time", "section is required"))?;
        if !(t.t_max > 0.0 && t.t_max.is_finite()) {
            return Err(ConfigError::field("time.t_max", "must be finite and strictly positive"));
        }
        if t.samples == 0 {
            return Err(ConfigError::field("time.samples", "must be at least 1"));
        }
        Ok(t)
    }

    pub fn scan(&self) -> Result<&ScanSection, ConfigError> {
        self.scan.as_ref().ok_or_else(|| ConfigError::field("scan", "section is required"))
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !PRECISION_RANGE.contains(&self.output.precision) {
            return Err(ConfigError::field(
                "output.precision",
                format!("must be within 6..=17, got {}", self.output.precision),
            ));
        }
        match self.model {
            ModelKind::Qdot => {
                self.dot()?;
                if self.mode == Mode::Redfield {
                    return Err(ConfigError::field("mode", "redfield applies to the two-site model only"));
                }
            }
            ModelKind::TwoSite => {
                self.two_site()?;
            }
        }
        for (i, s) in self.initial.iter().enumerate() {
            let field = format!("initial[{i}]");
            match (&s.populations, &s.preparing) {
                (Some(_), Some(_)) => return Err(ConfigError::field(field, "give either populations or preparing, not both")),
                (None, None) => return Err(ConfigError::field(field, "needs populations or preparing")),
                (Some(p), None) if p.len() != 4 => {
                    return Err(ConfigError::field(format!("{field}.populations"), "needs exactly four entries"))
                }
                (None, Some(_)) if self.model != ModelKind::Qdot => {
                    return Err(ConfigError::field(format!("{field}.preparing"), "only available for the quantum dot"))
                }
                _ => {}
            }
            if s.coherence.is_some() && self.model == ModelKind::Qdot {
                return Err(ConfigError::field(format!("{field}.coherence"), "the dot model has no coherences"));
            }
        }
        if let Some(scan) = &self.scan {
            for (name, axis) in [("scan.mu2", scan.mu2), ("scan.bias_axis", scan.bias_axis), ("scan.mean_axis", scan.mean_axis)] {
                if let Some(a) = axis {
                    if a.points < 2 {
                        return Err(ConfigError::field(format!("{name}.points"), "needs at least two points"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
model = "two-site"
[two_site]
omega1 = 1.0
omega2 = 1.0
delta = 0.2
gamma = 0.05
temperature1 = 1.0
temperature2 = 1.0
mu1 = 3.0
mu2 = 3.0
[[initial]]
label = "I"
populations = [0.0, 0.2, 0.7, 0.1]
[time]
t_max = 10.0
samples = 5
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL, "t").unwrap();
        c.validate().unwrap();
        assert_eq!(c.mode, Mode::Lindblad);
        assert_eq!(c.output.precision, 12);
        assert_eq!(c.output.format, Format::Csv);
    }

    #[test]
    fn unknown_key_names_the_key() {
        let text = MINIMAL.replace("delta = 0.2", "delta = 0.2\ndeltaa = 1.0");
        let err = ExperimentConfig::from_toml(&text, "t").unwrap_err().to_string();
        assert!(err.contains("deltaa"), "{err}");
    }

    #[test]
    fn wrong_type_reports_line() {
        let text = MINIMAL.replace("gamma = 0.05", "gamma = \"fast\"");
        let err = ExperimentConfig::from_toml(&text, "t").unwrap_err().to_string();
        assert!(err.contains("gamma") && err.contains("line"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::from_toml(MINIMAL, "t").unwrap();
        c.apply(&Overrides {
            out: Some("x.json".into()),
            format: Some(Format::Json),
            precision: Some(8),
        });
        assert_eq!(c.output.path.as_deref(), Some("x.json"));
        assert_eq!(c.output.format, Format::Json);
        assert_eq!(c.output.precision, 8);
    }

    #[test]
    fn precision_out_of_range_is_rejected() {
        let mut c = ExperimentConfig::from_toml(MINIMAL, "t").unwrap();
        c.output.precision = 18;
        assert!(c.validate().unwrap_err().to_string().contains("output.precision"));
    }

    #[test]
    fn zero_samples_is_rejected() {
        let text = MINIMAL.replace("samples = 5", "samples = 0");
        let c = ExperimentConfig::from_toml(&text, "t").unwrap();
        assert!(c.time().unwrap_err().to_string().contains("time.samples"));
    }

    #[test]
    fn bad_population_length_names_the_entry() {
        let text = MINIMAL.replace("[0.0, 0.2, 0.7, 0.1]", "[0.5, 0.5]");
        let c = ExperimentConfig::from_toml(&text, "t").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("initial[0].populations"));
    }
}
