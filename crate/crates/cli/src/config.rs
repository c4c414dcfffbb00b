//! Run configs and stability manifests.

use std::path::{Path, PathBuf};

use fracns::dynamics::SolverParams;
use fracns::estimates::ConstantsLedger;
use fracns::harness::{DatumKind, DatumSpec, StabilityCase, TargetNorm};
use fracns::GridSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Formats {
    Csv,
    Json,
    #[default]
    Both,
}

impl Formats {
    pub fn csv(self) -> bool {
        self != Formats::Json
    }

    pub fn json(self) -> bool {
        self != Formats::Csv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default)]
    pub formats: Formats,
    /// File stem of the trajectory outputs.
    #[serde(default = "default_stem")]
    pub stem: String,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_stem() -> String {
    "trajectory".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: Formats::default(),
            stem: default_stem(),
        }
    }
}

/// `[datum]` section; the seed falls back to the top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    pub kind: DatumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_norm: Option<TargetNorm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_slope")]
    pub spectrum_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_slope() -> f64 {
    DatumSpec::taylor_green().spectrum_slope
}

impl Default for DatumConfig {
    fn default() -> Self {
        DatumConfig {
            kind: DatumKind::TaylorGreen,
            target_norm: None,
            seed: None,
            spectrum_slope: default_slope(),
            cutoff: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub solver: SolverParams,
    #[serde(default)]
    pub datum: DatumConfig,
    #[serde(default)]
    pub ledger: ConstantsLedger,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = parse_file(path)?;
        cfg.normalize(path);
        cfg.validate(path)?;
        Ok(cfg)
    }

    /// Materializes the effective datum seed and resolves the snapshot path
    /// against the config's directory.
    fn normalize(&mut self, path: &Path) {
        self.datum.seed.get_or_insert(self.seed);
        if let Some(p) = &self.datum.path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    self.datum.path = Some(dir.join(p));
                }
            }
        }
    }

    fn validate(&self, path: &Path) -> Result<(), CliError> {
        let invalid = |message: String| CliError::Invalid {
            path: path.to_path_buf(),
            message,
        };
        self.solver.validate().map_err(|e| invalid(e.to_string()))?;
        self.datum_spec().validate().map_err(|e| invalid(e.to_string()))?;
        self.ledger.validate().map_err(|e| invalid(e.to_string()))?;
        if self.output.stem.is_empty() || self.output.stem.contains(['/', '\\']) {
            return Err(invalid(format!("output stem {:?} is not a file name", self.output.stem)));
        }
        Ok(())
    }

    pub fn datum_spec(&self) -> DatumSpec {
        let d = &self.datum;
        DatumSpec {
            kind: d.kind,
            target_norm: d.target_norm,
            seed: d.seed.unwrap_or(self.seed),
            spectrum_slope: d.spectrum_slope,
            cutoff: d.cutoff,
            path: d.path.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(rename = "case")]
    pub cases: Vec<StabilityCase>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let m: Manifest = parse_file(path)?;
        let mut names = std::collections::HashSet::new();
        for c in &m.cases {
            if !names.insert(c.name.as_str()) {
                return Err(CliError::Invalid {
                    path: path.to_path_buf(),
                    message: format!("duplicate case name {:?}", c.name),
                });
            }
            if c.name.is_empty() || c.name.contains(['/', '\\']) {
                return Err(CliError::Invalid {
                    path: path.to_path_buf(),
                    message: format!("case name {:?} is not a file name", c.name),
                });
            }
        }
        Ok(m)
    }
}

fn parse_file<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_str(&text, path)
}

pub fn parse_str<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((1, 1));
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// One-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
