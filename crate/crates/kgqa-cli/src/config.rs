//! Pipeline configuration: every flag can also come from a single JSON
//! config file passed via `--config`; explicit flags win.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer};

use crate::CliError;

/// Beam width: a fixed positive integer, or `M` for "as wide as the
/// candidate set" (which makes the decoder enumerate every valid query).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthSpec {
    Full,
    Fixed(usize),
}

impl FromStr for WidthSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("m") || s.eq_ignore_ascii_case("full") {
            return Ok(WidthSpec::Full);
        }
        match s.parse::<usize>() {
            Ok(0) => Err("beam width must be at least 1".to_string()),
            Ok(n) => Ok(WidthSpec::Fixed(n)),
            Err(_) => Err(format!("expected a positive integer or `M`, got `{s}`")),
        }
    }
}

impl fmt::Display for WidthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthSpec::Full => write!(f, "M"),
            WidthSpec::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl<'de> Deserialize<'de> for WidthSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(0) => Err(D::Error::custom("beam width must be at least 1")),
            Raw::Int(n) => Ok(WidthSpec::Fixed(n as usize)),
            Raw::Str(s) => s.parse().map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    /// Deterministic pseudo-random logits from a seed.
    Hash,
    /// Targets each question's best-scoring candidate query.
    Oracle,
}

/// JSON config file mirror of the CLI flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub qa: Option<PathBuf>,
    pub templates: Option<Vec<String>>,
    pub min_recall: Option<f64>,
    pub width: Option<WidthSpec>,
    pub budget: Option<usize>,
    pub scorer: Option<ScorerKind>,
    pub seed: Option<u64>,
    pub resolve_k: Option<usize>,
    pub embed_seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }

    /// Resolve an output path: an explicit flag wins, otherwise `out_dir`
    /// plus the default file name, otherwise the default name in the current
    /// directory.
    pub fn out_path(&self, explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
        explicit.unwrap_or_else(|| match &self.out_dir {
            Some(dir) => dir.join(default_name),
            None => PathBuf::from(default_name),
        })
    }
}

/// Pick the explicit flag if set, else the config value.
pub fn merge<T: Clone>(flag: Option<T>, config: Option<&T>) -> Option<T> {
    flag.or_else(|| config.cloned())
}

pub fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::input(format!("missing required {what}")))
}

pub fn check_exists(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::input(format!(
            "{what} file {} does not exist",
            path.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_parses_numbers_and_m() {
        assert_eq!("3".parse::<WidthSpec>().unwrap(), WidthSpec::Fixed(3));
        assert_eq!("M".parse::<WidthSpec>().unwrap(), WidthSpec::Full);
        assert_eq!("m".parse::<WidthSpec>().unwrap(), WidthSpec::Full);
        assert!("0".parse::<WidthSpec>().is_err());
        assert!("x".parse::<WidthSpec>().is_err());
    }

    #[test]
    fn config_accepts_int_or_string_width() {
        let c: PipelineConfig = serde_json::from_str(r#"{"width": 4}"#).unwrap();
        assert_eq!(c.width, Some(WidthSpec::Fixed(4)));
        let c: PipelineConfig = serde_json::from_str(r#"{"width": "M"}"#).unwrap();
        assert_eq!(c.width, Some(WidthSpec::Full));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"width": 0}"#).is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"nodez": "x"}"#).is_err());
    }
}
