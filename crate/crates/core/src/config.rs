//! Pipeline configuration: one TOML file, env-var overridable.
//!
//! Any key can be overridden with `TAGNET_<TABLE>__<KEY>` (double
//! underscore between table and key), e.g. `TAGNET_INGEST__THRESHOLD=0.8`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SupportMode;
use crate::ingest::AssignmentMode;
use crate::timeutil::{parse_instant, TimeRange};

pub const ENV_PREFIX: &str = "TAGNET_";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub capture: CaptureConfig,
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub graph: GraphConfig,
    pub topics: TopicsConfig,
    pub attention: AttentionConfig,
    pub entropy: EntropyConfig,
    pub compare: CompareConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            capture: CaptureConfig::default(),
            paths: PathsConfig::default(),
            ingest: IngestConfig::default(),
            graph: GraphConfig::default(),
            topics: TopicsConfig::default(),
            attention: AttentionConfig::default(),
            entropy: EntropyConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptureConfig {
    /// Epoch seconds or `YYYY-MM-DD`.
    pub start: String,
    pub end: String,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig {
            start: "2021-09-06".into(),
            end: "2021-11-29".into(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allowlist: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Supporter share threshold; must be in (0.5, 1.0].
    pub threshold: f64,
    pub mode: AssignmentMode,
    /// Sort unsorted input instead of rejecting it.
    pub sort_events: bool,
    /// Flows below this count are suppressed in the flows table.
    pub flows_display_threshold: u64,
    /// Remap canonical field names to the input's actual names.
    pub fields: BTreeMap<String, String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            threshold: 0.75,
            mode: AssignmentMode::StaticWholePeriod,
            sort_events: true,
            flows_display_threshold: 5,
            fields: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub baseline_days: u32,
    pub step_days: u32,
    pub window_days: u32,
    pub support: SupportMode,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            baseline_days: 28,
            step_days: 7,
            window_days: 28,
            support: SupportMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub resolution: f64,
    pub seed: u64,
    pub min_topic_size: usize,
    /// External detector command; when set it replaces the built-in one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<Vec<String>>,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        TopicsConfig {
            resolution: 1.0,
            seed: 42,
            min_topic_size: 2,
            external: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupNorm {
    /// Divide the group profile by the number of members active that day.
    ActiveMembers,
    /// Divide by the full group size.
    AllMembers,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionConfig {
    pub null_group_size: usize,
    pub null_seed: u64,
    pub group_norm: GroupNorm,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            null_group_size: 5000,
            null_seed: 7,
            group_norm: GroupNorm::ActiveMembers,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EntropyConfig {
    /// Natural log when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_base: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub highlight_threshold: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            highlight_threshold: 0.5,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, std::env::vars())
    }

    pub fn from_toml_str(
        text: &str,
        env: impl Iterator<Item = (String, String)>,
    ) -> Result<Config> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
        apply_env_overrides(&mut value, env);
        let cfg: Config = value
            .try_into()
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ingest.threshold > 0.5 && self.ingest.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "ingest.threshold must be in (0.5, 1.0], got {}",
                self.ingest.threshold
            )));
        }
        if self.graph.step_days == 0 || self.graph.step_days > self.graph.window_days {
            return Err(Error::Config(
                "graph.step_days must be in [1, window_days]".into(),
            ));
        }
        if self.graph.baseline_days < self.graph.step_days {
            return Err(Error::Config(
                "graph.baseline_days must be >= step_days".into(),
            ));
        }
        let range = self.capture_range()?;
        if range.is_empty() {
            return Err(Error::Config("capture window is empty".into()));
        }
        Ok(())
    }

    pub fn capture_range(&self) -> Result<TimeRange> {
        let start = parse_instant(&self.capture.start)
            .ok_or_else(|| Error::Config(format!("bad capture.start: {}", self.capture.start)))?;
        let end = parse_instant(&self.capture.end)
            .ok_or_else(|| Error::Config(format!("bad capture.end: {}", self.capture.end)))?;
        Ok(TimeRange::new(start, end))
    }
}

fn apply_env_overrides(value: &mut toml::Value, env: impl Iterator<Item = (String, String)>) {
    for (key, raw) in env {
        let Some(rest) = key.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let Some((table, field)) = rest.split_once("__") else {
            continue;
        };
        let table = table.to_lowercase();
        let field = field.to_lowercase();
        let parsed = parse_env_value(&raw);
        let root = value
            .as_table_mut()
            .expect("config root is always a table");
        let entry = root
            .entry(table)
            .or_insert_with(|| toml::Value::Table(Default::default()));
        if let Some(t) = entry.as_table_mut() {
            t.insert(field, parsed);
        }
    }
}

fn parse_env_value(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(n) = raw.parse::<i64>() {
        return toml::Value::Integer(n);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn env_override_wins() {
        let cfg = Config::from_toml_str(
            "[ingest]\nthreshold = 0.75\n",
            vec![("TAGNET_INGEST__THRESHOLD".to_string(), "0.9".to_string())].into_iter(),
        )
        .unwrap();
        assert_eq!(cfg.ingest.threshold, 0.9);
    }

    #[test]
    fn threshold_half_rejected() {
        let err = Config::from_toml_str("[ingest]\nthreshold = 0.5\n", std::iter::empty());
        assert!(err.is_err());
    }

    #[test]
    fn step_larger_than_window_rejected() {
        let err = Config::from_toml_str(
            "[graph]\nstep_days = 30\nwindow_days = 28\n",
            std::iter::empty(),
        );
        assert!(err.is_err());
    }
}
