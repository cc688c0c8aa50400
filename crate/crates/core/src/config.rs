//! Study configuration: one strict JSON document naming a scenario and the settings of
//! each command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::params::{CapacityMode, ModelParams};
use crate::sensitivity::GridModel;
use crate::sim::SimConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EDQBD_OUT";
pub const DEFAULT_OUT_DIR: &str = "edqbd-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Preset {
        name: String,
        #[serde(default)]
        overrides: Map<String, Value>,
    },
    Params(ModelParams),
}

impl Scenario {
    /// Loads the preset and applies overrides on top; unknown fields are rejected.
    pub fn resolve(&self) -> Result<ModelParams> {
        match self {
            Scenario::Params(p) => {
                p.validate()?;
                Ok(p.clone())
            }
            Scenario::Preset { name, overrides } => {
                let base = ModelParams::preset(name).ok_or_else(|| {
                    Error::Config(format!("unknown preset `{name}` (known: {})", ModelParams::PRESET_NAMES.join(", ")))
                })?;
                let p = apply_overrides(&base, overrides)?;
                p.validate()?;
                Ok(p)
            }
        }
    }
}

pub fn apply_overrides(base: &ModelParams, overrides: &Map<String, Value>) -> Result<ModelParams> {
    let Value::Object(mut fields) = serde_json::to_value(base)? else {
        unreachable!("parameters serialize to an object");
    };
    for (key, value) in overrides {
        if !fields.contains_key(key) {
            return Err(Error::Config(format!("unknown parameter `{key}`")));
        }
        fields.insert(key.clone(), value.clone());
    }
    serde_json::from_value(Value::Object(fields)).map_err(|e| Error::Config(format!("bad override: {e}")))
}

/// Parses `field=value`; the value is read as JSON, falling back to a bare string.
pub fn parse_assignment(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected field=value, got `{text}`")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((key.trim().to_owned(), value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ratio: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_total: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CapacityMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<GridModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl StudyConfig {
    pub fn from_preset(name: &str) -> Self {
        StudyConfig {
            scenario: Scenario::Preset { name: name.to_owned(), overrides: Map::new() },
            theta_grid: None,
            c_total: None,
            mode: None,
            variation: None,
            model: None,
            sweep: None,
            sim: None,
            output_dir: None,
            format: None,
        }
    }
}

/// What every run writes next to its artifacts. Feeding it back as `--config`
/// reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: ModelParams,
    pub artifacts: Vec<String>,
    pub config: StudyConfig,
}

/// Reads a study config, or the `config` block of a manifest.
pub fn load(path: &Path) -> Result<StudyConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let is_manifest = value.get("tool").is_some() && value.get("config").is_some();
    let parsed = if is_manifest {
        serde_json::from_value::<Manifest>(value).map(|m| m.config)
    } else {
        serde_json::from_value::<StudyConfig>(value)
    };
    parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_with_overrides() {
        let json = r#"{"scenario": {"preset": {"name": "rural", "overrides": {"theta": 7, "p_a": 0.3}}}}"#;
        let cfg: StudyConfig = serde_json::from_str(json).unwrap();
        let p = cfg.scenario.resolve().unwrap();
        assert_eq!(p.theta, 7);
        assert_eq!(p.p_a, 0.3);
        assert_eq!(p.c_u, 4);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad_top = r#"{"scenario": {"preset": {"name": "rural"}}, "colour": 1}"#;
        assert!(serde_json::from_str::<StudyConfig>(bad_top).is_err());
        let bad_override = r#"{"scenario": {"preset": {"name": "rural", "overrides": {"lamda": 3}}}}"#;
        let cfg: StudyConfig = serde_json::from_str(bad_override).unwrap();
        assert!(matches!(cfg.scenario.resolve(), Err(Error::Config(_))));
        assert!(ModelParams::preset("suburban").is_none());
    }

    #[test]
    fn missing_param_field_rejected() {
        let mut v = serde_json::to_value(ModelParams::rural()).unwrap();
        v.as_object_mut().unwrap().remove("mu_n");
        let json = serde_json::json!({ "scenario": { "params": v } });
        assert!(serde_json::from_value::<StudyConfig>(json).is_err());
    }

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("lambda=2.5").unwrap(), ("lambda".into(), serde_json::json!(2.5)));
        assert_eq!(
            parse_assignment("waiting_cost_basis=per_patient_delay").unwrap().1,
            Value::String("per_patient_delay".into())
        );
        assert!(parse_assignment("lambda").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = StudyConfig { c_total: Some(18), ..StudyConfig::from_preset("nested-vs-fixed") };
        let manifest = Manifest {
            tool: "edqbd".into(),
            version: "0".into(),
            command: "capacity".into(),
            params: cfg.scenario.resolve().unwrap(),
            artifacts: vec![],
            config: cfg.clone(),
        };
        let path = dir.path().join("manifest.json");
        fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();
        assert_eq!(load(&path).unwrap(), cfg);
    }
}
