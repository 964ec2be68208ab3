use std::path::Path;

use serde_json::Value;
use urbanemf::RunConfig;

/// A problem with the configuration itself (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Load the JSON config (or the defaults) and apply `key.path=value`
/// overrides. Values are parsed as JSON, falling back to a plain string.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let mut doc = serde_json::to_value(&base).expect("config serializes");
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("override `{o}` is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set(&mut doc, key, value)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| ConfigError(e.to_string()))?;
    cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(cfg)
}

fn set(doc: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = doc;
    for part in key.split('.') {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| ConfigError(format!("unknown config field `{key}`")))?;
    }
    *node = value;
    Ok(())
}
