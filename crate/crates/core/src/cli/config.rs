//! JSON configuration layered as defaults, then a config file, then
//! `--set key=value` overrides.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::CliError;

/// Inclusive axis `min, min + step, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub fn validate(&self, field: &str) -> Result<(), CliError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::usage(format!("{field}: bounds must be finite")));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(CliError::usage(format!("{field}.step: must be > 0, got {}", self.step)));
        }
        if self.max < self.min {
            return Err(CliError::usage(format!(
                "{field}: max {} is below min {}",
                self.max, self.min
            )));
        }
        if (self.max - self.min) / self.step > 1e6 {
            return Err(CliError::usage(format!("{field}: more than 1e6 points")));
        }
        Ok(())
    }

    /// Axis points, snapped to 1e-12 so decimal steps print cleanly.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| snap(self.min + k as f64 * self.step)).collect()
    }
}

pub(crate) fn snap(x: f64) -> f64 {
    let v = (x * 1e12).round() / 1e12;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Recursively overlays `patch` onto `base`. Every key of `patch` must
/// already exist in `base`.
pub fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<(), CliError> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (key, value) in p {
                let child = join(path, key);
                let slot = b
                    .get_mut(key)
                    .ok_or_else(|| CliError::usage(format!("unknown field `{child}`")))?;
                if slot.is_object() && value.is_object() {
                    merge(slot, value, &child)?;
                } else {
                    *slot = value.clone();
                }
            }
            Ok(())
        }
        (_, _) => Err(CliError::usage(format!("`{path}` must be a JSON object"))),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Parses `a.b.c=value` into a nested object. The value is read as JSON when
/// possible and as a plain string otherwise.
pub fn parse_override(arg: &str) -> Result<Value, CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set expects key=value, got `{arg}`")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::usage(format!("--set has an empty key in `{arg}`")));
    }
    let mut value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    for part in key.rsplit('.') {
        let mut map = Map::new();
        map.insert(part.to_string(), value);
        value = Value::Object(map);
    }
    Ok(value)
}

/// Serializes `defaults`, applies the config file contents and overrides in
/// order, and deserializes the result.
pub fn layered<T: Serialize + DeserializeOwned>(
    defaults: &T,
    file: Option<&Value>,
    overrides: &[String],
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(defaults).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(file) = file {
        merge(&mut value, file, "")?;
    }
    for arg in overrides {
        merge(&mut value, &parse_override(arg)?, "")?;
    }
    serde_json::from_value(value).map_err(|e| CliError::usage(format!("invalid configuration: {e}")))
}

/// Reads a JSON object from `path`.
pub fn read_config(path: &std::path::Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::usage(format!("config {} must hold a JSON object", path.display())));
    }
    Ok(value)
}
