//! JSON run configuration: `HolometerConfig` fields plus a few
//! command-specific keys, layered over the command defaults.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use twinbeam::HolometerConfig;

use crate::CliError;

const PHI0: &str = "phi0";

pub struct ConfigFile {
    fields: Map<String, Value>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile { fields: Map::new() }
    }

    pub fn load(path: Option<&Path>, extra_keys: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::empty());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let Value::Object(fields) = value else {
            return Err(CliError::Invalid(format!("{}: expected a JSON object", path.display())));
        };
        let known = holometer_keys();
        for key in fields.keys() {
            if !known.contains(key) && key != PHI0 && !extra_keys.contains(&key.as_str()) {
                return Err(CliError::Invalid(format!("unknown config key '{key}'")));
            }
        }
        Ok(ConfigFile { fields })
    }

    pub fn has(&self, key: &str) -> bool {
        self.fields.contains_key(key)
    }

    /// `base` with every `HolometerConfig` field present in the file replaced.
    /// `phi0` sets both arm phases unless `phi0_1`/`phi0_2` are given.
    pub fn holometer(&self, base: &HolometerConfig) -> Result<HolometerConfig, CliError> {
        let Value::Object(mut merged) = serde_json::to_value(base).expect("config serializes") else {
            unreachable!("config serializes to an object")
        };
        if let Some(v) = self.fields.get(PHI0) {
            merged.insert("phi0_1".into(), v.clone());
            merged.insert("phi0_2".into(), v.clone());
        }
        for key in holometer_keys() {
            if let Some(v) = self.fields.get(&key) {
                merged.insert(key, v.clone());
            }
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.fields
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| CliError::Invalid(format!("config key '{key}': {e}"))))
            .transpose()
    }
}

fn holometer_keys() -> Vec<String> {
    match serde_json::to_value(HolometerConfig::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => unreachable!("config serializes to an object"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(body: &str, extra: &[&str]) -> Result<ConfigFile, CliError> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        ConfigFile::load(Some(f.path()), extra)
    }

    #[test]
    fn file_values_override_defaults() {
        let f = file_with(r#"{"eta": 0.5, "input_kind": "two_squeezed"}"#, &[]).unwrap();
        let base = HolometerConfig {
            mu: 3e12,
            ..Default::default()
        };
        let c = f.holometer(&base).unwrap();
        assert_eq!((c.eta, c.mu), (0.5, 3e12));
        assert_eq!(c.input_kind, twinbeam::InputKind::TwoSqueezed);
    }

    #[test]
    fn keys_are_checked() {
        assert!(matches!(file_with(r#"{"etaa": 1}"#, &[]), Err(CliError::Invalid(_))));
        assert!(matches!(file_with("[1, 2]", &[]), Err(CliError::Invalid(_))));
        let f = file_with(r#"{"n_samples": 5000}"#, &["n_samples"]).unwrap();
        assert_eq!(f.get::<usize>("n_samples").unwrap(), Some(5000));
        assert!(f.get::<String>("n_samples").is_err());
        assert_eq!(f.get::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn phi0_sets_both_arms() {
        let base = HolometerConfig::default();
        let c = file_with(r#"{"phi0": 0.25}"#, &[]).unwrap().holometer(&base).unwrap();
        assert_eq!((c.phi0_1, c.phi0_2), (0.25, 0.25));
        let c = file_with(r#"{"phi0": 0.25, "phi0_2": 0.5}"#, &[]).unwrap().holometer(&base).unwrap();
        assert_eq!((c.phi0_1, c.phi0_2), (0.25, 0.5));
    }

    #[test]
    fn no_file_keeps_base() {
        let base = HolometerConfig::default();
        assert_eq!(ConfigFile::empty().holometer(&base).unwrap(), base);
    }
}
