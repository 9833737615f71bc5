//! Loading specs from files, stdin or preset names.

use std::io::Read;

use cantor_core::family::{FamilySpec, McMullenSpec};
use cantor_core::parabolic::ParabolicSpec;
use cantor_core::presets::{self, Preset, PRESET_NAMES};
use serde::de::DeserializeOwned;
use serde_json::Value;

/// A usage-level failure: bad arguments or an unreadable spec. Exit code 1.
#[derive(Debug)]
pub struct UsageError {
    pub message: String,
    /// JSON path of the offending field, when known
    pub path: Option<String>,
}

impl UsageError {
    pub fn new(message: impl Into<String>) -> UsageError {
        UsageError { message: message.into(), path: None }
    }
}

fn typed<T: DeserializeOwned>(v: Value) -> Result<T, UsageError> {
    serde_path_to_error::deserialize(v)
        .map_err(|e| UsageError { path: Some(e.path().to_string()), message: e.inner().to_string() })
}

/// Decide the family from the keys present and deserialize strictly.
pub fn parse_spec(text: &str) -> Result<Preset, UsageError> {
    let v: Value = serde_json::from_str(text).map_err(|e| UsageError::new(format!("invalid JSON: {e}")))?;
    let Some(obj) = v.as_object() else {
        return Err(UsageError { message: "spec must be a JSON object".into(), path: Some(".".into()) });
    };
    if obj.contains_key("family") {
        Ok(Preset::Parabolic(typed::<ParabolicSpec>(v)?))
    } else if obj.contains_key("eta") {
        Ok(Preset::Mcmullen(typed::<McMullenSpec>(v)?))
    } else {
        Ok(Preset::Family(typed::<FamilySpec>(v)?))
    }
}

/// A preset name wins; otherwise read the file (or stdin for `-` or none).
pub fn load(preset: Option<&str>, path: Option<&str>) -> Result<Preset, UsageError> {
    if let Some(name) = preset {
        return presets::preset(name).ok_or_else(|| {
            UsageError::new(format!("unknown preset '{name}', expected one of {}", PRESET_NAMES.join(", ")))
        });
    }
    let text = match path {
        Some(p) if p != "-" => {
            std::fs::read_to_string(p).map_err(|e| UsageError::new(format!("cannot read {p}: {e}")))?
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| UsageError::new(format!("cannot read stdin: {e}")))?;
            s
        }
    };
    parse_spec(&text)
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, UsageError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|_| UsageError::new(format!("bad {what} entry '{t}'"))))
        .collect()
}

pub fn parse_complex(s: &str) -> Result<num_complex::Complex64, UsageError> {
    let v: Vec<f64> = parse_list(s, "complex number")?;
    match v.as_slice() {
        [re] => Ok(num_complex::Complex64::new(*re, 0.0)),
        [re, im] => Ok(num_complex::Complex64::new(*re, *im)),
        _ => Err(UsageError::new(format!("expected 're' or 're,im', got '{s}'"))),
    }
}
