//! TOML and JSON config files. Parse errors name the offending field.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

fn located<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> Error {
    let field = e.path().to_string();
    let field = if field == "." {
        "config".to_string()
    } else {
        field
    };
    Error::config(field, e.into_inner().to_string())
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(located)?;
    de.end()
        .map_err(|e| Error::config("config", e.to_string()))?;
    Ok(value)
}

pub fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("config", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(located)
}

/// Parse by extension; other extensions try JSON, then TOML.
pub fn from_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "json" => from_json(&text),
        "toml" => from_toml(&text),
        _ => from_json(&text).or_else(|_| from_toml(&text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ExperimentConfig;

    #[test]
    fn errors_carry_the_field_path() {
        let e = from_toml::<ExperimentConfig>("n_cells = \"many\"").unwrap_err();
        assert!(
            matches!(&e, Error::Config { field, .. } if field == "n_cells"),
            "{e}"
        );
        let e = from_json::<ExperimentConfig>(r#"{"elliptic": {"max_iters": -1}}"#).unwrap_err();
        assert!(
            matches!(&e, Error::Config { field, .. } if field == "elliptic.max_iters"),
            "{e}"
        );
        let e = from_json::<ExperimentConfig>(r#"{"cfl_number": 0.5}"#).unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
    }

    #[test]
    fn formats_agree() {
        let a: ExperimentConfig = from_toml("case = \"sedov\"\nn_cells = 64\n").unwrap();
        let b: ExperimentConfig = from_json(r#"{"case": "sedov", "n_cells": 64}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_cells, 64);
    }
}
