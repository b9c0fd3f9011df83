//! Optional TOML config file with one table per command. Values given on the
//! command line override the file.
//!
//! ```toml
//! [decode]
//! decoder = "advanced"
//! beam = 16
//! lookahead = true
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{invalid, CliResult};

#[derive(Debug, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        for (k, v) in &table {
            if !v.is_table() {
                return Err(invalid(format!(
                    "config {}: top-level key `{k}` must be a command table",
                    path.display()
                )));
            }
        }
        Ok(Self { table })
    }

    /// Merges the table for `command` under the parsed flags. A flag counts
    /// as given when it is not `None` and not a `false` switch.
    pub fn merge<T: Serialize + DeserializeOwned + Default>(&self, command: &str, flags: T) -> CliResult<T> {
        let Some(section) = self.table.get(command).and_then(toml::Value::as_table) else {
            return Ok(flags);
        };
        let Value::Object(mut merged) = json(command, &T::default())? else {
            return Ok(flags);
        };
        for (k, v) in section {
            if !merged.contains_key(k) {
                return Err(invalid(format!("config [{command}]: unknown key `{k}`")));
            }
            merged.insert(k.clone(), json(command, v)?);
        }
        if let Value::Object(given) = json(command, &flags)? {
            for (k, v) in given {
                if !(v.is_null() || v == Value::Bool(false)) {
                    merged.insert(k, v);
                }
            }
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| invalid(format!("config [{command}]: {e}")))
    }
}

fn json<S: Serialize + ?Sized>(command: &str, x: &S) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| invalid(format!("config [{command}]: {e}")))
}
