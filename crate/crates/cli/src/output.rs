//! Config loading and header-stamped output files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::{CliError, CliResult};

const CONFIG_PREFIX: &str = "# config: ";

/// Reads an experiment document. Files written by this tool are accepted
/// too: the config is taken from their header.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let parse = |message: String| CliError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let value: Value = if text.starts_with('#') {
        let line = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(CONFIG_PREFIX))
            .ok_or_else(|| parse("header has no config line".into()))?;
        serde_json::from_str(line).map_err(|e| parse(e.to_string()))?
    } else {
        let value: Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        match value.pointer("/header/config") {
            Some(config) => config.clone(),
            None => value,
        }
    };
    serde_json::from_value(value).map_err(|e| parse(e.to_string()))
}

/// Written at the top of every output file.
pub struct Header<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub seed: u64,
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("unix {secs}")
}

impl<C: Serialize> Header<'_, C> {
    fn csv_lines(&self) -> CliResult<String> {
        Ok(format!(
            "# flatspace {}\n{CONFIG_PREFIX}{}\n# seed: {}\n# generated: {}\n",
            self.command,
            serde_json::to_string(self.config)?,
            self.seed,
            timestamp()
        ))
    }

    fn json(&self) -> CliResult<Value> {
        Ok(serde_json::json!({
            "command": self.command,
            "config": serde_json::to_value(self.config)?,
            "seed": self.seed,
            "generated": timestamp(),
        }))
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let wrap = |source| CliError::Write {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents).map_err(wrap)?;
    tmp.persist(&path).map_err(|e| wrap(e.error))?;
    Ok(path)
}

/// A CSV file: header comment lines, then the table produced by `body`.
pub fn write_csv<C: Serialize>(
    dir: &Path,
    name: &str,
    header: &Header<C>,
    body: impl FnOnce(&mut Vec<u8>) -> CliResult<()>,
) -> CliResult<PathBuf> {
    let mut buf = header.csv_lines()?.into_bytes();
    body(&mut buf)?;
    write_atomic(dir, name, &buf)
}

/// A JSON document `{"header": …, key: payload}`.
pub fn write_json<C: Serialize, P: Serialize>(
    dir: &Path,
    name: &str,
    header: &Header<C>,
    key: &str,
    payload: &P,
) -> CliResult<PathBuf> {
    let mut doc = serde_json::Map::new();
    doc.insert("header".into(), header.json()?);
    doc.insert(key.into(), serde_json::to_value(payload)?);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// Deserializes an optional config field, naming it in errors.
pub fn field<T: DeserializeOwned>(name: &'static str, value: Option<&Value>) -> CliResult<T> {
    let value = value.ok_or(CliError::MissingField(name))?;
    serde_json::from_value(value.clone()).map_err(|source| CliError::Field { field: name, source })
}
