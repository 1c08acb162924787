//! `--config FILE` support. The `[<subcommand>]` table of a TOML file is
//! turned into flags placed ahead of the user's own arguments, so anything
//! given on the command line wins.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

const SUBCOMMANDS: [&str; 5] = ["fit", "tune", "simulate", "bench", "check"];

/// Returns `args` with the config overlay spliced in after the subcommand.
pub fn expand(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(pos) = args.iter().position(|a| SUBCOMMANDS.iter().any(|s| a == s)) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let sub = args[pos].to_string_lossy().into_owned();
    let flags = overlay(&text, &sub).map_err(|message| CliError::ConfigParse { path, message })?;
    let mut out = args[..=pos].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(Path::new(p).to_path_buf());
        }
    }
    None
}

/// Flags for one subcommand. Keys may use `_` or `-`; `true` booleans become
/// bare switches and `false` ones are dropped; arrays are joined with commas.
pub fn overlay(text: &str, subcommand: &str) -> Result<Vec<String>, String> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let Some(section) = doc.get(subcommand) else {
        return Ok(Vec::new());
    };
    let table = section
        .as_table()
        .ok_or_else(|| format!("[{subcommand}] must be a table"))?;
    let mut flags = Vec::new();
    for (key, value) in table {
        if key == "config" {
            return Err("config files cannot include other config files".into());
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => flags.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>, _>>()?;
                flags.push(format!("{flag}={}", parts.join(",")));
            }
            v => flags.push(format!("{flag}={}", scalar(key, v)?)),
        }
    }
    Ok(flags)
}

fn scalar(key: &str, v: &toml::Value) -> Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(format!("unsupported value for '{key}'")),
    }
}
