//! `--config FILE` support.
//!
//! The `[<subcommand>]` table of a TOML file is turned into `--key=value`
//! arguments inserted right after the subcommand name, ahead of the user's
//! own flags. Later occurrences override earlier ones, so explicit flags
//! beat the file, which beats the built-in defaults.

use std::ffi::OsString;
use std::path::PathBuf;

use crate::failure::{Failure, Result};
use crate::files::read_text;

/// Global flags that take a separate value.
const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--threads"];

struct Scan {
    config: Option<PathBuf>,
    subcommand: Option<usize>,
}

fn scan(args: &[OsString]) -> Scan {
    let mut config = None;
    let mut subcommand = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if GLOBAL_WITH_VALUE.contains(&a.as_ref()) {
            if a == "--config" {
                config = args.get(i + 1).map(PathBuf::from);
            }
            i += 1;
        } else if !a.starts_with('-') && subcommand.is_none() {
            subcommand = Some(i);
        }
        i += 1;
        if subcommand.is_some() {
            break;
        }
    }
    // `--config` may also follow the subcommand.
    if config.is_none() {
        let mut it = args.iter().skip(1).map(|a| a.to_string_lossy());
        while let Some(a) = it.next() {
            if let Some(v) = a.strip_prefix("--config=") {
                config = Some(PathBuf::from(v));
            } else if a == "--config" {
                config = it.next().map(|v| PathBuf::from(v.as_ref()));
            }
        }
    }
    Scan { config, subcommand }
}

fn render(key: &str, value: &toml::Value) -> Result<Option<String>> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &toml::Value| -> Result<String> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(Failure::validation(
                "BadConfig",
                format!("config key {key:?}: unsupported value {other}"),
            )),
        }
    };
    Ok(match value {
        toml::Value::Boolean(true) => Some(flag),
        toml::Value::Boolean(false) => None,
        toml::Value::Array(items) => {
            let parts: Result<Vec<String>> = items.iter().map(scalar).collect();
            Some(format!("{flag}={}", parts?.join(",")))
        }
        v => Some(format!("{flag}={}", scalar(v)?)),
    })
}

/// Config-derived arguments for `subcommand`, in key order.
pub fn config_args(text: &str, subcommand: &str) -> Result<Vec<String>> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Failure::validation("BadConfig", e.to_string()))?;
    let Some(section) = table.get(subcommand) else {
        return Ok(Vec::new());
    };
    let section = section.as_table().ok_or_else(|| {
        Failure::validation("BadConfig", format!("[{subcommand}] must be a table"))
    })?;
    let mut out = Vec::new();
    for (key, value) in section {
        if let Some(arg) = render(key, value)? {
            out.push(arg);
        }
    }
    Ok(out)
}

/// Returns `args` with the config file's flags spliced in.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Scan { config, subcommand } = scan(&args);
    let (Some(path), Some(pos)) = (config, subcommand) else {
        return Ok(args);
    };
    let name = args[pos].to_string_lossy().into_owned();
    let extra = config_args(&read_text(&path)?, &name)?;
    let mut out = args;
    out.splice(pos + 1..pos + 1, extra.into_iter().map(OsString::from));
    Ok(out)
}
