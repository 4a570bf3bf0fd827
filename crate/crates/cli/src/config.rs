//! `--config <file.json>` support: keys of a JSON object become long flags
//! inserted ahead of the command-line flags, so explicit flags win.

use std::ffi::OsString;

use serde_json::Value;

use crate::CliError;

/// Returns `argv` with the flags from the config file (if any) spliced in
/// right after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{path}: invalid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Validation(format!("{path}: config must be a JSON object")));
    };
    let mut flags = Vec::new();
    for (key, v) in map {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => flags.push(flag),
            Value::String(s) => flags.extend([flag, s]),
            Value::Number(n) => flags.extend([flag, n.to_string()]),
            Value::Array(items) => {
                let joined = items.iter().map(scalar_text).collect::<Result<Vec<_>, _>>()?.join(",");
                flags.extend([flag, joined]);
            }
            Value::Object(_) => {
                return Err(CliError::Validation(format!("{path}: value of `{key}` must not be an object")))
            }
        }
    }
    let at = 2.min(argv.len());
    let mut out = argv[..at].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

fn scalar_text(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(CliError::Validation("config arrays may only hold scalars".into())),
    }
}

fn config_path(argv: &[OsString]) -> Option<String> {
    let mut it = argv.iter().skip(2).map(|a| a.to_string_lossy().into_owned());
    let mut found = None;
    while let Some(a) = it.next() {
        if a == "--config" {
            found = it.next();
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(p.to_string());
        }
    }
    found
}
