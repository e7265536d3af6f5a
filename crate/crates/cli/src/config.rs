//! `key = value` configuration files.
//!
//! Every key names a long flag of the subcommand. Entries are turned into
//! `--key value` arguments placed in front of the ones given on the command
//! line. Entries for flags that also appear on the command line are
//! dropped, so an explicit flag always wins. `true` and `false` switch
//! boolean flags on and off.

use maxcon_core::{Error, Result};
use std::ffi::OsString;
use std::path::Path;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("invalid key `{key}`"),
            });
        }
        out.push((key, value.trim().to_owned()));
    }
    Ok(out)
}

pub fn config_args(entries: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "false" => {}
            "true" => out.push(format!("--{key}").into()),
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    out
}

/// Removes `--config <path>` from `argv` and splices the file's entries in
/// right after the subcommand name.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            let p = it
                .next()
                .ok_or_else(|| Error::InvalidArgument("--config needs a file".into()))?;
            path = Some(p);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(Path::new(&path))?;
    let given: Vec<String> = rest
        .iter()
        .filter_map(|a| {
            let s = a.to_str()?.strip_prefix("--")?;
            Some(s.split('=').next().unwrap_or(s).to_owned())
        })
        .collect();
    let entries: Vec<_> = parse_config(&text)?
        .into_iter()
        .filter(|(k, _)| !given.contains(k))
        .collect();
    let injected = config_args(&entries);
    // argv[0] is the program, argv[1] the subcommand.
    let at = rest.len().min(2);
    rest.splice(at..at, injected);
    Ok(rest)
}
