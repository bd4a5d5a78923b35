//! `key = value` config files, turned into command-line flags.

use std::fs;
use std::path::Path;

use clap::CommandFactory;
use toml::Value;

use crate::{Cli, CliError};

/// Line of the first `key = ...` assignment in `text`, 1-based.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn flag_value(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Array(items) => {
            let parts: Option<Vec<String>> = items.iter().map(flag_value).collect();
            parts.map(|p| p.join(","))
        }
        Value::Boolean(_) | Value::Datetime(_) | Value::Table(_) => None,
    }
}

/// Reads `path` and returns the flags it sets for `subcommand`, in file order.
pub fn config_flags(path: &Path, subcommand: &str) -> Result<Vec<String>, CliError> {
    let shown = path.display();
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("config {shown}: {e}")))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("config {shown}: {}", e.to_string().trim_end())))?;

    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| CliError::Config(format!("unknown subcommand `{subcommand}`")))?;
    let known: Vec<(String, bool)> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), !a.get_action().takes_values())))
        .collect();

    let mut flags = Vec::new();
    for (key, value) in &table {
        let at = || match line_of(&text, key) {
            Some(l) => format!("config {shown} line {l}"),
            None => format!("config {shown}"),
        };
        let long = key.replace('_', "-");
        if long == "config" {
            return Err(CliError::Config(format!("{}: `config` cannot be nested", at())));
        }
        let Some(&(_, is_switch)) = known.iter().find(|(l, _)| *l == long) else {
            return Err(CliError::Config(format!("{}: unknown key `{key}` for `{subcommand}`", at())));
        };
        if is_switch {
            match value {
                Value::Boolean(true) => flags.push(format!("--{long}")),
                Value::Boolean(false) => {}
                _ => return Err(CliError::Config(format!("{}: key `{key}` expects true or false", at()))),
            }
            continue;
        }
        let v = flag_value(value)
            .ok_or_else(|| CliError::Config(format!("{}: key `{key}` has an unsupported value type", at())))?;
        flags.push(format!("--{long}={v}"));
    }
    Ok(flags)
}

/// Splices flags from a `--config` file right after the subcommand, so flags
/// given on the command line override them.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(sub_at) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        return Ok(args);
    };
    let mut path = None;
    let mut i = sub_at + 1;
    while i < args.len() {
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if args[i] == "--config" {
            path = args.get(i + 1).cloned();
            i += 1;
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let flags = config_flags(Path::new(&path), &args[sub_at])?;
    let mut out = args[..=sub_at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[sub_at + 1..]);
    Ok(out)
}
