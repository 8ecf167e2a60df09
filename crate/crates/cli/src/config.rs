//! `key = value` defaults files, merged ahead of the command-line flags.

use std::collections::BTreeSet;
use std::fs;

use clap::Command;

use crate::CliError;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", no + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn longs(cmd: &Command) -> BTreeSet<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect()
}

/// Inserts config entries as flags directly after the subcommand, so any
/// repeated flag on the command line overrides them. Keys known to another
/// subcommand are skipped; unknown keys are an error.
pub fn expand(args: Vec<String>, cli: &Command) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    let entries = parse_config(&text)?;
    let Some(pos) = args
        .iter()
        .position(|a| cli.get_subcommands().any(|s| s.get_name() == a))
    else {
        return Ok(args);
    };
    let sub = cli.find_subcommand(&args[pos]).expect("matched above");
    let here = longs(sub);
    let anywhere: BTreeSet<String> = cli.get_subcommands().flat_map(longs).collect();
    let mut injected = Vec::new();
    for (k, v) in entries {
        if here.contains(&k) && k != "config" {
            injected.push(format!("--{k}={v}"));
        } else if !anywhere.contains(&k) {
            return Err(CliError::Config(format!("unknown key '{k}'")));
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse_config("# defaults\nv0 = 1.2\nmax_count=3 # trailing\n\n").unwrap();
        assert_eq!(e, vec![("v0".into(), "1.2".into()), ("max-count".into(), "3".into())]);
        assert!(parse_config("novalue").is_err());
    }
}
