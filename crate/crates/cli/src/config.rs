//! `--config` files and run manifests.
//!
//! Both use one `key=value` pair per line, with keys named after the long
//! flags. A manifest can be passed back as `--config` to repeat a run.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use amrkit::{Error, Result};
use clap::ArgMatches;

/// Flags that never change outputs and are left out of manifests.
const NOT_RECORDED: [&str; 2] = ["config", "threads"];

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParameter(format!(
                "{}:{}: expected key=value",
                path.display(),
                i + 1
            )));
        };
        pairs.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Inserts the flags from a `--config` file right after the subcommand, so
/// that flags given on the command line come later and take precedence.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    if args.len() < 2 {
        return Ok(args);
    }
    let text = fs::read_to_string(&path)?;
    let mut expanded: Vec<OsString> = args[..2].to_vec();
    for (key, value) in parse_config(&text, &path)? {
        if NOT_RECORDED.contains(&key.as_str()) {
            continue;
        }
        expanded.push(format!("--{key}").into());
        expanded.push(value.into());
    }
    expanded.extend_from_slice(&args[2..]);
    Ok(expanded)
}

/// Every resolved flag of the subcommand, defaults included, sorted by name.
pub fn manifest(command: &clap::Command, matches: &ArgMatches) -> String {
    let mut lines: Vec<String> = command
        .get_arguments()
        .map(|arg| arg.get_id().as_str())
        .filter(|id| !NOT_RECORDED.contains(id))
        .filter_map(|id| {
            let values = matches.try_get_raw(id).ok().flatten()?;
            let joined: Vec<String> = values.map(|v| v.to_string_lossy().into_owned()).collect();
            Some(format!("{}={}", id.replace('_', "-"), joined.join(",")))
        })
        .collect();
    lines.sort();
    let mut out = format!(
        "# command {}\n# version {}\n",
        command.get_name(),
        env!("CARGO_PKG_VERSION")
    );
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}
