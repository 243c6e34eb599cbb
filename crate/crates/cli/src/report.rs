//! Artifact persistence: atomic writes, CSV layout, and the resolved-config
//! header every output embeds.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Recorded in every artifact so downstream readers know how errors scale.
pub const NORM_CONVENTION: &str =
    "trace norm of density-operator differences; embezzlement errors range in [0,2]";

/// Comment header shared by CSV artifacts: tool version, command, seed,
/// the resolved config as one JSON line, and the norm convention.
pub fn csv_header(command: &str, seed: u64, config: &impl Serialize) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# tool_version: {TOOL_VERSION}")?;
    writeln!(out, "# command: {command}")?;
    writeln!(out, "# seed: {seed}")?;
    writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(out, "# norm_convention: {NORM_CONVENTION}")?;
    Ok(out)
}

/// Writes via a temp file in the target directory plus rename, so failures
/// never leave a partial artifact behind.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// JSON artifact with the same metadata envelope as the CSV header.
pub fn json_artifact<T: Serialize>(
    command: &str,
    seed: u64,
    config: &impl Serialize,
    body: &T,
) -> Result<String> {
    let envelope = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "command": command,
        "seed": seed,
        "config": serde_json::to_value(config)?,
        "norm_convention": NORM_CONVENTION,
        "result": serde_json::to_value(body)?,
    });
    Ok(format!("{:#}\n", envelope))
}

/// Fixed-precision float formatting for CSV bodies; deterministic across
/// runs and platforms.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.12e}")
}
