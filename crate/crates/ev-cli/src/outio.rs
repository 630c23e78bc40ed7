//! Output-directory plumbing: config echoes, score files, and cleanup of
//! partial outputs on failure.

use std::fs;
use std::path::{Path, PathBuf};

use ev_core::ev::ValueVector;
use ev_core::{EvError, Result};

/// Tracks files created during a run and removes them unless the run
/// completes.
pub struct OutputGuard {
    created: Vec<PathBuf>,
    armed: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        OutputGuard {
            created: Vec::new(),
            armed: true,
        }
    }

    pub fn track(&mut self, path: impl Into<PathBuf>) {
        self.created.push(path.into());
    }

    pub fn track_all(&mut self, paths: &[PathBuf]) {
        self.created.extend(paths.iter().cloned());
    }

    /// Keep the outputs; the run succeeded.
    pub fn disarm(&mut self) {
        self.armed = false;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.armed {
            for path in &self.created {
                let _ = fs::remove_file(path);
            }
        }
    }
}

/// Writes the config echo first, so a surviving output directory always
/// says how it was produced.
pub fn write_config_echo(
    dir: &Path,
    subcommand: &str,
    args: &impl serde::Serialize,
    guard: &mut OutputGuard,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join("config.json");
    let echo = serde_json::json!({ "subcommand": subcommand, "args": args });
    fs::write(&path, serde_json::to_string_pretty(&echo).expect("serializable args"))?;
    guard.track(&path);
    Ok(())
}

/// Writes a score vector as `index,score,method,w` rows.
pub fn write_values(path: &Path, values: &ValueVector<f64>) -> Result<()> {
    let mut out = String::from("index,score,method,w\n");
    for (i, s) in values.scores.iter().enumerate() {
        out.push_str(&format!("{i},{s},{},{}\n", values.method, values.weight_w));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads back a score file written by [`write_values`].
pub fn read_values(path: &Path) -> Result<ValueVector<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| EvError::invalid("empty values file"))?;
    if header != "index,score,method,w" {
        return Err(EvError::invalid("values file must start with index,score,method,w"));
    }
    let mut scores = Vec::new();
    let mut method = String::new();
    let mut weight = 0.0;
    for (line_idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(EvError::RaggedRows {
                line: line_idx + 1,
                expected: 4,
                got: fields.len(),
            });
        }
        let index: usize = fields[0].parse().map_err(|_| EvError::ParseField {
            line: line_idx + 1,
            field: fields[0].to_string(),
        })?;
        if index != scores.len() {
            return Err(EvError::invalid(format!(
                "values file indices must be consecutive; saw {index} at row {}",
                scores.len()
            )));
        }
        let score: f64 = fields[1].parse().map_err(|_| EvError::ParseField {
            line: line_idx + 1,
            field: fields[1].to_string(),
        })?;
        scores.push(score);
        method = fields[2].to_string();
        weight = fields[3].parse().map_err(|_| EvError::ParseField {
            line: line_idx + 1,
            field: fields[3].to_string(),
        })?;
    }
    let mut values = ValueVector::new(method, scores)?;
    values.weight_w = weight;
    Ok(values)
}
