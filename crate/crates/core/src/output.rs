//! File-level entry points shared by the command-line tool and library users.

use std::path::{Path, PathBuf};

use crate::config::{parse_config, Scheme, SimConfig};
use crate::engine::{run_state, RunOutput, SimState};
use crate::error::{ConfigError, Error, Result};
use crate::metrics::write_metrics;
use crate::render::{snapshot_file_name, write_svg};

pub const METRICS_FILE: &str = "metrics.csv";

/// Command-line style overrides of the `[run]` section.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub rounds: Option<u32>,
    pub snapshot_interval: Option<u32>,
}

impl RunOverrides {
    pub fn apply(&self, mut config: SimConfig) -> Result<SimConfig, ConfigError> {
        if let Some(v) = self.seed {
            config.run.seed = v;
        }
        if let Some(v) = self.scheme {
            config.run.scheme = v;
        }
        if let Some(v) = self.rounds {
            config.run.rounds = v;
        }
        if let Some(v) = self.snapshot_interval {
            config.run.snapshot_interval = v;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Reads and validates a config document; `None` gives the defaults.
pub fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    Ok(parse_config(&text)?)
}

/// Paths written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub metrics: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

/// Writes `metrics.csv` and one SVG per snapshot into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<RunFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let metrics = dir.join(METRICS_FILE);
    write_metrics(&out.series, &metrics)?;
    let mut snapshots = Vec::with_capacity(out.snapshots.len());
    for snap in &out.snapshots {
        let path = dir.join(snapshot_file_name(snap.after_rounds));
        write_svg(snap, &path)?;
        snapshots.push(path);
    }
    Ok(RunFiles { metrics, snapshots })
}

/// Runs `config` and writes its files into `dir`.
pub fn run_to_dir(config: &SimConfig, dir: &Path) -> Result<(RunOutput, RunFiles)> {
    let mut state = SimState::new(config.clone())?;
    state.record_log = false;
    let out = run_state(&mut state);
    let files = write_run(&out, dir)?;
    Ok((out, files))
}

/// Steps a fresh simulation and writes a snapshot after each of `rounds`
/// (sorted, duplicates dropped). Nothing else is written.
pub fn render_rounds(config: &SimConfig, rounds: &[u32], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut wanted = rounds.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut state = SimState::new(config.clone())?;
    state.record_log = false;
    let mut written = Vec::with_capacity(wanted.len());
    for after in wanted {
        while state.round < after {
            state.step_round();
        }
        let path = dir.join(snapshot_file_name(after));
        write_svg(&state.snapshot(), &path)?;
        written.push(path);
    }
    Ok(written)
}
