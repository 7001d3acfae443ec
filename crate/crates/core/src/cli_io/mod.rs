//! Configuration files, CSV output and the `simulate` front end.
//!
//! A run configuration is a TOML document with two tables: `[run]` holds the
//! output directory, seed, thread count and checkpoint cadence, and
//! `[scenario]` holds the [`Scenario`]. Any document may list other TOML
//! files under `include`; they are merged underneath it, so keys in the
//! including file win. `[run]` may also name a `parameters` file (a full
//! cell parameter set) and a `scenario` file, both relative to the config.

pub mod csv_out;
pub mod presets;

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Value;

use crate::cell_model::CellParams;
use crate::sim_engine::scenario::OcvFiles;
use crate::sim_engine::{Engine, Scenario};
use crate::{Error, Result};

pub use presets::{preset, Scale, Variant, PRESETS};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "GRIDTWIN_OUT";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunTable {
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    checkpoint_every: Option<usize>,
    parameters: Option<PathBuf>,
    scenario: Option<PathBuf>,
    ocv: Option<OcvFiles>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    run: RunTable,
    #[serde(default)]
    scenario: Option<Value>,
}

/// Everything `simulate` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Write a checkpoint every this many cycles.
    pub checkpoint_every: Option<usize>,
}

fn config_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_toml(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(path, format!("cannot read: {e}")))?;
    toml::from_str::<Value>(&text).map_err(|e| config_error(path, e.to_string()))
}

/// Merges `top` over `base`, recursing into tables.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Table(b), Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(existing) => merge(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Reads a TOML file and resolves its `include` list recursively.
pub fn load_with_includes(path: &Path) -> Result<Value> {
    load_rec(path, &mut Vec::new())
}

fn load_rec(path: &Path, stack: &mut Vec<PathBuf>) -> Result<Value> {
    let canonical = path.canonicalize().map_err(|e| config_error(path, format!("cannot read: {e}")))?;
    if stack.contains(&canonical) {
        return Err(config_error(path, "include cycle"));
    }
    stack.push(canonical);
    let mut doc = read_toml(path)?;
    let includes = match doc.as_table_mut().and_then(|t| t.remove("include")) {
        None => Vec::new(),
        Some(Value::String(s)) => vec![s],
        Some(Value::Array(a)) => a
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                other => Err(config_error(path, format!("include entries must be strings, got {other}"))),
            })
            .collect::<Result<_>>()?,
        Some(other) => return Err(config_error(path, format!("include must be a string or list, got {other}"))),
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut merged = Value::Table(Default::default());
    for inc in includes {
        merge(&mut merged, load_rec(&dir.join(inc), stack)?);
    }
    merge(&mut merged, doc);
    stack.pop();
    Ok(merged)
}

/// Loads a complete cell parameter set.
pub fn load_cell_params(path: &Path) -> Result<CellParams> {
    let v = load_with_includes(path)?;
    let p: CellParams = v.try_into().map_err(|e: toml::de::Error| config_error(path, e.to_string()))?;
    p.validate().map_err(|e| config_error(path, e.to_string()))?;
    Ok(p)
}

/// Parses a run configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let doc = load_with_includes(path)?;
    let cfg: ConfigFile = doc.try_into().map_err(|e: toml::de::Error| config_error(path, e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut scenario_value = match &cfg.run.scenario {
        Some(p) => load_with_includes(&dir.join(p))?,
        None => Value::Table(Default::default()),
    };
    if let Some(v) = cfg.scenario {
        merge(&mut scenario_value, v);
    }
    let mut scenario: Scenario = scenario_value
        .try_into()
        .map_err(|e: toml::de::Error| config_error(path, format!("scenario: {e}")))?;
    if let Some(p) = &cfg.run.parameters {
        scenario.cell = load_cell_params(&dir.join(p))?;
    }
    if let Some(o) = cfg.run.ocv {
        scenario.ocv_files = Some(OcvFiles {
            anode: dir.join(o.anode),
            cathode: dir.join(o.cathode),
            entropic: dir.join(o.entropic),
        });
    }
    if let Some(f) = &scenario.ocv_files {
        for p in [&f.anode, &f.cathode, &f.entropic] {
            if !p.exists() {
                return Err(config_error(p, "OCV table not found"));
            }
        }
    }
    scenario.validate().map_err(|e| config_error(path, e.to_string()))?;
    Ok(RunConfig {
        scenario,
        out: cfg.run.out.map(|o| dir.join(o)).unwrap_or_else(|| PathBuf::from("out")),
        seed: cfg.run.seed,
        threads: cfg.run.threads,
        checkpoint_every: cfg.run.checkpoint_every,
    })
}

/// Output directory after applying the environment override.
pub fn resolve_out(cli: Option<&Path>, config: &Path) -> PathBuf {
    if let Ok(v) = std::env::var(OUT_ENV) {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    cli.map(Path::to_path_buf).unwrap_or_else(|| config.to_path_buf())
}

/// Exit code for a failed run: 2 for configuration problems, 3 for solver
/// failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::Scenario(_)
        | Error::InvalidParameter { .. }
        | Error::Topology(_)
        | Error::UnknownPreset(_)
        | Error::Table { .. }
        | Error::CheckpointVersion { .. }
        | Error::CheckpointCorrupt(_) => 2,
        _ => 3,
    }
}

/// Failure of [`simulate`] with the checkpoint written before it, if any.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub checkpoint: Option<PathBuf>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self { error, checkpoint: None }
    }
}

/// Runs `engine` to completion writing all CSV files into `out`. On a solver
/// failure the last cycle-boundary state is saved as `failure.ckpt`.
pub fn simulate(mut engine: Engine, out: &Path, checkpoint_every: Option<usize>) -> std::result::Result<Engine, RunFailure> {
    std::fs::create_dir_all(out).map_err(|e| config_error(out, format!("cannot create output directory: {e}")))?;
    let mut last_good = engine.checkpoint()?;
    while !engine.is_finished() {
        if let Err(error) = engine.run_cycle() {
            let path = out.join("failure.ckpt");
            let checkpoint = std::fs::write(&path, &last_good).ok().map(|_| path);
            return Err(RunFailure { error, checkpoint });
        }
        last_good = engine.checkpoint()?;
        if let Some(k) = checkpoint_every {
            if k > 0 && engine.progress.cycle.is_multiple_of(k) {
                std::fs::write(out.join("checkpoint.ckpt"), &last_good).map_err(Error::from)?;
            }
        }
    }
    csv_out::write_all(&engine, out)?;
    Ok(engine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn includes_merge_under_the_including_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.toml"), "[scenario]\ncycles = 3\ndt = 5.0\n").unwrap();
        std::fs::write(
            dir.path().join("run.toml"),
            "include = [\"base.toml\"]\n[run]\nseed = 4\nout = \"o\"\n[scenario]\ndt = 20.0\n",
        )
        .unwrap();
        let c = load_config(&dir.path().join("run.toml")).unwrap();
        assert_eq!(c.scenario.cycles, 3);
        assert_eq!(c.scenario.dt, 20.0);
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.out, dir.path().join("o"));
    }

    #[test]
    fn errors_name_the_file_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.toml");
        let e = load_config(&missing).unwrap_err();
        assert!(e.to_string().contains("nope.toml"));
        assert_eq!(exit_code(&e), 2);
        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "[scenario]\ncycles = 3\nbogus_field = 1\n").unwrap();
        let e = load_config(&bad).unwrap_err().to_string();
        assert!(e.contains("bogus_field"), "{e}");
        let cyc = dir.path().join("cyc.toml");
        std::fs::write(&cyc, "include = \"cyc.toml\"\n").unwrap();
        assert!(load_config(&cyc).unwrap_err().to_string().contains("cycle"));
    }

    #[test]
    fn shipped_parameter_file_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cell_params.toml");
        assert_eq!(load_cell_params(&path).unwrap(), CellParams::default());
    }
}
