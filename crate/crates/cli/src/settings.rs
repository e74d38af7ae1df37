use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cadgym_core::config::Config;
use cadgym_core::gym::{bundled_task, load_task_dir, Task};

/// Invocation problems that map to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Loads and validates the config, then applies path overrides from the
/// environment.
pub fn load_config(path: Option<&Path>) -> Result<Config> {
    let path = path.ok_or_else(|| usage("this command needs --config PATH (seeds must be set there)"))?;
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = Config::from_toml_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    cfg.apply_env_overrides(|k| std::env::var(k).ok());
    Ok(cfg)
}

/// Same as `load_config` but falls back to defaults when no file is given.
pub fn load_optional_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(_) => load_config(path),
        None => {
            let mut cfg = Config::with_seed(0);
            cfg.apply_env_overrides(|k| std::env::var(k).ok());
            Ok(cfg)
        }
    }
}

/// Resolves a task argument: an existing JSON file, a bundled id, or an id
/// found in the configured task directory.
pub fn resolve_task(arg: &str, cfg: &Config) -> Result<Task> {
    let p = Path::new(arg);
    if p.is_file() {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        return Task::from_json(&text).with_context(|| format!("loading task {}", p.display()));
    }
    if let Some(dir) = &cfg.paths.tasks_dir {
        if let Some(t) = load_task_dir(dir)?.into_iter().find(|t| t.id == arg) {
            return Ok(t);
        }
    }
    bundled_task(arg).ok_or_else(|| usage(format!("no task file or task id {arg:?}")))
}

/// Output path: explicit flag, else `name` inside the configured output dir.
pub fn output_path(flag: Option<PathBuf>, cfg: &Config, name: &str) -> Option<PathBuf> {
    flag.or_else(|| cfg.paths.output_dir.as_ref().map(|d| d.join(name)))
}

pub fn write_output(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
