use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::endpoint::{ModelEndpoint, RetryPolicy};
use super::task::{load_bank, TaskItem};
use crate::constraint::{CheckerConfig, ConditionSpec, Registry};
use crate::error::{Error, Result};

fn default_reps() -> u32 {
    4
}
fn default_concurrency() -> usize {
    8
}
fn default_true() -> bool {
    true
}
fn default_conditions() -> Vec<String> {
    vec!["control".into(), "e_prime".into(), "no_have".into()]
}

/// On-disk run configuration. Relative paths resolve against the directory
/// holding the config file. Credentials never appear here, only the names
/// of the environment variables that hold them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<ModelEndpoint>,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry_path: Option<PathBuf>,
    #[serde(default = "default_reps")]
    pub reps: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    pub bank_path: PathBuf,
    pub ledger_path: PathBuf,
    #[serde(default = "default_true")]
    pub requeue_errors: bool,
    #[serde(default)]
    pub checker: CheckerConfig,
}

/// A configuration with its bank and registry loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub models: Vec<ModelEndpoint>,
    pub conditions: Vec<ConditionSpec>,
    pub bank: Vec<TaskItem>,
    pub reps: u32,
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub ledger_path: PathBuf,
    pub requeue_errors: bool,
    pub checker: CheckerConfig,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.bank_path = resolve(base, &cfg.bank_path);
        cfg.ledger_path = resolve(base, &cfg.ledger_path);
        cfg.registry_path = cfg.registry_path.map(|p| resolve(base, &p));
        Ok(cfg)
    }

    pub fn into_experiment(self) -> Result<Experiment> {
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        let mut names = HashSet::new();
        for m in &self.models {
            m.check()?;
            if !names.insert(m.name.as_str()) {
                return Err(Error::Config(format!("duplicate model '{}'", m.name)));
            }
        }
        let registry = match &self.registry_path {
            Some(p) => Registry::load(p)?,
            None => Registry::default(),
        };
        let conditions = self
            .conditions
            .iter()
            .map(|name| {
                registry.condition(name).cloned().ok_or_else(|| Error::Config(format!("unknown condition '{name}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let bank = load_bank(&self.bank_path)?;
        Ok(Experiment {
            models: self.models,
            conditions,
            bank,
            reps: self.reps,
            concurrency: self.concurrency,
            retry: self.retry,
            ledger_path: self.ledger_path,
            requeue_errors: self.requeue_errors,
            checker: self.checker,
        })
    }
}
