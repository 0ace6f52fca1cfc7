use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Validator;
use crate::error::{Error, Result};

const DEFAULT_REGISTRY: &str = include_str!("../../data/registry.json");

/// A named linguistic condition for the accuracy experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    pub system_prompt: String,
    pub validator: Validator,
}

impl ConditionSpec {
    pub fn new(name: &str, system_prompt: &str, validator: Validator) -> Self {
        ConditionSpec { name: name.to_string(), system_prompt: system_prompt.to_string(), validator }
    }
}

/// One constrained agent of the ensemble experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub axis: String,
    #[serde(default)]
    pub summary: String,
    pub system_prompt: String,
}

/// Descriptive row of the constraint taxonomy. Not backed by a validator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub constraint: String,
    pub tradition: String,
    pub axis: String,
    pub targets: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub conditions: Vec<ConditionSpec>,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub taxonomy: Vec<TaxonomyEntry>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::from_json(DEFAULT_REGISTRY).expect("shipped registry is valid")
    }
}

impl Registry {
    pub fn from_json(json: &str) -> Result<Self> {
        let reg: Registry = serde_json::from_str(json)?;
        reg.check()?;
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.conditions {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Config(format!("duplicate condition '{}'", c.name)));
            }
            if c.validator == Validator::None && c.name != "control" {
                return Err(Error::Config(format!("condition '{}' has no validator; only control may", c.name)));
            }
        }
        let mut seen = HashSet::new();
        for a in &self.agents {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Config(format!("duplicate agent '{}'", a.name)));
            }
        }
        Ok(())
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionSpec> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn agent(&self, name: &str) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.name == name)
    }
}
