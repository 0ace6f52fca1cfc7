//! Ensemble analysis report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::analysis::*;
use super::matrix::CoverageMatrix;
use crate::error::Result;
use crate::stats::render_table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: String,
    pub covered: usize,
    pub accuracy: f64,
    /// Percentage points against the control agent, when there is one.
    pub delta_vs_control_pp: Option<f64>,
    pub shapley: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub configuration: String,
    pub agents: Vec<String>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueFinding {
    pub finding: String,
    pub agent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n_agents: usize,
    pub n_findings: usize,
    pub agents: Vec<AgentSummary>,
    pub ensembles: Vec<EnsembleRow>,
    pub minimal_ensemble: Vec<String>,
    pub jaccard: Vec<JaccardPair>,
    pub unique_findings: Vec<UniqueFinding>,
    pub subsets: Option<SubsetEnumeration>,
    /// Hashes of the judge templates, for reports built from judged data.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub prompt_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Subset size for the exhaustive enumeration; `None` skips it.
    pub k: Option<usize>,
    pub control: String,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions { k: Some(3), control: "control".into() }
    }
}

fn names(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn build_ensemble_report(matrix: &CoverageMatrix, opts: &EnsembleOptions) -> Result<EnsembleReport> {
    let m = matrix.n_findings() as f64;
    let shap = shapley(matrix)?;
    let control = matrix.agent_index(&opts.control);
    let acc = |i: usize| matrix.covered(i) as f64 / m;
    let agents: Vec<AgentSummary> = (0..matrix.n_agents())
        .map(|i| AgentSummary {
            agent: matrix.agents()[i].clone(),
            covered: matrix.covered(i),
            accuracy: acc(i),
            delta_vs_control_pp: control.map(|c| 100.0 * (acc(i) - acc(c))),
            shapley: shap.values[i],
            share: shap.shares[i],
        })
        .collect();
    let minimal = greedy_minimal(matrix, &shap)?;
    let mut ensembles = Vec::new();
    if let Some(c) = control {
        ensembles.push(EnsembleRow {
            configuration: "Control (single agent)".into(),
            agents: vec![opts.control.clone()],
            accuracy: acc(c),
        });
    }
    ensembles.push(EnsembleRow {
        configuration: format!("Full ensemble ({} agents, union)", matrix.n_agents()),
        agents: matrix.agents().to_vec(),
        accuracy: union_coverage(matrix, &names(matrix.agents()))?,
    });
    ensembles.push(EnsembleRow {
        configuration: format!("Minimal ensemble ({} agents, greedy)", minimal.len()),
        agents: minimal.clone(),
        accuracy: union_coverage(matrix, &names(&minimal))?,
    });
    let multiplicity = matrix.finding_multiplicity();
    let unique_findings = multiplicity
        .iter()
        .enumerate()
        .filter(|(_, &k)| k == 1)
        .map(|(j, _)| UniqueFinding {
            finding: matrix.findings()[j].clone(),
            agent: matrix.agents()[(0..matrix.n_agents()).find(|&a| matrix.bits(a).get(j)).expect("covered")].clone(),
        })
        .collect();
    let subsets = opts.k.map(|k| enumerate_subsets(matrix, k)).transpose()?;
    Ok(EnsembleReport {
        n_agents: matrix.n_agents(),
        n_findings: matrix.n_findings(),
        agents,
        ensembles,
        minimal_ensemble: minimal,
        jaccard: jaccard_pairs(matrix),
        unique_findings,
        subsets,
        prompt_hashes: BTreeMap::new(),
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

impl EnsembleReport {
    pub fn jaccard_extremes(&self) -> Option<(&JaccardPair, &JaccardPair)> {
        let min = self.jaccard.iter().min_by(|a, b| a.value.total_cmp(&b.value))?;
        let max = self.jaccard.iter().max_by(|a, b| a.value.total_cmp(&b.value))?;
        Some((min, max))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        // Agents sharing an accuracy share a row, best first.
        let mut groups: BTreeMap<std::cmp::Reverse<usize>, Vec<&AgentSummary>> = BTreeMap::new();
        for a in &self.agents {
            groups.entry(std::cmp::Reverse(a.covered)).or_default().push(a);
        }
        let rows: Vec<Vec<String>> = groups
            .values()
            .map(|g| {
                let mut names: Vec<&str> = g.iter().map(|a| a.agent.as_str()).collect();
                names.sort_unstable();
                vec![
                    names.join(", "),
                    pct(g[0].accuracy),
                    g[0].delta_vs_control_pp.map_or_else(|| "---".into(), |d| format!("{d:.1}")),
                ]
            })
            .collect();
        out.push_str("Individual agent accuracy\n");
        out.push_str(&render_table(&["Agent(s)".into(), "Accuracy".into(), "Δ vs ctrl".into()], &rows));

        out.push_str("\nEnsemble accuracy\n");
        let rows: Vec<Vec<String>> =
            self.ensembles.iter().map(|e| vec![e.configuration.clone(), pct(e.accuracy)]).collect();
        out.push_str(&render_table(&["Configuration".into(), "Accuracy".into()], &rows));
        let _ = writeln!(out, "Minimal ensemble: {}", self.minimal_ensemble.join(", "));

        out.push_str("\nShapley values\n");
        let mut by_value: Vec<&AgentSummary> = self.agents.iter().collect();
        by_value.sort_by(|a, b| b.shapley.total_cmp(&a.shapley).then(a.agent.cmp(&b.agent)));
        let rows: Vec<Vec<String>> =
            by_value.iter().map(|a| vec![a.agent.clone(), format!("{:.4}", a.shapley), pct(a.share)]).collect();
        out.push_str(&render_table(&["Agent".into(), "Value".into(), "Share".into()], &rows));

        if let Some((min, max)) = self.jaccard_extremes() {
            let _ = writeln!(
                out,
                "\nJaccard overlap: {:.2} ({}-{}) to {:.2} ({}-{})",
                min.value, min.a, min.b, max.value, max.a, max.b
            );
            let empty = self.jaccard.iter().filter(|p| p.both_empty).count();
            if empty > 0 {
                let _ = writeln!(out, "note: {empty} pairs with no coverage on either side were set to 1.0");
            }
        }
        for u in &self.unique_findings {
            let _ = writeln!(out, "Unique finding {} surfaced only by {}", u.finding, u.agent);
        }
        if let Some(s) = &self.subsets {
            let _ = writeln!(
                out,
                "\nAll {}-agent subsets: {} enumerated, {} reach full coverage ({:.1}%), median {} / {}, minimum {} / {}",
                s.k,
                s.subsets,
                s.perfect.len(),
                100.0 * s.perfect_fraction(),
                s.median,
                s.n_findings,
                s.min,
                s.n_findings
            );
            let membership = s.perfect_membership();
            let mut ranked: Vec<(&String, &usize)> = membership.iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            let listed: Vec<String> = ranked.iter().map(|(a, n)| format!("{a} {n}")).collect();
            if !listed.is_empty() {
                let _ = writeln!(out, "Membership in perfect subsets: {}", listed.join(", "));
            }
        }
        for (name, hash) in &self.prompt_hashes {
            let _ = writeln!(out, "prompt {name}: sha256 {hash}");
        }
        out
    }
}
