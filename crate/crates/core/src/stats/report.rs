//! Full statistics report: JSON-serializable and renderable as text tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bootstrap::{delta_ci, BootstrapConfig};
use super::fisher::TwoSided;
use super::tables::*;
use crate::error::Result;
use crate::extraction::Outcome;
use crate::runner::{TaskType, TrialRecord};

pub const DEFAULT_CONTROL: &str = "control";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    pub control: String,
    pub fisher: TwoSided,
    pub bootstrap: BootstrapConfig,
    /// Plan size when the ledger does not hold every planned key.
    pub planned: Option<usize>,
    /// Drop non-compliant treated trials from the main tables.
    pub compliance_only: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            control: DEFAULT_CONTROL.into(),
            fisher: TwoSided::default(),
            bootstrap: BootstrapConfig::default(),
            planned: None,
            compliance_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaInterval {
    pub task_type: TaskType,
    pub condition: String,
    pub lo_pp: f64,
    pub hi_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallAccuracy {
    pub condition: String,
    pub n_scoreable: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredEffects {
    pub condition: String,
    pub retained: usize,
    pub effects: Vec<EffectRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub options: ReportOptions,
    pub accounting: Accounting,
    pub overall: Vec<OverallAccuracy>,
    pub pooled: Vec<CellSummary>,
    pub by_model: Vec<CellSummary>,
    pub effects: Vec<EffectRow>,
    pub intervals: Vec<DeltaInterval>,
    pub model_effects: Vec<EffectRow>,
    pub correlations: Vec<Correlation>,
    pub compliance: Vec<ComplianceSummary>,
    pub compliance_filtered: Vec<FilteredEffects>,
    pub word_counts: Vec<WordCountRow>,
    pub notices: Vec<String>,
}

fn outcomes(records: &[TrialRecord], task: TaskType, condition: &str) -> Vec<bool> {
    records
        .iter()
        .filter(|r| r.task_type == task && r.key.condition == condition && r.is_scoreable())
        .map(|r| r.outcome == Outcome::Correct)
        .collect()
}

pub fn build_report(records: &[TrialRecord], opts: &ReportOptions) -> Result<StatsReport> {
    let control = opts.control.as_str();
    let accounting = accounting(records, opts.planned);
    let full_table = accuracy_table(records, Grouping::Pooled);
    let treated = treated_conditions(&full_table, control);

    let mut filtered_records = records.to_vec();
    let mut compliance = Vec::new();
    let mut filtered_sections = Vec::new();
    for cond in &treated {
        compliance.push(compliance_summary(records, cond));
        let subset = compliance_filtered(records, cond);
        let retained = compliance_filter(records, cond).len();
        let effects = effect_rows(&accuracy_table(&subset, Grouping::Pooled), control, opts.fisher)
            .into_iter()
            .filter(|r| &r.condition == cond)
            .collect();
        filtered_sections.push(FilteredEffects { condition: cond.clone(), retained, effects });
        if opts.compliance_only {
            filtered_records = compliance_filtered(&filtered_records, cond);
        }
    }
    let working: &[TrialRecord] = if opts.compliance_only { &filtered_records } else { records };

    let pooled = accuracy_table(working, Grouping::Pooled);
    let by_model = accuracy_table(working, Grouping::ByModel);
    let effects = effect_rows(&pooled, control, opts.fisher);
    let model_effects = effect_rows(&by_model, control, opts.fisher);

    let mut intervals = Vec::with_capacity(effects.len());
    let mut notices = pooled.notices.clone();
    notices.extend(by_model.notices.iter().cloned());
    for row in &effects {
        let ctrl = outcomes(working, row.task_type, control);
        let trt = outcomes(working, row.task_type, &row.condition);
        match delta_ci(&ctrl, &trt, &opts.bootstrap) {
            Ok((lo_pp, hi_pp)) => intervals.push(DeltaInterval {
                task_type: row.task_type,
                condition: row.condition.clone(),
                lo_pp,
                hi_pp,
            }),
            Err(e) => notices.push(format!("no interval for {}/{}: {e}", row.task_type, row.condition)),
        }
    }

    let mut totals: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for c in &pooled.cells {
        let t = totals.entry(c.condition.as_str()).or_default();
        t.0 += c.n_scoreable;
        t.1 += c.n_correct;
    }
    let overall = totals
        .into_iter()
        .map(|(condition, (n, k))| OverallAccuracy {
            condition: condition.to_owned(),
            n_scoreable: n,
            n_correct: k,
            accuracy: k as f64 / n as f64,
        })
        .collect();

    Ok(StatsReport {
        options: opts.clone(),
        accounting,
        overall,
        correlations: cross_model_correlations(&model_effects),
        word_counts: wordcount_table(working, control),
        pooled: pooled.cells,
        by_model: by_model.cells,
        effects,
        intervals,
        model_effects,
        compliance,
        compliance_filtered: filtered_sections,
        notices,
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn pp(x: f64) -> String {
    format!("{:+.1} pp", x)
}

fn p_label(p: f64) -> String {
    let stars = match p {
        p if p < 0.001 => return "<0.001***".into(),
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        _ => "",
    };
    format!("{p:.3}{stars}")
}

/// Aligned plain-text table; the first column is left-aligned.
pub fn render_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        s.trim_end().to_owned() + "\n"
    };
    let mut out = line(headers);
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

impl StatsReport {
    fn treated(&self) -> Vec<String> {
        let mut names: Vec<String> =
            self.overall.iter().map(|o| o.condition.clone()).filter(|c| *c != self.options.control).collect();
        names.dedup();
        names
    }

    fn pooled_cell(&self, task: TaskType, cond: &str) -> Option<&CellSummary> {
        self.pooled.iter().find(|c| c.task_type == task && c.condition == cond)
    }

    pub fn accuracy_text(&self) -> String {
        let control = &self.options.control;
        let treated = self.treated();
        let mut headers = vec!["Task".to_owned(), control.clone()];
        for t in &treated {
            headers.extend([t.clone(), format!("Δ({t})"), format!("p({t})")]);
        }
        let mut rows = Vec::new();
        for task in TaskType::ALL {
            let Some(ctrl) = self.pooled_cell(task, control) else { continue };
            let mut row = vec![task.label().to_owned(), pct(ctrl.accuracy)];
            for t in &treated {
                match self.effects.iter().find(|e| e.task_type == task && &e.condition == t) {
                    Some(e) => row.extend([pct(e.treated_acc), pp(e.delta_pp), p_label(e.p_value)]),
                    None => row.extend(["---".into(), "---".into(), "---".into()]),
                }
            }
            rows.push(row);
        }
        let mut overall = vec!["Overall".to_owned()];
        let acc = |c: &str| self.overall.iter().find(|o| o.condition == c).map(|o| pct(o.accuracy));
        overall.push(acc(control).unwrap_or_else(|| "---".into()));
        for t in &treated {
            overall.extend([acc(t).unwrap_or_else(|| "---".into()), String::new(), String::new()]);
        }
        rows.push(overall);
        render_table(&headers, &rows)
    }

    pub fn model_effects_text(&self) -> String {
        let treated = self.treated();
        let mut headers = vec!["Model".to_owned(), "Task".to_owned(), "Ctrl".to_owned()];
        for t in &treated {
            headers.extend([format!("Δ({t})"), format!("Gap%({t})")]);
        }
        let mut grouped: BTreeMap<(&str, TaskType), Vec<&EffectRow>> = BTreeMap::new();
        for e in &self.model_effects {
            if let Some(m) = &e.model {
                grouped.entry((m.as_str(), e.task_type)).or_default().push(e);
            }
        }
        let rows: Vec<Vec<String>> = grouped
            .into_iter()
            .map(|((model, task), effects)| {
                let mut row = vec![model.to_owned(), task.label().to_owned(), pct(effects[0].control_acc)];
                for t in &treated {
                    match effects.iter().find(|e| &e.condition == t) {
                        Some(e) => {
                            row.extend([pp(e.delta_pp), e.gap_pct.map_or_else(|| "---".into(), |g| format!("{g:.1}%"))])
                        }
                        None => row.extend(["---".into(), "---".into()]),
                    }
                }
                row
            })
            .collect();
        render_table(&headers, &rows)
    }

    pub fn word_count_text(&self) -> String {
        let control = &self.options.control;
        let treated = self.treated();
        let mut headers = vec!["Task".to_owned(), control.clone()];
        for t in &treated {
            headers.extend([t.clone(), format!("Δ%({t})")]);
        }
        let rows: Vec<Vec<String>> = self
            .word_counts
            .iter()
            .map(|w| {
                let mean = |c: &str| w.means.get(c).map_or_else(|| "---".into(), |m| format!("{m:.0}"));
                let mut row = vec![w.task_type.label().to_owned(), mean(control)];
                for t in &treated {
                    let delta = w.delta_pct.get(t).map_or_else(|| "---".into(), |d| format!("{d:+}%"));
                    row.extend([mean(t), delta]);
                }
                row
            })
            .collect();
        render_table(&headers, &rows)
    }

    pub fn render_text(&self) -> String {
        let a = &self.accounting;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Trials: {} planned, {} completed, {} parseable, {} scoreable ({} errors)\n",
            a.planned, a.completed, a.parseable, a.scoreable, a.errors
        );
        out.push_str("Accuracy by task (all models pooled)\n");
        out.push_str(&self.accuracy_text());
        if !self.intervals.is_empty() {
            out.push_str("\nBootstrap 95% intervals for deltas\n");
            let rows: Vec<Vec<String>> = self
                .intervals
                .iter()
                .map(|i| {
                    vec![
                        i.task_type.label().to_owned(),
                        i.condition.clone(),
                        format!("[{:+.1}, {:+.1}] pp", i.lo_pp, i.hi_pp),
                    ]
                })
                .collect();
            out.push_str(&render_table(&["Task".into(), "Condition".into(), "CI".into()], &rows));
        }
        out.push_str("\nModel-specific effects\n");
        out.push_str(&self.model_effects_text());
        if !self.correlations.is_empty() {
            out.push_str("\nCross-model correlation of per-task deltas\n");
            let rows: Vec<Vec<String>> = self
                .correlations
                .iter()
                .map(|c| {
                    vec![
                        c.condition.clone(),
                        format!("{} vs {}", c.model_a, c.model_b),
                        c.n_tasks.to_string(),
                        c.r.map_or_else(|| "undefined".into(), |r| format!("{r:.2}")),
                    ]
                })
                .collect();
            out.push_str(&render_table(&["Condition".into(), "Models".into(), "Tasks".into(), "r".into()], &rows));
        }
        if !self.compliance.is_empty() {
            out.push_str("\nCompliance\n");
            let rows: Vec<Vec<String>> = self
                .compliance
                .iter()
                .map(|c| {
                    vec![
                        c.condition.clone(),
                        c.trials.to_string(),
                        c.compliant.to_string(),
                        pct(c.compliance_rate),
                        format!("{:.2}", c.mean_violations),
                    ]
                })
                .collect();
            out.push_str(&render_table(
                &["Condition".into(), "Trials".into(), "Compliant".into(), "Rate".into(), "Mean violations".into()],
                &rows,
            ));
        }
        for f in &self.compliance_filtered {
            let _ = writeln!(out, "\nCompliant-only {}: {} trials retained", f.condition, f.retained);
            let rows: Vec<Vec<String>> = f
                .effects
                .iter()
                .map(|e| {
                    vec![e.task_type.label().to_owned(), e.n_treated.to_string(), pp(e.delta_pp), p_label(e.p_value)]
                })
                .collect();
            out.push_str(&render_table(&["Task".into(), "N".into(), "Δ".into(), "p".into()], &rows));
        }
        out.push_str("\nAverage word count by condition\n");
        out.push_str(&self.word_count_text());
        for n in &self.notices {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}
