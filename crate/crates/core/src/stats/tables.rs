//! Grouped summaries computed from ledger records.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::effect::{cohens_d, gap_normalized, pearson_r};
use super::fisher::{fisher_exact_with, TwoSided};
use crate::extraction::Outcome;
use crate::runner::{LedgerSnapshot, TaskType, TrialRecord};

/// One record per trial key, as analysis expects.
pub fn analysis_records(snapshot: &LedgerSnapshot) -> Vec<TrialRecord> {
    snapshot.latest().into_iter().cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    Pooled,
    ByModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub task_type: TaskType,
    pub condition: String,
    /// `None` for pooled cells.
    pub model: Option<String>,
    pub n_scoreable: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    /// Completed trials without an extractable answer.
    pub n_unscored: usize,
    pub n_errors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub cells: Vec<CellSummary>,
    pub notices: Vec<String>,
}

type CellKey = (TaskType, String, Option<String>);

impl AccuracyTable {
    pub fn get(&self, task: TaskType, condition: &str, model: Option<&str>) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.task_type == task && c.condition == condition && c.model.as_deref() == model)
    }
}

pub fn accuracy_table(records: &[TrialRecord], grouping: Grouping) -> AccuracyTable {
    #[derive(Default)]
    struct Acc {
        scoreable: usize,
        correct: usize,
        unscored: usize,
        errors: usize,
    }
    let mut groups: BTreeMap<CellKey, Acc> = BTreeMap::new();
    for r in records {
        let model = match grouping {
            Grouping::Pooled => None,
            Grouping::ByModel => Some(r.key.model.clone()),
        };
        let acc = groups.entry((r.task_type, r.key.condition.clone(), model)).or_default();
        if !r.is_ok() {
            acc.errors += 1;
        } else if r.is_scoreable() {
            acc.scoreable += 1;
            acc.correct += usize::from(r.outcome == Outcome::Correct);
        } else {
            acc.unscored += 1;
        }
    }
    let mut table = AccuracyTable::default();
    for ((task_type, condition, model), acc) in groups {
        if acc.scoreable == 0 {
            let mut label = format!("{task_type}/{condition}");
            if let Some(m) = &model {
                label.push('/');
                label.push_str(m);
            }
            table.notices.push(format!(
                "omitted {label}: no scoreable trials ({} unscored, {} errors)",
                acc.unscored, acc.errors
            ));
            continue;
        }
        table.cells.push(CellSummary {
            task_type,
            condition,
            model,
            n_scoreable: acc.scoreable,
            n_correct: acc.correct,
            accuracy: acc.correct as f64 / acc.scoreable as f64,
            n_unscored: acc.unscored,
            n_errors: acc.errors,
        });
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Accounting {
    pub planned: usize,
    pub completed: usize,
    pub parseable: usize,
    pub scoreable: usize,
    pub errors: usize,
}

/// Counts trials down the chain planned ⊇ completed ⊇ parseable ⊇ scoreable.
/// Without an explicit plan size every distinct key counts as planned.
pub fn accounting(records: &[TrialRecord], planned: Option<usize>) -> Accounting {
    let mut a = Accounting { planned: planned.unwrap_or(records.len()), ..Accounting::default() };
    for r in records {
        if !r.is_ok() {
            a.errors += 1;
            continue;
        }
        a.completed += 1;
        a.parseable += usize::from(r.is_parseable());
        a.scoreable += usize::from(r.is_scoreable());
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub task_type: TaskType,
    pub model: Option<String>,
    pub condition: String,
    pub control_acc: f64,
    pub treated_acc: f64,
    pub n_control: usize,
    pub n_treated: usize,
    pub delta_pp: f64,
    pub p_value: f64,
    /// `None` where the pooled proportion sits at 0 or 1.
    pub d: Option<f64>,
    /// Only for improvements over a baseline below ceiling.
    pub gap_pct: Option<f64>,
}

pub fn effect_row(control: &CellSummary, treated: &CellSummary, sided: TwoSided) -> EffectRow {
    let delta_pp = 100.0 * (treated.accuracy - control.accuracy);
    let p_value = fisher_exact_with(
        treated.n_correct as u64,
        (treated.n_scoreable - treated.n_correct) as u64,
        control.n_correct as u64,
        (control.n_scoreable - control.n_correct) as u64,
        sided,
    );
    let d = cohens_d(treated.accuracy, treated.n_scoreable as u64, control.accuracy, control.n_scoreable as u64).ok();
    let gap_pct =
        if control.accuracy < 1.0 && delta_pp > 0.0 { gap_normalized(delta_pp, control.accuracy).ok() } else { None };
    EffectRow {
        task_type: control.task_type,
        model: control.model.clone(),
        condition: treated.condition.clone(),
        control_acc: control.accuracy,
        treated_acc: treated.accuracy,
        n_control: control.n_scoreable,
        n_treated: treated.n_scoreable,
        delta_pp,
        p_value,
        d,
        gap_pct,
    }
}

/// Conditions other than `control`, in name order.
pub fn treated_conditions(table: &AccuracyTable, control: &str) -> Vec<String> {
    let set: BTreeSet<&str> = table.cells.iter().map(|c| c.condition.as_str()).filter(|c| *c != control).collect();
    set.into_iter().map(str::to_owned).collect()
}

/// Every treated cell paired with the control cell of the same task and model.
pub fn effect_rows(table: &AccuracyTable, control: &str, sided: TwoSided) -> Vec<EffectRow> {
    let mut rows = Vec::new();
    for treated in table.cells.iter().filter(|c| c.condition != control) {
        if let Some(ctrl) = table.get(treated.task_type, control, treated.model.as_deref()) {
            rows.push(effect_row(ctrl, treated, sided));
        }
    }
    rows.sort_by(|a, b| (&a.model, a.task_type, &a.condition).cmp(&(&b.model, b.task_type, &b.condition)));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub condition: String,
    pub model_a: String,
    pub model_b: String,
    pub n_tasks: usize,
    pub r: Option<f64>,
}

/// Pearson r between two models' per-task deltas for each treated condition,
/// over the tasks both models have.
pub fn cross_model_correlations(by_model: &[EffectRow]) -> Vec<Correlation> {
    let mut deltas: BTreeMap<(&str, &str), BTreeMap<TaskType, f64>> = BTreeMap::new();
    for row in by_model {
        if let Some(model) = &row.model {
            deltas.entry((row.condition.as_str(), model.as_str())).or_default().insert(row.task_type, row.delta_pp);
        }
    }
    let mut out = Vec::new();
    let keys: Vec<_> = deltas.keys().copied().collect();
    for (i, &(cond, a)) in keys.iter().enumerate() {
        for &(cond_b, b) in &keys[i + 1..] {
            if cond_b != cond {
                continue;
            }
            let (da, db) = (&deltas[&(cond, a)], &deltas[&(cond, b)]);
            let (x, y): (Vec<f64>, Vec<f64>) = da.iter().filter_map(|(t, v)| db.get(t).map(|w| (*v, *w))).unzip();
            out.push(Correlation {
                condition: cond.to_owned(),
                model_a: a.to_owned(),
                model_b: b.to_owned(),
                n_tasks: x.len(),
                r: pearson_r(&x, &y).ok(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceSummary {
    pub condition: String,
    pub trials: usize,
    pub compliant: usize,
    pub compliance_rate: f64,
    pub mean_violations: f64,
}

/// Completed trials of `condition` with no constraint violations.
pub fn compliance_filter<'a>(records: &'a [TrialRecord], condition: &str) -> Vec<&'a TrialRecord> {
    records.iter().filter(|r| r.key.condition == condition && r.is_ok() && r.violations == 0).collect()
}

/// Ledger with the non-compliant trials of `condition` removed.
pub fn compliance_filtered(records: &[TrialRecord], condition: &str) -> Vec<TrialRecord> {
    records.iter().filter(|r| r.key.condition != condition || (r.is_ok() && r.violations == 0)).cloned().collect()
}

pub fn compliance_summary(records: &[TrialRecord], condition: &str) -> ComplianceSummary {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.key.condition == condition && r.is_ok()).collect();
    let compliant = ok.iter().filter(|r| r.violations == 0).count();
    let total: usize = ok.iter().map(|r| r.violations).sum();
    let ratio = |num: f64| if ok.is_empty() { 0.0 } else { num / ok.len() as f64 };
    ComplianceSummary {
        condition: condition.to_owned(),
        trials: ok.len(),
        compliant,
        compliance_rate: ratio(compliant as f64),
        mean_violations: ratio(total as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCountRow {
    pub task_type: TaskType,
    pub means: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    /// Rounded percent change against control, per treated condition.
    pub delta_pct: BTreeMap<String, i64>,
}

pub fn wordcount_table(records: &[TrialRecord], control: &str) -> Vec<WordCountRow> {
    let mut sums: BTreeMap<TaskType, BTreeMap<String, (usize, usize)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let e = sums.entry(r.task_type).or_default().entry(r.key.condition.clone()).or_default();
        e.0 += r.word_count;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(task_type, per_cond)| {
            let means: BTreeMap<String, f64> =
                per_cond.iter().map(|(c, &(sum, n))| (c.clone(), sum as f64 / n as f64)).collect();
            let delta_pct = match means.get(control) {
                Some(&base) if base > 0.0 => means
                    .iter()
                    .filter(|(c, _)| c.as_str() != control)
                    .map(|(c, &m)| (c.clone(), (100.0 * (m - base) / base).round() as i64))
                    .collect(),
                _ => BTreeMap::new(),
            };
            WordCountRow {
                task_type,
                counts: per_cond.into_iter().map(|(c, (_, n))| (c, n)).collect(),
                means,
                delta_pct,
            }
        })
        .collect()
}
