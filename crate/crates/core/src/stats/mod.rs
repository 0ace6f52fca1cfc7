//! Accuracy statistics over a trial ledger.

mod bootstrap;
mod effect;
mod fisher;
mod report;
mod tables;

pub use bootstrap::{bootstrap_ci, delta_ci, BootstrapConfig, DEFAULT_RESAMPLES, DEFAULT_SEED};
pub use effect::{cohens_d, gap_normalized, pearson_r};
pub use fisher::{fisher_exact, fisher_exact_with, TwoSided, RELATIVE_TIE_TOLERANCE};
pub use report::{
    build_report, render_table, DeltaInterval, FilteredEffects, OverallAccuracy, ReportOptions, StatsReport,
    DEFAULT_CONTROL,
};
pub use tables::{
    accounting, accuracy_table, analysis_records, compliance_filter, compliance_filtered, compliance_summary,
    cross_model_correlations, effect_row, effect_rows, treated_conditions, wordcount_table, Accounting, AccuracyTable,
    CellSummary, ComplianceSummary, Correlation, EffectRow, Grouping, WordCountRow,
};
