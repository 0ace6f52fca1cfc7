//! Ensemble coverage analysis: judged claim matching, coverage matrices and
//! cooperative-game attribution over agents.

mod analysis;
mod judge;
mod matrix;
mod report;

pub use analysis::{
    binomial, enumerate_subsets, greedy_minimal, jaccard, jaccard_pairs, jaccard_sets, shapley, union_coverage,
    JaccardPair, ShapleyResult, SubsetEnumeration, MAX_EXACT_AGENTS, SUBSET_BUDGET,
};
pub use judge::{
    divergence_map, extract_claims, judge_outputs, match_ground_truth, parse_claim_list, prompt_hashes, AgentOutput,
    ClaimCluster, DivergenceMap, Judge, JudgeFailure, JudgedCoverage, CLUSTER_CLAIMS_PROMPT, EXTRACT_CLAIMS_PROMPT,
    MATCH_FINDING_PROMPT,
};
pub use matrix::{Bits, Claim, CoverageMatrix, Finding};
pub use report::{build_ensemble_report, AgentSummary, EnsembleOptions, EnsembleReport, EnsembleRow, UniqueFinding};
