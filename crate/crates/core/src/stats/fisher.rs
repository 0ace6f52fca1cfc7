//! Two-sided Fisher exact test for 2×2 tables.

use serde::{Deserialize, Serialize};

/// Tables whose probability is within this relative distance of the observed
/// one count as "as extreme".
pub const RELATIVE_TIE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSided {
    /// Sum every table no more probable than the observed one.
    #[default]
    ProbabilityOrdering,
    /// Twice the smaller one-sided tail, capped at 1.
    Doubling,
}

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// p-value for the table `[[a, b], [c, d]]` under the default convention.
pub fn fisher_exact(a: u64, b: u64, c: u64, d: u64) -> f64 {
    fisher_exact_with(a, b, c, d, TwoSided::ProbabilityOrdering)
}

pub fn fisher_exact_with(a: u64, b: u64, c: u64, d: u64, sided: TwoSided) -> f64 {
    let n = a + b + c + d;
    if n == 0 {
        return 1.0;
    }
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let lf = ln_factorials(n);
    let ln_choose = |n: u64, k: u64| lf[n as usize] - lf[k as usize] - lf[(n - k) as usize];
    let ln_denominator = ln_choose(n, col1);
    // x is the top-left cell; it ranges over every table with these margins.
    let lo = col1.saturating_sub(row2);
    let hi = col1.min(row1);
    let prob = |x: u64| (ln_choose(row1, x) + ln_choose(row2, col1 - x) - ln_denominator).exp();
    let observed = prob(a);
    let p = match sided {
        TwoSided::ProbabilityOrdering => {
            let cutoff = observed * (1.0 + RELATIVE_TIE_TOLERANCE);
            (lo..=hi).map(prob).filter(|&p| p <= cutoff).sum::<f64>()
        }
        TwoSided::Doubling => {
            let lower: f64 = (lo..=a).map(prob).sum();
            let upper: f64 = (a..=hi).map(prob).sum();
            2.0 * lower.min(upper)
        }
    };
    p.min(1.0)
}
