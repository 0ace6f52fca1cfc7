//! Coverage-game analytics: union coverage, Shapley values, Jaccard overlap,
//! greedy minimal ensembles and exhaustive k-subset enumeration.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::matrix::{Bits, CoverageMatrix};
use crate::error::{Error, Result};

/// Largest agent count for exact Shapley enumeration.
pub const MAX_EXACT_AGENTS: usize = 24;
/// Largest number of k-subsets `enumerate_subsets` will visit.
pub const SUBSET_BUDGET: u128 = 10_000_000;

fn resolve(matrix: &CoverageMatrix, subset: &[&str]) -> Result<Vec<usize>> {
    subset
        .iter()
        .map(|name| matrix.agent_index(name).ok_or_else(|| Error::Data(format!("unknown agent '{name}'"))))
        .collect()
}

/// Fraction of findings covered by any member of `subset`.
pub fn union_coverage(matrix: &CoverageMatrix, subset: &[&str]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::Data("union coverage needs a non-empty subset".into()));
    }
    let idx = resolve(matrix, subset)?;
    Ok(matrix.union_bits(idx).count() as f64 / matrix.n_findings() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub agents: Vec<String>,
    pub values: Vec<f64>,
    /// Values normalized by their sum; all zero when nothing is covered.
    pub shares: Vec<f64>,
}

impl ShapleyResult {
    pub fn value(&self, agent: &str) -> Option<f64> {
        self.agents.iter().position(|a| a == agent).map(|i| self.values[i])
    }

    pub fn share(&self, agent: &str) -> Option<f64> {
        self.agents.iter().position(|a| a == agent).map(|i| self.shares[i])
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact Shapley values of the game v(S) = number of findings covered by S.
///
/// Tabulates v over all 2^n coalitions by walking them in Gray-code order,
/// then sums weighted marginal contributions.
pub fn shapley(matrix: &CoverageMatrix) -> Result<ShapleyResult> {
    let n = matrix.n_agents();
    if n > MAX_EXACT_AGENTS {
        return Err(Error::TooManyAgents { max: MAX_EXACT_AGENTS, got: n });
    }
    let m = matrix.n_findings();
    let covers: Vec<Vec<usize>> = (0..n).map(|a| (0..m).filter(|&j| matrix.bits(a).get(j)).collect()).collect();

    let size = 1usize << n;
    let mut v = vec![0u32; size];
    let mut count = vec![0u32; m];
    let mut covered = 0u32;
    let mut mask = 0usize;
    for step in 1..size {
        let agent = step.trailing_zeros() as usize;
        mask ^= 1 << agent;
        if mask & (1 << agent) != 0 {
            for &j in &covers[agent] {
                count[j] += 1;
                covered += u32::from(count[j] == 1);
            }
        } else {
            for &j in &covers[agent] {
                count[j] -= 1;
                covered -= u32::from(count[j] == 0);
            }
        }
        v[mask] = covered;
    }

    // Weight of a coalition of size s not containing the player: s!(n-s-1)!/n!.
    let weight: Vec<f64> = (0..n).map(|s| 1.0 / (n as f64 * binomial_f64(n - 1, s))).collect();
    let mut values = vec![0.0; n];
    for s in 0..size {
        let members = s.count_ones() as usize;
        if members == n {
            continue;
        }
        let (base, w) = (v[s], weight[members]);
        let mut free = !s & (size - 1);
        while free != 0 {
            let i = free.trailing_zeros() as usize;
            free &= free - 1;
            let gain = v[s | (1 << i)] - base;
            if gain != 0 {
                values[i] += w * gain as f64;
            }
        }
    }
    let total: f64 = values.iter().sum();
    let shares = values.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
    Ok(ShapleyResult { agents: matrix.agents().to_vec(), values, shares })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaccardPair {
    pub a: String,
    pub b: String,
    pub value: f64,
    /// Both sets empty; the value is defined as 1.0.
    pub both_empty: bool,
}

/// Jaccard overlap of arbitrary named sets, for every unordered pair.
pub fn jaccard_sets<T: Ord>(names: &[String], sets: &[BTreeSet<T>]) -> Vec<JaccardPair> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let inter = sets[i].intersection(&sets[j]).count();
            let union = sets[i].union(&sets[j]).count();
            out.push(JaccardPair {
                a: names[i].clone(),
                b: names[j].clone(),
                value: if union == 0 { 1.0 } else { inter as f64 / union as f64 },
                both_empty: union == 0,
            });
        }
    }
    out
}

/// Jaccard overlap of covered-finding sets for every unordered agent pair.
pub fn jaccard_pairs(matrix: &CoverageMatrix) -> Vec<JaccardPair> {
    let n = matrix.n_agents();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (matrix.bits(i), matrix.bits(j));
            let union = a.union_count(b);
            out.push(JaccardPair {
                a: matrix.agents()[i].clone(),
                b: matrix.agents()[j].clone(),
                value: if union == 0 { 1.0 } else { a.intersection_count(b) as f64 / union as f64 },
                both_empty: union == 0,
            });
        }
    }
    out
}

/// Value for an arbitrary pair, including self-pairs.
pub fn jaccard(matrix: &CoverageMatrix, a: &str, b: &str) -> Result<f64> {
    let idx = resolve(matrix, &[a, b])?;
    let (x, y) = (matrix.bits(idx[0]), matrix.bits(idx[1]));
    let union = x.union_count(y);
    Ok(if union == 0 { 1.0 } else { x.intersection_count(y) as f64 / union as f64 })
}

/// Greedy ensemble: repeatedly add the agent with the largest coverage gain,
/// breaking ties by higher Shapley value and then by name, until the union
/// matches the full ensemble. Agents come back in addition order.
pub fn greedy_minimal(matrix: &CoverageMatrix, shapley: &ShapleyResult) -> Result<Vec<String>> {
    if shapley.agents != matrix.agents() {
        return Err(Error::Data("Shapley result was computed on a different matrix".into()));
    }
    let target = matrix.union_bits(0..matrix.n_agents()).count();
    let mut covered = Bits::zeros(matrix.n_findings());
    let mut chosen: Vec<usize> = Vec::new();
    while covered.count() < target {
        let best = (0..matrix.n_agents())
            .filter(|i| !chosen.contains(i))
            .max_by(|&i, &j| {
                covered
                    .gain(matrix.bits(i))
                    .cmp(&covered.gain(matrix.bits(j)))
                    .then(shapley.values[i].total_cmp(&shapley.values[j]))
                    .then(matrix.agents()[j].cmp(&matrix.agents()[i]))
            })
            .expect("an uncovered finding implies an unchosen agent");
        covered.union_with(matrix.bits(best));
        chosen.push(best);
    }
    Ok(chosen.into_iter().map(|i| matrix.agents()[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetEnumeration {
    pub k: usize,
    pub subsets: u64,
    /// Findings covered by the full ensemble; a subset is perfect when it
    /// reaches this.
    pub full_coverage: usize,
    pub n_findings: usize,
    /// Coverage count → number of subsets.
    pub distribution: BTreeMap<usize, u64>,
    pub min: usize,
    pub max: usize,
    pub median: f64,
    pub perfect: Vec<Vec<String>>,
}

impl SubsetEnumeration {
    pub fn perfect_fraction(&self) -> f64 {
        self.perfect.len() as f64 / self.subsets as f64
    }

    /// How many perfect subsets contain each agent.
    pub fn perfect_membership(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for subset in &self.perfect {
            for a in subset {
                *counts.entry(a.clone()).or_insert(0) += 1;
            }
        }
        counts
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Visits every k-subset of agents and tabulates coverage.
pub fn enumerate_subsets(matrix: &CoverageMatrix, k: usize) -> Result<SubsetEnumeration> {
    let n = matrix.n_agents();
    if k == 0 || k > n {
        return Err(Error::Config(format!("subset size {k} must be between 1 and {n}")));
    }
    let count = binomial(n, k);
    if count > SUBSET_BUDGET {
        return Err(Error::Budget { n, k, count });
    }
    let full_coverage = matrix.union_bits(0..n).count();
    let mut distribution = BTreeMap::new();
    let mut perfect = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let c = matrix.union_bits(idx.iter().copied()).count();
        *distribution.entry(c).or_insert(0u64) += 1;
        if c == full_coverage {
            perfect.push(idx.iter().map(|&i| matrix.agents()[i].clone()).collect());
        }
        // Advance to the next combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { break };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
    let subsets = count as u64;
    let nth = |target: u64| {
        let mut seen = 0;
        for (&c, &m) in &distribution {
            seen += m;
            if seen > target {
                return c;
            }
        }
        unreachable!("target below total")
    };
    let median =
        if subsets % 2 == 1 { nth(subsets / 2) as f64 } else { (nth(subsets / 2 - 1) + nth(subsets / 2)) as f64 / 2.0 };
    Ok(SubsetEnumeration {
        k,
        subsets,
        full_coverage,
        n_findings: matrix.n_findings(),
        min: *distribution.keys().next().expect("at least one subset"),
        max: *distribution.keys().next_back().expect("at least one subset"),
        median,
        distribution,
        perfect,
    })
}
