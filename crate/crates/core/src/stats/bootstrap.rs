//! Seeded percentile bootstrap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 4680;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    /// Two-sided coverage of the interval.
    pub level: f64,
    /// Extra draws allowed for resamples on which the statistic is undefined.
    pub redraw_budget: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: DEFAULT_RESAMPLES,
            seed: DEFAULT_SEED,
            level: 0.95,
            redraw_budget: DEFAULT_RESAMPLES,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile interval for `statistic`, resampling each group independently
/// with replacement. The statistic sees the resampled groups in input order
/// and returns `None` where it is undefined; such draws are repeated.
pub fn bootstrap_ci<T, F>(groups: &[&[T]], mut statistic: F, cfg: &BootstrapConfig) -> Result<(f64, f64)>
where
    F: FnMut(&[Vec<&T>]) -> Option<f64>,
{
    if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::Data("bootstrap needs non-empty groups".into()));
    }
    if cfg.resamples == 0 || !(0.0..1.0).contains(&cfg.level) {
        return Err(Error::Config("bootstrap needs resamples > 0 and a level in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draws: Vec<Vec<&T>> = groups.iter().map(|g| Vec::with_capacity(g.len())).collect();
    let mut stats = Vec::with_capacity(cfg.resamples);
    let mut redraws = 0usize;
    while stats.len() < cfg.resamples {
        for (draw, group) in draws.iter_mut().zip(groups) {
            draw.clear();
            draw.extend((0..group.len()).map(|_| &group[rng.random_range(0..group.len())]));
        }
        match statistic(&draws) {
            Some(v) if v.is_finite() => stats.push(v),
            _ => {
                redraws += 1;
                if redraws > cfg.redraw_budget {
                    return Err(Error::Undefined("bootstrap statistic undefined on too many resamples"));
                }
            }
        }
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok((quantile(&stats, tail), quantile(&stats, 1.0 - tail)))
}

fn rate(xs: &[&bool]) -> f64 {
    xs.iter().filter(|&&&x| x).count() as f64 / xs.len() as f64
}

/// Interval for the accuracy difference treated − control, in percentage points.
pub fn delta_ci(control: &[bool], treated: &[bool], cfg: &BootstrapConfig) -> Result<(f64, f64)> {
    bootstrap_ci(&[control, treated], |g| Some(100.0 * (rate(&g[1]) - rate(&g[0]))), cfg)
}
