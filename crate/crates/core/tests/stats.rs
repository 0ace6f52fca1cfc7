use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umwelt_core::runner::TaskType;
use umwelt_core::stats::*;
use umwelt_core::synth;

/// Exact integer binomial coefficient.
fn choose(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Enumerates every table with the observed margins using exact integer
/// weights; ties use the same relative tolerance as the definition.
fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    if n == 0 {
        return 1.0;
    }
    let weight = |x: u64| choose(r1, x) * choose(r2, c1 - x);
    let observed = weight(a);
    let lo = c1.saturating_sub(r2);
    let hi = c1.min(r1);
    let tail: u128 = (lo..=hi).map(weight).filter(|&w| w * 10_000_000 <= observed * 10_000_001).sum();
    (tail as f64 / choose(n, c1) as f64).min(1.0)
}

#[test]
fn fisher_matches_oracle_on_small_tables() {
    for a in 0..=12u64 {
        for b in 0..=12 {
            for c in 0..=12 {
                for d in 0..=12 {
                    let got = fisher_exact(a, b, c, d);
                    let want = fisher_oracle(a, b, c, d);
                    assert!((got - want).abs() < 1e-12, "({a},{b},{c},{d}): {got} vs {want}");
                }
            }
        }
    }
    assert!((fisher_exact(10, 0, 0, 10) - fisher_oracle(10, 0, 0, 10)).abs() < 1e-15);
}

proptest! {
    #[test]
    fn fisher_swap_invariant(a in 0u64..40, b in 0u64..40, c in 0u64..40, d in 0u64..40) {
        let p = fisher_exact(a, b, c, d);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((fisher_exact(d, c, b, a) - p).abs() < 1e-12);
        prop_assert!((fisher_exact(c, d, a, b) - p).abs() < 1e-12);
    }

    #[test]
    fn d_zero_at_equality(p in 0.01f64..0.99, n1 in 1u64..300, n0 in 1u64..300) {
        prop_assert_eq!(cohens_d(p, n1, p, n0).unwrap(), 0.0);
    }
}

#[test]
fn pearson_against_exact_arithmetic() {
    // Values in tenths so the oracle can work in exact integers.
    let xs: [i64; 7] = [35, -17, 62, 8, -44, 91, 23];
    let ys: [i64; 7] = [12, 40, -5, 33, 27, -61, 4];
    let n = 7i128;
    let (sx, sy): (i128, i128) = (xs.iter().map(|&v| v as i128).sum(), ys.iter().map(|&v| v as i128).sum());
    let sxy: i128 = xs.iter().zip(&ys).map(|(&a, &b)| (a * b) as i128).sum::<i128>() * n - sx * sy;
    let sxx: i128 = xs.iter().map(|&a| (a * a) as i128).sum::<i128>() * n - sx * sx;
    let syy: i128 = ys.iter().map(|&b| (b * b) as i128).sum::<i128>() * n - sy * sy;
    let oracle = sxy as f64 / ((sxx as f64) * (syy as f64)).sqrt();
    let x: Vec<f64> = xs.iter().map(|&v| v as f64 / 10.0).collect();
    let y: Vec<f64> = ys.iter().map(|&v| v as f64 / 10.0).collect();
    let r = pearson_r(&x, &y).unwrap();
    assert!((r - oracle).abs() < 1e-12, "{r} vs {oracle}");
}

#[test]
fn bootstrap_interval_coverage() {
    let (p0, p1, n) = (0.65, 0.8, 120);
    let truth = 100.0 * (p1 - p0);
    let mut gen = ChaCha8Rng::seed_from_u64(99);
    let cfg = BootstrapConfig { resamples: 1000, ..Default::default() };
    let mut covered = 0;
    for rep in 0..200 {
        let control: Vec<bool> = (0..n).map(|_| gen.random_bool(p0)).collect();
        let treated: Vec<bool> = (0..n).map(|_| gen.random_bool(p1)).collect();
        let (lo, hi) = delta_ci(&control, &treated, &BootstrapConfig { seed: rep, ..cfg }).unwrap();
        covered += usize::from(lo <= truth && truth <= hi);
    }
    assert!(covered >= 186, "covered {covered} of 200");
}

#[test]
fn ethical_interval_on_reconstructed_counts() {
    let ledger = synth::pooled_ledger();
    let outcomes = |cond: &str| -> Vec<bool> {
        ledger
            .iter()
            .filter(|r| r.task_type == TaskType::EthicalDilemmas && r.key.condition == cond)
            .map(|r| r.outcome == umwelt_core::Outcome::Correct)
            .collect()
    };
    let (lo, hi) = delta_ci(&outcomes("control"), &outcomes("no_have"), &BootstrapConfig::default()).unwrap();
    assert!((lo - 12.1).abs() <= 1.0 && (hi - 26.2).abs() <= 1.0, "[{lo}, {hi}]");
}

#[test]
fn pooled_report_reproduces_accuracy_table() {
    let ledger = synth::pooled_ledger();
    let opts =
        ReportOptions { bootstrap: BootstrapConfig { resamples: 500, ..Default::default() }, ..Default::default() };
    let report = build_report(&ledger, &opts).unwrap();
    assert_eq!(report.accounting.scoreable, 4344);
    let acc = |cond: &str| report.overall.iter().find(|o| o.condition == cond).unwrap().accuracy * 100.0;
    assert!((acc("control") - 83.5).abs() <= 0.25);
    assert!((acc("no_have") - 88.6).abs() <= 0.25);
    assert!((acc("e_prime") - 85.4).abs() <= 0.25);

    let expected = [
        (TaskType::EthicalDilemmas, 76.6, 95.6, 92.1),
        (TaskType::Classification, 93.0, 99.6, 96.2),
        (TaskType::EpistemicCalibration, 68.7, 76.1, 63.0),
        (TaskType::CausalReasoning, 76.7, 81.5, 90.8),
        (TaskType::MathWordProblems, 92.5, 93.9, 92.8),
        (TaskType::AnalogicalReasoning, 76.2, 74.9, 73.2),
        (TaskType::Syllogisms, 100.0, 97.9, 96.6),
    ];
    for (task, ctrl, nh, ep) in expected {
        for (cond, want) in [("control", ctrl), ("no_have", nh), ("e_prime", ep)] {
            let cell = report.pooled.iter().find(|c| c.task_type == task && c.condition == cond).unwrap();
            assert!((cell.accuracy * 100.0 - want).abs() <= 0.05 + 1e-9, "{task}/{cond}: {}", cell.accuracy);
        }
    }
    let p =
        |task, cond: &str| report.effects.iter().find(|e| e.task_type == task && e.condition == cond).unwrap().p_value;
    assert!(p(TaskType::EthicalDilemmas, "no_have") < 0.001);
    assert!(p(TaskType::EthicalDilemmas, "e_prime") < 0.001);
    assert!(p(TaskType::Classification, "no_have") < 0.001);
    assert!(p(TaskType::CausalReasoning, "e_prime") < 0.001);
    assert!((p(TaskType::Syllogisms, "e_prime") - 0.015).abs() < 0.0015);
    assert!(p(TaskType::Classification, "e_prime") > 0.05);

    let text = report.render_text();
    assert!(text.contains("Ethical dilemmas"));
    assert!(text.contains("76.6%"));
    assert!(text.contains("<0.001***"));
    let json = serde_json::to_string(&report).unwrap();
    let back: StatsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.accounting, report.accounting);
}

#[test]
fn compliance_only_report_drops_violations() {
    let mut ledger = synth::pooled_ledger();
    for (i, r) in ledger.iter_mut().filter(|r| r.key.condition == "e_prime").enumerate() {
        r.violations = usize::from(i % 2 == 0);
    }
    let opts = ReportOptions {
        compliance_only: true,
        bootstrap: BootstrapConfig { resamples: 200, ..Default::default() },
        ..Default::default()
    };
    let report = build_report(&ledger, &opts).unwrap();
    let ep: usize = report.pooled.iter().filter(|c| c.condition == "e_prime").map(|c| c.n_scoreable).sum();
    assert_eq!(ep, 1383 / 2);
    let section = report.compliance_filtered.iter().find(|f| f.condition == "e_prime").unwrap();
    assert_eq!(section.retained, 1383 / 2);
}
