//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use umwelt_core::constraint::{check_eprime, check_nohave, CheckerConfig, ConditionSpec, Validator};
use umwelt_core::ensemble::{enumerate_subsets, greedy_minimal, shapley, union_coverage, Bits, CoverageMatrix};
use umwelt_core::extraction::{extract_answer, Answer, AnswerFormat, ExtractionRule};
use umwelt_core::runner::mock::{MockReply, MockServer};
use umwelt_core::runner::*;
use umwelt_core::stats::*;
use umwelt_core::synth;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn pooled_cell(task: TaskType, condition: usize) -> (usize, usize) {
    synth::POOLED_COUNTS.iter().find(|(t, _)| *t == task).expect("task present").1[condition]
}

fn criterion_cohens_d() -> Check {
    // Condition index: 0 control, 1 no_have, 2 e_prime.
    let cases = [
        (TaskType::EthicalDilemmas, 1, 0.57),
        (TaskType::EthicalDilemmas, 2, 0.44),
        (TaskType::CausalReasoning, 2, 0.39),
        (TaskType::Classification, 1, 0.36),
    ];
    let mut parts = Vec::new();
    for (task, cond, want) in cases {
        let (n0, k0) = pooled_cell(task, 0);
        let (n1, k1) = pooled_cell(task, cond);
        let d =
            cohens_d(k1 as f64 / n1 as f64, n1 as u64, k0 as f64 / n0 as f64, n0 as u64).map_err(|e| e.to_string())?;
        ensure((d - want).abs() <= 0.03, format!("{task}: d = {d:.3}, expected {want} ± 0.03"))?;
        parts.push(format!("{d:.3}"));
    }
    Ok(format!("d = {}", parts.join(", ")))
}

fn criterion_gap() -> Check {
    // (control %, delta pp, reference gap %)
    let numeric = [
        (41.7, 46.3, 79.4),
        (41.7, 42.3, 72.4),
        (57.8, 20.7, 49.1),
        (57.8, 37.5, 88.7),
        (64.9, 22.2, 63.4),
        (64.9, 9.1, 25.9),
        (80.0, 18.8, 93.8),
        (80.0, 13.4, 67.0),
        (91.7, 8.3, 100.0),
        (91.7, 5.0, 60.0),
        (75.6, 8.9, 36.5),
        (89.0, 4.0, 36.8),
        (89.0, 2.7, 24.5),
    ];
    let mut worst: f64 = 0.0;
    for (ctrl, delta, want) in numeric {
        let g = gap_normalized(delta, ctrl / 100.0).map_err(|e| e.to_string())?;
        worst = worst.max((g - want).abs());
        ensure((g - want).abs() <= 0.5, format!("({delta}, {ctrl}%) → {g:.2}%, expected {want}%"))?;
    }
    let exact = gap_normalized(8.3, 0.917).map_err(|e| e.to_string())?;
    ensure(format!("{exact:.1}") == "100.0", format!("ceiling-recovery cell gave {exact}"))?;
    // Degradations are not normalized.
    for (ctrl, delta) in [(75.6, -5.6), (53.8, -3.7), (53.8, -27.5)] {
        let cell = |acc: f64| CellSummary {
            task_type: TaskType::CausalReasoning,
            condition: String::new(),
            model: None,
            n_scoreable: 1000,
            n_correct: (acc * 1000.0).round() as usize,
            accuracy: acc,
            n_unscored: 0,
            n_errors: 0,
        };
        let row = effect_row(&cell(ctrl / 100.0), &cell((ctrl + delta) / 100.0), TwoSided::default());
        ensure(row.gap_pct.is_none(), format!("degradation {delta} got a gap value"))?;
    }
    Ok(format!("13 numeric cells within ±0.5 pp (worst {worst:.2}), 100.0% cell exact"))
}

fn criterion_word_counts() -> Check {
    let rows = wordcount_table(&synth::word_count_ledger(), "control");
    let expected = [
        (TaskType::Classification, -33),
        (TaskType::CausalReasoning, -31),
        (TaskType::EthicalDilemmas, -22),
        (TaskType::Syllogisms, -22),
        (TaskType::EpistemicCalibration, -19),
        (TaskType::AnalogicalReasoning, -16),
        (TaskType::MathWordProblems, -2),
    ];
    for (task, want) in expected {
        let row = rows.iter().find(|r| r.task_type == task).ok_or(format!("{task} missing"))?;
        let got = row.delta_pct.get("e_prime").copied().ok_or(format!("{task}: no delta"))?;
        ensure(got == want, format!("{task}: {got}% vs {want}%"))?;
    }
    Ok("all seven deltas exact".into())
}

fn choose(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    if n == 0 {
        return 1.0;
    }
    let weight = |x: u64| choose(r1, x) * choose(r2, c1 - x);
    let observed = weight(a);
    let tail: u128 =
        (c1.saturating_sub(r2)..=c1.min(r1)).map(weight).filter(|&w| w * 10_000_000 <= observed * 10_000_001).sum();
    (tail as f64 / choose(n, c1) as f64).min(1.0)
}

fn criterion_fisher() -> Check {
    let mut tables = 0u64;
    let mut worst: f64 = 0.0;
    for a in 0..=30u64 {
        for b in 0..=30 - a {
            for c in 0..=30 - a {
                for d in 0..=(30 - b).min(30 - c) {
                    let got = fisher_exact(a, b, c, d);
                    let want = fisher_oracle(a, b, c, d);
                    let err = (got - want).abs();
                    worst = worst.max(err);
                    ensure(err < 1e-12, format!("({a},{b},{c},{d}): {got} vs {want}"))?;
                    tables += 1;
                }
            }
        }
    }
    Ok(format!("{tables} tables, max |Δ| = {worst:.1e}"))
}

fn random_game(rng: &mut ChaCha8Rng) -> CoverageMatrix {
    let n = rng.random_range(3..=8);
    let m = rng.random_range(1..=12);
    let density = rng.random_range(0.1..0.7);
    let mut sets: Vec<Vec<usize>> = (0..n - 2).map(|_| (0..m).filter(|_| rng.random_bool(density)).collect()).collect();
    // A twin of the first agent and a null player on every instance.
    sets.push(sets[0].clone());
    sets.push(Vec::new());
    let agents = (0..n).map(|i| format!("a{i}")).collect();
    let findings = (0..m).map(|j| format!("f{j}")).collect();
    CoverageMatrix::from_sets(agents, findings, &sets).expect("valid matrix")
}

fn permutation_average(m: &CoverageMatrix) -> Vec<f64> {
    let n = m.n_agents();
    let mut order: Vec<usize> = (0..n).collect();
    let mut totals = vec![0.0; n];
    let mut count = 0u64;
    loop {
        let mut covered = Bits::zeros(m.n_findings());
        for &a in &order {
            totals[a] += covered.gain(m.bits(a)) as f64;
            covered.union_with(m.bits(a));
        }
        count += 1;
        let Some(i) = (0..n - 1).rev().find(|&i| order[i] < order[i + 1]) else { break };
        let j = (i + 1..n).rev().find(|&j| order[j] > order[i]).expect("successor exists");
        order.swap(i, j);
        order[i + 1..].reverse();
    }
    totals.iter().map(|t| t / count as f64).collect()
}

fn criterion_shapley() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for instance in 0..200 {
        let m = random_game(&mut rng);
        let n = m.n_agents();
        let s = shapley(&m).map_err(|e| e.to_string())?;
        for (i, want) in permutation_average(&m).into_iter().enumerate() {
            worst = worst.max((s.values[i] - want).abs());
            ensure((s.values[i] - want).abs() < 1e-9, format!("instance {instance}, agent {i}: oracle mismatch"))?;
        }
        let grand = m.union_bits(0..n).count() as f64;
        ensure((s.values.iter().sum::<f64>() - grand).abs() < 1e-9, format!("instance {instance}: efficiency"))?;
        ensure((s.values[0] - s.values[n - 2]).abs() < 1e-9, format!("instance {instance}: symmetry"))?;
        ensure(s.values[n - 1].abs() < 1e-12, format!("instance {instance}: null player"))?;
        if grand > 0.0 {
            ensure((s.shares.iter().sum::<f64>() - 1.0).abs() < 1e-9, format!("instance {instance}: shares"))?;
        }
    }
    Ok(format!("200 instances, max |Δ| vs permutation oracle = {worst:.1e}"))
}

fn criterion_permutation() -> Check {
    let m = CoverageMatrix::reference();
    let e = enumerate_subsets(&m, 3).map_err(|e| e.to_string())?;
    ensure(e.subsets == 560, format!("{} subsets", e.subsets))?;
    ensure(e.perfect.len() == 45, format!("{} perfect subsets", e.perfect.len()))?;
    ensure(format!("{:.1}", 100.0 * e.perfect_fraction()) == "8.0", "perfect fraction")?;
    ensure(e.median == 49.0, format!("median {}", e.median))?;
    ensure(e.min == 45, format!("minimum {}", e.min))?;
    let k = m.finding_multiplicity();
    let unique = (0..m.n_findings()).find(|&j| k[j] == 1).ok_or("no uniquely covered finding")?;
    let owner = m.agents()[(0..m.n_agents()).find(|&a| m.bits(a).get(unique)).expect("covered")].clone();
    ensure(e.perfect.iter().all(|s| s.contains(&owner)), format!("a perfect subset lacks {owner}"))?;
    Ok(format!("560 subsets, 45 perfect (8.0%), median 49/51, min 45/51, all contain {owner}"))
}

fn criterion_greedy() -> Check {
    let m = CoverageMatrix::reference();
    let s = shapley(&m).map_err(|e| e.to_string())?;
    let chosen = greedy_minimal(&m, &s).map_err(|e| e.to_string())?;
    let names: Vec<&str> = chosen.iter().map(String::as_str).collect();
    let cov = union_coverage(&m, &names).map_err(|e| e.to_string())?;
    ensure(chosen.len() == 3, format!("{} agents", chosen.len()))?;
    ensure(cov == 1.0, format!("coverage {cov}"))?;
    ensure(names.contains(&"counterfactual"), "unique-coverage agent missing")?;
    Ok(format!("{} → 100%", names.join(", ")))
}

#[derive(Deserialize)]
struct ConstraintCase {
    category: String,
    text: String,
    e_prime: usize,
    no_have: usize,
}

fn criterion_constraint_corpus() -> Check {
    let cases: Vec<ConstraintCase> = include_str!("../data/constraint_corpus.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure(cases.len() == 60, format!("{} cases", cases.len()))?;
    let (mut ep_ok, mut nh_ok) = (0, 0);
    for c in &cases {
        ep_ok += usize::from(check_eprime(&c.text).count == c.e_prime);
        nh_ok += usize::from(check_nohave(&c.text).count == c.no_have);
    }
    ensure(ep_ok == 60 && nh_ok == 60, format!("E-Prime {ep_ok}/60, No-Have {nh_ok}/60"))?;
    let exemptions = cases.iter().filter(|c| c.category == "no_have" && c.no_have == 0).count();
    ensure(exemptions == 8, format!("{exemptions} auxiliary exemptions"))?;
    for form in ["it's", "that's", "there's", "who's"] {
        let hit =
            cases.iter().any(|c| c.category == "e_prime" && c.text.to_lowercase().contains(form) && c.e_prime > 0);
        ensure(hit, format!("no labeled case for {form}"))?;
    }
    ensure(check_nohave("The team has completed the review.").count == 0, "has completed")?;
    ensure(check_nohave("The results have been replicated.").count == 0, "have been")?;
    Ok("E-Prime 60/60, No-Have 60/60 (8 auxiliary exemptions, 4 listed contractions)".into())
}

#[derive(Deserialize)]
struct ExtractionCase {
    response: String,
    format: AnswerFormat,
    expected: Option<Answer>,
    tier: ExtractionRule,
}

fn criterion_extraction_corpus() -> Check {
    let cases: Vec<ExtractionCase> = include_str!("../data/extraction_corpus.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure(cases.len() == 40, format!("{} cases", cases.len()))?;
    let mut ok = 0;
    let mut tiers = std::collections::BTreeSet::new();
    for c in &cases {
        let got = extract_answer(&c.response, c.format);
        ok += usize::from(got.answer == c.expected && got.rule == c.tier);
        tiers.insert(format!("{:?}", c.tier));
    }
    ensure(ok == 40, format!("{ok}/40"))?;
    ensure(tiers.len() == 6, format!("tiers covered: {tiers:?}"))?;
    let option = extract_answer("the strongest argument resides in Option B", AnswerFormat::Letter4);
    ensure(option.answer == Some(Answer::B), "resides in Option B")?;
    let boxed = extract_answer("so $\\boxed{C}$", AnswerFormat::Letter4);
    ensure(boxed.answer == Some(Answer::C), "boxed answer")?;
    Ok("40/40 across all five tiers plus no-match".into())
}

fn criterion_exactly_once() -> Check {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let server = MockServer::start(Arc::new(|_: &_| MockReply::Text("Answer: B".into())))
            .await
            .map_err(|e| e.to_string())?;
        std::env::set_var("UMWELT_ACCEPTANCE_KEY", "k");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ledger = dir.path().join("ledger.jsonl");
        let bank: Vec<TaskItem> =
            synth::reference_bank().into_iter().filter(|i| i.format == AnswerFormat::Letter4).take(5).collect();
        let exp = Experiment {
            models: vec![ModelEndpoint::new("m", &server.base_url(), "UMWELT_ACCEPTANCE_KEY")],
            conditions: vec![ConditionSpec::new("control", "p", Validator::None)],
            bank,
            reps: 2,
            concurrency: 1,
            retry: RetryPolicy { max_retries: 0, base_delay_ms: 1, timeout_ms: 5_000 },
            ledger_path: ledger.clone(),
            requeue_errors: true,
            checker: CheckerConfig::default(),
        };
        let plan = plan_trials(&exp.bank, &exp.conditions, &exp.models, exp.reps).map_err(|e| e.to_string())?;
        ensure(plan.len() == 10, "plan size")?;
        let crash = RunOptions { stop_after: Some(1), ..Default::default() };
        for restart in 0..10 {
            run_experiment(&exp, &crash).await.map_err(|e| e.to_string())?;
            if restart % 3 == 1 {
                // A write torn mid-line by the crash.
                use std::io::Write;
                let mut f = std::fs::OpenOptions::new().append(true).open(&ledger).map_err(|e| e.to_string())?;
                f.write_all(b"{\"key\":{\"item_id\":\"torn").map_err(|e| e.to_string())?;
            }
        }
        let before = server.call_count();
        let last = run_experiment(&exp, &RunOptions::default()).await.map_err(|e| e.to_string())?;
        ensure(server.call_count() == before && last.executed == 0, "final resume called the endpoint")?;
        let snap = read_ledger(&ledger).map_err(|e| e.to_string())?;
        ensure(snap.corrupt.is_empty(), "corrupt lines left in ledger")?;
        let mut ok_per_key: HashMap<String, usize> = HashMap::new();
        for r in snap.records.iter().filter(|r| r.is_ok()) {
            *ok_per_key.entry(r.key.to_string()).or_default() += 1;
        }
        ensure(
            ok_per_key.len() == 10 && ok_per_key.values().all(|&n| n == 1),
            format!("ok records per key: {ok_per_key:?}"),
        )?;
        let mut calls_per_prompt: HashMap<(String, u64), usize> = HashMap::new();
        for c in server.calls() {
            *calls_per_prompt.entry((c.user.clone(), c.temperature.to_bits())).or_default() += 1;
        }
        ensure(server.call_count() == 10, format!("{} endpoint calls for 10 trials", server.call_count()))?;
        Ok(format!(
            "10 crashes, 10 calls, 10 ok records, final resume made 0 calls ({} distinct requests)",
            calls_per_prompt.len()
        ))
    })
}

fn criterion_accounting() -> Check {
    let ledger = synth::accounting_ledger(synth::Injection::default(), 7);
    let a = accounting(&ledger, None);
    let got = (a.planned, a.completed, a.parseable, a.scoreable);
    ensure(got == (4680, 4470, 4429, 4344), format!("{got:?}"))?;
    let table = accuracy_table(&ledger, Grouping::Pooled);
    let scoreable: usize = table.cells.iter().map(|c| c.n_scoreable).sum();
    let unscored: usize = table.cells.iter().map(|c| c.n_unscored).sum();
    let errors: usize = table.cells.iter().map(|c| c.n_errors).sum();
    ensure(scoreable + unscored + errors == 4680, "accuracy table does not partition the ledger")?;
    Ok("4680 → 4470 → 4429 → 4344".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("Cohen's d reproduction", criterion_cohens_d),
        ("Gap normalization", criterion_gap),
        ("Word-count deltas", criterion_word_counts),
        ("Fisher oracle equivalence", criterion_fisher),
        ("Shapley axioms and oracle", criterion_shapley),
        ("Permutation-test structure", criterion_permutation),
        ("Greedy minimal ensemble", criterion_greedy),
        ("Compliance fixtures", criterion_constraint_corpus),
        ("Extraction fixtures", criterion_extraction_corpus),
        ("Runner exactly-once", criterion_exactly_once),
        ("Accounting chain", criterion_accounting),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
