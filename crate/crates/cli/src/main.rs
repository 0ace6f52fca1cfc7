use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use umwelt_core::constraint::{validate_with, CheckerConfig, Validator, ViolationReport};
use umwelt_core::ensemble::{
    build_ensemble_report, divergence_map, jaccard_sets, judge_outputs, AgentOutput, CoverageMatrix, EnsembleOptions,
    Finding, Judge,
};
use umwelt_core::extraction::{extract_answer, score_trial, Answer, AnswerFormat};
use umwelt_core::runner::{read_ledger, run_experiment, ExperimentConfig, ModelEndpoint, RetryPolicy, RunOptions};
use umwelt_core::stats::{analysis_records, build_report, ReportOptions, TwoSided, DEFAULT_RESAMPLES, DEFAULT_SEED};
use umwelt_core::Error;

#[derive(Parser)]
#[command(name = "umwelt", version, about = "Constrained-language experiment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check text files (or standard input) against a vocabulary constraint.
    Lint {
        /// Files or directories; reads standard input when empty.
        paths: Vec<PathBuf>,
        #[arg(long, short, value_enum, default_value = "e-prime")]
        constraint: Constraint,
        /// Ignore violations inside double quotation marks.
        #[arg(long)]
        quote_exempt: bool,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Also write the JSON reports to this file.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run (or resume) an experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Override the configured number of concurrent requests.
        #[arg(long)]
        concurrency: Option<usize>,
        /// Keep failed trials as final instead of retrying them on resume.
        #[arg(long)]
        no_requeue: bool,
    },
    /// Extract and score the answer in a single response.
    Score {
        /// Response file; reads standard input when omitted.
        path: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "letter4")]
        format: Format,
        /// Correct answer, to report an outcome.
        #[arg(long)]
        truth: Option<String>,
    },
    /// Compute the statistics report for a trial ledger.
    Stats {
        ledger: PathBuf,
        /// Write the JSON report here.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value = "control")]
        control: String,
        /// Number of planned trials, when the ledger is partial.
        #[arg(long)]
        planned: Option<usize>,
        /// Keep only compliant treated trials in the main tables.
        #[arg(long)]
        compliance_only: bool,
        #[arg(long, value_enum, default_value = "probability")]
        two_sided: TwoSidedArg,
    },
    /// Ensemble coverage analysis from a coverage matrix or judged outputs.
    Ensemble {
        /// Coverage matrix (.json or .csv).
        #[arg(long, conflicts_with_all = ["outputs", "findings", "judge"])]
        matrix: Option<PathBuf>,
        /// Agent outputs as JSON lines ({agent, problem_id, text}).
        #[arg(long, requires_all = ["findings", "judge"])]
        outputs: Option<PathBuf>,
        /// Ground-truth findings as a JSON array.
        #[arg(long)]
        findings: Option<PathBuf>,
        /// Judge endpoint config ({endpoint, retry}).
        #[arg(long)]
        judge: Option<PathBuf>,
        /// Subset size for exhaustive enumeration; 0 skips it.
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value = "control")]
        control: String,
        #[arg(long, value_enum, default_value = "findings")]
        jaccard_basis: JaccardBasis,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Write the JSON report here.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Save the judged coverage matrix here.
        #[arg(long)]
        save_matrix: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Constraint {
    EPrime,
    NoHave,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Letter4,
    ValidInvalid,
}

#[derive(Clone, Copy, ValueEnum)]
enum TwoSidedArg {
    Probability,
    Doubling,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JaccardBasis {
    Findings,
    Claims,
}

#[derive(Deserialize)]
struct JudgeConfig {
    endpoint: ModelEndpoint,
    #[serde(default)]
    retry: RetryPolicy,
}

#[derive(Serialize)]
struct LintEntry {
    path: String,
    report: ViolationReport,
}

/// A failure with its exit status: 1 for domain failures, 2 for usage and
/// configuration errors.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Data(_) | Error::Undefined(_) | Error::JudgeFormat(_) | Error::Transport(_) => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = Result<ExitCode, Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_stdin() -> Result<String, Failure> {
    let mut s = String::new();
    io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("cannot read standard input: {e}")))?;
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| domain(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("no such file: {}", path.display())))
    }
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), Failure> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| usage(format!("cannot list {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for p in entries {
            collect_files(&p, out)?;
        }
        Ok(())
    } else if path.is_file() {
        out.push(path.to_path_buf());
        Ok(())
    } else {
        Err(usage(format!("no such file or directory: {}", path.display())))
    }
}

fn cmd_lint(
    paths: &[PathBuf],
    constraint: Constraint,
    quote_exempt: bool,
    json: bool,
    out: Option<&Path>,
) -> CliResult {
    let validator = match constraint {
        Constraint::EPrime => Validator::EPrime,
        Constraint::NoHave => Validator::NoHave,
    };
    let cfg = CheckerConfig { exempt_quotes: quote_exempt, ..CheckerConfig::default() };
    let mut inputs = Vec::new();
    if paths.is_empty() {
        inputs.push(("-".to_owned(), read_stdin()?));
    } else {
        let mut files = Vec::new();
        for p in paths {
            collect_files(p, &mut files)?;
        }
        for f in files {
            let text = read_input(&f)?;
            inputs.push((f.display().to_string(), text));
        }
    }
    let entries: Vec<LintEntry> = inputs
        .iter()
        .map(|(path, text)| LintEntry { path: path.clone(), report: validate_with(validator, text, &cfg) })
        .collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries).map_err(|e| domain(e.to_string()))?);
    } else {
        for (entry, (_, text)) in entries.iter().zip(&inputs) {
            println!("{}: {} violation(s)", entry.path, entry.report.count);
            for v in &entry.report.violations {
                let line = text.chars().take(v.span.0).filter(|&c| c == '\n').count() + 1;
                println!("  line {line}, chars {}..{}: '{}' ({})", v.span.0, v.span.1, v.matched_form, v.rule);
            }
        }
        let total: usize = entries.iter().map(|e| e.report.count).sum();
        println!("{} file(s), {total} violation(s) under {}", entries.len(), validator.as_str());
    }
    if let Some(out) = out {
        write_json(out, &entries)?;
    }
    let clean = entries.iter().all(|e| e.report.is_clean());
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_run(config: &Path, concurrency: Option<usize>, no_requeue: bool) -> CliResult {
    require_file(config)?;
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(c) = concurrency {
        cfg.concurrency = c;
    }
    if no_requeue {
        cfg.requeue_errors = false;
    }
    let experiment = cfg.into_experiment()?;
    let progress = Arc::new(|p: umwelt_core::runner::Progress| {
        eprintln!("progress: {}/{} trials written", p.written, p.to_run);
    });
    let opts = RunOptions { stop_after: None, progress: Some(progress) };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| domain(e.to_string()))?;
    let summary = runtime.block_on(run_experiment(&experiment, &opts))?;
    println!(
        "planned {}, completed {}, errors {}, unscored {}, executed this run {}",
        summary.planned, summary.completed, summary.errors, summary.unscored, summary.executed
    );
    if summary.quarantined > 0 {
        println!("quarantined {} corrupt ledger line(s)", summary.quarantined);
    }
    Ok(if summary.completed == summary.planned { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_score(path: Option<&Path>, format: Format, truth: Option<&str>) -> CliResult {
    let format = match format {
        Format::Letter4 => AnswerFormat::Letter4,
        Format::ValidInvalid => AnswerFormat::ValidInvalid,
    };
    let truth = truth.map(str::parse::<Answer>).transpose().map_err(|e| usage(e.to_string()))?;
    if let Some(t) = truth {
        if !format.allows(t) {
            return Err(usage(format!("{t} is not a valid answer for this format")));
        }
    }
    let text = match path {
        Some(p) => read_input(p)?,
        None => read_stdin()?,
    };
    let extraction = extract_answer(&text, format);
    let mut value = serde_json::to_value(&extraction).map_err(|e| domain(e.to_string()))?;
    if let Some(t) = truth {
        let outcome = score_trial(&extraction, t, format)?;
        value["outcome"] = serde_json::to_value(outcome).map_err(|e| domain(e.to_string()))?;
    }
    println!("{}", serde_json::to_string_pretty(&value).map_err(|e| domain(e.to_string()))?);
    Ok(if extraction.is_match() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[allow(clippy::too_many_arguments)]
fn cmd_stats(
    ledger: &Path,
    out: Option<&Path>,
    seed: u64,
    resamples: usize,
    control: &str,
    planned: Option<usize>,
    compliance_only: bool,
    two_sided: TwoSidedArg,
) -> CliResult {
    require_file(ledger)?;
    if resamples == 0 {
        return Err(usage("--resamples must be at least 1"));
    }
    let snapshot = read_ledger(ledger)?;
    let records = analysis_records(&snapshot);
    if records.is_empty() {
        return Err(domain(format!("{} holds no trial records", ledger.display())));
    }
    let mut opts = ReportOptions {
        control: control.to_owned(),
        planned,
        compliance_only,
        fisher: match two_sided {
            TwoSidedArg::Probability => TwoSided::ProbabilityOrdering,
            TwoSidedArg::Doubling => TwoSided::Doubling,
        },
        ..ReportOptions::default()
    };
    opts.bootstrap.seed = seed;
    opts.bootstrap.resamples = resamples;
    opts.bootstrap.redraw_budget = resamples;
    let report = build_report(&records, &opts)?;
    print!("{}", report.render_text());
    if let Some(out) = out {
        write_json(out, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

struct EnsembleArgs<'a> {
    matrix: Option<&'a Path>,
    outputs: Option<&'a Path>,
    findings: Option<&'a Path>,
    judge: Option<&'a Path>,
    k: usize,
    control: &'a str,
    basis: JaccardBasis,
    concurrency: usize,
    out: Option<&'a Path>,
    save_matrix: Option<&'a Path>,
}

fn load_outputs(path: &Path) -> Result<Vec<AgentOutput>, Failure> {
    read_input(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn cmd_ensemble(args: EnsembleArgs<'_>) -> CliResult {
    let opts = EnsembleOptions { k: (args.k > 0).then_some(args.k), control: args.control.to_owned() };
    let report = match (args.matrix, args.outputs) {
        (Some(path), _) => {
            require_file(path)?;
            if args.basis == JaccardBasis::Claims {
                return Err(usage("--jaccard-basis claims needs judged outputs, not a matrix"));
            }
            let matrix = CoverageMatrix::load(path)?;
            build_ensemble_report(&matrix, &opts)?
        }
        (None, Some(outputs)) => {
            let (findings, judge) = (args.findings.expect("required by clap"), args.judge.expect("required by clap"));
            for p in [outputs, findings, judge] {
                require_file(p)?;
            }
            let outputs = load_outputs(outputs)?;
            let findings: Vec<Finding> = serde_json::from_str(&read_input(findings)?)
                .map_err(|e| usage(format!("{}: {e}", findings.display())))?;
            let judge_cfg: JudgeConfig =
                serde_json::from_str(&read_input(judge)?).map_err(|e| usage(format!("{}: {e}", judge.display())))?;
            let judge = Judge::new(&judge_cfg.endpoint, judge_cfg.retry)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| domain(e.to_string()))?;
            let judged = runtime.block_on(judge_outputs(&outputs, &findings, &judge, args.concurrency))?;
            for f in &judged.failures {
                eprintln!("judge failed on {} / {}: {}", f.agent, f.problem_id, f.error);
            }
            if let Some(p) = args.save_matrix {
                judged.matrix.save(p)?;
            }
            let mut report = build_ensemble_report(&judged.matrix, &opts)?;
            report.prompt_hashes = judged.prompt_hashes.clone();
            if args.basis == JaccardBasis::Claims {
                let map = runtime.block_on(divergence_map(&judged.claims, &judge))?;
                let agents = judged.matrix.agents().to_vec();
                report.jaccard = jaccard_sets(&agents, &map.agent_sets(&agents));
            }
            report
        }
        (None, None) => return Err(usage("pass --matrix, or --outputs with --findings and --judge")),
    };
    print!("{}", report.render_text());
    if let Some(out) = args.out {
        write_json(out, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Lint { paths, constraint, quote_exempt, json, out } => {
            cmd_lint(&paths, constraint, quote_exempt, json, out.as_deref())
        }
        Command::Run { config, concurrency, no_requeue } => cmd_run(&config, concurrency, no_requeue),
        Command::Score { path, format, truth } => cmd_score(path.as_deref(), format, truth.as_deref()),
        Command::Stats { ledger, out, seed, resamples, control, planned, compliance_only, two_sided } => {
            cmd_stats(&ledger, out.as_deref(), seed, resamples, &control, planned, compliance_only, two_sided)
        }
        Command::Ensemble {
            matrix,
            outputs,
            findings,
            judge,
            k,
            control,
            jaccard_basis,
            concurrency,
            out,
            save_matrix,
        } => cmd_ensemble(EnsembleArgs {
            matrix: matrix.as_deref(),
            outputs: outputs.as_deref(),
            findings: findings.as_deref(),
            judge: judge.as_deref(),
            k,
            control: &control,
            basis: jaccard_basis,
            concurrency,
            out: out.as_deref(),
            save_matrix: save_matrix.as_deref(),
        }),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
