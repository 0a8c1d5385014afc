use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cfelo::config::{Config, ConfigError, Overrides, TOOL_VERSION};
use cfelo::dataset::{
    canonical_json, corpus_stats, find_bundles, ingest, load_bundle, save_bundle, ContestBundle, DatasetError,
};
use cfelo::experiments::{
    index_contests, load_runs, rq1_report, rq2_division_profile, rq3_run_variance, score_run, ContestContext,
    EvaluationRun, ExperimentError, SensitivityReport,
};
use cfelo::genlab::{
    apply_detection, apply_verifier_report, build_testgen_prompt, detect_for_problem, gen_tests_for_bundle,
    validate_problem_verifier, GatewayError, GenOptions, GenlabError,
};
use cfelo::judge::{ExecError, JudgeError, JudgePool, Program, VerdictKind};
use cfelo::standings::{OrderingPolicy, StandingsError, TieMode};

mod solutions;

#[derive(Parser)]
#[command(
    name = "cfelo",
    version,
    about = "Virtual-contest Elo evaluation for code-generating models"
)]
struct Cli {
    /// Relative paths are resolved against this directory.
    #[arg(long, global = true, default_value = ".")]
    root: PathBuf,
    /// TOML configuration file.
    #[arg(long, global = true, env = "CFELO_CONFIG")]
    config: Option<PathBuf>,
    /// Print failures as a JSON object on stderr.
    #[arg(long, global = true)]
    error_json: bool,
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OverrideArgs {
    /// Penalty minutes per rejected submission.
    #[arg(long, global = true)]
    wrong_cost: Option<u32>,
    /// Solve minute of every accepted model submission.
    #[arg(long, global = true)]
    submission_minute: Option<u32>,
    #[arg(long, global = true, value_enum)]
    tie_mode: Option<TieArg>,
    /// Time limit for problems that do not state one.
    #[arg(long, global = true)]
    time_limit_ms: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Pessimistic,
    Optimistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Optimal,
    Worst,
    AsGiven,
}

impl From<PolicyArg> for OrderingPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Optimal => OrderingPolicy::Optimal,
            PolicyArg::Worst => OrderingPolicy::Worst,
            PolicyArg::AsGiven => OrderingPolicy::AsGiven,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a bundle from saved problem pages, standings and programs.
    Ingest {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate stress tests through the configured gateway.
    GenTests {
        #[arg(long)]
        bundle: PathBuf,
        /// Inputs requested per problem.
        #[arg(long)]
        count: Option<usize>,
        /// Endpoint URL or `replay:<dir>`.
        #[arg(long)]
        gateway: Option<String>,
        #[arg(long = "problem")]
        problems: Vec<String>,
    },
    /// Print the generation prompt for one problem.
    Prompt {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        problem: String,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Compare accepted solutions to find multi-answer problems.
    DetectMulti {
        #[arg(long)]
        bundle: PathBuf,
        /// Record the result in the manifest.
        #[arg(long)]
        apply: bool,
    },
    /// Run the validation battery on every verifier.
    ValidateVerifiers {
        #[arg(long)]
        bundle: PathBuf,
        /// Exclude problems whose verifier fails.
        #[arg(long)]
        apply: bool,
    },
    /// Judge candidate programs and write an evaluation run.
    Judge(JudgeArgs),
    /// Score one model on one contest.
    Simulate {
        #[arg(long)]
        bundle: PathBuf,
        /// Candidate directory to judge first.
        #[arg(long, conflicts_with = "run")]
        solutions: Option<PathBuf>,
        /// Stored evaluation run.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "worst")]
        policy: PolicyArg,
        /// Candidates per problem to consider.
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one sensitivity experiment.
    Experiment {
        #[arg(value_enum)]
        which: Rq,
        #[command(flatten)]
        io: ExperimentIo,
        /// Candidate counts for rq1.
        #[arg(long, value_delimiter = ',', default_value = "3,6,9")]
        n: Vec<usize>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Box-plot JSON destination.
        #[arg(long)]
        boxplot: Option<PathBuf>,
    },
    /// Run every applicable experiment into a directory.
    Report {
        #[command(flatten)]
        io: ExperimentIo,
        #[arg(long, value_delimiter = ',', default_value = "3,6,9")]
        n: Vec<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Corpus counts.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct JudgeArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// `<dir>/<problem>/<NN>.<ext>` candidate files.
    #[arg(long)]
    solutions: PathBuf,
    #[arg(long)]
    model: String,
    #[arg(long)]
    run_id: String,
    #[arg(long, value_enum, default_value = "worst")]
    policy: PolicyArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentIo {
    /// Directory of evaluation run files.
    #[arg(long)]
    runs: PathBuf,
    /// Directory holding the contest bundles.
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rq {
    Rq1,
    Rq2,
    Rq3,
}

/// Failure classes mapped to exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Domain,
    Infrastructure,
}

impl Class {
    fn code(self) -> u8 {
        match self {
            Class::Domain => 1,
            Class::Infrastructure => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Class::Domain => "domain",
            Class::Infrastructure => "infrastructure",
        }
    }
}

fn classify(err: &anyhow::Error) -> Class {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<DatasetError>() {
            return match e {
                DatasetError::Io { .. } => Class::Infrastructure,
                _ => Class::Domain,
            };
        }
        if cause.is::<ExecError>() || cause.is::<std::io::Error>() {
            return Class::Infrastructure;
        }
        if let Some(e) = cause.downcast_ref::<GatewayError>() {
            return match e {
                GatewayError::Config(_) => Class::Domain,
                _ => Class::Infrastructure,
            };
        }
        if let Some(e) = cause.downcast_ref::<JudgeError>() {
            return match e {
                JudgeError::Infrastructure(_) => Class::Infrastructure,
                _ => Class::Domain,
            };
        }
        if let Some(e) = cause.downcast_ref::<GenlabError>() {
            match e {
                GenlabError::Exec(_) => return Class::Infrastructure,
                GenlabError::Gateway { .. } | GenlabError::Dataset(_) | GenlabError::Judge(_) => continue,
                _ => return Class::Domain,
            }
        }
        if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            match e {
                ExperimentError::Dataset(_) => continue,
                _ => return Class::Domain,
            }
        }
        if let Some(e) = cause.downcast_ref::<ConfigError>() {
            return match e {
                ConfigError::Read { .. } => Class::Infrastructure,
                _ => Class::Domain,
            };
        }
        if cause.is::<StandingsError>() {
            return Class::Domain;
        }
    }
    Class::Domain
}

struct Ctx {
    root: PathBuf,
    config: Config,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.root.join(p)
        }
    }

    fn load(&self, p: &Path) -> Result<ContestBundle> {
        let dir = self.path(p);
        load_bundle(&dir).with_context(|| format!("loading bundle {}", dir.display()))
    }

    fn provenance(&self, extra: &[(&str, String)]) -> Value {
        let mut m: BTreeMap<String, String> = self.config.header_pairs().into_iter().collect();
        for (k, v) in extra {
            m.insert((*k).to_owned(), v.clone());
        }
        json!(m)
    }

    fn header(&self, extra: &[(&str, String)]) -> Vec<(String, String)> {
        let mut h = self.config.header_pairs();
        h.extend(extra.iter().map(|(k, v)| ((*k).to_owned(), v.clone())));
        h
    }

    fn emit(&self, out: Option<&Path>, text: &str) -> Result<()> {
        match out {
            Some(p) => {
                let p = self.path(p);
                if let Some(parent) = p.parent() {
                    fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
                }
                fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
            }
        }
        Ok(())
    }

    fn contests(&self, corpus: &Path) -> Result<(Vec<ContestBundle>, BTreeMap<String, ContestContext>)> {
        let bundles = find_bundles(&self.path(corpus))?
            .iter()
            .map(|d| load_bundle(d).with_context(|| format!("loading bundle {}", d.display())))
            .collect::<Result<Vec<_>>>()?;
        let contests = index_contests(&bundles)?;
        Ok((bundles, contests))
    }
}

fn policy_name(p: OrderingPolicy) -> String {
    p.name().to_owned()
}

fn judge_run(
    ctx: &Ctx,
    bundle: &ContestBundle,
    dir: &Path,
    model: &str,
    run_id: &str,
    policy: OrderingPolicy,
) -> Result<EvaluationRun> {
    let candidates = solutions::discover(dir)?;
    for pid in candidates.keys() {
        if bundle.problem(pid).is_none() {
            bail!("{}: no problem {pid} in contest {}", dir.display(), bundle.contest_id());
        }
    }
    let pool = JudgePool::new(ctx.config.workers);
    let scorable = bundle.scorable_problems();
    let mut problems = BTreeMap::new();
    let mut n_candidates = 0;
    for pid in bundle.problem_ids() {
        let programs: Vec<Program> = candidates.get(&pid).cloned().unwrap_or_default();
        n_candidates = n_candidates.max(programs.len());
        let verdicts = if !scorable.contains(&pid) {
            vec![VerdictKind::Skipped; programs.len()]
        } else {
            let meta = bundle.problem(&pid).expect("listed");
            let limits = meta.limits(ctx.config.default_time_limit_ms);
            let mode = bundle.check_mode(&pid, ctx.config.verifier_limits())?;
            pool.judge_all(&programs, bundle.tests_for(&pid), &limits, &mode)
                .into_iter()
                .map(|r| r.map(|v| v.kind))
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("judging problem {pid}"))?
        };
        problems.insert(pid, verdicts);
    }
    Ok(EvaluationRun {
        run_id: run_id.to_owned(),
        model_label: model.to_owned(),
        contest_id: bundle.contest_id().to_owned(),
        n_candidates,
        policy,
        fingerprint: ctx.config.fingerprint(),
        tool_version: TOOL_VERSION.to_owned(),
        problems,
    })
}

fn experiment(ctx: &Ctx, which: Rq, io: &ExperimentIo, ns: &[usize]) -> Result<SensitivityReport> {
    let runs = load_runs(&ctx.path(&io.runs))?;
    let (_, contests) = ctx.contests(&io.corpus)?;
    let rules = ctx.config.scoring_rules();
    Ok(match which {
        Rq::Rq1 => rq1_report(&runs, &contests, ns, &rules)?,
        Rq::Rq2 => rq2_division_profile(&runs, &contests, &rules)?,
        Rq::Rq3 => rq3_run_variance(&runs, &contests, &rules)?,
    })
}

fn rq_name(which: Rq) -> &'static str {
    match which {
        Rq::Rq1 => "rq1",
        Rq::Rq2 => "rq2",
        Rq::Rq3 => "rq3",
    }
}

fn run(cli: Cli) -> Result<()> {
    let o = &cli.overrides;
    let overrides = Overrides {
        wrong_cost: o.wrong_cost,
        submission_minute: o.submission_minute,
        tie_mode: o.tie_mode.map(|t| match t {
            TieArg::Pessimistic => TieMode::Pessimistic,
            TieArg::Optimistic => TieMode::Optimistic,
        }),
        default_time_limit_ms: o.time_limit_ms,
        workers: o.workers,
        ..Overrides::default()
    };
    let root = cli.root.clone();
    let config_path = cli
        .config
        .as_ref()
        .map(|p| if p.is_absolute() { p.clone() } else { root.join(p) });
    let mut overrides = overrides;
    if let Command::GenTests { gateway: Some(g), .. } = &cli.command {
        overrides.gateway_endpoint = Some(g.clone());
    }
    let config = Config::resolve(config_path.as_deref(), &|k| std::env::var(k).ok(), &overrides)?;
    let ctx = Ctx { root, config };

    match cli.command {
        Command::Ingest { source, out } => {
            let b = ingest(&ctx.path(&source), &ctx.path(&out))?;
            let summary = json!({
                "provenance": ctx.provenance(&[]),
                "contest_id": b.contest_id(),
                "problems": b.problem_ids(),
                "warnings": b.warnings.iter().map(|w| format!("{}: {}", w.location, w.message)).collect::<Vec<_>>(),
            });
            ctx.emit(None, &canonical_json(&summary))
        }
        Command::GenTests {
            bundle,
            count,
            gateway: _,
            problems,
        } => {
            let mut b = ctx.load(&bundle)?;
            let gw = ctx.config.gateway.build()?;
            let opts = GenOptions {
                count: count.unwrap_or(ctx.config.test_count),
                default_time_limit_ms: ctx.config.default_time_limit_ms,
                concurrency: ctx.config.gateway.concurrency,
                problems: (!problems.is_empty()).then_some(problems),
            };
            let report =
                JudgePool::new(ctx.config.workers).install(|| gen_tests_for_bundle(&mut b, gw.as_ref(), &opts))?;
            let summary = json!({
                "provenance": ctx.provenance(&[("test_count", opts.count.to_string()), ("gateway", gw.identity().to_owned())]),
                "contest_id": b.contest_id(),
                "aborted": report.aborted,
                "problems": report.records.iter().map(|r| json!({
                    "problem_id": r.problem_id,
                    "accepted": r.accepted_inputs.len(),
                    "rejected": r.rejected_inputs.len(),
                    "rejection": r.rejection.as_ref().map(|x| x.to_string()),
                })).collect::<Vec<_>>(),
            });
            let text = canonical_json(&summary);
            fs::write(b.root.join("genlab").join("run.json"), &text).context("writing genlab/run.json")?;
            ctx.emit(None, &text)
        }
        Command::Prompt { bundle, problem, count } => {
            let b = ctx.load(&bundle)?;
            let doc = b
                .statements
                .get(&problem)
                .ok_or_else(|| anyhow!("no statement for problem {problem}"))?;
            let p = build_testgen_prompt(doc, count.unwrap_or(ctx.config.test_count))?;
            ctx.emit(None, &p)
        }
        Command::DetectMulti { bundle, apply } => {
            let mut b = ctx.load(&bundle)?;
            let pool = JudgePool::new(ctx.config.workers);
            let mut results = BTreeMap::new();
            for pid in b.problem_ids() {
                let r = pool.install(|| detect_for_problem(&b, &pid, ctx.config.default_time_limit_ms))?;
                results.insert(pid, r);
            }
            if apply {
                for (pid, r) in &results {
                    apply_detection(&mut b, pid, r);
                }
                let root = b.root.clone();
                save_bundle(&b, &root)?;
            }
            ctx.emit(
                None,
                &canonical_json(&json!({"provenance": ctx.provenance(&[]), "problems": results})),
            )
        }
        Command::ValidateVerifiers { bundle, apply } => {
            let mut b = ctx.load(&bundle)?;
            let mut results = BTreeMap::new();
            for p in b.manifest.problems.clone() {
                if p.verifier.is_none() {
                    continue;
                }
                let r = validate_problem_verifier(
                    &b,
                    &p.id,
                    ctx.config.default_time_limit_ms,
                    &ctx.config.verifier_limits(),
                )?;
                results.insert(p.id.clone(), r);
            }
            if apply {
                for (pid, r) in &results {
                    apply_verifier_report(&mut b, pid, r);
                }
                let root = b.root.clone();
                save_bundle(&b, &root)?;
            }
            let excluded: Vec<_> = b
                .manifest
                .problems
                .iter()
                .filter(|p| !p.scorable())
                .map(|p| p.id.clone())
                .collect();
            ctx.emit(
                None,
                &canonical_json(
                    &json!({"provenance": ctx.provenance(&[]), "verifiers": results, "unscorable": excluded}),
                ),
            )
        }
        Command::Judge(a) => {
            let b = ctx.load(&a.bundle)?;
            let run = judge_run(&ctx, &b, &ctx.path(&a.solutions), &a.model, &a.run_id, a.policy.into())?;
            ctx.emit(a.out.as_deref(), &run.to_json())
        }
        Command::Simulate {
            bundle,
            solutions,
            run,
            policy,
            n,
            out,
        } => {
            let b = ctx.load(&bundle)?;
            let policy: OrderingPolicy = policy.into();
            let r = match (solutions, run) {
                (Some(dir), None) => judge_run(&ctx, &b, &ctx.path(&dir), "model", "simulate", policy)?,
                (None, Some(file)) => EvaluationRun::load(&ctx.path(&file))?,
                _ => bail!("give exactly one of --solutions or --run"),
            };
            let c = ContestContext::from_bundle(&b);
            let score = score_run(&r, &c, policy, n, &ctx.config.scoring_rules())?;
            let defaulted = b.defaulted_time_limits();
            let value = json!({
                "provenance": ctx.provenance(&[
                    ("policy", policy_name(policy)),
                    ("n", n.to_string()),
                    ("defaulted_time_limits", defaulted.join(",")),
                ]),
                "contest_id": b.contest_id(),
                "scored_problems": c.scorable,
                "verdicts": r.problems,
                "row": score.row,
                "rank": score.rank,
                "humans": score.humans,
                "rating": score.elo.rating,
                "elo": score.elo,
                "problems": score.problems,
            });
            ctx.emit(out.as_deref(), &canonical_json(&value))
        }
        Command::Experiment {
            which,
            io,
            n,
            out,
            boxplot,
        } => {
            let report = experiment(&ctx, which, &io, &n)?;
            let header = ctx.header(&[]);
            if let Some(bp) = boxplot {
                ctx.emit(Some(&bp), &report.boxplot_json(&header))?;
            }
            ctx.emit(out.as_deref(), &report.to_csv(&header)?)
        }
        Command::Report { io, n, out_dir } => {
            let header = ctx.header(&[]);
            let mut index = BTreeMap::new();
            for which in [Rq::Rq1, Rq::Rq2, Rq::Rq3] {
                let name = rq_name(which);
                match experiment(&ctx, which, &io, &n) {
                    Ok(report) => {
                        ctx.emit(Some(&out_dir.join(format!("{name}.csv"))), &report.to_csv(&header)?)?;
                        ctx.emit(
                            Some(&out_dir.join(format!("{name}.boxplot.json"))),
                            &report.boxplot_json(&header),
                        )?;
                        index.insert(name, "written".to_owned());
                    }
                    Err(e) if classify(&e) == Class::Domain => {
                        index.insert(name, format!("skipped: {e:#}"));
                    }
                    Err(e) => return Err(e),
                }
            }
            let text = canonical_json(&json!({"provenance": ctx.provenance(&[]), "experiments": index}));
            ctx.emit(Some(&out_dir.join("index.json")), &text)?;
            ctx.emit(None, &text)
        }
        Command::Stats { corpus, out } => {
            let (bundles, _) = ctx.contests(&corpus)?;
            let stats = corpus_stats(&bundles);
            ctx.emit(
                out.as_deref(),
                &canonical_json(&json!({"provenance": ctx.provenance(&[]), "stats": stats})),
            )
        }
    }
}

fn main() -> ExitCode {
    let error_json = std::env::args().any(|a| a == "--error-json");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if error_json {
                let v = json!({"error": {"class": "domain", "message": e.to_string().trim()}});
                eprintln!("{v}");
            } else {
                let _ = e.print();
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = classify(&e);
            if error_json {
                let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
                let v = json!({"error": {"class": class.name(), "message": format!("{e:#}"), "chain": chain}});
                eprintln!("{v}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(class.code())
        }
    }
}
