//! `mailab`: fixture generation, evaluation, training, verification suites
//! and parameter sweeps.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or
//! configuration error, 3 coverage assumption violated.

mod sweep;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mailab::algorithms::{train, Algorithm, DemoSource, DensityMode, PolicyPlayer, TrainConfig};
use mailab::eval::{evaluate, recoverability_constant, RecoverabilityMode};
use mailab::fixtures::{by_name, random_deviations, FixtureArgs};
use mailab::io::{
    load_deviations, load_game, load_policy, read_json, write_json, write_query_log, write_trace,
    ExpectedFile,
};
use mailab::oco::{OcoRule, StepSchedule};
use mailab::verify::{
    run_suite, write_report, ReportRow, Suite, VerifyOptions, DEFAULT_BASE_SEED, DEFAULT_TOLERANCE,
    SCHEMA_VERSION,
};
use mailab::{DeviationClass, Error, MarkovGame};

#[derive(Parser)]
#[command(name = "mailab", version, about = "Markov-game imitation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a named fixture (game, expert, learner, deviations, expected values).
    Gen(GenArgs),
    /// Evaluate a learner policy against an expert.
    Eval(EvalArgs),
    /// Train a mediator policy.
    Train(TrainArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Run a parameter grid described by a JSON config.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = FixtureArgs::default().horizon)]
    horizon: usize,
    #[arg(long, default_value_t = FixtureArgs::default().u)]
    u: f64,
    #[arg(long, default_value_t = FixtureArgs::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = FixtureArgs::default().eps)]
    eps: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeviationSource {
    /// Every deviation of every agent.
    Complete,
    /// Deviations read from `--deviation-file`, plus identities.
    File,
    /// Six seeded random deviations, plus identities.
    Random,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    expert: PathBuf,
    #[arg(long)]
    learner: PathBuf,
    #[arg(long, value_enum, default_value = "complete")]
    deviations: DeviationSource,
    #[arg(long)]
    deviation_file: Option<PathBuf>,
    /// Compare the regret gap with `expected.regret_gap` from this file.
    #[arg(long)]
    expected: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Fail with the coverage exit code when the expert misses a state.
    #[arg(long)]
    require_coverage: bool,
    /// Include per-agent Q/V/A tables in the report.
    #[arg(long)]
    tables: bool,
    #[arg(long, default_value_t = DEFAULT_BASE_SEED)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Eg,
    Psd,
    Ftl,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    algo: String,
    #[arg(long)]
    game: PathBuf,
    /// Expert policy. BLADES only reaches it through a query oracle.
    #[arg(long)]
    expert: PathBuf,
    #[arg(long, default_value_t = 500)]
    rounds: usize,
    #[arg(long, default_value_t = DEFAULT_BASE_SEED)]
    seed: u64,
    /// Defaults to `complete` for jbc/jirl and `random` for malice/blades.
    #[arg(long, value_enum)]
    deviations: Option<DeviationSource>,
    #[arg(long)]
    deviation_file: Option<PathBuf>,
    /// Sampled demonstrations; 0 uses the expert's exact rows.
    #[arg(long, default_value_t = 0)]
    demos: usize,
    /// Monte-Carlo rollouts per deviated density; 0 uses exact densities.
    #[arg(long, default_value_t = 0)]
    rollouts: usize,
    #[arg(long, value_enum, default_value = "eg")]
    rule: RuleArg,
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    /// J-IRL reward shrinkage; 0 uses sign rewards.
    #[arg(long, default_value_t = 0.0)]
    regularizer: f64,
    /// J-IRL soft value-iteration temperature; omitted uses exact best responses.
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_BASE_SEED)]
    seed: u64,
    /// Report CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `jobs`.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep(args) => sweep::cmd_sweep(&args.config, args.jobs),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let coverage = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(Error::Coverage { .. } | Error::ZeroCoverage { .. })
        )
    });
    if coverage {
        3
    } else {
        2
    }
}

fn cmd_gen(args: &GenArgs) -> Result<bool> {
    let fixture_args = FixtureArgs {
        horizon: args.horizon,
        u: args.u,
        beta: args.beta,
        eps: args.eps,
    };
    let fixtures = by_name(&args.name, fixture_args)?;
    let many = fixtures.len() > 1;
    for fx in &fixtures {
        let prefix = if many {
            format!("{}-", fx.name)
        } else {
            String::new()
        };
        for path in mailab::io::write_fixture(&args.out, &prefix, fx)? {
            println!("{}", path.display());
        }
    }
    Ok(true)
}

fn deviation_class(
    game: &MarkovGame,
    source: DeviationSource,
    file: Option<&Path>,
    seed: u64,
) -> Result<DeviationClass> {
    Ok(match source {
        DeviationSource::Complete => DeviationClass::complete(game.num_agents),
        DeviationSource::File => {
            let path = file.context("--deviations file needs --deviation-file")?;
            let devs = load_deviations(path, game)
                .with_context(|| format!("reading {}", path.display()))?;
            DeviationClass::explicit_with_identities(game, devs)
        }
        DeviationSource::Random => {
            DeviationClass::explicit_with_identities(game, random_deviations(game, 6, seed))
        }
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "game".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_eval(args: &EvalArgs) -> Result<bool> {
    if !(args.tolerance > 0.0) {
        bail!("tolerance must be positive");
    }
    let game = load_game(&args.game).with_context(|| format!("reading {}", args.game.display()))?;
    let expert = load_policy(&args.expert, &game)?;
    let learner = load_policy(&args.learner, &game)?;
    let class = deviation_class(
        &game,
        args.deviations,
        args.deviation_file.as_deref(),
        args.seed,
    )?;
    let start = std::time::Instant::now();
    let report = evaluate(&game, &expert, &learner, &class, args.tables)?;
    if args.require_coverage && report.beta <= 0.0 {
        let d = mailab::eval::state_distribution(&game, &expert);
        let state = d.iter().position(|p| *p <= 0.0).unwrap_or(0);
        return Err(Error::ZeroCoverage { state }.into());
    }
    let mut row = ReportRow {
        schema_version: SCHEMA_VERSION,
        suite: "eval".into(),
        fixture: stem(&args.game),
        algo: "none".into(),
        horizon: Some(game.horizon),
        m: Some(game.num_agents),
        beta: Some(report.beta),
        u: Some(report.u),
        value_gap: Some(report.value_gap),
        regret_gap: Some(report.regret_gap),
        measured: report.regret_gap,
        pass: true,
        ..ReportRow::default()
    };
    if let Some(path) = &args.expected {
        let expected: ExpectedFile = read_json(path)?;
        row.fixture = expected.fixture.clone();
        if let Some(&gap) = expected.expected.get("regret_gap") {
            row.expected = Some(gap);
            row.pass = (report.regret_gap - gap).abs() <= args.tolerance;
        }
    }
    row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("eval.json"), &report)?;
    write_report(File::create(args.out.join("report.csv"))?, &[row.clone()])?;
    println!(
        "regret_gap {} value_gap {} beta {} u {}{}",
        report.regret_gap,
        report.value_gap,
        report.beta,
        report.u,
        if report.regret_exact {
            ""
        } else {
            " (stationary regret is a lower bound)"
        }
    );
    Ok(row.pass)
}

#[derive(Serialize)]
struct TrainSummary {
    algo: String,
    rounds: usize,
    seed: u64,
    best_round: usize,
    final_loss: f64,
    query_count: Option<u64>,
    value_gap: f64,
    regret_gap: f64,
    u: f64,
    /// `2 * final_loss * u * H` for MALICE and BLADES.
    bound: Option<f64>,
}

fn cmd_train(args: &TrainArgs) -> Result<bool> {
    let algorithm: Algorithm = args.algo.parse()?;
    let game = load_game(&args.game).with_context(|| format!("reading {}", args.game.display()))?;
    let expert = load_policy(&args.expert, &game)?;
    let needs_explicit = matches!(algorithm, Algorithm::Malice | Algorithm::Blades);
    let source = args.deviations.unwrap_or(if needs_explicit {
        DeviationSource::Random
    } else {
        DeviationSource::Complete
    });
    let class = deviation_class(&game, source, args.deviation_file.as_deref(), args.seed)?;
    let mut config = TrainConfig::new(algorithm, args.rounds, class.clone());
    config.oco.seed = args.seed;
    config.oco.rule = match args.rule {
        RuleArg::Eg => OcoRule::ExponentiatedGradient,
        RuleArg::Psd => OcoRule::ProjectedSubgradient,
        RuleArg::Ftl => OcoRule::FollowTheLeader,
    };
    config.oco.schedule = StepSchedule::Anytime {
        scale: args.step_scale,
    };
    if args.demos > 0 {
        config.demos = DemoSource::Sampled { count: args.demos };
    }
    if args.rollouts > 0 {
        config.density = DensityMode::MonteCarlo {
            rollouts: args.rollouts,
        };
    }
    config.jirl.regularizer = args.regularizer;
    if let Some(temperature) = args.temperature {
        config.jirl.player = PolicyPlayer::SoftValueIteration { temperature };
    }
    let out = train(&game, &expert, &config)?;

    let report = evaluate(&game, &expert, &out.policy, &class, false)?;
    let u = recoverability_constant(&game, &expert, &class, RecoverabilityMode::BestResponse)?;
    let bound = needs_explicit.then_some(2.0 * out.final_loss * u * game.horizon as f64);
    let summary = TrainSummary {
        algo: args.algo.clone(),
        rounds: args.rounds,
        seed: args.seed,
        best_round: out.best_round,
        final_loss: out.final_loss,
        query_count: out.query_count,
        value_gap: report.value_gap,
        regret_gap: report.regret_gap,
        u,
        bound,
    };
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("policy.json"), &out.policy)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    write_trace(
        BufWriter::new(File::create(args.out.join("trace.csv"))?),
        &out.trace,
    )?;
    if out.query_count.is_some() {
        write_query_log(
            BufWriter::new(File::create(args.out.join("queries.jsonl"))?),
            &out.query_log,
        )?;
    }
    println!(
        "final_loss {} regret_gap {} value_gap {}",
        out.final_loss, report.regret_gap, report.value_gap
    );
    Ok(true)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let options = VerifyOptions {
        tolerance: args.tolerance,
        base_seed: args.seed,
    };
    let mut rows = Vec::new();
    for suite in suites {
        let suite_rows = run_suite(suite, &options)?;
        let passed = suite_rows.iter().filter(|r| r.pass).count();
        println!("{}: {passed}/{} pass", suite.name(), suite_rows.len());
        for row in suite_rows.iter().filter(|r| !r.pass) {
            println!(
                "  FAIL {} measured {} bound {:?} expected {:?}",
                row.fixture, row.measured, row.bound, row.expected
            );
        }
        rows.extend(suite_rows);
    }
    if let Some(path) = &args.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        write_report(File::create(path)?, &rows)?;
    }
    Ok(rows.iter().all(|r| r.pass))
}
