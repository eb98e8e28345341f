//! `pgs`: synthesize, optimize and check strategies for reachability goals.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pgs_core::baselines::{approx_bounds, brute_force_uniform, uniform_attractor};
use pgs_core::benchgen::{ClassSizeMode, DroneModelSpec, Instance, RandomModelSpec};
use pgs_core::harness::{run_suite, SuiteConfig};
use pgs_core::metrics::{metric_ep, metric_str, strategy_reach};
use pgs_core::optimizer::{optimize, OptimizerConfig};
use pgs_core::strategy::{verify_uniform, verify_winning, InfoMode, StrategyFile, StrategyProfile};
use pgs_core::synthesis::{strat_synth_until, SynthesisError};
use pgs_core::{AgentId, Model, ReachabilityGoal, StateId};

#[derive(Parser)]
#[command(name = "pgs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a perfect-information winning strategy.
    Synth(SynthArgs),
    /// Synthesize, then improve towards a uniform strategy.
    Optimize(OptimizeArgs),
    /// Check a strategy file: exit 0 if uniform and winning, 1 if not.
    Verify(VerifyArgs),
    /// Exhaustive search for a uniform winning strategy.
    Brute(BruteArgs),
    /// Lower and upper approximations of uniform strategy existence.
    Approx(GoalArgs),
    /// Write a random model.
    GenerateRandom(RandomArgs),
    /// Write a drone model.
    GenerateDrone(DroneArgs),
    /// Run an experiment suite.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct GoalArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Coalition agents, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    coalition: Vec<u32>,
    /// Target proposition.
    #[arg(long, default_value = "win")]
    target: String,
    #[arg(long, default_value_t = 0)]
    initial: u32,
}

impl GoalArgs {
    fn load(&self) -> Result<(Model, ReachabilityGoal)> {
        let model = load_model(&self.model)?;
        let goal = ReachabilityGoal::new(
            self.coalition.iter().map(|&a| AgentId(a)).collect(),
            self.target.clone(),
            StateId(self.initial),
        );
        goal.check(&model)?;
        Ok((model, goal))
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "30s", value_parser = humantime::parse_duration)]
    budget: Duration,
    /// Strategy output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-information-set records.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "30s", value_parser = humantime::parse_duration)]
    synth_budget: Duration,
    #[arg(long, default_value = "60s", value_parser = humantime::parse_duration)]
    opt_budget: Duration,
    /// Re-check the strategy after every sweep and undo a losing sweep.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    verify_sweeps: bool,
    #[arg(long)]
    candidate_budget: Option<usize>,
    #[arg(long)]
    exhaustive_threshold: Option<u64>,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Strategy output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Perfect,
    Imperfect,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    strategy: PathBuf,
    #[arg(long, default_value = "win")]
    target: String,
    #[arg(long, default_value_t = 0)]
    initial: u32,
    /// `perfect` only checks winning from the initial state.
    #[arg(long, value_enum, default_value = "imperfect")]
    mode: Mode,
}

#[derive(Args)]
struct BruteArgs {
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, default_value = "90s", value_parser = humantime::parse_duration)]
    budget: Duration,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassSize {
    Log,
    Linear,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    states: usize,
    #[arg(long, value_enum, default_value = "log")]
    class_size: ClassSize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    connections: Option<usize>,
    /// Model output; the generator settings go to `<out>.spec.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DroneArgs {
    #[arg(long, default_value_t = 1)]
    drones: usize,
    #[arg(long)]
    map: usize,
    #[arg(long)]
    energy: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Zero every wall-clock column.
    #[arg(long)]
    no_timing: bool,
}

fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Model::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let (m, goal) = args.goal.load()?;
    let deadline = Instant::now() + args.budget;
    let out = match strat_synth_until(&m, &goal, args.seed, Some(deadline)) {
        Ok(Some(out)) => out,
        Ok(None) => {
            eprintln!(
                "no perfect-information winning strategy from state {}",
                goal.initial_state
            );
            return Ok(ExitCode::from(1));
        }
        Err(SynthesisError::Timeout) => bail!("synthesis budget exceeded"),
        Err(e) => return Err(e.into()),
    };
    emit(args.out.as_deref(), &pretty(&out.profile.to_file()))?;
    if let Some(path) = args.records {
        let records: Vec<_> = out.records.iter().map(|r| r.to_file()).collect();
        emit(Some(&path), &pretty(&records))?;
    }
    eprintln!(
        "str {} ep {} records {}",
        metric_str(&m, &goal, &out.profile),
        metric_ep(&m, &goal, &out.profile),
        out.records.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_optimize(args: OptimizeArgs) -> Result<ExitCode> {
    let (m, goal) = args.goal.load()?;
    let mut cfg = OptimizerConfig {
        synth_budget: args.synth_budget,
        optimize_budget: args.opt_budget,
        verify_each_sweep: args.verify_sweeps,
        seed: args.seed,
        ..Default::default()
    };
    if let Some(b) = args.candidate_budget {
        cfg.candidate_budget = b;
    }
    if let Some(t) = args.exhaustive_threshold {
        cfg.exhaustive_threshold = t;
    }
    let deadline = Instant::now() + cfg.synth_budget;
    let out = match strat_synth_until(&m, &goal, args.seed, Some(deadline)) {
        Ok(Some(out)) => out,
        Ok(None) => {
            eprintln!(
                "no perfect-information winning strategy from state {}",
                goal.initial_state
            );
            return Ok(ExitCode::from(1));
        }
        Err(SynthesisError::Timeout) => bail!("synthesis budget exceeded"),
        Err(e) => return Err(e.into()),
    };
    let trace = optimize(&m, &goal, &out, &cfg);
    emit(args.out.as_deref(), &pretty(&trace.final_profile.to_file()))?;
    if let Some(path) = args.trace {
        emit(Some(&path), &pretty(&trace.to_file()))?;
    }
    eprintln!(
        "ep {} -> {}, str {} -> {}, {} sweeps, {} replacements, {}",
        metric_ep(&m, &goal, &out.profile),
        metric_ep(&m, &goal, &trace.final_profile),
        metric_str(&m, &goal, &out.profile),
        metric_str(&m, &goal, &trace.final_profile),
        trace.sweeps,
        trace.replacements,
        trace.termination.as_str()
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let m = load_model(&args.model)?;
    let text = fs::read_to_string(&args.strategy)
        .with_context(|| format!("reading {}", args.strategy.display()))?;
    let file: StrategyFile = serde_json::from_str(&text)?;
    let profile = StrategyProfile::from_file(&m, &file)?;
    let goal = ReachabilityGoal::new(file.coalition.clone(), args.target, StateId(args.initial));
    goal.check(&m)?;
    let (mode, check_uniform) = match args.mode {
        Mode::Perfect => (InfoMode::Perfect, false),
        Mode::Imperfect => (InfoMode::Imperfect, true),
    };
    let win = verify_winning(&m, &goal, &profile, mode);
    let uniform = check_uniform.then(|| {
        verify_uniform(
            &m,
            &goal.coalition,
            &profile,
            &strategy_reach(&m, &goal, &profile),
        )
    });
    let ok = win.winning && uniform.as_ref().is_none_or(|u| u.uniform);
    let report = json!({
        "winning": win.winning,
        "counterexample": win.counterexample.map(|l| json!({"stem": l.stem, "cycle": l.cycle})),
        "uniform": uniform.as_ref().map(|u| u.uniform),
        "violations": uniform.map(|u| u.violations),
    });
    println!("{}", pretty(&report));
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn brute(args: BruteArgs) -> Result<ExitCode> {
    let (m, goal) = args.goal.load()?;
    let v = brute_force_uniform(&m, &goal, Some(Instant::now() + args.budget))?;
    let report = json!({
        "method": v.method,
        "answer": v.answer,
        "timed_out": v.timed_out,
        "elapsed_s": v.elapsed.as_secs_f64(),
        "witness": v.witness.map(|w| w.to_file()),
    });
    emit(args.out.as_deref(), &pretty(&report))?;
    Ok(ExitCode::SUCCESS)
}

fn approx(args: GoalArgs) -> Result<ExitCode> {
    let (m, goal) = args.load()?;
    let started = Instant::now();
    let b = approx_bounds(&m, &goal)?;
    let witness = b.lower.then(|| uniform_attractor(&m, &goal).1.to_file());
    let report = json!({
        "lower": b.lower,
        "upper": b.upper,
        "conclusive": b.conclusive(),
        "answer": b.answer(),
        "elapsed_s": started.elapsed().as_secs_f64(),
        "witness": witness,
    });
    println!("{}", pretty(&report));
    Ok(ExitCode::SUCCESS)
}

fn write_instance(inst: &Instance, out: &Path) -> Result<()> {
    fs::write(out, inst.model.to_json()).with_context(|| format!("writing {}", out.display()))?;
    let mut side = out.as_os_str().to_owned();
    side.push(".spec.json");
    fs::write(&side, inst.sidecar_json())?;
    println!("{}", pretty(&inst.goal));
    Ok(())
}

fn generate_random(args: RandomArgs) -> Result<ExitCode> {
    let mode = match args.class_size {
        ClassSize::Log => ClassSizeMode::Logarithmic,
        ClassSize::Linear => ClassSizeMode::Linear,
    };
    let spec = RandomModelSpec {
        actions: args.actions,
        connections: args.connections,
        ..RandomModelSpec::new(args.states, mode, args.seed)
    };
    write_instance(&pgs_core::gen_random(&spec)?, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn generate_drone(args: DroneArgs) -> Result<ExitCode> {
    let spec = DroneModelSpec {
        initial_energy: args.energy,
        ..DroneModelSpec::new(args.drones, args.map, args.seed)
    };
    write_instance(&pgs_core::gen_drone(&spec)?, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let suite = SuiteConfig::load(&args.config)?;
    let report = run_suite(&suite, Some(&args.out_dir), args.workers, args.no_timing)?;
    for a in &report.aggregates {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        println!(
            "{}: {} instances, {} realizable, ep {} -> {}, ir {}",
            a.config,
            a.instances,
            a.realizable,
            f(a.ep_before),
            f(a.ep_after),
            f(a.ir)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Optimize(a) => run_optimize(a),
        Command::Verify(a) => verify(a),
        Command::Brute(a) => brute(a),
        Command::Approx(a) => approx(a),
        Command::GenerateRandom(a) => generate_random(a),
        Command::GenerateDrone(a) => generate_drone(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
