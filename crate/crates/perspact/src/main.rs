use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use perspact::agents::{parse_agent_output, AgentCommand};
use perspact::gateway::{LiveTransport, PlaybackTransport, RecordTransport, Transport};
use perspact::harness::{
    emit_report, read_jsonl, run_suite, summarize, write_jsonl, Outcome, PolicyKind, RunConfig,
    TrialRecord,
};
use perspact::ids::matcher;
use perspact::planner::{plan_optimal, plan_stats};
use perspact::scenario::{generate, reference_instance, validate, Family, ScenarioInstance};
use perspact::world::StepEvent;

#[derive(Parser)]
#[command(
    name = "perspact",
    about = "Benchmark harness for the household Director task",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite of trials and write a JSONL log plus a markdown report.
    Run(RunArgs),
    /// Print the optimal plan for an instance; optionally emit its PDDL.
    Plan(PlanArgs),
    /// Generate instances and check their structural invariants.
    Validate(ValidateArgs),
    /// Re-execute a trial log against the simulator and verify every step.
    Replay(ReplayArgs),
    /// Summarize an existing trial log into a markdown report.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; conflicts with the individual suite flags.
    #[arg(long, conflicts_with_all = [
        "policy", "family", "trials", "generated", "seed", "max_steps", "parallel", "model",
    ])]
    config: Option<PathBuf>,
    #[arg(long, default_value = "greedy")]
    policy: PolicyKind,
    /// Family to run (repeatable); defaults to all seven.
    #[arg(long = "family")]
    family: Vec<Family>,
    /// Trials per family.
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Sample fresh instances instead of the reference ones.
    #[arg(long)]
    generated: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = perspact::world::MAX_STEPS_DEFAULT)]
    max_steps: u32,
    /// Worker threads for trial execution.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Model name sent to the gateway (LLM policies only).
    #[arg(long, default_value = "local-test")]
    model: String,
    /// Transport for LLM policies: live, record:PATH, playback:PATH,
    /// or playback-ordered:PATH.
    #[arg(long)]
    transport: Option<String>,
    /// Chat-completions base URL for live/record transports.
    #[arg(long)]
    base_url: Option<String>,
    /// Output directory for trials.jsonl and report.md.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    family: Family,
    /// Plan a generated instance instead of the reference one.
    #[arg(long)]
    seed: Option<u64>,
    /// Write domain.pddl and problem.pddl into this directory.
    #[arg(long)]
    emit_pddl: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Family to check (repeatable); defaults to all seven.
    #[arg(long = "family")]
    family: Vec<Family>,
    /// First seed to generate.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds per family.
    #[arg(long, default_value_t = 100)]
    count: u64,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trial log produced by `run`.
    #[arg(long)]
    log: PathBuf,
    /// Reconstruct instances with the generator instead of the references.
    #[arg(long)]
    generated: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Trial log produced by `run`.
    #[arg(long)]
    log: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn build_transport(
    spec: Option<&str>,
    base_url: Option<&str>,
) -> Result<Option<Arc<dyn Transport>>> {
    let Some(spec) = spec else { return Ok(None) };
    let need_url = || {
        base_url
            .ok_or_else(|| anyhow::anyhow!("--base-url is required for the {spec} transport"))
    };
    let transport: Arc<dyn Transport> = match spec.split_once(':') {
        None if spec == "live" => Arc::new(LiveTransport::from_env(need_url()?)?),
        Some(("record", path)) => Arc::new(RecordTransport::new(
            Box::new(LiveTransport::from_env(need_url()?)?),
            Path::new(path),
        )),
        Some(("playback", path)) => Arc::new(PlaybackTransport::keyed_from_path(Path::new(path))?),
        Some(("playback-ordered", path)) => {
            Arc::new(PlaybackTransport::ordered_from_path(Path::new(path))?)
        }
        _ => bail!(
            "unknown transport `{spec}` (expected live, record:PATH, playback:PATH, \
             or playback-ordered:PATH)"
        ),
    };
    Ok(Some(transport))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => RunConfig::from_path(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig {
            policy: args.policy,
            families: if args.family.is_empty() {
                Family::ALL.to_vec()
            } else {
                args.family.clone()
            },
            trials: args.trials,
            generated: args.generated,
            seed: args.seed,
            max_steps: args.max_steps,
            parallel: args.parallel,
            model: args.model.clone(),
        },
    };
    let transport = build_transport(args.transport.as_deref(), args.base_url.as_deref())?;
    let result = run_suite(&config, transport)?;

    std::fs::create_dir_all(&args.out)?;
    let log_path = args.out.join("trials.jsonl");
    write_jsonl(&result.records, &log_path)?;
    let report = emit_report(&result.summary);
    let report_path = args.out.join("report.md");
    std::fs::write(&report_path, &report)?;

    println!("wrote {} ({} trials)", log_path.display(), result.records.len());
    println!("wrote {}\n", report_path.display());
    print!("{report}");
    Ok(())
}

fn instance_for(family: Family, seed: Option<u64>) -> Result<ScenarioInstance> {
    Ok(match seed {
        Some(seed) => generate(family, seed)?,
        None => reference_instance(family),
    })
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let instance = instance_for(args.family, args.seed)?;
    let plan = plan_optimal(&instance)?;
    let stats = plan_stats(&plan);
    println!(
        "{}: {} steps ({} ask, {} move) — target {} per \"{}\"",
        instance.problem_name(),
        stats.steps,
        stats.asks,
        stats.moves,
        instance.target,
        instance.instruction.rendered(),
    );
    for (i, action) in plan.iter().enumerate() {
        println!("  {}. {action}", i + 1);
    }
    if let Some(dir) = &args.emit_pddl {
        std::fs::create_dir_all(dir)?;
        let domain_path = dir.join("domain.pddl");
        std::fs::write(&domain_path, perspact::scenario::DOMAIN_PDDL)?;
        let problem_path = dir.join("problem.pddl");
        std::fs::write(&problem_path, instance.emit_problem())?;
        println!("wrote {}", domain_path.display());
        println!("wrote {}", problem_path.display());
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let families = if args.family.is_empty() {
        Family::ALL.to_vec()
    } else {
        args.family
    };
    let mut failures = 0u64;
    for family in families {
        let mut ok = 0u64;
        for seed in args.seed..args.seed + args.count {
            match generate(family, seed).and_then(|i| validate(&i).map(|()| i)) {
                Ok(_) => ok += 1,
                Err(e) => {
                    failures += 1;
                    eprintln!("{family} seed {seed}: {e}");
                }
            }
        }
        println!("{family}: {ok}/{} valid", args.count);
    }
    if failures > 0 {
        bail!("{failures} invalid instances");
    }
    Ok(())
}

/// Re-applies each logged command to a freshly built instance and checks
/// that observations, events, per-trial stats, and outcomes all match the
/// log. Director answers are carried as data, not re-derived, so logs from
/// model-backed directors verify too.
fn verify_record(record: &TrialRecord, generated: bool) -> Result<()> {
    let instance = if generated {
        generate(record.family, record.seed)?
    } else {
        reference_instance(record.family)
    };
    if instance.target != record.target {
        bail!("target mismatch: log has {}, instance has {}", record.target, instance.target);
    }
    let mut state = instance.initial_state();
    let mut last_event: Option<StepEvent> = None;
    for step in &record.steps {
        let observation = perspact::world::render_observation(&instance.map, &state, &matcher())?;
        if observation != step.observation {
            bail!(
                "step {}: observation diverged\n  log: {}\n  sim: {}",
                step.step, step.observation, observation
            );
        }
        let parsed = parse_agent_output(&step.command)
            .map_err(|e| anyhow::anyhow!("step {}: unparseable command: {e}", step.step))?;
        let event = match parsed.command {
            AgentCommand::Done => StepEvent::Rejected {
                reason: "task not complete".into(),
            },
            AgentCommand::Act(action) => {
                let (next, event) = state.apply(&instance.map, &matcher(), &action)?;
                state = next;
                event
            }
        };
        if event != step.event {
            bail!(
                "step {}: event diverged\n  log: {:?}\n  sim: {:?}",
                step.step, step.event, event
            );
        }
        last_event = Some(event);
    }
    let succeeded =
        matches!(&last_event, Some(StepEvent::Took { object }) if *object == record.target);
    match &record.outcome {
        Outcome::Success if !succeeded => bail!("log claims success but the replay does not"),
        Outcome::StepLimit if succeeded => bail!("log claims a step-limit failure but the replay succeeds"),
        _ => {}
    }
    if record.stats.success != succeeded {
        bail!("stats.success disagrees with the replayed steps");
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let records = read_jsonl(&args.log)?;
    let mut failures = 0usize;
    for record in &records {
        match verify_record(record, args.generated) {
            Ok(()) => println!("{} trial {}: ok ({} steps)", record.family, record.trial, record.stats.steps),
            Err(e) => {
                failures += 1;
                eprintln!("{} trial {}: FAILED: {e}", record.family, record.trial);
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} trials diverged", records.len());
    }
    println!("all {} trials verified", records.len());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let records = read_jsonl(&args.log)?;
    if records.is_empty() {
        bail!("{} holds no trials", args.log.display());
    }
    let summary = summarize(&records[0].policy.clone(), &records);
    let report = emit_report(&summary);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &report)?;
            println!("wrote {}", path.display());
        }
        None => print!("{report}"),
    }
    Ok(())
}
