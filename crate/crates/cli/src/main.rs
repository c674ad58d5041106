use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use guard_core::assignment::{solve_assignment, verify_assignment, RewardMatrix};
use guard_core::lqdg::GainCache;
use guard_core::pipeline::{compute_rewards, run_pipeline, PipelineConfig, RunReport, AXES};
use guard_core::rollout::{read_trajectory_csv, write_trajectory_csv, AgentModels, INFEASIBLE_REWARD};
use guard_core::scenario::{generate_scenario, load_scenario, save_scenario, ScenarioTemplate};
use guard_core::Error;

mod horizons;

#[derive(Parser)]
#[command(name = "guard", version, about = "Collaborative interceptor guidance and group assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random scenario.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        interceptors: usize,
        #[arg(long, default_value_t = 3)]
        threats: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the group-to-threat reward matrix.
    RewardMatrix {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the max-min assignment for a reward matrix.
    Assign {
        /// Reward matrix written by `reward-matrix`.
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        rewards: Option<PathBuf>,
        /// Build the reward matrix from this scenario first.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: rewards, assignment, final engagements.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a run's exported trajectories against the dynamics.
    Replay {
        /// Directory written by `run`, or a report.json inside it.
        #[arg(long)]
        out: PathBuf,
        /// Also re-run the pipeline on the embedded scenario and compare
        /// the report bytes.
        #[arg(long)]
        rerun: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Sample time, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon candidates: steps (`200`), seconds (`1.2s`) or ranges
    /// (`120:480:3`, `0.6s:2.4s:0.015s`), comma separated.
    #[arg(long)]
    horizons: Option<String>,
    /// Interceptor-focus ratio of the emphasis space; repeatable.
    #[arg(long = "emphasis-ratio")]
    emphasis_ratio: Vec<f64>,
    /// Weight the threat puts on reaching the asset, relative to evading each interceptor.
    #[arg(long)]
    threat_emphasis: Option<f64>,
    /// Worker threads for the reward sweep.
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn config(&self) -> anyhow::Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(dt) = self.dt {
            config.sample_time_s = dt;
        }
        if let Some(spec) = &self.horizons {
            config.horizons_steps = horizons::parse(spec, config.sample_time_s)
                .map_err(|message| Error::Validation {
                    field: "--horizons".into(),
                    message,
                })?;
        }
        if !self.emphasis_ratio.is_empty() {
            config.emphasis_ratios = self.emphasis_ratio.clone();
        }
        if let Some(t) = self.threat_emphasis {
            config.threat_emphasis = t;
        }
        config.validate()?;
        Ok(config)
    }
}

fn pool(threads: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Validation {
                field: "--threads".into(),
                message: "must be at least 1".into(),
            }
            .into());
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_rewards(r: &RewardMatrix) {
    print!("{:>20}", "");
    for j in 0..r.threats() {
        print!("{:>12}", format!("T{}", j + 1));
    }
    println!();
    for (c, g) in r.groups.iter().enumerate() {
        print!("{:>20}", g.label());
        for j in 0..r.threats() {
            if r.feasible[j][c] {
                print!("{:>12.1}", r.values[j][c]);
            } else {
                print!("{:>12}", "-");
            }
        }
        println!();
    }
}

fn cmd_reward_matrix(scenario: &Path, args: &PipelineArgs, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(scenario)?;
    let config = args.config()?;
    let cache = GainCache::new();
    let rewards = pool(args.threads)?.install(|| compute_rewards(&scenario, &config, &cache))?;
    print_rewards(&rewards);
    if let Some(out) = out {
        write_file(&out.join("rewards.json"), &(serde_json::to_string_pretty(&rewards)? + "\n"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_assign(
    rewards: Option<&Path>,
    scenario: Option<&Path>,
    args: &PipelineArgs,
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let rewards: RewardMatrix = match (rewards, scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(Error::from)?
        }
        (None, Some(path)) => {
            let scenario = load_scenario(path)?;
            let config = args.config()?;
            let cache = GainCache::new();
            pool(args.threads)?.install(|| compute_rewards(&scenario, &config, &cache))?
        }
        (None, None) => bail!("either --rewards or --scenario is required"),
    };
    let (m, n) = (rewards.interceptors, rewards.threats());
    let solution = solve_assignment(&rewards, m, n)?;
    let verification = verify_assignment(&solution.z, &rewards, m, n, solution.regime);
    for &(j, c) in &solution.assigned_pairs {
        let v = rewards.values[j][c];
        let shown = if v <= INFEASIBLE_REWARD { "infeasible".to_string() } else { format!("{v:.1} ft") };
        println!("T{} <- {} {}", j + 1, rewards.groups[c].label(), shown);
    }
    println!("objective {:.1} ft ({:?})", solution.objective, solution.regime);
    if let Some(out) = out {
        let body = serde_json::json!({ "assignment": solution, "verification": verification });
        write_file(&out.join("assignment.json"), &(serde_json::to_string_pretty(&body)? + "\n"))?;
    }
    if solution.sentinel_objective || !verification.is_valid() {
        eprintln!("assignment relies on an infeasible engagement");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_run(report: &RunReport, out: &Path) -> anyhow::Result<()> {
    write_file(&out.join("report.json"), &report.to_json())?;
    let dir = out.join("trajectories");
    fs::create_dir_all(&dir)?;
    for e in &report.engagements {
        if let Some(t) = &e.trajectory {
            let path = dir.join(format!("{}.csv", e.threat_id));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trajectory_csv(t, &e.agent_ids, std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

fn cmd_run(scenario: &Path, args: &PipelineArgs, out: &Path) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(scenario)?;
    let config = args.config()?;
    let (report, timings) = pool(args.threads)?.install(|| run_pipeline(&scenario, &config))?;
    write_run(&report, out)?;
    write_file(&out.join("timings.json"), &(serde_json::to_string_pretty(&timings)? + "\n"))?;

    for e in &report.engagements {
        match (e.miss_ft, e.intercept_distance_ft, e.horizon_s) {
            (Some(miss), Some(dist), Some(h)) if e.feasible => println!(
                "{} <- {:<20} miss {:6.1} ft  intercept at {:7.1} ft from asset  t = {:.3} s",
                e.threat_id,
                e.interceptor_ids.join(","),
                miss,
                dist,
                h
            ),
            _ => println!("{} <- {:<20} no capturing (d, H) found", e.threat_id, e.interceptor_ids.join(",")),
        }
    }
    println!(
        "reward matrix {:.2} s, assignment {:.3} s, rollouts {:.3} s",
        timings.reward_matrix_s, timings.assignment_s, timings.rollouts_s
    );
    if report.succeeded() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("uncovered threats: {}", report.summary.uncovered_threats.join(", "));
        Ok(ExitCode::from(3))
    }
}

fn cmd_replay(out: &Path, rerun: bool, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let (dir, report_path) = if out.is_dir() {
        (out.to_path_buf(), out.join("report.json"))
    } else {
        (out.parent().map(Path::to_path_buf).unwrap_or_default(), out.to_path_buf())
    };
    let text = fs::read_to_string(&report_path).with_context(|| format!("reading {}", report_path.display()))?;
    let report = RunReport::from_json(&text)?;
    let models = AgentModels::double_integrators(report.config.sample_time_s, AXES)?;
    let limits = report.scenario.input_limits();
    let mut failures = 0;
    for e in &report.engagements {
        let Some(stored) = &e.trajectory else { continue };
        let path = dir.join("trajectories").join(format!("{}.csv", e.threat_id));
        let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let (t, ids) = read_trajectory_csv(file, report.config.sample_time_s)?;
        let system = models.engagement(t.m())?;
        let mut problems = Vec::new();
        if ids != e.agent_ids {
            problems.push("agent ids differ from the report".to_string());
        }
        if &t != stored {
            problems.push("csv differs from the report trajectory".to_string());
        }
        if let Some(h) = t.replay_mismatch(&system) {
            problems.push(format!("state at step {h} does not follow from step {}", h - 1));
        }
        if !t.within_limits(&limits) {
            problems.push("inputs exceed the acceleration limits".to_string());
        }
        if e.recomputed() != e.miss_ft.zip(e.intercept_distance_ft) {
            problems.push("summary distances do not match the trajectory".to_string());
        }
        if problems.is_empty() {
            println!("{}: {} steps replay exactly", e.threat_id, t.horizon());
        } else {
            failures += 1;
            for p in problems {
                println!("{}: {p}", e.threat_id);
            }
        }
    }
    if rerun {
        let (again, _) = pool(threads)?.install(|| run_pipeline(&report.scenario, &report.config))?;
        if again.to_json() == text {
            println!("re-run reproduces report.json byte for byte");
        } else {
            println!("re-run produced a different report");
            failures += 1;
        }
    }
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Validation { .. } | Error::InvalidArgument(_) | Error::Parse(_)) => 2,
        Some(Error::Infeasible(_)) => 3,
        Some(Error::Numerical(_) | Error::Solvability { .. } | Error::Blowup { .. }) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate {
            seed,
            interceptors,
            threats,
            out,
        } => {
            let scenario = generate_scenario(seed, interceptors, threats, &ScenarioTemplate::default())?;
            match out {
                Some(path) => save_scenario(&scenario, path)?,
                None => print!("{}", scenario.to_json()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RewardMatrix { scenario, pipeline, out } => cmd_reward_matrix(&scenario, &pipeline, out.as_deref()),
        Command::Assign {
            rewards,
            scenario,
            pipeline,
            out,
        } => cmd_assign(rewards.as_deref(), scenario.as_deref(), &pipeline, out.as_deref()),
        Command::Run { scenario, pipeline, out } => cmd_run(&scenario, &pipeline, &out),
        Command::Replay { out, rerun, threads } => cmd_replay(&out, rerun, threads),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
