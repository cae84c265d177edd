use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use vpm::checkpoint::Checkpoint;
use vpm::compare::{compare, make_policy, play, PolicyParams, TrainedNet};
use vpm::config::Config;
use vpm::formats::{load_log, observation_image, penalty_image, read_map, save_log, save_pgm};
use vpm::trail::save_trail;
use vpm::training::run_training;
use vpm::{Error, Result};
use vpm_core::analysis::{detect_period, phase_difference, polar_series};
use vpm_core::observation::{render_local, render_mini};
use vpm_core::planners::{guard_points, tsp_tour};
use vpm_core::WorldState;

#[derive(Parser)]
#[command(name = "vpm", version, about = "Persistent monitoring on grid maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one episode and optionally write its log, trail and observations.
    Run(RunArgs),
    /// Train a network from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `train_log` from the config.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Overrides `checkpoint` from the config.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the policy × map × agents × seed grid from a config file.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Summary CSV; the table is always printed.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// Per-run CSV.
        #[arg(long)]
        runs_csv: Option<PathBuf>,
    },
    /// Periodicity analysis of a trajectory log.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 0)]
        agent: usize,
        /// Detect the period of the agent's row coordinate.
        #[arg(long)]
        period: bool,
        /// Phase lag of this agent's row series relative to `--agent`.
        #[arg(long)]
        phase: Option<usize>,
        /// Print the agent's polar-angle series, one value per line.
        #[arg(long)]
        polar: bool,
    },
    /// Size, free cells and guard-point tour of a map.
    MapInfo {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 25)]
        fov: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Bundled map name or map file.
    #[arg(long)]
    map: String,
    #[arg(long, value_parser = ["gcs", "tspc", "random", "net"])]
    policy: String,
    #[arg(long, default_value_t = 2)]
    agents: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory log (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trail image (PPM).
    #[arg(long)]
    trail: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    trail_scale: u32,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dmin: Option<f64>,
    #[arg(long)]
    fov: Option<usize>,
    /// Directory for PGM images of the final penalty field and each
    /// agent's observations.
    #[arg(long)]
    dump_obs: Option<PathBuf>,
    /// World and planner settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(f) = a.fov {
        cfg.fov = f;
    }
    if let Some(d) = a.dmin {
        cfg.d_min = d;
    }
    let parsed = read_map(&a.map)?;
    let map = Arc::new(parsed.map);
    let net = match &a.checkpoint {
        Some(p) => Some(Checkpoint::load(p, None)?.to_net()?),
        None => None,
    };
    let params = PolicyParams { d_min: cfg.d_min, fov: cfg.fov, net, greedy: cfg.net_greedy };
    let mut policy = make_policy(&a.policy, &map, a.agents, &params)?;
    let (log, total) =
        play(policy.as_mut(), map.clone(), &a.map, a.agents, &parsed.starts, cfg.world(), a.steps, a.seed)?;
    println!("cumulative |penalty| = {total} ({:.6} ×1e6)", total * 1e-6);
    if let Some(p) = &a.out {
        save_log(&log, p)?;
    }
    if let Some(p) = &a.trail {
        save_trail(&log, &map, a.trail_scale, p)?;
    }
    if let Some(dir) = &a.dump_obs {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        let mut world = WorldState::new(map.clone(), &log.positions[0], cfg.world())?;
        for actions in &log.actions {
            world.step(actions)?;
        }
        save_pgm(&penalty_image(world.penalties(), |i| map.is_free_index(i)), &dir.join("penalty.pgm"))?;
        for i in 0..world.n_agents() {
            save_pgm(
                &observation_image(&render_local(&world, i)?, cfg.r_max),
                &dir.join(format!("agent{i}_local.pgm")),
            )?;
            match render_mini(&world, i) {
                Ok(g) => save_pgm(&observation_image(&g, cfg.r_max), &dir.join(format!("agent{i}_mini.pgm")))?,
                Err(e @ vpm_core::Error::MiniMapDivisibility { .. }) if i == 0 => eprintln!("skipping mini-maps: {e}"),
                Err(vpm_core::Error::MiniMapDivisibility { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn cmd_compare(config: &Path, out_csv: Option<&Path>, runs_csv: Option<&Path>) -> Result<()> {
    let cfg = Config::load(config)?;
    let nets = cfg
        .checkpoints
        .iter()
        .map(|p| {
            let ck = Checkpoint::load(Path::new(p), None)?;
            Ok(TrainedNet { n_train: ck.n_agents, net: ck.to_net()? })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = compare(&cfg, &nets)?;
    print!("{}", report.table());
    let write = |p: &Path, text: String| std::fs::write(p, text).map_err(|source| Error::Io { path: p.into(), source });
    if let Some(p) = out_csv {
        write(p, report.summary_csv()?)?;
    }
    if let Some(p) = runs_csv {
        write(p, report.runs_csv()?)?;
    }
    Ok(())
}

fn cmd_analyze(path: &Path, agent: usize, period: bool, phase: Option<usize>, polar: bool) -> Result<()> {
    let log = load_log(path)?;
    let ys = log.y_series(agent)?;
    let p = detect_period(&ys);
    if period || phase.is_some() {
        match p {
            Some(p) => println!("period = {p}"),
            None => println!("period = none"),
        }
    }
    if let Some(other) = phase {
        let p = p.ok_or_else(|| Error::Config("no period detected, phase is undefined".into()))?;
        println!("phase = {}", phase_difference(&ys, &log.y_series(other)?, p)?);
    }
    if polar {
        for theta in polar_series(&log, agent)? {
            println!("{theta}");
        }
    }
    Ok(())
}

fn cmd_map_info(name: &str, fov: usize) -> Result<()> {
    let parsed = read_map(name)?;
    let m = &parsed.map;
    println!("size = {}x{}", m.height(), m.width());
    println!("free = {}", m.free_count());
    println!("declared starts = {}", parsed.starts.len());
    let guards = guard_points(m, fov)?;
    let tour = tsp_tour(&guards, m)?;
    println!("guard points (fov {fov}) = {}", guards.len());
    println!("tour length = {}", tour.length);
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Train { config, log, checkpoint } => Config::load(&config).and_then(|cfg| {
            let log = log.unwrap_or_else(|| cfg.train_log.clone().into());
            let ck = checkpoint.unwrap_or_else(|| cfg.checkpoint.clone().into());
            let (_, report) = run_training(&cfg, &log, &ck)?;
            if let Some(last) = report.stats.last() {
                println!("episodes = {}, last |penalty| = {}", report.stats.len(), last.cumulative_penalty);
            }
            if report.diverged {
                eprintln!("training stopped early: parameters became non-finite");
            }
            Ok(())
        }),
        Command::Compare { config, out_csv, runs_csv } => cmd_compare(&config, out_csv.as_deref(), runs_csv.as_deref()),
        Command::Analyze { log, agent, period, phase, polar } => cmd_analyze(&log, agent, period, phase, polar),
        Command::MapInfo { map, fov } => cmd_map_info(&map, fov),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
