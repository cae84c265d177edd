//! Factorial experiment grid: policy × map × (N_train, N_test) × seed.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vpm_core::episode::{run_episode, EpisodeMeta, TrajectoryLog};
use vpm_core::nn::{NetPolicy, PolicyNet};
use vpm_core::planners::{guard_points, tsp_tour, GcsPolicy, RandomPolicy, TspcPolicy};
use vpm_core::policy::JointPolicy;
use vpm_core::world::random_starts;
use vpm_core::{Cell, GridMap, WorldConfig, WorldState};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formats::read_map;

/// What a policy needs beyond the map.
#[derive(Clone, Debug)]
pub struct PolicyParams {
    pub d_min: f64,
    pub fov: usize,
    pub net: Option<PolicyNet>,
    pub greedy: bool,
}

pub fn make_policy(
    name: &str,
    map: &GridMap,
    n_agents: usize,
    p: &PolicyParams,
) -> Result<Box<dyn JointPolicy + Send>> {
    Ok(match name {
        "random" => Box::new(RandomPolicy),
        "gcs" => Box::new(GcsPolicy::new(p.d_min)),
        "tspc" => {
            let tour = tsp_tour(&guard_points(map, p.fov)?, map)?;
            Box::new(TspcPolicy::new(&tour, n_agents))
        }
        "net" => {
            let net = p.net.clone().ok_or_else(|| Error::Config("the net policy needs a checkpoint".into()))?;
            Box::new(NetPolicy { net, greedy: p.greedy })
        }
        other => return Err(Error::UnknownPolicy(other.into())),
    })
}

/// Plays one seeded episode. Starts come from the policy if it places its
/// agents, then from `fixed_starts` if it has one cell per agent,
/// otherwise uniformly at random from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn play(
    policy: &mut dyn JointPolicy,
    map: Arc<GridMap>,
    map_id: &str,
    n_agents: usize,
    fixed_starts: &[Cell],
    world: WorldConfig,
    steps: usize,
    seed: u64,
) -> Result<(TrajectoryLog, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = match policy.start_positions(n_agents) {
        Some(s) => s,
        None if fixed_starts.len() == n_agents => fixed_starts.to_vec(),
        None => random_starts(&map, n_agents, &mut rng),
    };
    let mut state = WorldState::new(map, &starts, world)?;
    let meta = EpisodeMeta { map_id: map_id.into(), policy_id: policy.name().into(), seed, ..Default::default() };
    Ok(run_episode(policy, &mut state, steps, meta, &mut rng)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub policy: String,
    pub map: String,
    /// Agents the network was trained with; `None` for planners.
    pub n_train: Option<usize>,
    pub n_test: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub spec: RunSpec,
    pub penalty: Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub policy: String,
    pub map: String,
    pub n_train: Option<usize>,
    pub n_test: usize,
    pub runs: usize,
    pub failures: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 with fewer than two runs.
    pub std: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub runs: Vec<RunResult>,
    pub cells: Vec<CellSummary>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn fmt_train(n: Option<usize>) -> String {
    n.map_or_else(|| "-".into(), |n| n.to_string())
}

impl ExperimentReport {
    fn summarize(runs: Vec<RunResult>) -> Self {
        let mut cells: Vec<CellSummary> = Vec::new();
        let mut groups: Vec<(RunSpec, Vec<&RunResult>)> = Vec::new();
        for r in &runs {
            let key = |s: &RunSpec| (s.policy.clone(), s.map.clone(), s.n_train, s.n_test);
            match groups.iter_mut().find(|(s, _)| key(s) == key(&r.spec)) {
                Some((_, v)) => v.push(r),
                None => groups.push((r.spec.clone(), vec![r])),
            }
        }
        for (spec, rs) in groups {
            let ok: Vec<f64> = rs.iter().filter_map(|r| r.penalty.as_ref().ok().copied()).collect();
            let (mean, std) = mean_std(&ok);
            cells.push(CellSummary {
                policy: spec.policy,
                map: spec.map,
                n_train: spec.n_train,
                n_test: spec.n_test,
                runs: rs.len(),
                failures: rs.len() - ok.len(),
                mean,
                std,
            });
        }
        ExperimentReport { runs, cells }
    }

    pub fn cell(&self, policy: &str, map: &str, n_test: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.policy == policy && c.map == map && c.n_test == n_test)
    }

    /// Summary CSV, one row per grid cell, penalties raw and ×10⁻⁶.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "policy",
            "map",
            "n_train",
            "n_test",
            "runs",
            "failures",
            "mean_penalty",
            "std_penalty",
            "mean_penalty_1e6",
            "std_penalty_1e6",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.policy.clone(),
                c.map.clone(),
                fmt_train(c.n_train),
                c.n_test.to_string(),
                c.runs.to_string(),
                c.failures.to_string(),
                c.mean.to_string(),
                c.std.to_string(),
                (c.mean * 1e-6).to_string(),
                (c.std * 1e-6).to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).expect("csv is utf-8"))
    }

    /// Per-run CSV; failed runs carry the error text.
    pub fn runs_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["policy", "map", "n_train", "n_test", "seed", "penalty", "penalty_1e6", "error"])?;
        for r in &self.runs {
            let s = &r.spec;
            let (p, p6, e) = match &r.penalty {
                Ok(p) => (p.to_string(), (p * 1e-6).to_string(), String::new()),
                Err(e) => (String::new(), String::new(), e.clone()),
            };
            w.write_record([
                s.policy.clone(),
                s.map.clone(),
                fmt_train(s.n_train),
                s.n_test.to_string(),
                s.seed.to_string(),
                p,
                p6,
                e,
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).expect("csv is utf-8"))
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:<12} {:>7} {:>6} {:>5} {:>16} {:>14} {:>10}",
            "policy", "map", "n_train", "n_test", "runs", "mean |penalty|", "std", "mean ×1e-6"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<8} {:<12} {:>7} {:>6} {:>5} {:>16.1} {:>14.1} {:>10.4}{}",
                c.policy,
                c.map,
                fmt_train(c.n_train),
                c.n_test,
                c.runs,
                c.mean,
                c.std,
                c.mean * 1e-6,
                if c.failures > 0 { format!("  ({} failed)", c.failures) } else { String::new() }
            );
        }
        out
    }
}

/// A trained network with the agent count it was trained for.
#[derive(Clone, Debug)]
pub struct TrainedNet {
    pub n_train: usize,
    pub net: PolicyNet,
}

/// Runs the full grid described by `cfg`. Each run owns its world and
/// RNG, so the report does not depend on scheduling. Map load failures
/// abort; per-run failures are recorded and the grid continues.
pub fn compare(cfg: &Config, nets: &[TrainedNet]) -> Result<ExperimentReport> {
    let maps: Vec<(String, Arc<GridMap>)> =
        cfg.maps.iter().map(|m| Ok((m.clone(), Arc::new(read_map(m)?.map)))).collect::<Result<_>>()?;
    let mut specs = Vec::new();
    for policy in &cfg.policies {
        let trains: Vec<Option<usize>> =
            if policy == "net" { nets.iter().map(|n| Some(n.n_train)).collect() } else { vec![None] };
        for (map, _) in &maps {
            for &n_train in &trains {
                for &n_test in &cfg.agents {
                    for seed in cfg.seed_base..cfg.seed_base + cfg.seeds {
                        specs.push(RunSpec { policy: policy.clone(), map: map.clone(), n_train, n_test, seed });
                    }
                }
            }
        }
    }
    let runs: Vec<RunResult> = specs
        .into_par_iter()
        .map(|spec| {
            let map = maps.iter().find(|(m, _)| *m == spec.map).map(|(_, g)| g.clone()).expect("map loaded above");
            let params = PolicyParams {
                d_min: cfg.d_min,
                fov: cfg.fov,
                net: spec.n_train.and_then(|n| nets.iter().find(|t| t.n_train == n)).map(|t| t.net.clone()),
                greedy: cfg.net_greedy,
            };
            let penalty = make_policy(&spec.policy, &map, spec.n_test, &params)
                .and_then(|mut p| play(p.as_mut(), map, &spec.map, spec.n_test, &[], cfg.world(), cfg.steps, spec.seed))
                .map(|(_, total)| total)
                .map_err(|e| e.to_string());
            RunResult { spec, penalty }
        })
        .collect();
    Ok(ExperimentReport::summarize(runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        Config { maps: vec!["open_10".into()], agents: vec![2], seeds: 3, steps: 30, fov: 5, ..Default::default() }
    }

    #[test]
    fn grid_shape_and_stats() {
        let r = compare(&Config { policies: vec!["random".into()], ..small() }, &[]).unwrap();
        assert_eq!(r.runs.len(), 3);
        assert_eq!(r.cells.len(), 1);
        let c = &r.cells[0];
        let xs: Vec<f64> = r.runs.iter().map(|r| *r.penalty.as_ref().unwrap()).collect();
        assert_eq!(c.mean, xs.iter().sum::<f64>() / 3.0);
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
    }

    #[test]
    fn failures_do_not_abort() {
        let cfg = Config { policies: vec!["bogus".into(), "net".into(), "random".into()], ..small() };
        let r = compare(&cfg, &[]).unwrap();
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.cells[0].failures, 3);
        assert_eq!(r.cells[1].failures, 0);
        assert!(r.runs_csv().unwrap().contains("unknown policy"));
    }

    #[test]
    fn csv_has_scaled_column() {
        let r = compare(&Config { policies: vec!["gcs".into()], ..small() }, &[]).unwrap();
        let csv = r.summary_csv().unwrap();
        assert!(csv.starts_with("policy,map,n_train,n_test,runs,failures,mean_penalty,std_penalty,mean_penalty_1e6"));
        assert!(csv.contains("gcs,open_10,-,2,3,0,"));
        assert!(r.table().contains("gcs"));
    }
}
