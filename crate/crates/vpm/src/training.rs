//! Training driven by a config file, with a CSV log and checkpoints.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vpm_core::nn::{PolicyNet, TrainReport};

use crate::checkpoint::Checkpoint;
use crate::config::Config;
use crate::error::{io_err, Result};
use crate::formats::{read_map, TrainLog};

/// Checkpoint path for a periodic save: `ck.json` becomes `ck.ep100.json`.
pub fn periodic_path(base: &Path, episode: usize) -> std::path::PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("json");
    base.with_file_name(format!("{stem}.ep{episode}.{ext}"))
}

/// Trains a fresh network from `cfg`. The network is initialized from
/// `train_seed` and episodes are drawn from a stream derived from it. The
/// log goes to `log_path`; checkpoints go to `checkpoint_path`, plus a
/// numbered copy every `checkpoint_every` episodes.
pub fn run_training(cfg: &Config, log_path: &Path, checkpoint_path: &Path) -> Result<(PolicyNet, TrainReport)> {
    let map = Arc::new(read_map(&cfg.train_map)?.map);
    let mut net = PolicyNet::new(cfg.net(), &mut ChaCha8Rng::seed_from_u64(cfg.train_seed));
    let file = std::fs::File::create(log_path).map_err(io_err(log_path))?;
    let mut log = TrainLog::new(file)?;
    let hash = cfg.hash();
    let tc = cfg.train();
    let mut failure = None;
    let report =
        vpm_core::nn::train(map, cfg.world(), &mut net, &tc, cfg.train_seed.wrapping_add(1), &mut |stats, net| {
            if failure.is_some() {
                return;
            }
            let done = stats.episode + 1;
            let mut step = || -> Result<()> {
                log.record(stats)?;
                if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && done < tc.episodes {
                    Checkpoint::from_net(net, &hash, tc.n_agents, done, cfg.r_max)
                        .save(&periodic_path(checkpoint_path, done))?;
                }
                Ok(())
            };
            failure = step().err();
        })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Checkpoint::from_net(&net, &hash, tc.n_agents, report.stats.len(), cfg.r_max).save(checkpoint_path)?;
    Ok((net, report))
}
