//! Check suites shared by the integration tests and the acceptance run.
//! Each check returns `Err` with a description of the first violation.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpm_core::grid::GridMap;
use vpm_core::nn::{
    ppo_objective, softmax, train, Conv2d, GatLayer, Graph, Linear, NetConfig, ParamSet, PolicyNet, PpoConfig,
    RolloutBatch, Tensor, TrainConfig, Var, LEAKY_SLOPE,
};
use vpm_core::observation::{ObservationMode, OBS_SIZE};
use vpm_core::world::WorldConfig;

use crate::oracles::{all_param_elems, gradient_error, random_tensor, rel_err, sample_param_elems};

pub const GRAD_TOL: f64 = 1e-4;
pub const GRAD_INSTANCES: u64 = 20;

/// Contracts `out` with fixed random weights to a scalar.
fn project(g: &mut Graph, out: Var, seed: u64) -> Var {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_tensor(&mut rng, g.shape(out));
    let w = g.input(w);
    let y = g.mul(out, w).unwrap();
    g.sum(y)
}

fn linear(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps = ParamSet::new();
    let layer = Linear::new(&mut ps, "l", 4, 3, 1.0, &mut rng);
    ps.tensors_mut()[1] = random_tensor(&mut rng, &[3]);
    let x = random_tensor(&mut rng, &[2, 4]);
    gradient_error(&ps, &[x], &all_param_elems(&ps), |g, ps, v| {
        let y = layer.forward(g, ps, v[0]).unwrap();
        project(g, y, seed)
    })
}

fn conv(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps = ParamSet::new();
    let stride = 1 + (seed as usize % 2);
    let layer = Conv2d::new(&mut ps, "c", 2, 3, 3, stride, &mut rng);
    ps.tensors_mut()[1] = random_tensor(&mut rng, &[3]);
    let x = random_tensor(&mut rng, &[2, 2, 7, 7]);
    gradient_error(&ps, &[x], &all_param_elems(&ps), |g, ps, v| {
        let y = layer.forward(g, ps, v[0]).unwrap();
        project(g, y, seed)
    })
}

fn leaky_relu(seed: u64) -> f64 {
    let x = random_tensor(&mut ChaCha8Rng::seed_from_u64(seed), &[3, 5]);
    gradient_error(&ParamSet::new(), &[x], &[], |g, _, v| {
        let y = g.leaky_relu(v[0], LEAKY_SLOPE);
        project(g, y, seed)
    })
}

fn relu(seed: u64) -> f64 {
    let x = random_tensor(&mut ChaCha8Rng::seed_from_u64(seed), &[3, 5]);
    gradient_error(&ParamSet::new(), &[x], &[], |g, _, v| {
        let y = g.relu(v[0]);
        project(g, y, seed)
    })
}

fn log_softmax(seed: u64) -> f64 {
    let x = random_tensor(&mut ChaCha8Rng::seed_from_u64(seed), &[3, 5]);
    gradient_error(&ParamSet::new(), &[x], &[], |g, _, v| {
        let y = g.log_softmax(v[0]).unwrap();
        project(g, y, seed)
    })
}

fn neighbor_softmax(seed: u64) -> f64 {
    let e = random_tensor(&mut ChaCha8Rng::seed_from_u64(seed), &[2, 4, 4]);
    gradient_error(&ParamSet::new(), &[e], &[], |g, _, v| {
        let y = g.neighbor_softmax(v[0]).unwrap();
        project(g, y, seed)
    })
}

fn gat_case(seed: u64, aggregate: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps = ParamSet::new();
    let gat = GatLayer::new(&mut ps, "gat", 4, 3, 2, &mut rng);
    let group = 2 + (seed as usize % 3);
    let h = random_tensor(&mut rng, &[2 * group, 4]);
    gradient_error(&ps, &[h], &all_param_elems(&ps), |g, ps, v| {
        let y = if aggregate {
            gat.forward(g, ps, v[0], group).unwrap()
        } else {
            gat.attention(g, ps, v[0], group, 1).unwrap().0
        };
        project(g, y, seed)
    })
}

fn small_config() -> NetConfig {
    NetConfig { mode: ObservationMode::Local, features: 4, heads: 2, hidden: 5 }
}

/// Random network with nonzero biases so no ReLU sits exactly on its kink.
fn random_net(rng: &mut ChaCha8Rng) -> PolicyNet {
    let mut net = PolicyNet::new(small_config(), rng);
    for t in net.params_mut().tensors_mut() {
        for v in &mut t.data {
            *v += rng.random::<f64>() * 0.2 - 0.1;
        }
    }
    net
}

fn head_case(seed: u64, critic: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_net(&mut rng);
    let h = random_tensor(&mut rng, &[3, 4]);
    let hp = random_tensor(&mut rng, &[3, 4]);
    let prefix = if critic { "critic" } else { "actor" };
    let elems: Vec<_> = all_param_elems(net.params())
        .into_iter()
        .filter(|&(p, _)| net.params().iter().nth(p).unwrap().0.starts_with(prefix))
        .collect();
    gradient_error(net.params(), &[h, hp], &elems, |g, ps, v| {
        let n = PolicyNet::from_params(small_config(), ps.clone()).unwrap();
        let (logits, value) = n.heads(g, v[0], v[1]).unwrap();
        project(g, if critic { value } else { logits }, seed)
    })
}

fn ppo_case(seed: u64) -> f64 {
    let cfg = PpoConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_net(&mut rng);
    let (group, steps) = (2, 3);
    let n = group * steps;
    let batch = RolloutBatch {
        group,
        channels: 1,
        inputs: (0..n * OBS_SIZE * OBS_SIZE).map(|_| rng.random::<f64>()).collect(),
        actions: (0..n).map(|_| rng.random_range(0..5)).collect(),
        // near ln(1/5) so ratios straddle the clip band
        old_log_probs: (0..n).map(|_| -1.609 + rng.random::<f64>() * 0.6 - 0.3).collect(),
        returns: (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        values: vec![0.0; n],
        advantages: (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
    };
    let all: Vec<usize> = (0..steps).collect();
    let loss_at = |ps: &ParamSet| {
        let net = PolicyNet::from_params(small_config(), ps.clone()).unwrap();
        ppo_objective(&net, &batch, &all, &batch.advantages, &cfg).unwrap().2.total
    };
    let (g, loss, _) = ppo_objective(&net, &batch, &all, &batch.advantages, &cfg).unwrap();
    let grads = g.backward(loss).unwrap().for_params(net.params());
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for (p, i) in sample_param_elems(net.params(), 40, &mut rng) {
        let mut plus = net.params().clone();
        plus.tensors_mut()[p].data[i] += eps;
        let mut minus = net.params().clone();
        minus.tensors_mut()[p].data[i] -= eps;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
        worst = worst.max(rel_err(grads[p][i], numeric));
    }
    worst
}

pub type GradCase = (&'static str, fn(u64) -> f64);

/// Every gradient case; each maps an instance seed to the worst relative
/// error between backprop and central differences.
pub fn gradient_cases() -> Vec<GradCase> {
    vec![
        ("linear", linear),
        ("conv", conv),
        ("leaky_relu", leaky_relu),
        ("relu", relu),
        ("log_softmax", log_softmax),
        ("neighbor_softmax", neighbor_softmax),
        ("gat attention", |s| gat_case(s, false)),
        ("gat aggregation", |s| gat_case(s, true)),
        ("actor head", |s| head_case(s, false)),
        ("critic head", |s| head_case(s, true)),
        ("ppo loss", ppo_case),
    ]
}

/// Worst error of one case over all instances.
pub fn run_gradient_case(case: &GradCase) -> Result<f64, String> {
    let worst = (0..GRAD_INSTANCES).map(case.1).fold(0.0f64, f64::max);
    if worst < GRAD_TOL {
        Ok(worst)
    } else {
        Err(format!("{}: relative error {worst:e}", case.0))
    }
}

fn gat_config() -> NetConfig {
    NetConfig { mode: ObservationMode::Local, features: 6, heads: 3, hidden: 6 }
}

fn features(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect()
}

pub fn attention_rows_sum_to_one() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = PolicyNet::new(gat_config(), &mut rng);
    for n in 1..8 {
        let h = features(&mut rng, n + 1);
        let neigh: Vec<(usize, &[f64])> = (1..=n).map(|j| (j, h[j].as_slice())).collect();
        for head in 0..3 {
            let w = net.gat_attention((0, &h[0]), &neigh, head).map_err(|e| e.to_string())?;
            let sum = w.iter().sum::<f64>();
            if (sum - 1.0).abs() >= 1e-6 || w.iter().any(|&a| a <= 0.0) {
                return Err(format!("{n} neighbours, head {head}: weights {w:?} sum to {sum}"));
            }
        }
    }
    Ok(())
}

pub fn singleton_neighbourhood() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = PolicyNet::new(gat_config(), &mut rng);
    let h = features(&mut rng, 2);
    for head in 0..3 {
        let w = net.gat_attention((3, &h[0]), &[(9, &h[1])], head).map_err(|e| e.to_string())?;
        if w != [1.0] {
            return Err(format!("single neighbour weight {w:?}"));
        }
    }
    let empty = net.gat_aggregate((0, &h[0]), &[]).map_err(|e| e.to_string())?;
    if empty.iter().any(|&v| v != 0.0) {
        return Err(format!("empty neighbourhood aggregates to {empty:?}"));
    }
    Ok(())
}

pub fn aggregation_ignores_order() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net = PolicyNet::new(gat_config(), &mut rng);
    let h = features(&mut rng, 5);
    let mut neigh: Vec<(usize, &[f64])> = (1..5).map(|j| (j * 10, h[j].as_slice())).collect();
    let base = net.gat_aggregate((0, &h[0]), &neigh).map_err(|e| e.to_string())?;
    for _ in 0..10 {
        for i in (1..neigh.len()).rev() {
            neigh.swap(i, rng.random_range(0..=i));
        }
        if net.gat_aggregate((0, &h[0]), &neigh).map_err(|e| e.to_string())? != base {
            return Err("aggregate changed under a neighbour permutation".into());
        }
    }
    Ok(())
}

/// With the value and entropy terms off, an in-band sample's objective is
/// exactly `exp(logp - old) · A`.
pub fn in_band_surrogate() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = PolicyNet::new(gat_config(), &mut rng);
    let input: Vec<f64> = (0..OBS_SIZE * OBS_SIZE).map(|_| rng.random::<f64>()).collect();
    let mut g = Graph::new();
    let out = net.forward(&mut g, Tensor::new(&[1, 1, OBS_SIZE, OBS_SIZE], input.clone()).unwrap(), 1).unwrap();
    let lsm = g.log_softmax(out.logits).unwrap();
    let logp = g.value(lsm).data[2];
    let direct = softmax(&g.value(out.logits).data)[2].ln();
    if (logp - direct).abs() >= 1e-12 {
        return Err(format!("log-probability {logp} vs {direct}"));
    }
    let cfg = PpoConfig { value_coef: 0.0, entropy_coef: 0.0, ..Default::default() };
    for (shift, adv) in [(0.05, 1.3), (-0.1, -0.7), (0.15, -2.0)] {
        let batch = RolloutBatch {
            group: 1,
            channels: 1,
            inputs: input.clone(),
            actions: vec![2],
            old_log_probs: vec![logp + shift],
            returns: vec![0.0],
            values: vec![0.0],
            advantages: vec![adv],
        };
        let (g, loss, parts) = ppo_objective(&net, &batch, &[0], &batch.advantages, &cfg).map_err(|e| e.to_string())?;
        let ratio = libm::exp(logp - (logp + shift));
        if !(1.0 - cfg.clip..=1.0 + cfg.clip).contains(&ratio) {
            return Err(format!("ratio {ratio} left the clip band"));
        }
        if parts.surrogate != ratio * adv || g.value(loss).data[0] != -parts.surrogate {
            return Err(format!("surrogate {} vs {}", parts.surrogate, ratio * adv));
        }
    }
    Ok(())
}

/// Short training run: the per-episode penalties and the nets before and
/// after.
pub fn tiny_training(lr: f64, seed: u64) -> Result<(Vec<f64>, PolicyNet, PolicyNet), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = PolicyNet::new(gat_config(), &mut rng);
    let before = net.clone();
    let mut cfg = TrainConfig { episodes: 4, steps: 12, n_agents: 2, ..Default::default() };
    cfg.ppo.learning_rate = lr;
    cfg.ppo.minibatch = 5;
    let map = Arc::new(GridMap::open(6, 6).unwrap());
    let report = train(map, WorldConfig { fov: 3, ..Default::default() }, &mut net, &cfg, seed, &mut |_, _| {})
        .map_err(|e| e.to_string())?;
    if report.diverged {
        return Err("training diverged".into());
    }
    Ok((report.stats.iter().map(|s| s.cumulative_penalty).collect(), before, net))
}

pub fn zero_learning_rate_keeps_parameters() -> Result<(), String> {
    let (_, before, after) = tiny_training(0.0, 1)?;
    if before.params() != after.params() {
        return Err("parameters moved with a zero learning rate".into());
    }
    Ok(())
}

pub fn training_is_reproducible() -> Result<(), String> {
    let (c1, before, n1) = tiny_training(1e-3, 2)?;
    let (c2, _, n2) = tiny_training(1e-3, 2)?;
    if c1 != c2 || n1.params() != n2.params() {
        return Err("two runs with one seed differ".into());
    }
    if before.params() == n1.params() {
        return Err("training did not change the parameters".into());
    }
    Ok(())
}
