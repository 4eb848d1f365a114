use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{enac_step, reinforce_gradient, Algorithm, Environment, Episode, Policy, ReplayPool, RlConfig};
use crate::error::{Error, Result};
use crate::parallel::Workers;
use crate::policy::ActionMode;
use crate::seed::{self, stream};

/// One point of the training curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlCheckpoint {
    pub dialogues: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    pub mean_turns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Binomial standard error of the success rate.
    pub std_error: f64,
    pub mean_return: f64,
    pub mean_turns: f64,
}

impl EvalSummary {
    pub fn from_episodes<O, A>(episodes: &[Episode<O, A>]) -> Self {
        let n = episodes.len();
        let successes = episodes.iter().filter(|e| e.success).count();
        let nf = n.max(1) as f64;
        let rate = successes as f64 / nf;
        EvalSummary {
            n,
            successes,
            success_rate: rate,
            std_error: (rate * (1.0 - rate) / nf).sqrt(),
            mean_return: episodes.iter().map(|e| e.total_return).sum::<f64>() / nf,
            mean_turns: episodes.iter().map(|e| e.len() as f64).sum::<f64>() / nf,
        }
    }
}

fn rollouts<P: Policy, E: Environment<P>>(
    env: &E,
    policy: &P,
    mode: ActionMode,
    seeds: &[u64],
    workers: &Workers,
) -> Vec<Result<Episode<P::Obs, P::Action>>> {
    workers.map(seeds, |&s| env.rollout(policy, mode, s))
}

/// Greedy evaluation over `n` episodes seeded from `seed`.
pub fn evaluate<P: Policy, E: Environment<P>>(
    env: &E,
    policy: &P,
    n: usize,
    seed_: u64,
    workers: usize,
) -> Result<EvalSummary> {
    let workers = Workers::new(workers)?;
    evaluate_with(env, policy, n, seed_, &workers)
}

fn evaluate_with<P: Policy, E: Environment<P>>(
    env: &E,
    policy: &P,
    n: usize,
    seed_: u64,
    workers: &Workers,
) -> Result<EvalSummary> {
    let seeds: Vec<u64> = (0..n as u64).map(|i| seed::derive(seed_, stream::EVAL, i)).collect();
    let episodes = rollouts(env, policy, ActionMode::Greedy, &seeds, workers)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalSummary::from_episodes(&episodes))
}

fn apply_update<P: Policy>(
    policy: &mut P,
    pool: &ReplayPool<Episode<P::Obs, P::Action>>,
    cfg: &RlConfig,
    rng: &mut seed::Rng,
) -> Result<()> {
    let min_batch = match cfg.algorithm {
        Algorithm::Enac => 2,
        Algorithm::Reinforce => 1,
    };
    if pool.len() < min_batch || cfg.step_size == 0.0 {
        return Ok(());
    }
    let batch = pool.sample(cfg.minibatch, rng);
    let normalizer = cfg.normalizer();
    let mut direction = match cfg.algorithm {
        Algorithm::Enac => enac_step(&batch, policy, cfg.gamma, cfg.ridge, &normalizer)?.w,
        Algorithm::Reinforce => reinforce_gradient(&batch, policy, cfg.gamma, Some(&normalizer))?,
    };
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::Numeric("non-finite update direction".into()));
    }
    if norm > cfg.grad_norm_clip {
        let s = cfg.grad_norm_clip / norm;
        direction.iter_mut().for_each(|v| *v *= s);
    }
    for (p, d) in policy.params_mut().iter_mut().zip(&direction) {
        *p += cfg.step_size * d;
    }
    debug!("update: |direction| = {norm:.4}");
    Ok(())
}

/// Online training: collect `update_every` ε-greedy episodes, push them into
/// the replay pool, then take one step along the sampled minibatch's
/// direction. The policy is evaluated greedily every `eval_every` dialogues
/// (and before training) on a fixed set of evaluation seeds.
pub fn rl_train<P: Policy, E: Environment<P>>(
    env: &E,
    mut policy: P,
    cfg: &RlConfig,
) -> Result<(P, Vec<RlCheckpoint>)> {
    cfg.validate()?;
    let workers = Workers::new(cfg.workers)?;
    let mut rng = seed::rng(seed::derive(cfg.seed, stream::REPLAY, 0));
    let eval_seed = seed::derive(cfg.seed, stream::EVAL, 0);
    let mut pool = ReplayPool::new(cfg.pool_capacity);
    let mut curve = Vec::new();

    let checkpoint = |policy: &P, seen: usize, curve: &mut Vec<RlCheckpoint>| -> Result<()> {
        if cfg.eval_dialogues == 0 {
            return Ok(());
        }
        let s = evaluate_with(env, policy, cfg.eval_dialogues, eval_seed, &workers)?;
        debug!("checkpoint {seen}: success {:.3}", s.success_rate);
        curve.push(RlCheckpoint {
            dialogues: seen,
            success_rate: s.success_rate,
            mean_return: s.mean_return,
            mean_turns: s.mean_turns,
        });
        Ok(())
    };
    checkpoint(&policy, 0, &mut curve)?;

    let mut seen = 0;
    let mut next_eval = cfg.eval_every;
    while seen < cfg.total_dialogues {
        let k = cfg.update_every.min(cfg.total_dialogues - seen);
        let seeds: Vec<u64> = (seen..seen + k)
            .map(|i| seed::derive(cfg.seed, stream::TRAIN, i as u64))
            .collect();
        for (i, ep) in rollouts(env, &policy, ActionMode::Epsilon(cfg.epsilon), &seeds, &workers)
            .into_iter()
            .enumerate()
        {
            match ep {
                Ok(ep) => pool.push(ep),
                Err(e) => warn!("discarding training dialogue {}: {e}", seen + i),
            }
        }
        seen += k;
        if let Err(e) = apply_update(&mut policy, &pool, cfg, &mut rng) {
            match e {
                Error::Numeric(_) => warn!("skipping update after {seen} dialogues: {e}"),
                other => return Err(other),
            }
        }
        if cfg.eval_every > 0 && seen >= next_eval {
            checkpoint(&policy, seen, &mut curve)?;
            while next_eval <= seen {
                next_eval += cfg.eval_every;
            }
        }
    }
    Ok((policy, curve))
}

/// Offline training from a fixed set of episodes (replay-only mode).
pub fn replay_train<P: Policy>(
    episodes: Vec<Episode<P::Obs, P::Action>>,
    mut policy: P,
    cfg: &RlConfig,
    updates: usize,
) -> Result<P> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, stream::REPLAY, 1));
    let mut pool = ReplayPool::new(cfg.pool_capacity);
    for ep in episodes {
        pool.push(ep);
    }
    for _ in 0..updates {
        apply_update(&mut policy, &pool, cfg, &mut rng)?;
    }
    Ok(policy)
}
