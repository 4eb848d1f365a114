//! Policy-gradient training: REINFORCE and episodic natural actor-critic
//! with experience replay and unity return normalization.

mod enac;
mod replay;
mod returns;
mod train;

use serde::{Deserialize, Serialize};

pub use enac::{enac_step, reinforce_gradient, solve_ridge, EnacSolution};
pub use replay::ReplayPool;
pub use returns::{returns, ReturnNormalizer};
pub use train::{evaluate, replay_train, rl_train, EvalSummary, RlCheckpoint};

use crate::action::MasterAction;
use crate::belief::BeliefFeatures;
use crate::error::Result;
use crate::policy::{ActionMode, PolicyNetwork};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition<O = BeliefFeatures, A = MasterAction> {
    pub features: O,
    pub action: A,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode<O = BeliefFeatures, A = MasterAction> {
    pub transitions: Vec<Transition<O, A>>,
    pub success: bool,
    pub total_return: f64,
}

impl<O, A> Episode<O, A> {
    /// The total return is the undiscounted reward sum.
    pub fn new(transitions: Vec<Transition<O, A>>, success: bool) -> Self {
        let total_return = transitions.iter().map(|t| t.reward).sum();
        Episode {
            transitions,
            success,
            total_return,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// A differentiable stochastic policy over flat parameters.
pub trait Policy: Sync {
    type Obs: Clone + Send + Sync;
    type Action: Clone + Send + Sync;

    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Adds `scale · ∇θ log π(action | obs)` into `out`.
    fn accumulate_score(&self, obs: &Self::Obs, action: &Self::Action, scale: f64, out: &mut [f64]) -> Result<()>;
}

/// Produces episodes for a policy; `seed` fully determines the episode.
pub trait Environment<P: Policy>: Sync {
    fn rollout(&self, policy: &P, mode: ActionMode, seed: u64) -> Result<Episode<P::Obs, P::Action>>;
}

impl Policy for PolicyNetwork {
    type Obs = BeliefFeatures;
    type Action = MasterAction;

    fn params(&self) -> &[f64] {
        PolicyNetwork::params(self)
    }

    fn params_mut(&mut self) -> &mut [f64] {
        PolicyNetwork::params_mut(self)
    }

    fn accumulate_score(&self, obs: &BeliefFeatures, action: &MasterAction, scale: f64, out: &mut [f64]) -> Result<()> {
        self.accumulate_grad_log_prob(obs.as_slice(), action, scale, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Enac,
    Reinforce,
}

impl std::str::FromStr for Algorithm {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enac" => Ok(Algorithm::Enac),
            "reinforce" => Ok(Algorithm::Reinforce),
            _ => Err(crate::error::Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub minibatch: usize,
    pub pool_capacity: usize,
    pub step_size: f64,
    pub ridge: f64,
    pub grad_norm_clip: f64,
    pub update_every: usize,
    pub total_dialogues: usize,
    pub algorithm: Algorithm,
    pub eval_every: usize,
    pub eval_dialogues: usize,
    pub return_min: f64,
    pub return_max: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            gamma: 1.0,
            epsilon: 0.1,
            minibatch: 32,
            pool_capacity: 2000,
            step_size: 0.02,
            ridge: 1e-6,
            grad_norm_clip: 5.0,
            update_every: 32,
            total_dialogues: 6000,
            algorithm: Algorithm::Enac,
            eval_every: 500,
            eval_dialogues: 500,
            return_min: -30.0,
            return_max: 19.0,
            seed: 0,
            workers: 1,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.minibatch == 0 || self.minibatch > self.pool_capacity {
            return bad("minibatch must be in 1..=pool_capacity");
        }
        if self.update_every == 0 || self.workers == 0 {
            return bad("update_every and workers must be positive");
        }
        if self.step_size < 0.0 || self.ridge < 0.0 || self.grad_norm_clip <= 0.0 {
            return bad("step_size and ridge must be non-negative, grad_norm_clip positive");
        }
        if self.return_max <= self.return_min {
            return bad("return_max must exceed return_min");
        }
        Ok(())
    }

    pub fn normalizer(&self) -> ReturnNormalizer {
        ReturnNormalizer::new(self.return_min, self.return_max)
    }
}
