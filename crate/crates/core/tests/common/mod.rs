#![allow(dead_code)]

use dpn_core::rl::{Environment, Episode, Policy, Transition};
use dpn_core::seed;
use dpn_core::{ActionMode, Result};
use rand::Rng;

/// Linear softmax policy over `k` actions with `d`-dimensional observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Softmax {
    pub k: usize,
    pub d: usize,
    pub theta: Vec<f64>,
}

impl Softmax {
    pub fn new(k: usize, d: usize, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), k * d);
        Softmax { k, d, theta }
    }

    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = (0..self.k)
            .map(|a| (0..self.d).map(|j| self.theta[a * self.d + j] * x[j]).sum())
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn act<R: Rng>(&self, x: &[f64], mode: ActionMode, rng: &mut R) -> usize {
        let p = self.probs(x);
        let sample = |rng: &mut R| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (a, pa) in p.iter().enumerate() {
                acc += pa;
                if u < acc {
                    return a;
                }
            }
            p.len() - 1
        };
        match mode {
            ActionMode::Greedy => (0..self.k).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap(),
            ActionMode::Sample => sample(rng),
            ActionMode::Epsilon(eps) => {
                if rng.random::<f64>() < eps {
                    rng.random_range(0..self.k)
                } else {
                    sample(rng)
                }
            }
        }
    }
}

impl Policy for Softmax {
    type Obs = Vec<f64>;
    type Action = usize;

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn accumulate_score(&self, x: &Vec<f64>, a: &usize, scale: f64, out: &mut [f64]) -> Result<()> {
        let p = self.probs(x);
        for b in 0..self.k {
            let ind = if b == *a { 1.0 } else { 0.0 };
            for j in 0..self.d {
                out[b * self.d + j] += scale * (ind - p[b]) * x[j];
            }
        }
        Ok(())
    }
}

/// One-step bandit: arm `i` pays `payoff[i]` (a success when it is the best arm).
pub struct Bandit {
    pub payoff: Vec<f64>,
}

impl Bandit {
    pub fn best(&self) -> usize {
        (0..self.payoff.len()).max_by(|&a, &b| self.payoff[a].total_cmp(&self.payoff[b])).unwrap()
    }
}

impl Environment<Softmax> for Bandit {
    fn rollout(&self, policy: &Softmax, mode: ActionMode, seed_: u64) -> Result<Episode<Vec<f64>, usize>> {
        let mut rng = seed::rng(seed_);
        let x = vec![1.0];
        let a = policy.act(&x, mode, &mut rng);
        Ok(Episode::new(
            vec![Transition {
                features: x,
                action: a,
                reward: self.payoff[a],
            }],
            a == self.best(),
        ))
    }
}

use dpn_core::belief::FEATURE_DIM;
use dpn_core::policy::ActionLabels;
use dpn_core::rl::ReturnNormalizer;
use dpn_core::{MasterAction, PolicyNetwork};
use nalgebra::DMatrix;

pub fn random_net<R: Rng>(rng: &mut R, scale: f64) -> PolicyNetwork {
    let n = PolicyNetwork::init_default(0).len();
    let theta = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
    PolicyNetwork::from_flat(FEATURE_DIM, 32, theta).unwrap()
}

pub fn random_x<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..FEATURE_DIM).map(|_| rng.random::<f64>()).collect()
}

pub fn random_action<R: Rng>(rng: &mut R) -> MasterAction {
    let all = MasterAction::enumerate_legal();
    all[rng.random_range(0..all.len())]
}

/// Central differences of `f` around `net`'s parameters.
pub fn central_diff(net: &PolicyNetwork, h: f64, f: impl Fn(&PolicyNetwork) -> f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.len())
        .map(|i| {
            let v = net.params()[i];
            probe.params_mut()[i] = v + h;
            let up = f(&probe);
            probe.params_mut()[i] = v - h;
            let down = f(&probe);
            probe.params_mut()[i] = v;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = inf(a).max(inf(b));
    if scale == 0.0 {
        inf(&diff)
    } else {
        inf(&diff) / scale
    }
}

/// Worst relative error of the analytic score and supervised-loss gradients
/// against central differences over `n` random (θ, x, action) triples.
pub fn gradient_check(n: usize, seed_: u64) -> (f64, f64) {
    let mut rng = seed::rng(seed_);
    let (mut worst_lp, mut worst_sl) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let net = random_net(&mut rng, 0.5);
        let x = random_x(&mut rng);
        let a = random_action(&mut rng);
        let labels = ActionLabels::from(random_action(&mut rng));
        let g = net.grad_log_prob(&x, &a).unwrap();
        let fd = central_diff(&net, 1e-5, |p| p.log_prob(&x, &a).unwrap());
        worst_lp = worst_lp.max(rel_err(&g, &fd));
        let (_, g) = net.grad_supervised_loss(&x, &labels).unwrap();
        let fd = central_diff(&net, 1e-5, |p| p.supervised_loss(&x, &labels).unwrap());
        worst_sl = worst_sl.max(rel_err(&g, &fd));
    }
    (worst_lp, worst_sl)
}

/// Largest |Σ_a π(a|x) − 1| over `n` random (θ, x).
pub fn probability_completeness(n: usize, seed_: u64) -> f64 {
    let mut rng = seed::rng(seed_);
    let all = MasterAction::enumerate_legal();
    (0..n)
        .map(|_| {
            let net = random_net(&mut rng, 1.0);
            let x = random_x(&mut rng);
            let total: f64 = all.iter().map(|a| net.log_prob(&x, a).unwrap().exp()).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// A random batch of short episodes for a 10-parameter softmax policy.
pub fn toy_batch<R: Rng>(rng: &mut R, episodes: usize) -> (Softmax, Vec<Episode<Vec<f64>, usize>>) {
    let theta = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let policy = Softmax::new(2, 5, theta);
    let batch = (0..episodes)
        .map(|_| {
            let len = rng.random_range(1..=6);
            let transitions = (0..len)
                .map(|_| Transition {
                    features: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    action: rng.random_range(0..2),
                    reward: rng.random_range(-3.0..2.0),
                })
                .collect();
            Episode::new(transitions, rng.random())
        })
        .collect();
    (policy, batch)
}

/// Minimum-norm least-squares `[w; C]` through the SVD pseudo-inverse.
pub fn pinv_solution(policy: &Softmax, batch: &[Episode<Vec<f64>, usize>], normalizer: &ReturnNormalizer) -> Vec<f64> {
    let p = policy.theta.len();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for ep in batch {
        let mut row = vec![0.0; p + 1];
        for tr in &ep.transitions {
            policy.accumulate_score(&tr.features, &tr.action, 1.0, &mut row[..p]).unwrap();
        }
        row[p] = 1.0;
        rows.extend(row);
        y.push(normalizer.normalize(ep.transitions.iter().map(|t| t.reward).sum()));
    }
    let phi = DMatrix::from_row_slice(batch.len(), p + 1, &rows);
    let pinv = phi.pseudo_inverse(1e-14).unwrap();
    (pinv * DMatrix::from_column_slice(batch.len(), 1, &y)).column(0).iter().copied().collect()
}

/// Worst deviation of `enac_step` from the pseudo-inverse solve over `n`
/// random toy batches of `episodes` episodes.
pub fn enac_oracle_error(n: usize, episodes: usize, seed_: u64) -> f64 {
    let mut rng = seed::rng(seed_);
    let normalizer = ReturnNormalizer::new(-18.0, 12.0);
    (0..n)
        .map(|_| {
            let (policy, batch) = toy_batch(&mut rng, episodes);
            let refs: Vec<_> = batch.iter().collect();
            let sol = dpn_core::rl::enac_step(&refs, &policy, 1.0, 0.0, &normalizer).unwrap();
            let oracle = pinv_solution(&policy, &batch, &normalizer);
            let mut ours = sol.w.clone();
            ours.push(sol.offset);
            ours.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

use dpn_core::rl::{rl_train, Algorithm, RlConfig};

pub fn bandit() -> Bandit {
    Bandit {
        payoff: vec![0.2, 1.0, 0.5],
    }
}

/// Probability of the best arm before and after REINFORCE training on the
/// bandit through the generic policy/environment interface.
pub fn bandit_reinforce(seed_: u64) -> (f64, f64) {
    let env = bandit();
    let policy = Softmax::new(3, 1, vec![0.0; 3]);
    let before = policy.probs(&[1.0])[env.best()];
    let cfg = RlConfig {
        algorithm: Algorithm::Reinforce,
        epsilon: 0.0,
        minibatch: 16,
        update_every: 16,
        total_dialogues: 640,
        step_size: 0.5,
        return_min: 0.0,
        return_max: 1.0,
        eval_every: 320,
        eval_dialogues: 10,
        seed: seed_,
        ..RlConfig::default()
    };
    let (policy, _) = rl_train(&env, policy, &cfg).unwrap();
    (before, policy.probs(&[1.0])[env.best()])
}
