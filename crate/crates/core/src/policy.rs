//! One-hidden-layer tanh policy network with a multi-head output: softmax
//! DiaAct, softmax Query and six independent sigmoid Offer bits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{DiaAct, MasterAction, QuerySlot};
use crate::belief::FEATURE_DIM;
use crate::error::{Error, Result};
use crate::ontology::N_OFFER;
use crate::seed;

pub const DEFAULT_HIDDEN: usize = 32;
/// 5 DiaAct + 4 Query + 6 Offer logits.
pub const N_OUTPUTS: usize = DiaAct::COUNT + QuerySlot::COUNT + N_OFFER;
/// Probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;
pub const INIT_RANGE: f64 = 0.1;

const DIA: std::ops::Range<usize> = 0..DiaAct::COUNT;
const QUERY: std::ops::Range<usize> = DiaAct::COUNT..DiaAct::COUNT + QuerySlot::COUNT;
const OFFER: std::ops::Range<usize> = DiaAct::COUNT + QuerySlot::COUNT..N_OUTPUTS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub p_dia: [f64; DiaAct::COUNT],
    pub p_query: [f64; QuerySlot::COUNT],
    pub p_offer: [f64; N_OFFER],
}

/// How an action is chosen from the output distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActionMode {
    Greedy,
    Sample,
    /// With probability ε, a uniform draw over every head; otherwise a sample.
    Epsilon(f64),
}

/// Supervised targets for one turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLabels {
    pub dia: DiaAct,
    pub query: QuerySlot,
    pub offer: [bool; N_OFFER],
}

impl From<MasterAction> for ActionLabels {
    fn from(a: MasterAction) -> Self {
        ActionLabels {
            dia: a.dia_act,
            query: a.query,
            offer: a.offer,
        }
    }
}

/// Network parameters, stored flat in the order `W1, b1, W2, b2`.
///
/// `W1` is `input × hidden` and `W2` is `hidden × 15`, both row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNetwork {
    input: usize,
    hidden: usize,
    theta: Vec<f64>,
}

/// Intermediate activations kept for backpropagation.
struct Activations {
    hidden: Vec<f64>,
    logits: [f64; N_OUTPUTS],
}

pub fn param_count(input: usize, hidden: usize) -> usize {
    input * hidden + hidden + hidden * N_OUTPUTS + N_OUTPUTS
}

impl PolicyNetwork {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        PolicyNetwork {
            input,
            hidden,
            theta: vec![0.0; param_count(input, hidden)],
        }
    }

    /// Uniform initialization in `[-0.1, 0.1]`.
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut net = Self::zeros(input, hidden);
        for p in &mut net.theta {
            *p = rng.random_range(-INIT_RANGE..=INIT_RANGE);
        }
        net
    }

    /// The default dialogue policy: 48 inputs, 32 hidden units.
    pub fn init_default(seed: u64) -> Self {
        Self::init(FEATURE_DIM, DEFAULT_HIDDEN, seed)
    }

    pub fn from_flat(input: usize, hidden: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != param_count(input, hidden) {
            return Err(Error::Data(format!(
                "parameter vector has length {}, expected {}",
                theta.len(),
                param_count(input, hidden)
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(PolicyNetwork {
            input,
            hidden,
            theta,
        })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.theta.clone()
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.input * self.hidden;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden * N_OUTPUTS;
        (b1, w2, b2)
    }

    /// Flat index of `W2[j][k]`.
    pub fn w2_index(&self, j: usize, k: usize) -> usize {
        self.offsets().1 + j * N_OUTPUTS + k
    }

    fn activations(&self, x: &[f64]) -> Result<Activations> {
        if x.len() != self.input {
            return Err(Error::Data(format!(
                "input has length {}, expected {}",
                x.len(),
                self.input
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite policy input".into()));
        }
        let (b1, w2, b2) = self.offsets();
        let t = &self.theta;
        let mut hidden = t[b1..w2].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &t[i * self.hidden..(i + 1) * self.hidden];
            for (h, &w) in hidden.iter_mut().zip(row) {
                *h += xi * w;
            }
        }
        for h in &mut hidden {
            *h = h.tanh();
        }
        let mut logits = [0.0; N_OUTPUTS];
        logits.copy_from_slice(&t[b2..b2 + N_OUTPUTS]);
        for (j, &hj) in hidden.iter().enumerate() {
            let row = &t[w2 + j * N_OUTPUTS..w2 + (j + 1) * N_OUTPUTS];
            for (z, &w) in logits.iter_mut().zip(row) {
                *z += hj * w;
            }
        }
        Ok(Activations { hidden, logits })
    }

    pub fn forward(&self, x: &[f64]) -> Result<ActionDistribution> {
        Ok(distribution(&self.activations(x)?.logits))
    }

    pub fn log_prob(&self, x: &[f64], a: &MasterAction) -> Result<f64> {
        let dist = self.forward(x)?;
        Ok(dist.log_prob(a))
    }

    /// Gradient of `log π(a|x)` with respect to the flat parameters.
    pub fn grad_log_prob(&self, x: &[f64], a: &MasterAction) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.len()];
        self.accumulate_grad_log_prob(x, a, 1.0, &mut g)?;
        Ok(g)
    }

    /// Adds `scale · ∇ log π(a|x)` into `out`.
    pub fn accumulate_grad_log_prob(
        &self,
        x: &[f64],
        a: &MasterAction,
        scale: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let act = self.activations(x)?;
        let dist = distribution(&act.logits);
        let mut dz = [0.0; N_OUTPUTS];
        // d log p / dz for each active head; a floored head contributes nothing.
        let d = a.dia_act.index();
        if dist.p_dia[d] >= PROB_FLOOR {
            for k in 0..DiaAct::COUNT {
                dz[DIA.start + k] = f64::from(u8::from(k == d)) - dist.p_dia[k];
            }
        }
        if a.dia_act.uses_query() {
            let q = a.query.index();
            if dist.p_query[q] >= PROB_FLOOR {
                for k in 0..QuerySlot::COUNT {
                    dz[QUERY.start + k] = f64::from(u8::from(k == q)) - dist.p_query[k];
                }
            }
        }
        if a.dia_act.uses_offer() {
            for k in 0..N_OFFER {
                let p = dist.p_offer[k];
                let (prob, grad) = if a.offer[k] { (p, 1.0 - p) } else { (1.0 - p, -p) };
                if prob >= PROB_FLOOR {
                    dz[OFFER.start + k] = grad;
                }
            }
        }
        self.backprop(x, &act, &dz, scale, out);
        Ok(())
    }

    /// Joint cross-entropy over all three heads and its gradient.
    pub fn grad_supervised_loss(&self, x: &[f64], labels: &ActionLabels) -> Result<(f64, Vec<f64>)> {
        let mut g = vec![0.0; self.len()];
        let loss = self.accumulate_supervised(x, labels, 1.0, &mut g)?;
        Ok((loss, g))
    }

    pub fn supervised_loss(&self, x: &[f64], labels: &ActionLabels) -> Result<f64> {
        let dist = self.forward(x)?;
        Ok(dist.cross_entropy(labels))
    }

    /// Adds `scale · ∇ loss` into `out` and returns the loss.
    pub fn accumulate_supervised(
        &self,
        x: &[f64],
        labels: &ActionLabels,
        scale: f64,
        out: &mut [f64],
    ) -> Result<f64> {
        let act = self.activations(x)?;
        let dist = distribution(&act.logits);
        let loss = dist.cross_entropy(labels);
        let mut dz = [0.0; N_OUTPUTS];
        let d = labels.dia.index();
        if dist.p_dia[d] >= PROB_FLOOR {
            for k in 0..DiaAct::COUNT {
                dz[DIA.start + k] = dist.p_dia[k] - f64::from(u8::from(k == d));
            }
        }
        let q = labels.query.index();
        if dist.p_query[q] >= PROB_FLOOR {
            for k in 0..QuerySlot::COUNT {
                dz[QUERY.start + k] = dist.p_query[k] - f64::from(u8::from(k == q));
            }
        }
        for k in 0..N_OFFER {
            let p = dist.p_offer[k];
            let y = labels.offer[k];
            let prob = if y { p } else { 1.0 - p };
            if prob >= PROB_FLOOR {
                dz[OFFER.start + k] = p - f64::from(u8::from(y));
            }
        }
        self.backprop(x, &act, &dz, scale, out);
        Ok(loss)
    }

    fn backprop(&self, x: &[f64], act: &Activations, dz: &[f64; N_OUTPUTS], scale: f64, out: &mut [f64]) {
        let (b1, w2, b2) = self.offsets();
        let t = &self.theta;
        let mut da = vec![0.0; self.hidden];
        for (j, &hj) in act.hidden.iter().enumerate() {
            let row = w2 + j * N_OUTPUTS;
            let mut dh = 0.0;
            for k in 0..N_OUTPUTS {
                out[row + k] += scale * hj * dz[k];
                dh += t[row + k] * dz[k];
            }
            da[j] = dh * (1.0 - hj * hj);
        }
        for k in 0..N_OUTPUTS {
            out[b2 + k] += scale * dz[k];
        }
        for j in 0..self.hidden {
            out[b1 + j] += scale * da[j];
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &mut out[i * self.hidden..(i + 1) * self.hidden];
            for (o, &d) in row.iter_mut().zip(&da) {
                *o += scale * xi * d;
            }
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, x: &[f64], mode: ActionMode, rng: &mut R) -> Result<MasterAction> {
        Ok(self.forward(x)?.select(mode, rng))
    }
}

fn softmax<const N: usize>(z: &[f64]) -> [f64; N] {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; N];
    let mut sum = 0.0;
    for (pi, &zi) in p.iter_mut().zip(z) {
        *pi = (zi - max).exp();
        sum += *pi;
    }
    for pi in &mut p {
        *pi /= sum;
    }
    p
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn distribution(logits: &[f64; N_OUTPUTS]) -> ActionDistribution {
    ActionDistribution {
        p_dia: softmax(&logits[DIA]),
        p_query: softmax(&logits[QUERY]),
        p_offer: std::array::from_fn(|k| sigmoid(logits[OFFER.start + k])),
    }
}

fn floored_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn draw<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

impl ActionDistribution {
    /// `log π(a)`: DiaAct term plus the Query and Offer terms when active.
    pub fn log_prob(&self, a: &MasterAction) -> f64 {
        let mut lp = floored_ln(self.p_dia[a.dia_act.index()]);
        if a.dia_act.uses_query() {
            lp += floored_ln(self.p_query[a.query.index()]);
        }
        if a.dia_act.uses_offer() {
            for (k, &bit) in a.offer.iter().enumerate() {
                let p = self.p_offer[k];
                lp += floored_ln(if bit { p } else { 1.0 - p });
            }
        }
        lp
    }

    /// Unmasked joint cross-entropy against the labels.
    pub fn cross_entropy(&self, y: &ActionLabels) -> f64 {
        let mut loss = -floored_ln(self.p_dia[y.dia.index()]) - floored_ln(self.p_query[y.query.index()]);
        for (k, &bit) in y.offer.iter().enumerate() {
            let p = self.p_offer[k];
            loss -= floored_ln(if bit { p } else { 1.0 - p });
        }
        loss
    }

    pub fn greedy(&self) -> MasterAction {
        MasterAction::new(
            DiaAct::ALL[argmax(&self.p_dia)],
            QuerySlot::ALL[argmax(&self.p_query)],
            self.p_offer.map(|p| p >= 0.5),
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MasterAction {
        let d = draw(&self.p_dia, rng);
        let q = draw(&self.p_query, rng);
        let bits = self.p_offer.map(|p| rng.random::<f64>() < p);
        MasterAction::new(DiaAct::ALL[d], QuerySlot::ALL[q], bits)
    }

    pub fn select<R: Rng + ?Sized>(&self, mode: ActionMode, rng: &mut R) -> MasterAction {
        match mode {
            ActionMode::Greedy => self.greedy(),
            ActionMode::Sample => self.sample(rng),
            ActionMode::Epsilon(eps) => {
                if rng.random::<f64>() < eps {
                    let d = rng.random_range(0..DiaAct::COUNT);
                    let q = rng.random_range(0..QuerySlot::COUNT);
                    let bits = std::array::from_fn(|_| rng.random::<bool>());
                    MasterAction::new(DiaAct::ALL[d], QuerySlot::ALL[q], bits)
                } else {
                    self.sample(rng)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_x(seed_: u64) -> Vec<f64> {
        let mut rng = seed::rng(seed_);
        (0..FEATURE_DIM).map(|_| rng.random::<f64>()).collect()
    }

    fn dist(p_dia: [f64; 5], p_query: [f64; 4], p_offer: [f64; 6]) -> ActionDistribution {
        ActionDistribution {
            p_dia,
            p_query,
            p_offer,
        }
    }

    #[test]
    fn init_is_deterministic_bounded_and_sized() {
        let a = PolicyNetwork::init_default(1);
        let b = PolicyNetwork::init_default(1);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2063);
        assert_eq!(param_count(48, 32), 48 * 32 + 32 + 32 * 15 + 15);
        for s in 0..5 {
            let n = PolicyNetwork::init_default(s);
            assert!(n.params().iter().all(|p| p.abs() <= 0.1));
        }
        assert_ne!(PolicyNetwork::init_default(2), a);
    }

    #[test]
    fn zero_parameters_give_uniform_heads() {
        let net = PolicyNetwork::zeros(FEATURE_DIM, 32);
        let d = net.forward(&random_x(3)).unwrap();
        assert!(d.p_dia.iter().all(|&p| (p - 0.2).abs() < 1e-15));
        assert!(d.p_query.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!(d.p_offer.iter().all(|&p| p == 0.5));

        let x = random_x(4);
        let lp = |a: MasterAction| net.log_prob(&x, &a).unwrap();
        assert!((lp(MasterAction::bye()) - 0.2f64.ln()).abs() < 1e-12);
        assert!((lp(MasterAction::request(crate::ontology::Slot::Food)) - (0.2f64.ln() + 0.25f64.ln())).abs() < 1e-12);
        let offer = MasterAction::offer([true, false, true, true, false, false]);
        assert!((lp(offer) - (0.2f64.ln() + 6.0 * 0.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn zero_parameter_supervised_loss() {
        let net = PolicyNetwork::zeros(FEATURE_DIM, 32);
        let labels = ActionLabels {
            dia: DiaAct::Confirm,
            query: QuerySlot::Area,
            offer: [false, true, false, false, false, true],
        };
        let (loss, _) = net.grad_supervised_loss(&random_x(9), &labels).unwrap();
        let expect = -(0.2f64.ln()) - 0.25f64.ln() - 6.0 * 0.5f64.ln();
        assert!((loss - expect).abs() < 1e-12);
        assert!((loss - 7.1546).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let net = PolicyNetwork::zeros(FEATURE_DIM, 4);
        assert!(matches!(net.forward(&[0.0; 3]), Err(Error::Data(_))));
        let mut x = vec![0.0; FEATURE_DIM];
        x[2] = f64::NAN;
        assert!(matches!(net.forward(&x), Err(Error::Numeric(_))));
        assert!(PolicyNetwork::from_flat(48, 4, vec![0.0; 5]).is_err());
    }

    #[test]
    fn greedy_selection_examples() {
        let mut rng = seed::rng(0);
        let d = dist(
            [0.1, 0.6, 0.1, 0.1, 0.1],
            [0.7, 0.1, 0.1, 0.1],
            [0.9, 0.2, 0.2, 0.2, 0.8, 0.1],
        );
        let a = d.select(ActionMode::Greedy, &mut rng);
        assert_eq!(a, MasterAction::offer([true, false, false, false, true, false]));
        assert_eq!(a.query, QuerySlot::None);

        let d = dist(
            [0.6, 0.1, 0.1, 0.1, 0.1],
            [0.7, 0.1, 0.1, 0.1],
            [0.9, 0.9, 0.9, 0.9, 0.9, 0.9],
        );
        let a = d.select(ActionMode::Greedy, &mut rng);
        assert_eq!(a, MasterAction::request(crate::ontology::Slot::Food));
        assert_eq!(a.offer, [false; 6]);

        let half = dist([0.0, 1.0, 0.0, 0.0, 0.0], [0.25; 4], [0.5; 6]);
        assert_eq!(half.greedy().offer, [true; 6]);
    }

    #[test]
    fn full_exploration_is_uniform_over_dia_acts() {
        let d = dist([0.0, 1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.99; 6]);
        let mut rng = seed::rng(11);
        let mut counts = [0usize; 5];
        let n = 10_000;
        for _ in 0..n {
            let a = d.select(ActionMode::Epsilon(1.0), &mut rng);
            assert!(a.is_legal());
            counts[a.dia_act.index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.2).abs() < 0.05, "{counts:?}");
        }
    }

    #[test]
    fn masked_heads_get_no_gradient() {
        let net = PolicyNetwork::zeros(FEATURE_DIM, 32);
        let mut x = random_x(2);
        x[0] = 1.0;
        let g = net.grad_log_prob(&x, &MasterAction::bye()).unwrap();
        for j in 0..32 {
            for k in 5..15 {
                assert_eq!(g[net.w2_index(j, k)], 0.0);
            }
        }
    }

    #[test]
    fn saturated_head_has_zero_gradient() {
        // One hidden unit driven to +1 with large outgoing weights makes
        // DiaAct "offer" certain.
        let mut net = PolicyNetwork::zeros(FEATURE_DIM, 1);
        let (b1, _, b2) = net.offsets();
        net.theta[b1] = 50.0;
        for k in 0..5 {
            let w = net.w2_index(0, k);
            net.theta[w] = if k == 1 { 50.0 } else { -50.0 };
            net.theta[b2 + k] = 0.0;
        }
        let x = vec![0.0; FEATURE_DIM];
        let a = MasterAction::offer([false; 6]);
        let g = net.grad_log_prob(&x, &a).unwrap();
        for k in 0..5 {
            assert!(g[net.w2_index(0, k)].abs() < 1e-12);
            assert!(g[b2 + k].abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip_preserves_behaviour() {
        let net = PolicyNetwork::init_default(5);
        let back = PolicyNetwork::from_flat(48, 32, net.flatten()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn every_input_coordinate_matters() {
        let net = PolicyNetwork::init_default(8);
        let x = random_x(8);
        let base = net.forward(&x).unwrap();
        for i in 0..FEATURE_DIM {
            let mut y = x.clone();
            y[i] += 0.5;
            assert_ne!(net.forward(&y).unwrap(), base, "coordinate {i}");
        }
    }

    proptest! {
        #[test]
        fn flatten_unflatten_identity(v in proptest::collection::vec(-5.0f64..5.0, 2063)) {
            let net = PolicyNetwork::from_flat(48, 32, v.clone()).unwrap();
            prop_assert_eq!(net.flatten(), v);
        }

        #[test]
        fn heads_are_normalized(seed_ in 0u64..1000) {
            let net = PolicyNetwork::init(FEATURE_DIM, 32, seed_);
            let mut net = net;
            for p in net.params_mut() { *p *= 20.0; }
            let d = net.forward(&random_x(seed_ + 1)).unwrap();
            prop_assert!((d.p_dia.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!((d.p_query.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(d.p_offer.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}
