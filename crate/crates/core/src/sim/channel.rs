//! Semantic error channel: corrupts clean user acts and attaches confidences.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::belief::{UserActHypothesis, UserActType};
use crate::error::{Error, Result};
use crate::ontology::{Field, Ontology, Slot};

/// Beta-distributed confidence with the given mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceModel {
    pub mean: f64,
    pub spread: f64,
}

impl ConfidenceModel {
    fn beta(&self) -> Result<Beta<f64>> {
        let (m, s) = (self.mean, self.spread);
        if !(0.0 < m && m < 1.0) || s <= 0.0 {
            return Err(Error::Config(format!("bad confidence model {self:?}")));
        }
        let k = m * (1.0 - m) / (s * s) - 1.0;
        if k <= 0.0 {
            return Err(Error::Config(format!("confidence spread too wide: {self:?}")));
        }
        Beta::new(m * k, (1.0 - m) * k).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Corruption {
    Substitute,
    Drop,
    Insert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub ser: f64,
    /// Weights of substitute / drop / insert.
    pub confusion: [f64; 3],
    pub confidence_correct: ConfidenceModel,
    pub confidence_error: ConfidenceModel,
}

impl ErrorModel {
    pub fn new(ser: f64) -> Self {
        ErrorModel {
            ser,
            confusion: [0.6, 0.2, 0.2],
            confidence_correct: ConfidenceModel {
                mean: 0.8,
                spread: 0.15,
            },
            confidence_error: ConfidenceModel {
                mean: 0.4,
                spread: 0.2,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ser) {
            return Err(Error::Config(format!("ser {} outside [0,1]", self.ser)));
        }
        if self.confusion.iter().any(|w| *w < 0.0)
            || (self.confusion.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config("confusion weights must be non-negative and sum to 1".into()));
        }
        self.confidence_correct.beta()?;
        self.confidence_error.beta()?;
        Ok(())
    }
}

/// A prepared channel with its samplers.
#[derive(Clone, Debug)]
pub struct Channel {
    model: ErrorModel,
    correct: Beta<f64>,
    error: Beta<f64>,
}

/// Channel output: hypotheses plus, per input act, whether it was corrupted.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyTurn {
    pub hyps: Vec<UserActHypothesis>,
    pub corrupted: Vec<bool>,
}

const CONFIDENCE_MIN: f64 = 1e-3;

impl Channel {
    pub fn new(model: ErrorModel) -> Result<Self> {
        model.validate()?;
        Ok(Channel {
            correct: model.confidence_correct.beta()?,
            error: model.confidence_error.beta()?,
            model,
        })
    }

    pub fn model(&self) -> &ErrorModel {
        &self.model
    }

    fn conf<R: Rng + ?Sized>(&self, dist: &Beta<f64>, rng: &mut R) -> f64 {
        dist.sample(rng).clamp(CONFIDENCE_MIN, 1.0)
    }

    fn kind<R: Rng + ?Sized>(&self, rng: &mut R) -> Corruption {
        let u: f64 = rng.random();
        let [s, d, _] = self.model.confusion;
        if u < s {
            Corruption::Substitute
        } else if u < s + d {
            Corruption::Drop
        } else {
            Corruption::Insert
        }
    }

    /// Passes clean acts through the channel.
    pub fn corrupt<R: Rng + ?Sized>(
        &self,
        ontology: &Ontology,
        acts: &[UserActHypothesis],
        rng: &mut R,
    ) -> NoisyTurn {
        let mut hyps = Vec::with_capacity(acts.len() + 1);
        let mut corrupted = Vec::with_capacity(acts.len());
        for act in acts {
            if rng.random::<f64>() < self.model.ser {
                corrupted.push(true);
                match self.kind(rng) {
                    Corruption::Substitute => {
                        let c = self.conf(&self.error, rng);
                        hyps.push(substitute(ontology, act, rng).with_confidence(c));
                    }
                    Corruption::Drop => {}
                    Corruption::Insert => {
                        let c = self.conf(&self.correct, rng);
                        hyps.push(act.clone().with_confidence(c));
                        let c = self.conf(&self.error, rng);
                        hyps.push(random_act(ontology, rng).with_confidence(c));
                    }
                }
            } else {
                corrupted.push(false);
                let c = self.conf(&self.correct, rng);
                hyps.push(act.clone().with_confidence(c));
            }
        }
        renormalize_informs(&mut hyps);
        NoisyTurn { hyps, corrupted }
    }
}

/// Scales inform confidences so each slot's total is at most one.
pub fn renormalize_informs(hyps: &mut [UserActHypothesis]) {
    for slot in Slot::ALL {
        let field = slot.field();
        let is_evidence = |h: &UserActHypothesis| {
            matches!(h.act, UserActType::Inform | UserActType::Confirm) && h.slot == Some(field)
        };
        let sum: f64 = hyps.iter().filter(|h| is_evidence(h)).map(|h| h.confidence).sum();
        if sum > 1.0 {
            for h in hyps.iter_mut().filter(|h| is_evidence(h)) {
                h.confidence /= sum;
            }
        }
    }
}

fn other_index<R: Rng + ?Sized>(n: usize, current: Option<usize>, rng: &mut R) -> usize {
    match current {
        Some(c) if n > 1 => {
            let k = rng.random_range(0..n - 1);
            if k >= c {
                k + 1
            } else {
                k
            }
        }
        _ => rng.random_range(0..n),
    }
}

fn substitute<R: Rng + ?Sized>(
    ontology: &Ontology,
    act: &UserActHypothesis,
    rng: &mut R,
) -> UserActHypothesis {
    let mut out = act.clone();
    match act.act {
        UserActType::Inform | UserActType::Confirm => {
            if let Some(slot) = act.slot.and_then(Field::informable) {
                let values = ontology.values(slot);
                let cur = act.value.as_deref().and_then(|v| ontology.value_index(slot, v));
                out.value = Some(values[other_index(values.len(), cur, rng)].clone());
            }
        }
        UserActType::Request => {
            let fields = ontology.requestable();
            let cur = act.slot.and_then(|f| ontology.requestable_index(f));
            out.slot = Some(fields[other_index(fields.len(), cur, rng)]);
        }
        UserActType::Affirm => out.act = UserActType::Negate,
        UserActType::Negate => out.act = UserActType::Affirm,
        UserActType::Bye | UserActType::Reqalts | UserActType::Null => {
            let kinds = [UserActType::Bye, UserActType::Reqalts, UserActType::Null];
            let cur = kinds.iter().position(|&k| k == act.act);
            out.act = kinds[other_index(kinds.len(), cur, rng)];
        }
    }
    out
}

fn random_act<R: Rng + ?Sized>(ontology: &Ontology, rng: &mut R) -> UserActHypothesis {
    match rng.random_range(0..6) {
        0 => {
            let slot = Slot::ALL[rng.random_range(0..Slot::ALL.len())];
            let values = ontology.values(slot);
            UserActHypothesis::inform(slot, values[rng.random_range(0..values.len())].clone(), 1.0)
        }
        1 => {
            let fields = ontology.requestable();
            UserActHypothesis::request(fields[rng.random_range(0..fields.len())], 1.0)
        }
        2 => UserActHypothesis::bare(UserActType::Affirm, 1.0),
        3 => UserActHypothesis::bare(UserActType::Negate, 1.0),
        4 => UserActHypothesis::bare(UserActType::Bye, 1.0),
        _ => UserActHypothesis::bare(UserActType::Reqalts, 1.0),
    }
}
