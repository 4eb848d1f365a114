//! Supervised pre-training with per-dialogue Adagrad and early stopping,
//! plus support-weighted F-measures for the three output heads.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::action::{DiaAct, MasterAction, QuerySlot};
use crate::corpus::{CorpusDialogue, DialogueCorpus, LabeledTurn, Split};
use crate::error::{Error, Result};
use crate::ontology::N_OFFER;
use crate::policy::PolicyNetwork;
use crate::seed::{self, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlConfig {
    pub learning_rate: f64,
    pub adagrad_epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for SlConfig {
    fn default() -> Self {
        SlConfig {
            learning_rate: 0.05,
            adagrad_epsilon: 1e-8,
            max_epochs: 200,
            patience: 10,
            seed: 0,
        }
    }
}

impl SlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        if self.adagrad_epsilon.is_nan() || self.adagrad_epsilon <= 0.0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config(
                "adagrad_epsilon, max_epochs and patience must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    DiaAct,
    Query,
    Offer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub dia_act: f64,
    pub query: f64,
    pub offer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub valid_f1: F1Scores,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlHistory {
    pub epochs: Vec<EpochMetrics>,
    /// Epoch whose parameters were returned; 0 means the initial ones.
    pub best_epoch: usize,
}

/// Adagrad state: per-coordinate sum of squared gradients.
#[derive(Clone, Debug)]
pub struct Adagrad {
    pub lr: f64,
    pub eps: f64,
    pub acc: Vec<f64>,
}

impl Adagrad {
    pub fn new(n: usize, lr: f64, eps: f64) -> Self {
        Adagrad {
            lr,
            eps,
            acc: vec![0.0; n],
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        for ((t, a), &g) in theta.iter_mut().zip(&mut self.acc).zip(grad) {
            *a += g * g;
            *t -= self.lr * g / (a.sqrt() + self.eps);
        }
    }
}

/// Mean per-turn loss over `turns`.
pub fn mean_loss<'a>(net: &PolicyNetwork, turns: impl IntoIterator<Item = &'a LabeledTurn>) -> Result<f64> {
    let (mut total, mut n) = (0.0, 0usize);
    for t in turns {
        total += net.supervised_loss(t.features.as_slice(), &t.labels())?;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Trains on the corpus's train split, keeping the parameters with the
/// lowest validation loss.
pub fn train_sl(
    corpus: &DialogueCorpus,
    cfg: &SlConfig,
    theta0: PolicyNetwork,
) -> Result<(PolicyNetwork, SlHistory)> {
    cfg.validate()?;
    let train: Vec<&CorpusDialogue> = corpus.split(Split::Train).filter(|d| !d.turns.is_empty()).collect();
    let valid: Vec<&LabeledTurn> = corpus.turns(Split::Valid).collect();
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Config(
            "supervised training needs non-empty train and validation splits".into(),
        ));
    }
    let mut net = theta0;
    let mut opt = Adagrad::new(net.len(), cfg.learning_rate, cfg.adagrad_epsilon);
    let mut rng = seed::rng(seed::derive(cfg.seed, stream::SL, 0));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; net.len()];

    let mut best = net.clone();
    let mut best_loss = mean_loss(&net, valid.iter().copied())?;
    let mut history = SlHistory::default();
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for t in &train[i].turns {
                net.accumulate_supervised(t.features.as_slice(), &t.labels(), 1.0, &mut grad)?;
            }
            opt.step(net.params_mut(), &grad);
        }
        if net.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("parameters diverged in epoch {epoch}")));
        }
        let train_loss = mean_loss(&net, train.iter().flat_map(|d| &d.turns))?;
        let valid_loss = mean_loss(&net, valid.iter().copied())?;
        let valid_f1 = f1_scores(&net, valid.iter().copied())?;
        log::debug!("epoch {epoch}: train {train_loss:.4} valid {valid_loss:.4}");
        history.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            valid_loss,
            valid_f1,
        });
        if valid_loss < best_loss {
            best_loss = valid_loss;
            best = net.clone();
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, history))
}

/// Greedy predictions paired with gold actions.
pub fn predictions<'a>(
    net: &PolicyNetwork,
    turns: impl IntoIterator<Item = &'a LabeledTurn>,
) -> Result<(Vec<MasterAction>, Vec<MasterAction>)> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for t in turns {
        pred.push(net.forward(t.features.as_slice())?.greedy());
        gold.push(t.action());
    }
    Ok((pred, gold))
}

pub fn f1_scores<'a>(net: &PolicyNetwork, turns: impl IntoIterator<Item = &'a LabeledTurn>) -> Result<F1Scores> {
    let (pred, gold) = predictions(net, turns)?;
    Ok(F1Scores {
        dia_act: weighted_f1(&pred, &gold, Head::DiaAct)?,
        query: weighted_f1(&pred, &gold, Head::Query)?,
        offer: weighted_f1(&pred, &gold, Head::Offer)?,
    })
}

/// Support-weighted F1 of one head. The Offer head scores each bit as a
/// binary problem and weights every (bit, class) pair by its support.
pub fn weighted_f1(pred: &[MasterAction], gold: &[MasterAction], head: Head) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} labels",
            pred.len(),
            gold.len()
        )));
    }
    match head {
        Head::DiaAct => {
            let p: Vec<usize> = pred.iter().map(|a| a.dia_act.index()).collect();
            let g: Vec<usize> = gold.iter().map(|a| a.dia_act.index()).collect();
            weighted_f1_classes(&p, &g, DiaAct::COUNT)
        }
        Head::Query => {
            let p: Vec<usize> = pred.iter().map(|a| a.query.index()).collect();
            let g: Vec<usize> = gold.iter().map(|a| a.query.index()).collect();
            weighted_f1_classes(&p, &g, QuerySlot::COUNT)
        }
        Head::Offer => {
            let p: Vec<[bool; N_OFFER]> = pred.iter().map(|a| a.offer).collect();
            let g: Vec<[bool; N_OFFER]> = gold.iter().map(|a| a.offer).collect();
            weighted_f1_bits(&p, &g)
        }
    }
}

/// Per-class tallies: (true positives, predicted, support).
fn tallies(pred: &[usize], gold: &[usize], n_classes: usize) -> Result<Vec<(usize, usize, usize)>> {
    let mut t = vec![(0, 0, 0); n_classes];
    for (&p, &g) in pred.iter().zip(gold) {
        if p >= n_classes || g >= n_classes {
            return Err(Error::Data(format!("class index out of range 0..{n_classes}")));
        }
        t[p].1 += 1;
        t[g].2 += 1;
        if p == g {
            t[g].0 += 1;
        }
    }
    Ok(t)
}

fn f1(tp: usize, predicted: usize, support: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (predicted + support) as f64
    }
}

/// Support-weighted mean of per-class F1 scores.
pub fn weighted_f1_classes(pred: &[usize], gold: &[usize], n_classes: usize) -> Result<f64> {
    if gold.is_empty() || pred.len() != gold.len() {
        return Err(Error::UndefinedMetric);
    }
    let t = tallies(pred, gold, n_classes)?;
    let total: usize = t.iter().map(|c| c.2).sum();
    Ok(t.iter().map(|&(tp, p, s)| s as f64 * f1(tp, p, s)).sum::<f64>() / total as f64)
}

pub fn weighted_f1_bits<const K: usize>(pred: &[[bool; K]], gold: &[[bool; K]]) -> Result<f64> {
    if gold.is_empty() || pred.len() != gold.len() || K == 0 {
        return Err(Error::UndefinedMetric);
    }
    let mut weighted = 0.0;
    let mut total = 0usize;
    for k in 0..K {
        let p: Vec<usize> = pred.iter().map(|b| usize::from(b[k])).collect();
        let g: Vec<usize> = gold.iter().map(|b| usize::from(b[k])).collect();
        for (tp, pc, s) in tallies(&p, &g, 2)? {
            weighted += s as f64 * f1(tp, pc, s);
            total += s;
        }
    }
    Ok(weighted / total as f64)
}

pub const METRICS_HEADER: &str = "epoch,train_loss,valid_loss,f1_dia_act,f1_query,f1_offer";

pub fn write_metrics(history: &SlHistory, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRICS_HEADER.split(','))
        .map_err(|e| Error::Data(e.to_string()))?;
    for e in &history.epochs {
        out.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.valid_loss.to_string(),
            e.valid_f1.dia_act.to_string(),
            e.valid_f1.query.to_string(),
            e.valid_f1.offer.to_string(),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metrics(r: impl BufRead) -> Result<Vec<EpochMetrics>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err(Error::parse(1, "unexpected metrics header"));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::parse(line, "missing column"))?
                .parse()
                .map_err(|_| Error::parse(line, format!("column {k} is not a number")))
        };
        out.push(EpochMetrics {
            epoch: rec[0].parse().map_err(|_| Error::parse(line, "bad epoch"))?,
            train_loss: num(1)?,
            valid_loss: num(2)?,
            valid_f1: F1Scores {
                dia_act: num(3)?,
                query: num(4)?,
                offer: num(5)?,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::BaselineConfig;
    use crate::belief::{BeliefFeatures, FEATURE_DIM};
    use crate::corpus::{CorpusMeta, CORPUS_VERSION};
    use crate::ontology::Slot;
    use rand::Rng;

    fn random_turn(rng: &mut seed::Rng, action: MasterAction) -> LabeledTurn {
        let x = (0..FEATURE_DIM).map(|_| rng.random::<f64>()).collect();
        LabeledTurn::new(BeliefFeatures::new(x).unwrap(), action)
    }

    fn corpus_of(dialogues: Vec<(Split, Vec<LabeledTurn>)>) -> DialogueCorpus {
        DialogueCorpus {
            meta: CorpusMeta {
                version: CORPUS_VERSION,
                seed: 0,
                ser: 0.0,
                baseline_version: 1,
                baseline: BaselineConfig::default(),
            },
            dialogues: dialogues
                .into_iter()
                .enumerate()
                .map(|(id, (split, turns))| CorpusDialogue {
                    id,
                    seed: id as u64,
                    success: true,
                    split,
                    turns,
                })
                .collect(),
        }
    }

    fn actions() -> Vec<MasterAction> {
        vec![
            MasterAction::request(Slot::Food),
            MasterAction::confirm(Slot::Area),
            MasterAction::offer([true, false, false, false, true, false]),
            MasterAction::select(Slot::Pricerange),
            MasterAction::bye(),
        ]
    }

    #[test]
    fn f1_hand_cases() {
        let a = actions();
        assert_eq!(weighted_f1(&a, &a, Head::DiaAct).unwrap(), 1.0);
        assert_eq!(weighted_f1(&a, &a, Head::Query).unwrap(), 1.0);
        assert_eq!(weighted_f1(&a, &a, Head::Offer).unwrap(), 1.0);
        // supports (3, 1): class 0 perfect, class 1 never predicted
        let f = weighted_f1_classes(&[0, 0, 0, 0], &[0, 0, 0, 1], 2).unwrap();
        let class0 = 2.0 * 3.0 / (4.0 + 3.0);
        assert!((f - 0.75 * class0).abs() < 1e-12);
        // the same supports with class 0 at F1 1 and class 1 at F1 0
        let f = weighted_f1_classes(&[0, 0, 0, 2], &[0, 0, 0, 1], 3).unwrap();
        assert!((f - 0.75).abs() < 1e-12);
        assert!(matches!(weighted_f1_classes(&[], &[], 2), Err(Error::UndefinedMetric)));
    }

    #[test]
    fn bit_f1_weights_each_bit_and_class() {
        let gold = [[true, false], [false, false]];
        let pred = [[true, true], [false, false]];
        // bit 0 perfect (weight 2); bit 1: class 0 F1 = 2/3 (support 2), class 1 absent
        let f = weighted_f1_bits(&pred, &gold).unwrap();
        assert!((f - (2.0 + 2.0 * (2.0 / 3.0)) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let mut rng = seed::rng(1);
        let a = actions();
        let c = corpus_of(vec![
            (Split::Train, a.iter().map(|&x| random_turn(&mut rng, x)).collect()),
            (Split::Valid, a.iter().map(|&x| random_turn(&mut rng, x)).collect()),
        ]);
        let theta0 = PolicyNetwork::init_default(3);
        let cfg = SlConfig {
            learning_rate: 0.0,
            max_epochs: 3,
            ..SlConfig::default()
        };
        let (net, _) = train_sl(&c, &cfg, theta0.clone()).unwrap();
        assert_eq!(net, theta0);
    }

    #[test]
    fn single_dialogue_is_memorised_and_runs_repeat() {
        let mut rng = seed::rng(2);
        let a = actions();
        let turns: Vec<_> = a.iter().map(|&x| random_turn(&mut rng, x)).collect();
        // the dialogue appears five times in the training split
        let c = corpus_of(
            std::iter::repeat_n((Split::Train, turns.clone()), 5)
                .chain([(Split::Valid, turns.clone())])
                .collect(),
        );
        let cfg = SlConfig {
            patience: 200,
            ..SlConfig::default()
        };
        let (net, hist) = train_sl(&c, &cfg, PolicyNetwork::init_default(4)).unwrap();
        assert!(mean_loss(&net, &turns).unwrap() < 0.01);
        assert!(hist.epochs.len() <= 200);
        let (again, hist2) = train_sl(&c, &cfg, PolicyNetwork::init_default(4)).unwrap();
        assert_eq!(net, again);
        assert_eq!(hist, hist2);
    }

    #[test]
    fn best_validation_parameters_are_returned() {
        let mut rng = seed::rng(5);
        let a = actions();
        let mk = |rng: &mut seed::Rng| -> Vec<LabeledTurn> {
            (0..6).map(|i| random_turn(rng, a[(i * 7) % a.len()])).collect()
        };
        let dialogues = (0..8)
            .map(|i| (if i < 6 { Split::Train } else { Split::Valid }, mk(&mut rng)))
            .collect();
        let c = corpus_of(dialogues);
        let cfg = SlConfig {
            max_epochs: 40,
            patience: 5,
            ..SlConfig::default()
        };
        let (net, hist) = train_sl(&c, &cfg, PolicyNetwork::init_default(6)).unwrap();
        let got = mean_loss(&net, c.turns(Split::Valid)).unwrap();
        let best = hist.epochs.iter().map(|e| e.valid_loss).fold(f64::INFINITY, f64::min);
        assert!(got <= best + 1e-12);
    }

    #[test]
    fn adagrad_accumulator_never_decreases() {
        let mut opt = Adagrad::new(3, 0.1, 1e-8);
        let mut theta = vec![0.0; 3];
        let mut prev = opt.acc.clone();
        for g in [[1.0, -2.0, 0.0], [0.0, 0.5, -0.1], [3.0, 0.0, 0.0]] {
            opt.step(&mut theta, &g);
            assert!(opt.acc.iter().zip(&prev).all(|(a, b)| a >= b));
            prev = opt.acc.clone();
        }
    }

    #[test]
    fn empty_partition_is_rejected() {
        let mut rng = seed::rng(1);
        let c = corpus_of(vec![(Split::Train, vec![random_turn(&mut rng, MasterAction::bye())])]);
        assert!(matches!(
            train_sl(&c, &SlConfig::default(), PolicyNetwork::init_default(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn metrics_round_trip() {
        let h = SlHistory {
            epochs: vec![EpochMetrics {
                epoch: 1,
                train_loss: 0.1 + 0.2,
                valid_loss: 1.0 / 3.0,
                valid_f1: F1Scores {
                    dia_act: 0.9,
                    query: 0.8,
                    offer: 0.85,
                },
            }],
            best_epoch: 1,
        };
        let mut buf = Vec::new();
        write_metrics(&h, &mut buf).unwrap();
        assert_eq!(read_metrics(&buf[..]).unwrap(), h.epochs);
    }
}
