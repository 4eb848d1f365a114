//! Labelled turn corpus: generation from baseline-vs-simulator dialogues,
//! the 4:1:1 split, and a versioned line-delimited file format.
//!
//! File layout: one header record, then for each dialogue a `dialogue`
//! record followed by its `turn` records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::action::{DiaAct, MasterAction, QuerySlot};
use crate::baseline::{baseline_act, BaselineConfig, BASELINE_VERSION};
use crate::belief::BeliefFeatures;
use crate::dialogue::{DialogueEnv, MAX_TURNS};
use crate::error::{Error, Result};
use crate::ontology::N_OFFER;
use crate::parallel::Workers;
use crate::policy::ActionLabels;
use crate::seed::{self, stream};

pub const CORPUS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledTurn {
    pub features: BeliefFeatures,
    pub label_dia: DiaAct,
    pub label_query: QuerySlot,
    pub label_offer: [bool; N_OFFER],
}

impl LabeledTurn {
    pub fn new(features: BeliefFeatures, action: MasterAction) -> Self {
        LabeledTurn {
            features,
            label_dia: action.dia_act,
            label_query: action.query,
            label_offer: action.offer,
        }
    }

    pub fn action(&self) -> MasterAction {
        MasterAction {
            dia_act: self.label_dia,
            query: self.label_query,
            offer: self.label_offer,
        }
    }

    pub fn labels(&self) -> ActionLabels {
        self.action().into()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusDialogue {
    pub id: usize,
    pub seed: u64,
    pub success: bool,
    pub split: Split,
    pub turns: Vec<LabeledTurn>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusMeta {
    pub version: u32,
    pub seed: u64,
    pub ser: f64,
    pub baseline_version: u32,
    pub baseline: BaselineConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DialogueCorpus {
    pub meta: CorpusMeta,
    pub dialogues: Vec<CorpusDialogue>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Header(CorpusMeta),
    Dialogue {
        id: usize,
        seed: u64,
        success: bool,
        split: Split,
        turns: usize,
    },
    Turn {
        dialogue: usize,
        #[serde(flatten)]
        turn: LabeledTurn,
    },
}

/// Split sizes in the ratio 4:1:1, each within one of the exact share.
pub fn split_sizes(n: usize) -> [usize; 3] {
    let valid = (n as f64 / 6.0).round() as usize;
    let test = valid.min(n - valid);
    [n - valid - test, valid, test]
}

/// Assigns splits by a seeded shuffle of dialogue indices.
pub fn assign_splits(n: usize, seed_: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed_, stream::SPLIT, 0)));
    let [train, valid, _] = split_sizes(n);
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < train {
            Split::Train
        } else if rank < train + valid {
            Split::Valid
        } else {
            Split::Test
        };
    }
    splits
}

/// Runs `n` baseline dialogues against the simulator and labels every turn
/// with the baseline's action.
pub fn generate_corpus(
    env: &DialogueEnv,
    n: usize,
    seed_: u64,
    baseline: &BaselineConfig,
    workers: usize,
) -> Result<DialogueCorpus> {
    baseline.validate()?;
    let workers = Workers::new(workers)?;
    let seeds: Vec<u64> = (0..n as u64).map(|i| seed::derive(seed_, stream::CORPUS, i)).collect();
    let records = workers.map(&seeds, |&s| {
        env.run(s, |b, _| Ok(baseline_act(b, env.ontology(), env.db(), baseline)))
    });
    let splits = assign_splits(n, seed_);
    let mut dialogues = Vec::with_capacity(n);
    for (id, (rec, split)) in records.into_iter().zip(splits).enumerate() {
        let rec = rec?;
        dialogues.push(CorpusDialogue {
            id,
            seed: rec.seed,
            success: rec.success,
            split,
            turns: rec
                .transcript
                .turns
                .iter()
                .map(|t| LabeledTurn::new(t.features.clone(), t.reply.action))
                .collect(),
        });
    }
    Ok(DialogueCorpus {
        meta: CorpusMeta {
            version: CORPUS_VERSION,
            seed: seed_,
            ser: env.ser(),
            baseline_version: BASELINE_VERSION,
            baseline: *baseline,
        },
        dialogues,
    })
}

impl DialogueCorpus {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &CorpusDialogue> {
        self.dialogues.iter().filter(move |d| d.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn turns(&self, split: Split) -> impl Iterator<Item = &LabeledTurn> {
        self.split(split).flat_map(|d| d.turns.iter())
    }

    pub fn n_turns(&self) -> usize {
        self.dialogues.iter().map(|d| d.turns.len()).sum()
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        let line = |w: &mut BufWriter<_>, r: &Record| -> Result<()> {
            serde_json::to_writer(&mut *w, r).map_err(|e| Error::Data(e.to_string()))?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&mut w, &Record::Header(self.meta.clone()))?;
        for d in &self.dialogues {
            line(
                &mut w,
                &Record::Dialogue {
                    id: d.id,
                    seed: d.seed,
                    success: d.success,
                    split: d.split,
                    turns: d.turns.len(),
                },
            )?;
            for t in &d.turns {
                line(
                    &mut w,
                    &Record::Turn {
                        dialogue: d.id,
                        turn: t.clone(),
                    },
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a corpus; errors name the 1-based line that failed.
    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut meta: Option<CorpusMeta> = None;
        let mut dialogues: Vec<CorpusDialogue> = Vec::new();
        let mut pending = 0usize;
        let mut last_line = 0;
        for (i, line) in r.lines().enumerate() {
            let n = i + 1;
            last_line = n;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| Error::parse(n, e.to_string()))?;
            match (rec, meta.is_some()) {
                (Record::Header(m), false) => {
                    if m.version != CORPUS_VERSION {
                        return Err(Error::UnknownVersion {
                            found: m.version.to_string(),
                            expected: CORPUS_VERSION.to_string(),
                        });
                    }
                    meta = Some(m);
                }
                (Record::Header(_), true) => return Err(Error::parse(n, "duplicate header")),
                (_, false) => return Err(Error::parse(n, "missing header")),
                (
                    Record::Dialogue {
                        id,
                        seed,
                        success,
                        split,
                        turns,
                    },
                    true,
                ) => {
                    if pending != 0 {
                        return Err(Error::parse(n, format!("{pending} turns missing from previous dialogue")));
                    }
                    if turns > MAX_TURNS {
                        return Err(Error::parse(n, format!("dialogue claims {turns} turns, more than {MAX_TURNS}")));
                    }
                    if dialogues.iter().any(|d| d.id == id) {
                        return Err(Error::parse(n, format!("duplicate dialogue id {id}")));
                    }
                    pending = turns;
                    dialogues.push(CorpusDialogue {
                        id,
                        seed,
                        success,
                        split,
                        turns: Vec::with_capacity(turns),
                    });
                }
                (Record::Turn { dialogue, turn }, true) => {
                    let Some(current) = dialogues.last_mut().filter(|d| d.id == dialogue && pending > 0) else {
                        return Err(Error::parse(n, format!("turn for unexpected dialogue {dialogue}")));
                    };
                    if !turn.action().is_legal() {
                        return Err(Error::parse(n, "illegal label combination"));
                    }
                    current.turns.push(turn);
                    pending -= 1;
                }
            }
        }
        if pending != 0 {
            return Err(Error::parse(last_line, format!("file ends with {pending} turns missing")));
        }
        let meta = meta.ok_or(Error::EmptyCorpus)?;
        Ok(DialogueCorpus { meta, dialogues })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}
