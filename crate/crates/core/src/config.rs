//! Flat `key = value` configuration files.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! A file may set keys of several configs at once, but every key must be
//! understood by one of them.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::baseline::BaselineConfig;
use crate::error::{Error, Result};
use crate::rl::RlConfig;
use crate::sim::{ErrorModel, UserConfig};
use crate::sl::SlConfig;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::parse(line, format!("bad key {k:?}")));
            }
            if v.is_empty() {
                return Err(Error::parse(line, format!("missing value for {k}")));
            }
            if entries.insert(k.to_owned(), (v.to_owned(), line)).is_some() {
                return Err(Error::parse(line, format!("duplicate key {k}")));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Applies every entry to the first target that accepts its key.
    pub fn apply(&self, targets: &mut [&mut dyn Configurable]) -> Result<()> {
        for (key, (value, line)) in &self.entries {
            let mut taken = false;
            for t in targets.iter_mut() {
                if t.set(key, value).map_err(|e| Error::parse(*line, e.to_string()))? {
                    taken = true;
                    break;
                }
            }
            if !taken {
                return Err(Error::parse(*line, format!("unknown key {key}")));
            }
        }
        for t in targets.iter() {
            t.check()?;
        }
        Ok(())
    }
}

/// A config that can be updated key by key.
pub trait Configurable {
    /// Returns `Ok(false)` for keys this config does not own.
    fn set(&mut self, key: &str, value: &str) -> Result<bool>;
    fn check(&self) -> Result<()>;
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

macro_rules! fields {
    ($self:ident, $key:ident, $value:ident; $($name:literal => $field:expr),* $(,)?) => {
        match $key {
            $($name => { $field = parse($key, $value)?; Ok(true) })*
            _ => Ok(false),
        }
    };
}

impl Configurable for SlConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fields!(self, key, value;
            "learning_rate" => self.learning_rate,
            "adagrad_epsilon" => self.adagrad_epsilon,
            "max_epochs" => self.max_epochs,
            "patience" => self.patience,
            "seed" => self.seed,
        )
    }

    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Configurable for RlConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fields!(self, key, value;
            "gamma" => self.gamma,
            "epsilon" => self.epsilon,
            "minibatch" => self.minibatch,
            "pool_capacity" => self.pool_capacity,
            "step_size" => self.step_size,
            "ridge" => self.ridge,
            "grad_norm_clip" => self.grad_norm_clip,
            "update_every" => self.update_every,
            "total_dialogues" => self.total_dialogues,
            "algorithm" => self.algorithm,
            "eval_every" => self.eval_every,
            "eval_dialogues" => self.eval_dialogues,
            "return_min" => self.return_min,
            "return_max" => self.return_max,
            "seed" => self.seed,
            "workers" => self.workers,
        )
    }

    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Configurable for ErrorModel {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fields!(self, key, value;
            "ser" => self.ser,
            "confusion_substitute" => self.confusion[0],
            "confusion_drop" => self.confusion[1],
            "confusion_insert" => self.confusion[2],
            "confidence_correct_mean" => self.confidence_correct.mean,
            "confidence_correct_spread" => self.confidence_correct.spread,
            "confidence_error_mean" => self.confidence_error.mean,
            "confidence_error_spread" => self.confidence_error.spread,
        )
    }

    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Configurable for UserConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fields!(self, key, value;
            "user_patience" => self.patience,
            "satisfiable_prob" => self.satisfiable_prob,
            "dontcare_prob" => self.dontcare_prob,
            "opening_inform_prob" => self.opening_inform_prob,
        )
    }

    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Configurable for BaselineConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fields!(self, key, value;
            "confirm_threshold" => self.confirm_threshold,
            "accept_threshold" => self.accept_threshold,
        )
    }

    fn check(&self) -> Result<()> {
        self.validate()
    }
}
