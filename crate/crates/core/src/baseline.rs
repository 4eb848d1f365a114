//! Deterministic hand-crafted policy used as the SL teacher.

use serde::{Deserialize, Serialize};

use crate::action::MasterAction;
use crate::belief::{requested_bits, BeliefState};
use crate::db::VenueDatabase;
use crate::error::{Error, Result};
use crate::ontology::{Field, Ontology, Slot, N_OFFER};

/// Bumped whenever the rule set changes; recorded in corpus headers.
pub const BASELINE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub confirm_threshold: f64,
    pub accept_threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            confirm_threshold: 0.4,
            accept_threshold: 0.7,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let (c, a) = (self.confirm_threshold, self.accept_threshold);
        if c > 0.0 && c <= a && a <= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "baseline thresholds must satisfy 0 < {c} <= {a} <= 1"
            )))
        }
    }
}

const SELECT_MIN_SECOND: f64 = 0.2;
const SELECT_MAX_GAP: f64 = 0.1;

/// Rule-based action choice, first matching rule wins:
/// bye if the user said bye; request the first unknown slot while more than
/// one venue matches; confirm the first uncertain slot; request a slot
/// still open when more than ten venues match; select between two close
/// candidates; otherwise offer (name plus requested fields).
pub fn baseline_act(
    belief: &BeliefState,
    ontology: &Ontology,
    db: &VenueDatabase,
    cfg: &BaselineConfig,
) -> MasterAction {
    if belief.user_said_bye() {
        return MasterAction::bye();
    }
    let matches = db.count(&belief.top_query(ontology));
    let tops = Slot::ALL.map(|s| belief.top_two(s));

    if matches > 1 {
        if let Some(s) = Slot::ALL.into_iter().find(|s| tops[s.index()].1 < cfg.confirm_threshold) {
            return MasterAction::request(s);
        }
    }
    if let Some(s) = Slot::ALL.into_iter().find(|s| {
        let top = tops[s.index()].1;
        top >= cfg.confirm_threshold && top < cfg.accept_threshold
    }) {
        return MasterAction::confirm(s);
    }
    if matches > 10 {
        if let Some(s) = Slot::ALL
            .into_iter()
            .find(|&s| belief.p_none(s) >= tops[s.index()].1)
        {
            return MasterAction::request(s);
        }
    }
    if let Some(s) = Slot::ALL.into_iter().find(|s| {
        let (_, top, second) = tops[s.index()];
        second >= SELECT_MIN_SECOND && top - second < SELECT_MAX_GAP
    }) {
        return MasterAction::select(s);
    }

    let mut bits = [false; N_OFFER];
    if let Some(b) = ontology.offer_bit(Field::Name) {
        bits[b] = true;
    }
    if matches > 0 {
        for (b, r) in bits.iter_mut().zip(requested_bits(ontology, belief)) {
            *b |= r;
        }
    }
    MasterAction::offer(bits)
}
