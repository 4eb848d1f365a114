//! Focus-style belief tracking and the fixed-length policy input encoding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::action::{DiaAct, MasterAction, QuerySlot};
use crate::db::{match_bucket, DbQuery, N_BUCKETS};
use crate::error::{Error, Result};
use crate::ontology::{Field, Ontology, Slot, N_INFORMABLE, N_OFFER, N_REQUESTABLE};

/// Length of the belief feature vector.
pub const FEATURE_DIM: usize = 48;

const N_USER_ACTS: usize = 8;

/// Semantic user act types, in feature-vector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserActType {
    Inform,
    Request,
    /// The user asks whether the offered venue has a given value.
    Confirm,
    Negate,
    Affirm,
    Reqalts,
    Bye,
    Null,
}

impl UserActType {
    pub const ALL: [UserActType; N_USER_ACTS] = [
        UserActType::Inform,
        UserActType::Request,
        UserActType::Confirm,
        UserActType::Negate,
        UserActType::Affirm,
        UserActType::Reqalts,
        UserActType::Bye,
        UserActType::Null,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One decoded (possibly corrupted) user act with its confidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserActHypothesis {
    pub act: UserActType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub confidence: f64,
}

impl UserActHypothesis {
    pub fn inform(slot: Slot, value: impl Into<String>, confidence: f64) -> Self {
        UserActHypothesis {
            act: UserActType::Inform,
            slot: Some(slot.field()),
            value: Some(value.into()),
            confidence,
        }
    }

    pub fn request(field: Field, confidence: f64) -> Self {
        UserActHypothesis {
            act: UserActType::Request,
            slot: Some(field),
            value: None,
            confidence,
        }
    }

    pub fn bare(act: UserActType, confidence: f64) -> Self {
        UserActHypothesis {
            act,
            slot: None,
            value: None,
            confidence,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }
}

impl fmt::Display for UserActHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self.act).ok();
        let name = name.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        match (&self.slot, &self.value) {
            (Some(s), Some(v)) => write!(f, "{name}({s}={v})"),
            (Some(s), None) => write!(f, "{name}({s})"),
            _ => write!(f, "{name}()"),
        }
    }
}

/// Per-dialogue belief state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    /// Per informable slot: distribution over the slot's values followed by
    /// a trailing `none` entry.
    pub slots: [Vec<f64>; N_INFORMABLE],
    pub changed: [bool; N_INFORMABLE],
    /// Aligned with `Ontology::requestable`.
    pub requested: [bool; N_REQUESTABLE],
    /// Highest confidence of each user act type in the last user turn.
    pub last_user_acts: [f64; N_USER_ACTS],
    pub last_system_act: Option<MasterAction>,
    pub offer_made: bool,
    pub matched_count: usize,
    pub turn: usize,
    pub max_turns: usize,
    /// Number of times the user asked for an alternative venue.
    pub alternatives: usize,
}

impl BeliefState {
    pub fn new(ontology: &Ontology, max_turns: usize) -> Self {
        let slots = std::array::from_fn(|i| {
            let mut v = vec![0.0; ontology.values(Slot::ALL[i]).len() + 1];
            *v.last_mut().unwrap() = 1.0;
            v
        });
        BeliefState {
            slots,
            changed: [false; N_INFORMABLE],
            requested: [false; N_REQUESTABLE],
            last_user_acts: [0.0; N_USER_ACTS],
            last_system_act: None,
            offer_made: false,
            matched_count: 0,
            turn: 0,
            max_turns,
            alternatives: 0,
        }
    }

    pub fn slot(&self, slot: Slot) -> &[f64] {
        &self.slots[slot.index()]
    }

    pub fn p_none(&self, slot: Slot) -> f64 {
        *self.slot(slot).last().unwrap()
    }

    /// Highest and second-highest value probabilities (excluding `none`),
    /// with the index of the highest. Ties go to the lowest index.
    pub fn top_two(&self, slot: Slot) -> (Option<usize>, f64, f64) {
        let dist = self.slot(slot);
        let values = &dist[..dist.len() - 1];
        let mut best: Option<usize> = None;
        for (i, &p) in values.iter().enumerate() {
            if best.is_none_or(|b| p > values[b]) {
                best = Some(i);
            }
        }
        let top = best.map_or(0.0, |b| values[b]);
        let second = values
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != best)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max);
        (best.filter(|_| top > 0.0), top, second)
    }

    /// The value the system would name when confirming `slot`.
    pub fn top_value(&self, slot: Slot) -> Option<usize> {
        self.top_two(slot).0
    }

    pub fn user_said_bye(&self) -> bool {
        self.last_user_acts[UserActType::Bye.index()] > 0.0
    }

    pub fn is_requested(&self, ontology: &Ontology, field: Field) -> bool {
        ontology
            .requestable_index(field)
            .is_some_and(|i| self.requested[i])
    }

    /// Focus update: `b'(v) = conf(v) + (1 - Σ conf) · b(v)` per slot.
    ///
    /// Affirm/negate answer the system's last confirm; the system's
    /// `offer_made` and `matched_count` are refreshed by the caller.
    pub fn focus_update(&self, ontology: &Ontology, hyps: &[UserActHypothesis]) -> Result<Self> {
        let mut next = self.clone();
        let mut evidence: [Vec<f64>; N_INFORMABLE] =
            std::array::from_fn(|i| vec![0.0; ontology.values(Slot::ALL[i]).len()]);
        let mut acts = [0.0f64; N_USER_ACTS];
        let mut affirm = 0.0f64;
        let mut negate = 0.0f64;

        for h in hyps {
            if !(0.0..=1.0).contains(&h.confidence) {
                return Err(Error::Data(format!("confidence {} outside [0,1]", h.confidence)));
            }
            let k = h.act.index();
            acts[k] = acts[k].max(h.confidence);
            match h.act {
                UserActType::Inform | UserActType::Confirm => {
                    let slot = h.slot.and_then(Field::informable).ok_or_else(|| {
                        Error::Data(format!("{h} does not name an informable slot"))
                    })?;
                    let value = h.value.as_deref().unwrap_or_default();
                    let idx = ontology
                        .value_index(slot, value)
                        .ok_or_else(|| Error::Data(format!("illegal value in {h}")))?;
                    evidence[slot.index()][idx] += h.confidence;
                }
                UserActType::Request => {
                    let field = h.slot.ok_or_else(|| Error::Data(format!("{h} lacks a slot")))?;
                    if let Some(i) = ontology.requestable_index(field) {
                        next.requested[i] = true;
                    }
                }
                UserActType::Affirm => affirm = affirm.max(h.confidence),
                UserActType::Negate => negate = negate.max(h.confidence),
                UserActType::Reqalts => {
                    next.alternatives += 1;
                    next.offer_made = false;
                }
                UserActType::Bye | UserActType::Null => {}
            }
        }
        if hyps.is_empty() {
            acts[UserActType::Null.index()] = 1.0;
        }

        for slot in Slot::ALL {
            let sum: f64 = evidence[slot.index()].iter().sum();
            if sum > 1.0 + 1e-9 {
                return Err(Error::InvalidEvidence {
                    slot: slot.name().to_owned(),
                    sum,
                });
            }
        }

        let confirmed = match self.last_system_act {
            Some(MasterAction {
                dia_act: DiaAct::Confirm,
                query,
                ..
            }) => query
                .slot()
                .and_then(|s| self.top_value(s).map(|v| (s, v))),
            _ => None,
        };
        if let Some((slot, v)) = confirmed {
            let e = &mut evidence[slot.index()];
            let room = (1.0 - e.iter().sum::<f64>()).max(0.0);
            e[v] += affirm.min(room);
        }

        next.changed = [false; N_INFORMABLE];
        for slot in Slot::ALL {
            let e = &evidence[slot.index()];
            let total: f64 = e.iter().sum();
            let dist = &mut next.slots[slot.index()];
            if total > 0.0 {
                let keep = (1.0 - total).max(0.0);
                let n = e.len();
                for (p, &c) in dist[..n].iter_mut().zip(e) {
                    *p = c + keep * *p;
                }
                dist[n] *= keep;
                next.changed[slot.index()] = true;
            }
        }
        if let Some((slot, v)) = confirmed {
            if negate > 0.0 {
                let dist = &mut next.slots[slot.index()];
                let removed = dist[v] * negate;
                dist[v] -= removed;
                *dist.last_mut().unwrap() += removed;
                next.changed[slot.index()] = true;
            }
        }

        next.last_user_acts = acts;
        next.turn = (self.turn + 1).min(self.max_turns);
        Ok(next)
    }

    /// Records the system's reply: clears requests that were just answered.
    pub fn note_system_turn(&mut self, ontology: &Ontology, action: MasterAction, venue_found: bool) {
        self.last_system_act = Some(action);
        if action.dia_act == DiaAct::Offer && venue_found {
            self.offer_made = true;
            for (i, &field) in ontology.requestable().iter().enumerate() {
                if ontology.offer_bit(field).is_some_and(|b| action.offer[b]) {
                    self.requested[i] = false;
                }
            }
        }
    }

    /// Encodes the state as the 48-dimensional policy input.
    pub fn featurize(&self) -> BeliefFeatures {
        let mut x = Vec::with_capacity(FEATURE_DIM);
        for slot in Slot::ALL {
            let dist = self.slot(slot);
            let (_, top, second) = self.top_two(slot);
            let none = self.p_none(slot);
            let rest = (1.0 - top - second - none).clamp(0.0, 1.0);
            let entropy: f64 = dist
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln())
                .sum();
            let norm = (dist.len() as f64).ln();
            x.extend([
                top,
                second,
                rest,
                none,
                (entropy / norm).clamp(0.0, 1.0),
                f64::from(u8::from(self.changed[slot.index()])),
            ]);
        }
        x.extend(self.requested.iter().map(|&r| f64::from(u8::from(r))));
        x.extend(self.last_user_acts.iter().map(|c| c.clamp(0.0, 1.0)));
        let mut dia = [0.0; DiaAct::COUNT];
        let mut query = [0.0; QuerySlot::COUNT];
        if let Some(a) = self.last_system_act {
            dia[a.dia_act.index()] = 1.0;
            query[a.query.index()] = 1.0;
        }
        x.extend(dia);
        x.extend(query);
        let mut bucket = [0.0; N_BUCKETS];
        bucket[match_bucket(self.matched_count)] = 1.0;
        x.extend(bucket);
        x.push(f64::from(u8::from(self.offer_made)));
        x.push(if self.max_turns == 0 {
            0.0
        } else {
            self.turn as f64 / self.max_turns as f64
        });
        debug_assert_eq!(x.len(), FEATURE_DIM);
        BeliefFeatures(x)
    }

    /// The database query implied by the top hypothesis of each slot;
    /// `none` and `dontcare` leave the slot open.
    pub fn top_query(&self, ontology: &Ontology) -> DbQuery {
        let mut q = DbQuery::DONTCARE;
        for slot in Slot::ALL {
            let dist = self.slot(slot);
            let mut best = 0;
            for (i, &p) in dist.iter().enumerate() {
                if p > dist[best] {
                    best = i;
                }
            }
            let none = dist.len() - 1;
            if best != none && best != ontology.dontcare_index(slot) {
                q.constraints[slot.index()] = Some(best);
            }
        }
        q
    }
}

/// The policy input vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefFeatures(Vec<f64>);

impl BeliefFeatures {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::try_from(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for BeliefFeatures {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::Data(format!(
                "feature vector has length {}, expected {FEATURE_DIM}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data("feature values must lie in [0,1]".into()));
        }
        Ok(BeliefFeatures(values))
    }
}

impl From<BeliefFeatures> for Vec<f64> {
    fn from(f: BeliefFeatures) -> Self {
        f.0
    }
}

impl AsRef<[f64]> for BeliefFeatures {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Offer bits answering the user's currently requested slots.
pub fn requested_bits(ontology: &Ontology, b: &BeliefState) -> [bool; N_OFFER] {
    let mut bits = [false; N_OFFER];
    for (i, &field) in ontology.requestable().iter().enumerate() {
        if b.requested[i] {
            if let Some(k) = ontology.offer_bit(field) {
                bits[k] = true;
            }
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn onto() -> Ontology {
        Ontology::default()
    }

    fn idx(o: &Ontology, v: &str) -> usize {
        o.value_index(Slot::Food, v).unwrap()
    }

    #[test]
    fn focus_rule_hand_cases() {
        let o = onto();
        let b0 = BeliefState::new(&o, 30);
        let b1 = b0
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, "chinese", 0.7)])
            .unwrap();
        assert!((b1.slot(Slot::Food)[idx(&o, "chinese")] - 0.7).abs() < 1e-12);
        assert!((b1.p_none(Slot::Food) - 0.3).abs() < 1e-12);

        let b2 = b1
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, "indian", 0.6)])
            .unwrap();
        assert!((b2.slot(Slot::Food)[idx(&o, "indian")] - 0.6).abs() < 1e-12);
        assert!((b2.slot(Slot::Food)[idx(&o, "chinese")] - 0.28).abs() < 1e-12);
        assert!((b2.p_none(Slot::Food) - 0.12).abs() < 1e-12);
    }

    #[test]
    fn zero_evidence_is_a_fixed_point() {
        let o = onto();
        let b1 = BeliefState::new(&o, 30)
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, "thai", 0.5)])
            .unwrap();
        let b2 = b1
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Area, "north", 0.9)])
            .unwrap();
        assert_eq!(b1.slot(Slot::Food), b2.slot(Slot::Food));
        assert!(!b2.changed[Slot::Food.index()]);
        assert!(b2.changed[Slot::Area.index()]);
        assert_eq!(b2.turn, 2);
    }

    #[test]
    fn over_confident_evidence_is_rejected() {
        let o = onto();
        let hyps = [
            UserActHypothesis::inform(Slot::Food, "thai", 0.6),
            UserActHypothesis::inform(Slot::Food, "greek", 0.6),
        ];
        assert!(matches!(
            BeliefState::new(&o, 30).focus_update(&o, &hyps),
            Err(Error::InvalidEvidence { .. })
        ));
    }

    #[test]
    fn affirm_and_negate_answer_the_last_confirm() {
        let o = onto();
        let mut b = BeliefState::new(&o, 30)
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, "thai", 0.5)])
            .unwrap();
        b.note_system_turn(&o, MasterAction::confirm(Slot::Food), false);
        let yes = b
            .focus_update(&o, &[UserActHypothesis::bare(UserActType::Affirm, 0.8)])
            .unwrap();
        assert!((yes.slot(Slot::Food)[idx(&o, "thai")] - (0.8 + 0.2 * 0.5)).abs() < 1e-12);
        let no = b
            .focus_update(&o, &[UserActHypothesis::bare(UserActType::Negate, 0.8)])
            .unwrap();
        assert!((no.slot(Slot::Food)[idx(&o, "thai")] - 0.1).abs() < 1e-12);
        assert!((no.p_none(Slot::Food) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn requests_are_tracked_and_cleared_by_offers() {
        let o = onto();
        let mut b = BeliefState::new(&o, 30)
            .focus_update(
                &o,
                &[
                    UserActHypothesis::request(Field::Phone, 0.9),
                    UserActHypothesis::request(Field::Postcode, 0.9),
                ],
            )
            .unwrap();
        assert!(b.is_requested(&o, Field::Phone));
        assert!(b.is_requested(&o, Field::Postcode));
        let bits = requested_bits(&o, &b);
        assert_eq!(bits, [false, false, false, false, true, true]);
        b.note_system_turn(&o, MasterAction::offer([true, false, false, false, false, true]), true);
        assert!(b.is_requested(&o, Field::Phone));
        assert!(!b.is_requested(&o, Field::Postcode));
        assert!(b.offer_made);
    }

    #[test]
    fn fresh_state_features() {
        let o = onto();
        let x = BeliefState::new(&o, 30).featurize();
        let x = x.as_slice();
        assert_eq!(x.len(), FEATURE_DIM);
        for s in 0..3 {
            assert_eq!(&x[s * 6..s * 6 + 6], &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        }
        // Only the zero-match bucket is hot.
        let hot: Vec<usize> = (18..48).filter(|&i| x[i] != 0.0).collect();
        assert_eq!(hot, vec![18 + 6 + 8 + 5 + 4]);
    }

    #[test]
    fn food_block_after_one_inform() {
        let o = onto();
        let b = BeliefState::new(&o, 30)
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, "chinese", 0.7)])
            .unwrap();
        let x = b.featurize();
        let f = &x.as_slice()[..6];
        assert!((f[0] - 0.7).abs() < 1e-12);
        assert_eq!(f[1], 0.0);
        assert!(f[2].abs() < 1e-12);
        assert!((f[3] - 0.3).abs() < 1e-12);
        let h = -(0.7f64 * 0.7f64.ln() + 0.3 * 0.3f64.ln()) / 17f64.ln();
        assert!((f[4] - h).abs() < 1e-12);
        assert_eq!(f[5], 1.0);
    }

    #[test]
    fn top_query_cases() {
        let o = onto();
        let b = BeliefState::new(&o, 30);
        assert_eq!(b.top_query(&o), DbQuery::DONTCARE);
        let b = b
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, "chinese", 0.7)])
            .unwrap();
        let q = b.top_query(&o);
        assert_eq!(q.get(Slot::Food), Some(idx(&o, "chinese")));
        assert_eq!(q.get(Slot::Area), None);

        let mut tie = BeliefState::new(&o, 30);
        let d = &mut tie.slots[Slot::Food.index()];
        d.iter_mut().for_each(|p| *p = 0.0);
        d[idx(&o, "thai")] = 0.5;
        d[idx(&o, "indian")] = 0.5;
        assert_eq!(
            tie.top_query(&o).get(Slot::Food),
            Some(idx(&o, "indian").min(idx(&o, "thai")))
        );

        let dc = BeliefState::new(&o, 30)
            .focus_update(&o, &[UserActHypothesis::inform(Slot::Area, "dontcare", 0.9)])
            .unwrap();
        assert_eq!(dc.top_query(&o).get(Slot::Area), None);
    }

    fn arb_hyps() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        proptest::collection::vec((0usize..3, 0usize..16, 0.0f64..1.0), 0..4)
    }

    proptest! {
        #[test]
        fn normalization_and_range_survive_random_evidence(turns in proptest::collection::vec(arb_hyps(), 1..12)) {
            let o = onto();
            let mut b = BeliefState::new(&o, 30);
            for turn in turns {
                let mut hyps = Vec::new();
                let mut per_slot = [0.0; 3];
                for (s, v, c) in turn {
                    let slot = Slot::ALL[s];
                    let v = v % o.values(slot).len();
                    let c = c.min(1.0 - per_slot[s]);
                    per_slot[s] += c;
                    hyps.push(UserActHypothesis::inform(slot, o.values(slot)[v].clone(), c));
                }
                let next = b.focus_update(&o, &hyps).unwrap();
                let again = b.focus_update(&o, &hyps).unwrap();
                prop_assert_eq!(next.featurize(), again.featurize());
                b = next;
                for slot in Slot::ALL {
                    let sum: f64 = b.slot(slot).iter().sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-9);
                    prop_assert!(b.slot(slot).iter().all(|&p| p >= 0.0));
                }
                let x = b.featurize();
                prop_assert!(x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn certain_evidence_overrides_any_prior(prior in 0usize..15, target in 0usize..15, c in 0.0f64..1.0) {
            let o = onto();
            let b = BeliefState::new(&o, 30)
                .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, o.values(Slot::Food)[prior].clone(), c)])
                .unwrap()
                .focus_update(&o, &[UserActHypothesis::inform(Slot::Food, o.values(Slot::Food)[target].clone(), 1.0)])
                .unwrap();
            prop_assert_eq!(b.slot(Slot::Food)[target], 1.0);
        }
    }
}
