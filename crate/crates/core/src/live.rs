//! A text dialogue with a live user: decode, track, act, realise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::action::{DiaAct, MasterAction};
use crate::belief::{BeliefState, UserActHypothesis, UserActType};
use crate::db::{DbQuery, VenueDatabase};
use crate::decoder::decode;
use crate::dialogue::{realize, refresh_matches, SystemReply, Transcript, TurnRecord, MAX_TURNS};
use crate::error::{Error, Result};
use crate::nlg::realize_text;
use crate::ontology::{Field, Ontology, Slot, DONTCARE};
use crate::policy::PolicyNetwork;
use crate::rl::Episode;
use crate::sim::{judge, UserConfig, UserGoal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterances {
    pub user: String,
    pub system: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotSummary {
    pub value: Option<String>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub slots: BTreeMap<Slot, SlotSummary>,
    pub requested: Vec<Field>,
    pub match_count: usize,
    pub turn: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub hypotheses: Vec<UserActHypothesis>,
    pub reply: SystemReply,
    pub system_text: String,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiveDialogue {
    pub belief: BeliefState,
    pub transcript: Transcript,
    pub utterances: Vec<Utterances>,
    pub closed: bool,
}

impl LiveDialogue {
    pub fn new(ontology: &Ontology) -> Self {
        LiveDialogue {
            belief: BeliefState::new(ontology, MAX_TURNS),
            transcript: Transcript::default(),
            utterances: Vec::new(),
            closed: false,
        }
    }

    pub fn turns(&self) -> usize {
        self.transcript.len()
    }

    /// Processes one user utterance. A user goodbye is answered with bye;
    /// the dialogue closes on bye from either side or at the turn cap.
    pub fn step(
        &mut self,
        ontology: &Ontology,
        db: &VenueDatabase,
        net: &PolicyNetwork,
        text: &str,
    ) -> Result<TurnOutcome> {
        if self.closed {
            return Err(Error::Closed);
        }
        let hyps = decode(ontology, text, self.transcript.turns.last().map(|t| &t.reply));
        let mut belief = self.belief.focus_update(ontology, &hyps)?;
        refresh_matches(&mut belief, ontology, db);
        let features = belief.featurize();
        let user_bye = hyps.iter().any(|h| h.act == UserActType::Bye);
        let action = if user_bye {
            MasterAction::bye()
        } else {
            net.forward(features.as_slice())?.greedy()
        };
        let reply = realize(ontology, db, &belief, action);
        belief.note_system_turn(ontology, action, reply.venue.is_some());
        let system_text = realize_text(ontology, db, &reply);
        self.belief = belief;
        self.transcript.turns.push(TurnRecord {
            user_clean: Vec::new(),
            user_observed: hyps.clone(),
            features,
            reply: reply.clone(),
        });
        self.utterances.push(Utterances {
            user: text.to_owned(),
            system: system_text.clone(),
        });
        self.closed = action.dia_act == DiaAct::Bye || self.turns() >= MAX_TURNS;
        Ok(TurnOutcome {
            hypotheses: hyps,
            reply,
            system_text,
            closed: self.closed,
        })
    }

    pub fn summary(&self, ontology: &Ontology) -> BeliefSummary {
        let slots = Slot::ALL
            .into_iter()
            .map(|s| {
                let (top, p, _) = self.belief.top_two(s);
                let value = top.map(|i| ontology.values(s)[i].clone());
                (s, SlotSummary { value, probability: p })
            })
            .collect();
        let requested = ontology
            .requestable()
            .iter()
            .copied()
            .filter(|&f| self.belief.is_requested(ontology, f))
            .collect();
        BeliefSummary {
            slots,
            requested,
            match_count: self.belief.matched_count,
            turn: self.belief.turn,
        }
    }

    pub fn episode(&self, success: bool) -> Episode {
        self.transcript.to_episode(success)
    }
}

/// The goal a live user declared: the last decoded value of each slot and
/// every field they asked for.
pub fn declared_goal(ontology: &Ontology, transcript: &Transcript) -> UserGoal {
    let mut constraints = DbQuery::DONTCARE;
    let mut requests: Vec<Field> = Vec::new();
    for h in transcript.turns.iter().flat_map(|t| &t.user_observed) {
        match (h.act, h.slot, h.value.as_deref()) {
            (UserActType::Inform, Some(f), Some(v)) => {
                if let Some(s) = f.informable() {
                    let code = (v != DONTCARE).then(|| ontology.value_index(s, v)).flatten();
                    constraints = constraints.with(s, code);
                }
            }
            (UserActType::Request, Some(f), _) if !requests.contains(&f) => requests.push(f),
            _ => {}
        }
    }
    UserGoal {
        constraints,
        requests,
        patience: UserConfig::default().patience,
    }
}

/// Objective success of a live transcript against the declared goal.
pub fn objective_success(ontology: &Ontology, db: &VenueDatabase, transcript: &Transcript) -> bool {
    judge::success(ontology, db, &declared_goal(ontology, transcript), transcript)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::generate_database;

    fn setup() -> (Ontology, VenueDatabase, PolicyNetwork) {
        let o = Ontology::default();
        let db = generate_database(&o, 2, 100).unwrap();
        (o, db, PolicyNetwork::zeros(crate::belief::FEATURE_DIM, 32))
    }

    #[test]
    fn bye_closes_and_rejects_further_turns() {
        let (o, db, net) = setup();
        let mut d = LiveDialogue::new(&o);
        let out = d.step(&o, &db, &net, "bye").unwrap();
        assert_eq!(out.reply.action, MasterAction::bye());
        assert!(out.closed && d.closed);
        assert!(matches!(d.step(&o, &db, &net, "hello"), Err(Error::Closed)));
    }

    #[test]
    fn turn_cap_closes() {
        let (o, db, net) = setup();
        let mut d = LiveDialogue::new(&o);
        for i in 0..MAX_TURNS {
            assert!(!d.closed, "closed early at {i}");
            d.step(&o, &db, &net, "chinese").unwrap();
        }
        assert!(d.closed);
        assert_eq!(d.turns(), MAX_TURNS);
    }

    #[test]
    fn decoded_constraints_form_the_goal() {
        let (o, db, net) = setup();
        let mut d = LiveDialogue::new(&o);
        d.step(&o, &db, &net, "chinese food in the north").unwrap();
        d.step(&o, &db, &net, "actually indian, and the phone number").unwrap();
        let g = declared_goal(&o, &d.transcript);
        assert_eq!(g.constraint(Slot::Food), o.value_index(Slot::Food, "indian"));
        assert_eq!(g.constraint(Slot::Area), o.value_index(Slot::Area, "north"));
        assert_eq!(g.constraint(Slot::Pricerange), None);
        assert_eq!(g.requests, vec![Field::Phone]);
        let s = d.summary(&o);
        assert_eq!(s.slots[&Slot::Food].value.as_deref(), Some("indian"));
        assert_eq!(s.requested, vec![Field::Phone]);
        assert_eq!(d.episode(false).len(), 2);
    }
}
