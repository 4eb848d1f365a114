//! Agenda-based user simulation at the semantic level.

mod channel;
pub mod judge;

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use channel::{renormalize_informs, Channel, ConfidenceModel, Corruption, ErrorModel, NoisyTurn};

use crate::action::DiaAct;
use crate::belief::{UserActHypothesis, UserActType};
use crate::db::{DbQuery, VenueDatabase};
use crate::dialogue::SystemReply;
use crate::ontology::{Field, Ontology, Slot, DONTCARE, N_INFORMABLE};

pub const CONTACT_FIELDS: [Field; 3] = [Field::Phone, Field::Address, Field::Postcode];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserConfig {
    pub patience: usize,
    pub satisfiable_prob: f64,
    pub dontcare_prob: f64,
    /// Chance of mentioning each constraint in the opening turn.
    pub opening_inform_prob: f64,
}

impl Default for UserConfig {
    fn default() -> Self {
        UserConfig {
            patience: 3,
            satisfiable_prob: 0.9,
            dontcare_prob: 0.25,
            opening_inform_prob: 0.7,
        }
    }
}

impl UserConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        let probs = [self.satisfiable_prob, self.dontcare_prob, self.opening_inform_prob];
        if probs.iter().all(|p| (0.0..=1.0).contains(p)) {
            Ok(())
        } else {
            Err(crate::error::Error::Config("user probabilities must lie in [0, 1]".into()))
        }
    }
}

/// The simulated user's goal: constraints (`None` = dontcare) plus the
/// contact details they want.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserGoal {
    pub constraints: DbQuery,
    pub requests: Vec<Field>,
    pub patience: usize,
}

impl UserGoal {
    pub fn constraint(&self, slot: Slot) -> Option<usize> {
        self.constraints.get(slot)
    }

    pub fn value_name<'a>(&self, ontology: &'a Ontology, slot: Slot) -> &'a str {
        match self.constraint(slot) {
            Some(v) => &ontology.values(slot)[v],
            None => DONTCARE,
        }
    }

    /// Whether the venue at `position` satisfies every non-dontcare constraint.
    pub fn accepts(&self, db: &VenueDatabase, position: usize) -> bool {
        let codes = db.codes(position);
        Slot::ALL
            .iter()
            .all(|s| self.constraint(*s).is_none_or(|v| codes[s.index()] == v))
    }
}

/// Draws a user goal. With probability `satisfiable_prob` the constraints
/// come from an existing venue; otherwise from an empty `(food, area)` pair.
pub fn sample_goal<R: Rng + ?Sized>(
    ontology: &Ontology,
    db: &VenueDatabase,
    no_match: &[(usize, usize)],
    cfg: &UserConfig,
    rng: &mut R,
) -> UserGoal {
    let mut constraints = DbQuery::DONTCARE;
    let satisfiable = no_match.is_empty() || rng.random::<f64>() < cfg.satisfiable_prob;
    if satisfiable {
        let codes = db.codes(rng.random_range(0..db.len()));
        for slot in Slot::ALL {
            if rng.random::<f64>() >= cfg.dontcare_prob {
                constraints.constraints[slot.index()] = Some(codes[slot.index()]);
            }
        }
        if constraints == DbQuery::DONTCARE {
            let slot = Slot::ALL[rng.random_range(0..Slot::ALL.len())];
            constraints.constraints[slot.index()] = Some(codes[slot.index()]);
        }
    } else {
        let &(food, area) = no_match.choose(rng).expect("non-empty");
        let prices: Vec<usize> = ontology.real_values(Slot::Pricerange).collect();
        let price = *prices.choose(rng).expect("validated ontology");
        constraints.constraints[Slot::Food.index()] = Some(food);
        constraints.constraints[Slot::Area.index()] = Some(area);
        if rng.random::<f64>() >= cfg.dontcare_prob {
            constraints.constraints[Slot::Pricerange.index()] = Some(price);
        }
    }
    let mask = rng.random_range(1..(1u32 << CONTACT_FIELDS.len()));
    let requests = CONTACT_FIELDS
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &f)| f)
        .collect();
    UserGoal {
        constraints,
        requests,
        patience: cfg.patience,
    }
}

/// Agenda state of one simulated user.
#[derive(Clone, Debug)]
pub struct UserSimulator<'a> {
    ontology: &'a Ontology,
    db: &'a VenueDatabase,
    goal: UserGoal,
    cfg: UserConfig,
    patience_left: usize,
    /// Slots the user has already stated.
    informed: [bool; N_INFORMABLE],
    reasks: usize,
    accepted: Option<u32>,
    provided: BTreeSet<Field>,
    left: bool,
}

fn clean(h: UserActHypothesis) -> UserActHypothesis {
    h.with_confidence(1.0)
}

impl<'a> UserSimulator<'a> {
    pub fn new(ontology: &'a Ontology, db: &'a VenueDatabase, goal: UserGoal, cfg: UserConfig) -> Self {
        UserSimulator {
            ontology,
            db,
            patience_left: goal.patience,
            informed: [false; N_INFORMABLE],
            reasks: 0,
            goal,
            cfg,
            accepted: None,
            provided: BTreeSet::new(),
            left: false,
        }
    }

    pub fn goal(&self) -> &UserGoal {
        &self.goal
    }

    /// True once the user has said goodbye.
    pub fn has_left(&self) -> bool {
        self.left
    }

    fn inform(&self, slot: Slot) -> UserActHypothesis {
        UserActHypothesis::inform(slot, self.goal.value_name(self.ontology, slot), 1.0)
    }

    fn bye(&mut self) -> Vec<UserActHypothesis> {
        self.left = true;
        vec![UserActHypothesis::bare(UserActType::Bye, 1.0)]
    }

    /// Opening turn: informs a random non-empty subset of the constraints.
    pub fn initial_acts<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<UserActHypothesis> {
        let known: Vec<Slot> = Slot::ALL
            .into_iter()
            .filter(|s| self.goal.constraint(*s).is_some())
            .collect();
        let mut acts: Vec<UserActHypothesis> = known
            .iter()
            .filter(|_| rng.random::<f64>() < self.cfg.opening_inform_prob)
            .map(|&s| self.inform(s))
            .collect();
        if acts.is_empty() {
            let s = *known.choose(rng).expect("goal has a constraint");
            acts.push(self.inform(s));
        }
        self.note_informed(&acts);
        acts
    }

    fn note_informed(&mut self, acts: &[UserActHypothesis]) {
        for a in acts {
            if a.act == UserActType::Inform {
                if let Some(s) = a.slot.and_then(Field::informable) {
                    self.informed[s.index()] = true;
                }
            }
        }
    }

    /// Counts a question about something already said; the user hangs up
    /// once more than `patience` such re-asks have happened.
    fn reask(&mut self, slot: Slot) -> bool {
        if self.informed[slot.index()] {
            self.reasks += 1;
        }
        self.reasks > self.goal.patience
    }

    /// The user's clean reaction to a system reply.
    pub fn respond<R: Rng + ?Sized>(&mut self, reply: &SystemReply, rng: &mut R) -> Vec<UserActHypothesis> {
        let acts = self.react(reply, rng);
        self.note_informed(&acts);
        acts
    }

    fn react<R: Rng + ?Sized>(&mut self, reply: &SystemReply, rng: &mut R) -> Vec<UserActHypothesis> {
        let action = reply.action;
        let slot = action.query.slot();
        match action.dia_act {
            DiaAct::Bye => self.bye(),
            DiaAct::Request | DiaAct::Select => match slot {
                Some(s) if self.reask(s) => self.bye(),
                Some(s) => vec![self.inform(s)],
                None => {
                    let s = Slot::ALL[rng.random_range(0..Slot::ALL.len())];
                    vec![self.inform(s)]
                }
            },
            DiaAct::Confirm => match slot {
                Some(s) => {
                    let wanted = self.goal.value_name(self.ontology, s);
                    if reply.confirm_value.as_deref() == Some(wanted) {
                        vec![UserActHypothesis::bare(UserActType::Affirm, 1.0)]
                    } else {
                        vec![UserActHypothesis::bare(UserActType::Negate, 1.0), self.inform(s)]
                    }
                }
                None => vec![UserActHypothesis::bare(UserActType::Null, 1.0)],
            },
            DiaAct::Offer => match reply.venue {
                Some(id) => self.respond_to_venue(id, reply),
                None => self.respond_to_no_match(&reply.query, rng),
            },
        }
    }

    fn respond_to_venue(&mut self, id: u32, reply: &SystemReply) -> Vec<UserActHypothesis> {
        let named = reply.action.offer[self.name_bit()];
        if !named && self.accepted != Some(id) {
            return vec![UserActHypothesis::bare(UserActType::Null, 1.0)];
        }
        let Some(pos) = self.db.position_of(id) else {
            return vec![UserActHypothesis::bare(UserActType::Null, 1.0)];
        };
        let codes = self.db.codes(pos);
        let violated: Vec<UserActHypothesis> = Slot::ALL
            .into_iter()
            .filter(|s| self.goal.constraint(*s).is_some_and(|v| codes[s.index()] != v))
            .map(|s| self.inform(s))
            .collect();
        if !violated.is_empty() {
            return violated.into_iter().map(clean).collect();
        }
        if self.accepted != Some(id) {
            self.accepted = Some(id);
            self.provided.clear();
        }
        for &field in &self.goal.requests {
            if self.ontology.offer_bit(field).is_some_and(|b| reply.action.offer[b]) {
                self.provided.insert(field);
            }
        }
        match self.goal.requests.iter().find(|f| !self.provided.contains(f)) {
            Some(&field) => vec![UserActHypothesis::request(field, 1.0)],
            None => self.bye(),
        }
    }

    fn respond_to_no_match<R: Rng + ?Sized>(&mut self, query: &DbQuery, rng: &mut R) -> Vec<UserActHypothesis> {
        let misunderstood: Vec<UserActHypothesis> = Slot::ALL
            .into_iter()
            .filter(|s| query.get(*s) != self.goal.constraint(*s))
            .map(|s| self.inform(s))
            .collect();
        if !misunderstood.is_empty() {
            return misunderstood;
        }
        if self.patience_left == 0 {
            return self.bye();
        }
        let open: Vec<Slot> = Slot::ALL
            .into_iter()
            .filter(|s| self.goal.constraint(*s).is_some())
            .collect();
        let Some(&slot) = open.choose(rng) else {
            return self.bye();
        };
        self.patience_left -= 1;
        self.goal.constraints.constraints[slot.index()] = None;
        vec![self.inform(slot)]
    }

    fn name_bit(&self) -> usize {
        self.ontology.offer_bit(Field::Name).unwrap_or(0)
    }
}
