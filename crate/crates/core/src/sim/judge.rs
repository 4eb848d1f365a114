//! Objective dialogue success check.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::action::DiaAct;
use crate::db::VenueDatabase;
use crate::dialogue::Transcript;
use crate::ontology::{Field, Ontology};
use crate::sim::UserGoal;

/// True iff some venue consistent with the (final) goal was offered by name
/// and every requested slot was offered for that same venue.
pub fn success(ontology: &Ontology, db: &VenueDatabase, goal: &UserGoal, transcript: &Transcript) -> bool {
    let name_bit = ontology.offer_bit(Field::Name);
    let mut named = BTreeSet::new();
    let mut delivered: BTreeMap<u32, [bool; crate::ontology::N_OFFER]> = BTreeMap::new();
    for turn in &transcript.turns {
        let a = turn.reply.action;
        let Some(id) = turn.reply.venue else { continue };
        if a.dia_act != DiaAct::Offer {
            continue;
        }
        if name_bit.is_none_or(|b| a.offer[b]) {
            named.insert(id);
        }
        let bits = delivered.entry(id).or_default();
        for (b, &on) in bits.iter_mut().zip(&a.offer) {
            *b |= on;
        }
    }
    named.into_iter().any(|id| {
        let Some(pos) = db.position_of(id) else { return false };
        if !goal.accepts(db, pos) {
            return false;
        }
        let bits = delivered[&id];
        goal.requests
            .iter()
            .all(|&f| ontology.offer_bit(f).is_some_and(|b| bits[b]))
    })
}
