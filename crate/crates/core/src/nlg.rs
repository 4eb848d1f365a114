//! Template realisation of system replies.

use crate::action::DiaAct;
use crate::db::VenueDatabase;
use crate::dialogue::SystemReply;
use crate::ontology::{Field, Ontology, Slot, DONTCARE};

pub const GREETING: &str = "Hello, welcome to the restaurant finder. How may I help you?";

fn slot_phrase(slot: Slot) -> &'static str {
    match slot {
        Slot::Food => "type of food",
        Slot::Pricerange => "price range",
        Slot::Area => "part of town",
    }
}

fn constraint_phrase(slot: Slot, value: &str) -> String {
    match slot {
        Slot::Food => format!("{value} food"),
        Slot::Pricerange => format!("{value} prices"),
        Slot::Area => format!("the {value} of town"),
    }
}

fn request(slot: Option<Slot>) -> String {
    match slot {
        Some(Slot::Food) => "What kind of food would you like?".into(),
        Some(Slot::Pricerange) => "What price range are you looking for?".into(),
        Some(Slot::Area) => "Which part of town do you have in mind?".into(),
        None => "How can I help you?".into(),
    }
}

fn confirm(slot: Option<Slot>, value: Option<&str>) -> String {
    match (slot, value) {
        (Some(s), Some(DONTCARE)) => format!("You don't mind about the {}, is that right?", slot_phrase(s)),
        (Some(s), Some(v)) => format!("You are looking for {}, is that right?", constraint_phrase(s, v)),
        (Some(s), None) => format!("Sorry, could you repeat the {} you want?", slot_phrase(s)),
        (None, _) => "Could you say that again, please?".into(),
    }
}

fn select(slot: Option<Slot>, values: Option<&[String; 2]>) -> String {
    match (slot, values) {
        (Some(s), Some([a, b])) => format!(
            "Would you prefer {} or {}?",
            constraint_phrase(s, a),
            constraint_phrase(s, b)
        ),
        _ => request(slot),
    }
}

fn offer(ontology: &Ontology, db: &VenueDatabase, reply: &SystemReply) -> String {
    let Some(pos) = reply.venue.and_then(|id| db.position_of(id)) else {
        let parts: Vec<String> = reply
            .query
            .describe(ontology)
            .iter()
            .filter(|(_, v)| v.as_str() != DONTCARE)
            .map(|(s, v)| constraint_phrase(*s, v))
            .collect();
        if parts.is_empty() {
            return "I'm sorry, no venue matches your request.".into();
        }
        return format!("I'm sorry, no venue matches {}.", parts.join(" and "));
    };
    let v = db.venue(pos);
    let on = |f: Field| ontology.offer_bit(f).is_some_and(|b| reply.action.offer[b]);
    let mut text = if on(Field::Name) {
        format!("{} is a nice place", v.name)
    } else {
        "It is a nice place".to_owned()
    };
    if on(Field::Food) {
        text += &format!(" serving {} food", v.food);
    }
    if on(Field::Pricerange) {
        text += &format!(" in the {} price range", v.pricerange);
    }
    if on(Field::Area) {
        text += &format!(" in the {} of town", v.area);
    }
    text.push('.');
    if on(Field::Phone) {
        text += &format!(" Their phone number is {}.", v.phone);
    }
    if on(Field::Address) || on(Field::Postcode) {
        text += &format!(" They are at {}, {}.", v.address, v.postcode);
    }
    text
}

/// Renders a reply as text.
pub fn realize_text(ontology: &Ontology, db: &VenueDatabase, reply: &SystemReply) -> String {
    let slot = reply.action.query.slot();
    match reply.action.dia_act {
        DiaAct::Request => request(slot),
        DiaAct::Confirm => confirm(slot, reply.confirm_value.as_deref()),
        DiaAct::Select => select(slot, reply.select_values.as_ref()),
        DiaAct::Offer => offer(ontology, db, reply),
        DiaAct::Bye => "Thank you for using the restaurant finder. Goodbye.".into(),
    }
}
