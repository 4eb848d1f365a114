//! Keyword decoder from typed text to user act hypotheses.

use crate::belief::{UserActHypothesis, UserActType};
use crate::dialogue::SystemReply;
use crate::ontology::{Field, Ontology, Slot, DONTCARE};

/// Confidence attached to every decoded act.
pub const TYPED_CONFIDENCE: f64 = 0.9;

const SYNONYMS: &[(&str, &[&str])] = &[
    ("cheap", &["inexpensive", "budget", "cheaply", "low cost", "affordable"]),
    ("moderate", &["moderately", "mid priced", "reasonably priced", "medium priced", "reasonable"]),
    ("expensive", &["pricey", "upscale", "posh", "high end", "fancy"]),
    ("centre", &["center", "central", "city centre", "city center", "town centre", "downtown"]),
    ("north", &["northern"]),
    ("south", &["southern"]),
    ("east", &["eastern"]),
    ("west", &["western"]),
    ("british", &["english"]),
    ("italian", &["pizza", "pasta"]),
    ("japanese", &["sushi"]),
    ("mexican", &["tacos"]),
];

const SLOT_WORDS: [(Slot, &[&str]); 3] = [
    (Slot::Food, &["food", "cuisine", "type of food", "kind of food", "type", "kind"]),
    (Slot::Pricerange, &["price", "price range", "pricerange", "prices"]),
    (Slot::Area, &["area", "part of town", "location", "part"]),
];

const DONTCARE_PHRASES: &[&str] = &[
    "dont care",
    "do not care",
    "doesnt matter",
    "does not matter",
    "no preference",
    "dont mind",
    "do not mind",
    "anything",
    "whatever",
    "any",
];

const REQUEST_PHRASES: &[(Field, &[&str])] = &[
    (Field::Phone, &["phone", "phone number", "telephone", "number"]),
    (Field::Address, &["address", "where is it"]),
    (Field::Postcode, &["postcode", "post code", "postal code", "zip"]),
    (Field::Food, &["what food", "what kind of food", "what type of food", "what cuisine", "which food"]),
    (Field::Pricerange, &["what price", "how expensive", "how much", "which price"]),
    (Field::Area, &["what area", "which area", "what part of town", "which part of town"]),
];

const BYE: &[&str] = &["bye", "goodbye", "good bye", "see you", "thats all", "that is all"];
const AFFIRM: &[&str] = &["yes", "yeah", "yep", "yup", "correct", "right", "sure", "exactly", "ok", "okay"];
const NEGATE: &[&str] = &["no", "nope", "not", "wrong", "incorrect"];
const REQALTS: &[&str] = &["something else", "anything else", "another", "alternative", "different", "other"];

struct Text(String);

impl Text {
    fn new(raw: &str) -> Self {
        let cleaned: String = raw
            .to_lowercase()
            .chars()
            .filter(|c| *c != '\'' && *c != '’')
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();
        let words: Vec<&str> = cleaned.split_whitespace().collect();
        Text(format!(" {} ", words.join(" ")))
    }

    fn has(&self, phrase: &str) -> bool {
        self.0.contains(&format!(" {phrase} "))
    }

    fn any(&self, phrases: &[&str]) -> bool {
        phrases.iter().any(|p| self.has(p))
    }

    /// The text with every occurrence of `phrases` cut out.
    fn without(&self, phrases: &[&str]) -> Text {
        let mut s = self.0.clone();
        for p in phrases {
            s = s.replace(&format!(" {p} "), " ");
        }
        Text(s)
    }

    fn is_empty(&self) -> bool {
        self.0.trim().is_empty()
    }
}

fn normalize_value(v: &str) -> String {
    Text::new(v).0.trim().to_owned()
}

/// Decodes one utterance. `last` is the system's previous reply; it scopes
/// bare answers such as "I don't care".
pub fn decode(ontology: &Ontology, text: &str, last: Option<&SystemReply>) -> Vec<UserActHypothesis> {
    let t = Text::new(text);
    let mut acts = Vec::new();
    if t.is_empty() {
        return vec![UserActHypothesis::bare(UserActType::Null, TYPED_CONFIDENCE)];
    }
    let asked = last.and_then(|r| r.action.query.slot());

    for slot in Slot::ALL {
        let mut values: Vec<&str> = Vec::new();
        for (i, v) in ontology.values(slot).iter().enumerate() {
            if i == ontology.dontcare_index(slot) {
                continue;
            }
            let syn = SYNONYMS.iter().find(|(c, _)| *c == v).map_or(&[][..], |(_, s)| *s);
            if t.has(&normalize_value(v)) || t.any(syn) {
                values.push(v);
            }
        }
        let (_, words) = SLOT_WORDS[slot.index()];
        let explicit_dontcare = words.iter().any(|w| t.has(&format!("any {w}")))
            || (slot == Slot::Area && t.has("anywhere"));
        if values.is_empty() && (explicit_dontcare || (asked == Some(slot) && t.any(DONTCARE_PHRASES))) {
            values.push(DONTCARE);
        }
        let c = TYPED_CONFIDENCE / values.len().max(1) as f64;
        acts.extend(values.into_iter().map(|v| UserActHypothesis::inform(slot, v, c)));
    }

    let informed: Vec<Field> = acts.iter().filter_map(|a| a.slot).collect();
    for &(field, phrases) in REQUEST_PHRASES {
        if ontology.requestable_index(field).is_some() && !informed.contains(&field) && t.any(phrases) {
            acts.push(UserActHypothesis::request(field, TYPED_CONFIDENCE));
        }
    }

    if t.any(AFFIRM) {
        acts.push(UserActHypothesis::bare(UserActType::Affirm, TYPED_CONFIDENCE));
    } else if t.without(DONTCARE_PHRASES).any(NEGATE) {
        acts.push(UserActHypothesis::bare(UserActType::Negate, TYPED_CONFIDENCE));
    }
    if t.any(REQALTS) {
        acts.push(UserActHypothesis::bare(UserActType::Reqalts, TYPED_CONFIDENCE));
    }
    if t.any(BYE) {
        acts.push(UserActHypothesis::bare(UserActType::Bye, TYPED_CONFIDENCE));
    }
    if acts.is_empty() {
        acts.push(UserActHypothesis::bare(UserActType::Null, TYPED_CONFIDENCE));
    }
    acts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::MasterAction;
    use crate::db::DbQuery;

    fn o() -> Ontology {
        Ontology::default()
    }

    fn asked(action: MasterAction) -> SystemReply {
        SystemReply {
            action,
            query: DbQuery::DONTCARE,
            match_count: 0,
            venue: None,
            confirm_value: None,
            select_values: None,
        }
    }

    fn show(acts: &[UserActHypothesis]) -> Vec<String> {
        acts.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn informs_with_synonyms() {
        let acts = decode(&o(), "Chinese food please", None);
        assert_eq!(acts, vec![UserActHypothesis::inform(Slot::Food, "chinese", 0.9)]);
        let acts = decode(&o(), "a cheap place in the center", None);
        assert_eq!(show(&acts), ["inform(pricerange=cheap)", "inform(area=centre)"]);
        let acts = decode(&o(), "cheap place in the north", None);
        assert_eq!(show(&acts), ["inform(pricerange=cheap)", "inform(area=north)"]);
    }

    #[test]
    fn two_values_share_confidence() {
        let acts = decode(&o(), "indian or thai", None);
        assert_eq!(acts.len(), 2);
        assert!(acts.iter().all(|a| (a.confidence - 0.45).abs() < 1e-12));
    }

    #[test]
    fn requests_and_dontcare() {
        let acts = decode(&o(), "what is the phone number and post code?", None);
        assert_eq!(show(&acts), ["request(phone)", "request(postcode)"]);
        let acts = decode(&o(), "I don't care", Some(&asked(MasterAction::request(Slot::Area))));
        assert_eq!(show(&acts), ["inform(area=dontcare)"]);
        let acts = decode(&o(), "any food is fine", None);
        assert_eq!(show(&acts), ["inform(food=dontcare)"]);
        let acts = decode(&o(), "no preference", Some(&asked(MasterAction::request(Slot::Pricerange))));
        assert_eq!(show(&acts), ["inform(pricerange=dontcare)"]);
        let acts = decode(&o(), "i do not care", Some(&asked(MasterAction::request(Slot::Food))));
        assert_eq!(show(&acts), ["inform(food=dontcare)"]);
    }

    #[test]
    fn dialogue_acts() {
        assert_eq!(show(&decode(&o(), "yes", None)), ["affirm()"]);
        assert_eq!(show(&decode(&o(), "no, italian", None)), ["inform(food=italian)", "negate()"]);
        assert_eq!(show(&decode(&o(), "bye", None)), ["bye()"]);
        assert_eq!(show(&decode(&o(), "Thanks, good bye!", None)), ["bye()"]);
        assert_eq!(show(&decode(&o(), "something else please", None)), ["reqalts()"]);
    }

    #[test]
    fn gibberish_is_null() {
        assert_eq!(show(&decode(&o(), "blorp fizzle", None)), ["null()"]);
        assert_eq!(show(&decode(&o(), "   ", None)), ["null()"]);
    }

    #[test]
    fn per_slot_confidence_never_exceeds_one() {
        for text in ["chinese indian thai british", "north south east west centre", "cheap expensive moderate"] {
            let acts = decode(&o(), text, None);
            let sum: f64 = acts.iter().map(|a| a.confidence).sum();
            assert!(sum <= 1.0 + 1e-12, "{text}");
        }
    }
}
