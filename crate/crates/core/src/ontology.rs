//! Restaurant-domain ontology: slots, value sets and the offer-bit layout.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DONTCARE: &str = "dontcare";

/// Number of user-informable (search constraint) slots.
pub const N_INFORMABLE: usize = 3;
/// Number of offer bits produced by the policy.
pub const N_OFFER: usize = 6;
/// Number of requestable slots tracked in the belief state.
pub const N_REQUESTABLE: usize = 6;

const DEFAULT_ONTOLOGY: &str = include_str!("../data/ontology.json");

/// A user-informable slot. The network's Query head is laid out in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Food,
    Pricerange,
    Area,
}

impl Slot {
    pub const ALL: [Slot; N_INFORMABLE] = [Slot::Food, Slot::Pricerange, Slot::Area];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::Food => "food",
            Slot::Pricerange => "pricerange",
            Slot::Area => "area",
        }
    }

    pub fn field(self) -> Field {
        match self {
            Slot::Food => Field::Food,
            Slot::Pricerange => Field::Pricerange,
            Slot::Area => Field::Area,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Any venue attribute the system can talk about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Name,
    Food,
    Pricerange,
    Area,
    Phone,
    Address,
    Postcode,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::Name,
        Field::Food,
        Field::Pricerange,
        Field::Area,
        Field::Phone,
        Field::Address,
        Field::Postcode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Name => "name",
            Field::Food => "food",
            Field::Pricerange => "pricerange",
            Field::Area => "area",
            Field::Phone => "phone",
            Field::Address => "address",
            Field::Postcode => "postcode",
        }
    }

    pub fn informable(self) -> Option<Slot> {
        match self {
            Field::Food => Some(Slot::Food),
            Field::Pricerange => Some(Slot::Pricerange),
            Field::Area => Some(Slot::Area),
            _ => None,
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown slot {s:?}")))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct OntologyDoc {
    informable_slots: Vec<String>,
    requestable_slots: Vec<String>,
    offerable_slots: Vec<String>,
    value_sets: BTreeMap<String, Vec<String>>,
}

/// Validated domain ontology.
///
/// Value lists include the `dontcare` sentinel; the position of a value in its
/// list is its encoding id.
#[derive(Clone, Debug, PartialEq)]
pub struct Ontology {
    requestable: [Field; N_REQUESTABLE],
    offerable: [Field; N_OFFER],
    values: [Vec<String>; N_INFORMABLE],
}

impl Default for Ontology {
    fn default() -> Self {
        Ontology::from_json(DEFAULT_ONTOLOGY).expect("bundled ontology is valid")
    }
}

impl Ontology {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: OntologyDoc =
            serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e))?;
        Self::from_doc(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let doc = OntologyDoc {
            informable_slots: Slot::ALL.iter().map(|s| s.name().to_owned()).collect(),
            requestable_slots: self.requestable.iter().map(|f| f.name().to_owned()).collect(),
            offerable_slots: self.offerable.iter().map(|f| f.name().to_owned()).collect(),
            value_sets: Slot::ALL
                .iter()
                .map(|s| (s.name().to_owned(), self.values[s.index()].clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("ontology serializes")
    }

    fn from_doc(doc: OntologyDoc) -> Result<Self> {
        let informable: Vec<&str> = doc.informable_slots.iter().map(String::as_str).collect();
        if informable != ["food", "pricerange", "area"] {
            return Err(Error::Data(format!(
                "informable slots must be [food, pricerange, area], got {informable:?}"
            )));
        }
        let requestable = parse_fields::<N_REQUESTABLE>(&doc.requestable_slots, "requestable")?;
        let offerable = parse_fields::<N_OFFER>(&doc.offerable_slots, "offerable")?;
        if doc.value_sets.len() != N_INFORMABLE {
            return Err(Error::Data(
                "value_sets must cover exactly the informable slots".into(),
            ));
        }
        let mut values: [Vec<String>; N_INFORMABLE] = Default::default();
        for slot in Slot::ALL {
            let list = doc
                .value_sets
                .get(slot.name())
                .ok_or_else(|| Error::Data(format!("missing value set for {slot}")))?;
            let mut seen = std::collections::HashSet::new();
            for v in list {
                if v.is_empty() || !seen.insert(v.as_str()) {
                    return Err(Error::Data(format!("bad or duplicate value {v:?} for {slot}")));
                }
            }
            if !seen.contains(DONTCARE) {
                return Err(Error::Data(format!("value set for {slot} lacks {DONTCARE:?}")));
            }
            if list.len() < 2 {
                return Err(Error::Data(format!("value set for {slot} has no real values")));
            }
            values[slot.index()] = list.clone();
        }
        Ok(Ontology {
            requestable,
            offerable,
            values,
        })
    }

    /// Legal values of `slot`, including `dontcare`.
    pub fn values(&self, slot: Slot) -> &[String] {
        &self.values[slot.index()]
    }

    /// Indices of the real (non-`dontcare`) values of `slot`.
    pub fn real_values(&self, slot: Slot) -> impl Iterator<Item = usize> + '_ {
        self.values(slot)
            .iter()
            .enumerate()
            .filter(|(_, v)| v.as_str() != DONTCARE)
            .map(|(i, _)| i)
    }

    pub fn value_index(&self, slot: Slot, value: &str) -> Option<usize> {
        self.values(slot).iter().position(|v| v == value)
    }

    pub fn dontcare_index(&self, slot: Slot) -> usize {
        self.value_index(slot, DONTCARE).expect("validated at load")
    }

    pub fn requestable(&self) -> &[Field; N_REQUESTABLE] {
        &self.requestable
    }

    pub fn requestable_index(&self, field: Field) -> Option<usize> {
        self.requestable.iter().position(|&f| f == field)
    }

    pub fn offerable(&self) -> &[Field; N_OFFER] {
        &self.offerable
    }

    /// The offer bit that delivers `field`. A field that is not offerable on
    /// its own rides along with another bit (postcode with address).
    pub fn offer_bit(&self, field: Field) -> Option<usize> {
        if let Some(i) = self.offerable.iter().position(|&f| f == field) {
            return Some(i);
        }
        let carrier = match field {
            Field::Postcode => Field::Address,
            Field::Address => Field::Postcode,
            _ => return None,
        };
        self.offerable.iter().position(|&f| f == carrier)
    }

    /// Fields verbalized when offer bit `bit` is set.
    pub fn fields_for_bit(&self, bit: usize) -> Vec<Field> {
        Field::ALL
            .into_iter()
            .filter(|&f| self.offer_bit(f) == Some(bit))
            .collect()
    }
}

fn parse_fields<const N: usize>(names: &[String], what: &str) -> Result<[Field; N]> {
    if names.len() != N {
        return Err(Error::Data(format!(
            "expected exactly {N} {what} slots, got {}",
            names.len()
        )));
    }
    let mut out = [Field::Name; N];
    for (i, n) in names.iter().enumerate() {
        let f: Field = n.parse()?;
        if out[..i].contains(&f) {
            return Err(Error::Data(format!("duplicate {what} slot {n:?}")));
        }
        out[i] = f;
    }
    Ok(out)
}
