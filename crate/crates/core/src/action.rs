//! The factored system action: dialogue act × query slot × offer bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ontology::{Slot, N_OFFER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiaAct {
    Request,
    Offer,
    Confirm,
    Select,
    Bye,
}

impl DiaAct {
    pub const ALL: [DiaAct; 5] = [
        DiaAct::Request,
        DiaAct::Offer,
        DiaAct::Confirm,
        DiaAct::Select,
        DiaAct::Bye,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Whether the Query head carries meaning for this act.
    pub fn uses_query(self) -> bool {
        matches!(self, DiaAct::Request | DiaAct::Confirm | DiaAct::Select)
    }

    pub fn uses_offer(self) -> bool {
        self == DiaAct::Offer
    }

    pub fn name(self) -> &'static str {
        match self {
            DiaAct::Request => "request",
            DiaAct::Offer => "offer",
            DiaAct::Confirm => "confirm",
            DiaAct::Select => "select",
            DiaAct::Bye => "bye",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuerySlot {
    Food,
    Pricerange,
    Area,
    None,
}

impl QuerySlot {
    pub const ALL: [QuerySlot; 4] = [
        QuerySlot::Food,
        QuerySlot::Pricerange,
        QuerySlot::Area,
        QuerySlot::None,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn slot(self) -> Option<Slot> {
        match self {
            QuerySlot::Food => Some(Slot::Food),
            QuerySlot::Pricerange => Some(Slot::Pricerange),
            QuerySlot::Area => Some(Slot::Area),
            QuerySlot::None => None,
        }
    }

    pub fn from_slot(slot: Slot) -> Self {
        Self::ALL[slot.index()]
    }
}

/// A master action. Constructed through [`MasterAction::new`], which forces
/// inactive heads to their sentinels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MasterAction {
    pub dia_act: DiaAct,
    pub query: QuerySlot,
    pub offer: [bool; N_OFFER],
}

impl MasterAction {
    pub fn new(dia_act: DiaAct, query: QuerySlot, offer: [bool; N_OFFER]) -> Self {
        MasterAction {
            dia_act,
            query: if dia_act.uses_query() { query } else { QuerySlot::None },
            offer: if dia_act.uses_offer() { offer } else { [false; N_OFFER] },
        }
    }

    pub fn bye() -> Self {
        Self::new(DiaAct::Bye, QuerySlot::None, [false; N_OFFER])
    }

    pub fn request(slot: Slot) -> Self {
        Self::new(DiaAct::Request, QuerySlot::from_slot(slot), [false; N_OFFER])
    }

    pub fn confirm(slot: Slot) -> Self {
        Self::new(DiaAct::Confirm, QuerySlot::from_slot(slot), [false; N_OFFER])
    }

    pub fn select(slot: Slot) -> Self {
        Self::new(DiaAct::Select, QuerySlot::from_slot(slot), [false; N_OFFER])
    }

    pub fn offer(bits: [bool; N_OFFER]) -> Self {
        Self::new(DiaAct::Offer, QuerySlot::None, bits)
    }

    pub fn is_legal(&self) -> bool {
        *self == Self::new(self.dia_act, self.query, self.offer)
    }

    /// Every legal action: bye, 64 offers, and 4 queries for each of
    /// request/confirm/select.
    pub fn enumerate_legal() -> Vec<MasterAction> {
        let mut out = vec![Self::bye()];
        for mask in 0..(1u32 << N_OFFER) {
            out.push(Self::offer(bits_from_mask(mask)));
        }
        for d in [DiaAct::Request, DiaAct::Confirm, DiaAct::Select] {
            for q in QuerySlot::ALL {
                out.push(Self::new(d, q, [false; N_OFFER]));
            }
        }
        out
    }
}

pub(crate) fn bits_from_mask(mask: u32) -> [bool; N_OFFER] {
    std::array::from_fn(|k| mask & (1 << k) != 0)
}

impl fmt::Display for MasterAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dia_act {
            DiaAct::Offer => {
                let bits: String = self.offer.iter().map(|&b| if b { '1' } else { '0' }).collect();
                write!(f, "offer[{bits}]")
            }
            d if d.uses_query() => {
                let q = self.query.slot().map_or("none", |s| s.name());
                write!(f, "{}({q})", d.name())
            }
            d => f.write_str(d.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masking_forces_sentinels() {
        let a = MasterAction::new(DiaAct::Bye, QuerySlot::Food, [true; N_OFFER]);
        assert_eq!(a.query, QuerySlot::None);
        assert_eq!(a.offer, [false; N_OFFER]);
        let o = MasterAction::new(DiaAct::Offer, QuerySlot::Area, [true; N_OFFER]);
        assert_eq!(o.query, QuerySlot::None);
        assert_eq!(o.offer, [true; N_OFFER]);
        let bad = MasterAction {
            dia_act: DiaAct::Request,
            query: QuerySlot::Food,
            offer: [true; N_OFFER],
        };
        assert!(!bad.is_legal());
    }

    #[test]
    fn legal_enumeration_is_complete_and_distinct() {
        let all = MasterAction::enumerate_legal();
        assert_eq!(all.len(), 1 + 64 + 12);
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
        assert!(all.iter().all(MasterAction::is_legal));
    }

    #[test]
    fn display() {
        assert_eq!(MasterAction::request(Slot::Food).to_string(), "request(food)");
        assert_eq!(
            MasterAction::offer([true, false, false, false, true, false]).to_string(),
            "offer[100010]"
        );
    }
}
