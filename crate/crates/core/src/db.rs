//! Venue database: synthetic generation, JSONL storage and the query parser
//! that maps top slot predictions to matching entities.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{Field, Ontology, Slot, DONTCARE, N_INFORMABLE};
use crate::seed;

/// One restaurant record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Venue {
    pub id: u32,
    pub name: String,
    pub food: String,
    pub pricerange: String,
    pub area: String,
    pub phone: String,
    pub address: String,
    pub postcode: String,
}

impl Venue {
    pub fn field(&self, field: Field) -> &str {
        match field {
            Field::Name => &self.name,
            Field::Food => &self.food,
            Field::Pricerange => &self.pricerange,
            Field::Area => &self.area,
            Field::Phone => &self.phone,
            Field::Address => &self.address,
            Field::Postcode => &self.postcode,
        }
    }
}

/// Search constraints: one entry per informable slot, `None` meaning dontcare.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DbQuery {
    pub constraints: [Option<usize>; N_INFORMABLE],
}

impl DbQuery {
    pub const DONTCARE: DbQuery = DbQuery {
        constraints: [None; N_INFORMABLE],
    };

    /// Builds a query from value names; `dontcare` or `None` leave a slot open.
    pub fn from_values(ontology: &Ontology, values: [Option<&str>; N_INFORMABLE]) -> Result<Self> {
        let mut q = DbQuery::DONTCARE;
        for slot in Slot::ALL {
            q.constraints[slot.index()] = match values[slot.index()] {
                None | Some(DONTCARE) => None,
                Some(v) => Some(
                    ontology
                        .value_index(slot, v)
                        .ok_or_else(|| Error::Data(format!("illegal value {v:?} for {slot}")))?,
                ),
            };
        }
        Ok(q)
    }

    pub fn get(&self, slot: Slot) -> Option<usize> {
        self.constraints[slot.index()]
    }

    pub fn with(mut self, slot: Slot, value: Option<usize>) -> Self {
        self.constraints[slot.index()] = value;
        self
    }

    /// Slot → value name (dontcare included) for display and logs.
    pub fn describe(&self, ontology: &Ontology) -> BTreeMap<Slot, String> {
        Slot::ALL
            .iter()
            .map(|&s| {
                let v = match self.get(s) {
                    Some(i) => ontology.values(s)[i].clone(),
                    None => DONTCARE.to_owned(),
                };
                (s, v)
            })
            .collect()
    }
}

/// Immutable, validated venue collection.
#[derive(Clone, Debug, PartialEq)]
pub struct VenueDatabase {
    venues: Vec<Venue>,
    codes: Vec<[usize; N_INFORMABLE]>,
}

impl VenueDatabase {
    /// Validates venues against the ontology and sorts them by id.
    pub fn new(ontology: &Ontology, mut venues: Vec<Venue>) -> Result<Self> {
        if venues.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        venues.sort_by_key(|v| v.id);
        let mut codes = Vec::with_capacity(venues.len());
        for (i, v) in venues.iter().enumerate() {
            if i > 0 && venues[i - 1].id == v.id {
                return Err(Error::Data(format!("duplicate venue id {}", v.id)));
            }
            let mut c = [0; N_INFORMABLE];
            for slot in Slot::ALL {
                let value = v.field(slot.field());
                c[slot.index()] = match ontology.value_index(slot, value) {
                    Some(idx) if value != DONTCARE => idx,
                    _ => {
                        return Err(Error::Data(format!(
                            "venue {} has illegal {slot} value {value:?}",
                            v.id
                        )))
                    }
                };
            }
            codes.push(c);
        }
        Ok(VenueDatabase { venues, codes })
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }

    pub fn venues(&self) -> &[Venue] {
        &self.venues
    }

    pub fn venue(&self, position: usize) -> &Venue {
        &self.venues[position]
    }

    /// Constraint value ids of the venue at `position`.
    pub fn codes(&self, position: usize) -> [usize; N_INFORMABLE] {
        self.codes[position]
    }

    pub fn position_of(&self, id: u32) -> Option<usize> {
        self.venues.binary_search_by_key(&id, |v| v.id).ok()
    }

    fn matches(&self, position: usize, q: &DbQuery) -> bool {
        let c = &self.codes[position];
        Slot::ALL
            .iter()
            .all(|s| q.get(*s).is_none_or(|want| c[s.index()] == want))
    }

    /// Positions of all venues matching every non-dontcare constraint, by id.
    pub fn query(&self, q: &DbQuery) -> Vec<usize> {
        (0..self.venues.len()).filter(|&i| self.matches(i, q)).collect()
    }

    pub fn count(&self, q: &DbQuery) -> usize {
        (0..self.venues.len()).filter(|&i| self.matches(i, q)).count()
    }

    /// `(food, area)` pairs with no venue at all.
    pub fn empty_food_area_pairs(&self, ontology: &Ontology) -> Vec<(usize, usize)> {
        let present: HashSet<(usize, usize)> = self
            .codes
            .iter()
            .map(|c| (c[Slot::Food.index()], c[Slot::Area.index()]))
            .collect();
        let mut out = Vec::new();
        for f in ontology.real_values(Slot::Food) {
            for a in ontology.real_values(Slot::Area) {
                if !present.contains(&(f, a)) {
                    out.push((f, a));
                }
            }
        }
        out
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for v in &self.venues {
            serde_json::to_writer(&mut w, v).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(ontology: &Ontology, r: impl BufRead) -> Result<Self> {
        let mut venues = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Venue = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e))?;
            venues.push(v);
        }
        Self::new(ontology, venues)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(ontology: &Ontology, path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_jsonl(ontology, std::io::BufReader::new(f))
    }
}

/// Maps a match count to one of the buckets `{0, 1, 2-4, 5-10, >10}`.
pub fn match_bucket(count: usize) -> usize {
    match count {
        0 => 0,
        1 => 1,
        2..=4 => 2,
        5..=10 => 3,
        _ => 4,
    }
}

pub const N_BUCKETS: usize = 5;

/// Venue count used when none is given.
pub const DEFAULT_VENUES: usize = 200;

const NAME_HEAD: [&str; 24] = [
    "Golden", "Silver", "Red", "Blue", "Green", "Royal", "Little", "Grand", "Old", "New",
    "Lucky", "Happy", "Copper", "Jade", "Crimson", "Ivory", "Amber", "Velvet", "Rustic", "Urban",
    "Saffron", "Lotus", "Olive", "Cedar",
];
const NAME_TAIL: [&str; 20] = [
    "Lantern", "Dragon", "Garden", "Kitchen", "Table", "Spoon", "House", "Terrace", "Bistro",
    "Tavern", "Pavilion", "Courtyard", "Orchard", "Bell", "Anchor", "Mill", "Oak", "Harbour",
    "Fountain", "Hearth",
];
const STREETS: [&str; 16] = [
    "Regent", "Mill", "King", "Bridge", "Hills", "Trumpington", "Castle", "Newmarket", "Station",
    "Market", "Chesterton", "Mill Road", "Norfolk", "Victoria", "Hills Road", "Thompson",
];
const STREET_KINDS: [&str; 4] = ["Street", "Road", "Lane", "Avenue"];

/// Generates a deterministic synthetic venue database.
///
/// One `(food, area)` pair is reserved and never populated, so some goals
/// always have no match.
pub fn generate_database(ontology: &Ontology, seed: u64, n_venues: usize) -> Result<VenueDatabase> {
    if n_venues == 0 {
        return Err(Error::EmptyDatabase);
    }
    let mut rng = seed::rng(seed);
    let foods: Vec<usize> = ontology.real_values(Slot::Food).collect();
    let prices: Vec<usize> = ontology.real_values(Slot::Pricerange).collect();
    let areas: Vec<usize> = ontology.real_values(Slot::Area).collect();
    if foods.len() * areas.len() < 2 {
        return Err(Error::Data("ontology too small to reserve a no-match pair".into()));
    }
    let reserved = (
        foods[rng.random_range(0..foods.len())],
        areas[rng.random_range(0..areas.len())],
    );

    let mut names: Vec<String> = NAME_HEAD
        .iter()
        .flat_map(|h| NAME_TAIL.iter().map(move |t| format!("The {h} {t}")))
        .collect();
    names.shuffle(&mut rng);

    let value = |slot: Slot, idx: usize| ontology.values(slot)[idx].clone();
    let mut venues = Vec::with_capacity(n_venues);
    for id in 0..n_venues {
        let (food, area) = loop {
            let pair = (
                foods[rng.random_range(0..foods.len())],
                areas[rng.random_range(0..areas.len())],
            );
            if pair != reserved {
                break pair;
            }
        };
        let price = prices[rng.random_range(0..prices.len())];
        let name = match names.get(id) {
            Some(n) => n.clone(),
            None => format!("{} {}", names[id % names.len()], id / names.len() + 1),
        };
        let phone = format!("01223 {:06}", rng.random_range(0..1_000_000u32));
        let address = format!(
            "{} {} {}",
            rng.random_range(1..200u32),
            STREETS[rng.random_range(0..STREETS.len())],
            STREET_KINDS[rng.random_range(0..STREET_KINDS.len())]
        );
        let letters = b"ABDEFGHJLNPQRSTUWXYZ";
        let postcode = format!(
            "CB{} {}{}{}",
            rng.random_range(1..6u32),
            rng.random_range(0..10u32),
            letters[rng.random_range(0..letters.len())] as char,
            letters[rng.random_range(0..letters.len())] as char
        );
        venues.push(Venue {
            id: id as u32,
            name,
            food: value(Slot::Food, food),
            pricerange: value(Slot::Pricerange, price),
            area: value(Slot::Area, area),
            phone,
            address,
            postcode,
        });
    }
    VenueDatabase::new(ontology, venues)
}
