//! Neural dialogue management: a multi-head policy network over a belief
//! state, trained with supervised learning on a labelled corpus and refined
//! with policy-gradient RL (eNAC or REINFORCE) against an agenda-based
//! simulated user behind a noisy semantic channel.

pub mod action;
pub mod baseline;
pub mod belief;
pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod db;
pub mod decoder;
pub mod dialogue;
pub mod error;
pub mod eval;
pub mod live;
pub mod nlg;
pub mod ontology;
pub mod parallel;
pub mod policy;
pub mod rl;
pub mod seed;
pub mod sim;
pub mod sl;

pub use action::{DiaAct, MasterAction, QuerySlot};
pub use belief::{BeliefFeatures, BeliefState, UserActHypothesis, UserActType};
pub use db::{DbQuery, Venue, VenueDatabase};
pub use error::{Error, Result};
pub use ontology::{Field, Ontology, Slot};
pub use policy::{ActionMode, PolicyNetwork};
