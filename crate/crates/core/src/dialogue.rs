//! Turn pipeline shared by simulation and the live service: belief update,
//! database parsing of the policy's master action, and the dialogue record.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::action::{DiaAct, MasterAction};
use crate::belief::{BeliefFeatures, BeliefState, UserActHypothesis};
use crate::db::{DbQuery, VenueDatabase};
use crate::error::Result;
use crate::ontology::Ontology;
use crate::policy::{ActionMode, PolicyNetwork};
use crate::rl::{Environment, Episode, Transition};
use crate::seed::{self, stream};
use crate::sim::{judge, Channel, ErrorModel, UserConfig, UserGoal, UserSimulator};

pub const MAX_TURNS: usize = 30;
pub const SUCCESS_REWARD: f64 = 20.0;
pub const TURN_PENALTY: f64 = -1.0;

/// The system's semantic reply: the master action with values filled in by
/// the database parser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemReply {
    pub action: MasterAction,
    pub query: DbQuery,
    pub match_count: usize,
    /// Id of the offered venue, for offers with at least one match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confirm_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select_values: Option<[String; 2]>,
}

/// Refreshes the belief's match count from its top query.
pub fn refresh_matches(belief: &mut BeliefState, ontology: &Ontology, db: &VenueDatabase) {
    belief.matched_count = db.count(&belief.top_query(ontology));
}

/// Database parser: turns a master action into a concrete reply.
pub fn realize(
    ontology: &Ontology,
    db: &VenueDatabase,
    belief: &BeliefState,
    action: MasterAction,
) -> SystemReply {
    let query = belief.top_query(ontology);
    let matches = db.query(&query);
    let venue = (action.dia_act == DiaAct::Offer && !matches.is_empty())
        .then(|| db.venue(matches[belief.alternatives % matches.len()]).id);
    let slot = action.query.slot();
    let confirm_value = match (action.dia_act, slot) {
        (DiaAct::Confirm, Some(s)) => belief.top_value(s).map(|v| ontology.values(s)[v].clone()),
        _ => None,
    };
    let select_values = match (action.dia_act, slot) {
        (DiaAct::Select, Some(s)) => {
            let dist = belief.slot(s);
            let n = dist.len() - 1;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            (dist[order[1]] > 0.0).then(|| {
                [
                    ontology.values(s)[order[0]].clone(),
                    ontology.values(s)[order[1]].clone(),
                ]
            })
        }
        _ => None,
    };
    SystemReply {
        action,
        query,
        match_count: matches.len(),
        venue,
        confirm_value,
        select_values,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// What the user meant (simulation only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub user_clean: Vec<UserActHypothesis>,
    /// What the tracker observed.
    pub user_observed: Vec<UserActHypothesis>,
    pub features: BeliefFeatures,
    pub reply: SystemReply,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub turns: Vec<TurnRecord>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Rebuilds the RL episode with reward −1 per turn and +20 at the final
    /// turn on success, so the total return is `20·success − T`.
    pub fn to_episode(&self, success: bool) -> Episode {
        let n = self.turns.len();
        let transitions = self
            .turns
            .iter()
            .enumerate()
            .map(|(t, turn)| Transition {
                features: turn.features.clone(),
                action: turn.reply.action,
                reward: TURN_PENALTY + if success && t + 1 == n { SUCCESS_REWARD } else { 0.0 },
            })
            .collect();
        Episode::new(transitions, success)
    }
}

/// One finished simulated dialogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub seed: u64,
    pub goal: UserGoal,
    pub final_goal: UserGoal,
    pub transcript: Transcript,
    pub success: bool,
}

impl DialogueRecord {
    pub fn turns(&self) -> usize {
        self.transcript.len()
    }

    pub fn total_return(&self) -> f64 {
        SUCCESS_REWARD * f64::from(u8::from(self.success)) - self.turns() as f64
    }

    pub fn episode(&self) -> Episode {
        self.transcript.to_episode(self.success)
    }
}

/// A simulated-user environment at a fixed semantic error rate.
#[derive(Clone, Debug)]
pub struct DialogueEnv {
    ontology: Arc<Ontology>,
    db: Arc<VenueDatabase>,
    channel: Channel,
    user: UserConfig,
    max_turns: usize,
    no_match: Vec<(usize, usize)>,
}

impl DialogueEnv {
    pub fn new(ontology: Arc<Ontology>, db: Arc<VenueDatabase>, errors: ErrorModel) -> Result<Self> {
        let no_match = db.empty_food_area_pairs(&ontology);
        Ok(DialogueEnv {
            channel: Channel::new(errors)?,
            ontology,
            db,
            user: UserConfig::default(),
            max_turns: MAX_TURNS,
            no_match,
        })
    }

    pub fn with_user_config(mut self, user: UserConfig) -> Self {
        self.user = user;
        self
    }

    /// The same environment with the channel's error rate replaced.
    pub fn with_ser(&self, ser: f64) -> Result<Self> {
        let errors = ErrorModel {
            ser,
            ..self.error_model().clone()
        };
        Ok(DialogueEnv {
            channel: Channel::new(errors)?,
            ..self.clone()
        })
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn db(&self) -> &VenueDatabase {
        &self.db
    }

    pub fn ser(&self) -> f64 {
        self.channel.model().ser
    }

    pub fn error_model(&self) -> &ErrorModel {
        self.channel.model()
    }

    pub fn max_turns(&self) -> usize {
        self.max_turns
    }

    pub fn sample_goal(&self, seed_: u64) -> UserGoal {
        let mut rng = seed::rng(seed::derive(seed_, stream::GOAL, 0));
        crate::sim::sample_goal(&self.ontology, &self.db, &self.no_match, &self.user, &mut rng)
    }

    /// Runs one dialogue against `system`, which maps the current belief and
    /// its features to a master action.
    pub fn run<F>(&self, seed_: u64, mut system: F) -> Result<DialogueRecord>
    where
        F: FnMut(&BeliefState, &BeliefFeatures) -> Result<MasterAction>,
    {
        let ontology = &*self.ontology;
        let goal = self.sample_goal(seed_);
        let mut rng = seed::rng(seed::derive(seed_, stream::CHANNEL, 0));
        let mut user = UserSimulator::new(ontology, &self.db, goal.clone(), self.user.clone());
        let mut belief = BeliefState::new(ontology, self.max_turns);
        let mut transcript = Transcript::default();
        let mut clean = user.initial_acts(&mut rng);
        loop {
            let noisy = self.channel.corrupt(ontology, &clean, &mut rng);
            belief = belief.focus_update(ontology, &noisy.hyps)?;
            refresh_matches(&mut belief, ontology, &self.db);
            let features = belief.featurize();
            let action = system(&belief, &features)?;
            let reply = realize(ontology, &self.db, &belief, action);
            belief.note_system_turn(ontology, action, reply.venue.is_some());
            let user_left = user.has_left();
            transcript.turns.push(TurnRecord {
                user_clean: clean,
                user_observed: noisy.hyps,
                features,
                reply,
            });
            if action.dia_act == DiaAct::Bye || user_left || transcript.len() >= self.max_turns {
                break;
            }
            clean = user.respond(&transcript.turns.last().unwrap().reply, &mut rng);
        }
        let final_goal = user.goal().clone();
        let success = judge::success(ontology, &self.db, &final_goal, &transcript);
        Ok(DialogueRecord {
            seed: seed_,
            goal,
            final_goal,
            transcript,
            success,
        })
    }
}

impl DialogueEnv {
    /// Runs one dialogue driven by a policy network.
    pub fn run_policy(&self, policy: &PolicyNetwork, mode: ActionMode, seed_: u64) -> Result<DialogueRecord> {
        let mut rng = seed::rng(seed::derive(seed_, stream::POLICY, 0));
        self.run(seed_, |_, f| policy.act(f.as_slice(), mode, &mut rng))
    }
}

impl Environment<PolicyNetwork> for DialogueEnv {
    fn rollout(&self, policy: &PolicyNetwork, mode: ActionMode, seed_: u64) -> Result<Episode> {
        Ok(self.run_policy(policy, mode, seed_)?.episode())
    }
}
