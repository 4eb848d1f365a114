use std::sync::Arc;

use dpn_core::baseline::{baseline_act, BaselineConfig};
use dpn_core::corpus::{generate_corpus, DialogueCorpus, Split};
use dpn_core::db::generate_database;
use dpn_core::dialogue::{DialogueEnv, MAX_TURNS};
use dpn_core::eval::eval_f1;
use dpn_core::rl::Environment;
use dpn_core::sim::ErrorModel;
use dpn_core::{ActionMode, Ontology, PolicyNetwork};

fn env(db_seed: u64, ser: f64) -> DialogueEnv {
    let o = Arc::new(Ontology::default());
    let db = Arc::new(generate_database(&o, db_seed, 200).unwrap());
    DialogueEnv::new(o, db, ErrorModel::new(ser)).unwrap()
}

#[test]
fn baseline_and_simulator_are_coherent_without_noise() {
    let cfg = BaselineConfig::default();
    for db_seed in [1, 42] {
        let env = env(db_seed, 0.0);
        let ok = (0..500)
            .filter(|&s| {
                env.run(s, |b, _| Ok(baseline_act(b, env.ontology(), env.db(), &cfg)))
                    .unwrap()
                    .success
            })
            .count();
        assert!(ok as f64 / 500.0 >= 0.95, "db {db_seed}: {ok}/500");
    }
}

#[test]
fn dialogues_end_by_the_turn_cap_with_consistent_rewards() {
    let env = env(3, 0.3);
    let net = PolicyNetwork::init_default(3);
    for s in 0..200 {
        let ep = env.rollout(&net, ActionMode::Epsilon(0.5), s).unwrap();
        assert!((1..=MAX_TURNS).contains(&ep.len()));
        let total: f64 = ep.transitions.iter().map(|t| t.reward).sum();
        let expect = if ep.success { 20.0 } else { 0.0 } - ep.len() as f64;
        assert_eq!(total, expect);
    }
}

#[test]
fn corpus_files_round_trip_and_ignore_worker_count() {
    let env = env(4, 0.1);
    let a = generate_corpus(&env, 60, 9, &BaselineConfig::default(), 1).unwrap();
    let b = generate_corpus(&env, 60, 9, &BaselineConfig::default(), 3).unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    a.save(&path).unwrap();
    assert_eq!(DialogueCorpus::load(&path).unwrap(), a);
    assert_eq!(
        [Split::Train, Split::Valid, Split::Test].map(|s| a.split_len(s)),
        [40, 10, 10]
    );
}

#[test]
fn untrained_policies_score_poorly() {
    let env = env(5, 0.1);
    let corpus = generate_corpus(&env, 120, 5, &BaselineConfig::default(), 1).unwrap();
    for seed in 0..5 {
        let f1 = eval_f1(&PolicyNetwork::init_default(seed), &corpus, Split::Test).unwrap();
        assert!(f1.dia_act < 0.6, "seed {seed}: {}", f1.dia_act);
    }
}
