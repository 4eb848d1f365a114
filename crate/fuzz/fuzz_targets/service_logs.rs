#![no_main]
use dpn_core::db::generate_database;
use dpn_core::Ontology;
use dpn_service::logs::{read_ratings, read_sessions};
use dpn_service::{consistent_dialogues, Logs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let ratings = read_ratings(data);
    let sessions = read_sessions(data);
    if let (Ok(ratings), Ok(sessions)) = (ratings, sessions) {
        let o = Ontology::default();
        let db = generate_database(&o, 1, 50).unwrap();
        let logs = Logs { sessions, ratings };
        let eps = consistent_dialogues(&o, &db, &logs);
        assert!(eps.len() <= logs.ratings.len());
    }
});
