#![no_main]
use dpn_core::{Ontology, VenueDatabase};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let o = Ontology::default();
    if let Ok(db) = VenueDatabase::read_jsonl(&o, data) {
        let mut out = Vec::new();
        db.write_jsonl(&mut out).unwrap();
        assert_eq!(VenueDatabase::read_jsonl(&o, &out[..]).unwrap(), db);
    }
});
