#![no_main]
use dpn_core::decoder::decode;
use dpn_core::{BeliefState, Ontology};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let o = Ontology::default();
    let text = String::from_utf8_lossy(data);
    let hyps = decode(&o, &text, None);
    // Decoded evidence must always be acceptable to the tracker.
    BeliefState::new(&o, 30).focus_update(&o, &hyps).unwrap();
});
