#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(o) = dpn_core::Ontology::from_json(text) {
            let again = dpn_core::Ontology::from_json(&o.to_json()).unwrap();
            assert_eq!(again, o);
        }
    }
});
