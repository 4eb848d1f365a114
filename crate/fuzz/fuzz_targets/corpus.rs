#![no_main]
use dpn_core::corpus::DialogueCorpus;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = DialogueCorpus::read(data) {
        let mut out = Vec::new();
        c.write(&mut out).unwrap();
        assert_eq!(DialogueCorpus::read(&out[..]).unwrap(), c);
    }
});
