#![no_main]
use dpn_core::checkpoint::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = decode(data) {
        assert_eq!(decode(&encode(&c.network, c.seed)).unwrap(), c);
    }
});
