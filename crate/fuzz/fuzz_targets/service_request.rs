#![no_main]
use dpn_service::{RatingRequest, UtteranceRequest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<UtteranceRequest>(data);
    let _ = serde_json::from_slice::<RatingRequest>(data);
});
