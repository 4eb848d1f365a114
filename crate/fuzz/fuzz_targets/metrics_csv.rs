#![no_main]
use dpn_core::sl::read_metrics;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_metrics(data);
});
