#![no_main]
use dpn_core::eval::{read_curve, write_curve};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_curve(data) {
        let mut out = Vec::new();
        write_curve(&rows, &mut out).unwrap();
        let again = read_curve(&out[..]).unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
