#![no_main]
use dpn_core::baseline::BaselineConfig;
use dpn_core::config::KeyValues;
use dpn_core::rl::RlConfig;
use dpn_core::sim::{ErrorModel, UserConfig};
use dpn_core::sl::SlConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(kv) = KeyValues::parse(text) else { return };
    let mut rl = RlConfig::default();
    let mut em = ErrorModel::new(0.1);
    let mut user = UserConfig::default();
    let mut base = BaselineConfig::default();
    if kv.apply(&mut [&mut rl, &mut em, &mut user, &mut base]).is_ok() {
        rl.validate().unwrap();
        em.validate().unwrap();
    }
    let mut sl = SlConfig::default();
    if kv.apply(&mut [&mut sl]).is_ok() {
        sl.validate().unwrap();
    }
});
