#![no_main]

use cylgpr::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        // a validated config must survive its own serialization
        let again = serde_json::to_string(&cfg).unwrap();
        assert!(RunConfig::from_json(&again).is_ok());
    }
});
