#![no_main]

use cylgpr::store::parse_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(manifest) = parse_manifest(text) {
            for sample in &manifest.samples {
                let _ = manifest.sample(&sample.id);
            }
        }
    }
});
