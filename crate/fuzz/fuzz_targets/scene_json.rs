#![no_main]

use cylgpr::scene::Scene;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(scene) = serde_json::from_slice::<Scene>(data) else { return };
    if scene.validate().is_ok() {
        let c = scene.outer_shape.center;
        let _ = scene.region_at(c);
        let _ = scene.outer_shape.radius_at(1.0);
    }
});
