#![no_main]

use cylgpr::store::{decode_grid, encode_grid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Anything that decodes must re-encode to the same bytes.
    if let Ok(grid) = decode_grid(data) {
        assert_eq!(encode_grid(&grid), data);
        let _ = grid.to_array2();
    }
});
