#![no_main]

use cylgpr::store::{bscan_from_parts, BScanMeta, Grid};
use libfuzzer_sys::fuzz_target;

const MAX_CELLS: usize = 1 << 16;

fuzz_target!(|data: &[u8]| {
    let Ok(meta) = serde_json::from_slice::<BScanMeta>(data) else { return };
    let cells = meta.n_traces.checked_mul(meta.n_samples);
    let Some(cells) = cells.filter(|&c| c <= MAX_CELLS) else { return };
    let grid = Grid::new(vec![meta.n_traces, meta.n_samples], vec![0.0; cells]).unwrap();
    if let Ok(b) = bscan_from_parts(&grid, &meta) {
        assert_eq!(b.n_traces(), meta.n_traces);
    }
});
