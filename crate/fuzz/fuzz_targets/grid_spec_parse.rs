//! Fuzzes the sweep-grid mini-language. Parsing arbitrary text may only
//! return an error, never panic, and accepted grids stay finite in size.

#![no_main]

use libfuzzer_sys::fuzz_target;

use excitonic::{GridSpec, MAX_GRID_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = GridSpec::parse(text) {
        assert!(!grid.values.is_empty());
        assert!(grid.values.len() <= MAX_GRID_POINTS.max(text.len()));
    }
});
