#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = tailindex::io::parse_grid_spec(text) {
        let v = grid.values();
        assert!(!v.is_empty());
        assert!(v.iter().all(|b| *b > 0.0 && *b < 1.0));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }
});
