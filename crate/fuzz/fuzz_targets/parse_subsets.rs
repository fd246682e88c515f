#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&dim, rest)) = data.split_first() else { return };
    let dim = dim as usize % 24;
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(subsets) = tailindex::io::parse_subsets(text, dim) {
        for s in subsets {
            assert!(s.len() >= 2);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i >= 1 && i <= dim));
        }
    }
});
