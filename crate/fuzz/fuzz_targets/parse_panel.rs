#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&delimiter, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(panel) = tailindex::io::parse_panel(text, delimiter) {
        assert_eq!(panel.names.len(), panel.values.cols());
        assert!(panel.values.as_slice().iter().all(|v| v.is_finite()));
        if let Some(index) = &panel.index {
            assert_eq!(index.len(), panel.values.rows());
        }
    }
});
