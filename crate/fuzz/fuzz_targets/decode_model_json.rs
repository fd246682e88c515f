#![no_main]
use libfuzzer_sys::fuzz_target;
use tailindex::io::{decode_model_json, encode_model_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = decode_model_json(text) {
        let again = decode_model_json(&encode_model_json(&model)).expect("re-encoded model decodes");
        assert_eq!(again, model);
    }
});
