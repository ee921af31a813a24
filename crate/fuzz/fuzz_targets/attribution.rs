#![no_main]

use gnlab_core::explain::{decode_attributions, encode_attribution};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = decode_attributions(data) {
        let bytes: Vec<u8> = records.iter().flat_map(encode_attribution).collect();
        let again = decode_attributions(&bytes).expect("re-encoded archive");
        assert_eq!(again.len(), records.len());
    }
});
