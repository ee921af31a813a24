#![no_main]

use gnlab_core::nn::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = decode_checkpoint(data) {
        // Whatever decodes must re-encode to something that decodes the same.
        let again = decode_checkpoint(&encode_checkpoint(&model)).expect("re-encoded checkpoint");
        assert!(again.bits_eq(&model));
    }
});
