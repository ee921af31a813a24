#![no_main]

use gnlab_core::data::{decode_dataset, encode_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = decode_dataset(data) {
        let again = decode_dataset(&encode_dataset(&d)).expect("re-encoded dataset");
        assert_eq!(again.len(), d.len());
        assert_eq!(again.labels(), d.labels());
    }
});
