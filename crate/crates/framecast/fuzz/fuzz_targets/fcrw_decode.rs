#![no_main]

use framecast::frame_io::{decode_fcrw, encode_fcrw};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frames) = decode_fcrw(data, "fuzz") {
        let bytes = encode_fcrw(&frames).expect("decoded frames must re-encode");
        let again = decode_fcrw(&bytes, "fuzz-roundtrip").expect("re-decode");
        assert_eq!(frames.len(), again.len());
        for (a, b) in frames.iter().zip(&again) {
            assert_eq!(a.dims(), b.dims());
            assert_eq!(a.pixels, b.pixels);
        }
    }
});
