#![no_main]

use framecast::frame_io::{decode_pnm, encode_pnm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frame) = decode_pnm(data, "fuzz") {
        // Anything that decodes must survive a round trip unchanged.
        let again = decode_pnm(&encode_pnm(&frame), "fuzz-roundtrip").expect("re-decode");
        assert_eq!(frame.dims(), again.dims());
        assert_eq!(frame.pixels, again.pixels);
    }
});
