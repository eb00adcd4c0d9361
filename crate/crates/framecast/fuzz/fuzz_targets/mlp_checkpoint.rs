#![no_main]

use framecast::nn::{read_mlp_from_slice, write_mlp};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(net) = read_mlp_from_slice(data) {
        let bytes = write_mlp(&net).expect("decoded network must re-encode");
        let again = read_mlp_from_slice(&bytes).expect("re-decode");
        assert_eq!(net, again);
    }
});
