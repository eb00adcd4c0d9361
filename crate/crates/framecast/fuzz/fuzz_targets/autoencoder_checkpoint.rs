#![no_main]

use framecast::AutoencoderModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = AutoencoderModel::from_bytes(data) {
        let bytes = model.to_bytes().expect("decoded model must re-encode");
        let again = AutoencoderModel::from_bytes(&bytes).expect("re-decode");
        assert_eq!(model.segment_count, again.segment_count);
        assert_eq!(model.segment_width, again.segment_width);
        assert_eq!(model.frame_dims(), again.frame_dims());
        assert_eq!(bytes, again.to_bytes().expect("canonical re-encode"));
    }
});
