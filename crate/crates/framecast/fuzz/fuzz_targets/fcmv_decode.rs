#![no_main]

use framecast::monolithic::decode_monolithic;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(video) = decode_monolithic(data) {
        assert!(!video.frames.is_empty());
        assert!(video.q >= 1);
        assert!(video.gop >= 1);
        let dims = video.frames[0].dims();
        for f in &video.frames {
            assert_eq!(f.dims(), dims);
            assert!(f.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
});
