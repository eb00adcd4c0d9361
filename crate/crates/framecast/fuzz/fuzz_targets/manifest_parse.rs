#![no_main]

use framecast::frame_io::DatasetManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(manifest) = DatasetManifest::parse(text) {
        // Serialization is canonical: parse(to_csv) is a fixed point.
        let csv = manifest.to_csv();
        let again = DatasetManifest::parse(&csv).expect("canonical form must parse");
        assert_eq!(csv, again.to_csv());
    }
});
