#![no_main]

use framecast::transport::StreamParser;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.is_empty() {
        return;
    }
    // First byte picks the chunk size so the corpus explores reassembly
    // boundaries; the rest is the stream.
    let chunk = (data[0] as usize % 37) + 1;
    let stream = &data[1..];

    let mut parser = StreamParser::new();
    let mut emitted: u64 = 0;
    for piece in stream.chunks(chunk) {
        for msg in parser.push(piece) {
            emitted += 8 + msg.payload.len() as u64;
        }
    }
    // Conservation: every byte is emitted in a message, skipped during
    // resynchronization, or still buffered.
    assert_eq!(
        emitted + parser.skipped_bytes() + parser.pending_bytes() as u64,
        stream.len() as u64
    );
});
