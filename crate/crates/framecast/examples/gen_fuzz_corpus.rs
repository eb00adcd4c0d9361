//! Regenerates the seed corpus for the fuzz targets from well-formed
//! artifacts, one directory per target:
//!
//! ```text
//! cargo run -p framecast --example gen_fuzz_corpus -- crates/framecast/fuzz/corpus
//! ```

use std::fs;
use std::path::Path;

use framecast::frame_io::{encode_fcrw, encode_pnm, synth_sequence, SynthKind};
use framecast::monolithic::encode_monolithic;
use framecast::nn::{write_mlp, Activation, Mlp};
use framecast::predictor::PredictorModel;
use framecast::progressive::{encode, TaildropDistribution};
use framecast::transport::{frame_message, MessageKind};
use framecast::AutoencoderModel;

fn put(dir: &Path, name: &str, bytes: &[u8]) {
    fs::create_dir_all(dir).expect("create corpus dir");
    fs::write(dir.join(name), bytes).expect("write seed");
    println!("  {} ({} bytes)", dir.join(name).display(), bytes.len());
}

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/framecast/fuzz/corpus".into());
    let root = Path::new(&root);

    let gray = synth_sequence(SynthKind::MovingSquare, 4, (8, 8, 1), 1).unwrap();
    let color = synth_sequence(SynthKind::Noise, 3, (6, 4, 3), 2).unwrap();

    put(&root.join("pnm_decode"), "gray", &encode_pnm(&gray.frames[0]));
    put(&root.join("pnm_decode"), "color", &encode_pnm(&color.frames[0]));

    put(
        &root.join("fcrw_decode"),
        "gray",
        &encode_fcrw(&gray.frames).unwrap(),
    );
    put(
        &root.join("fcrw_decode"),
        "color",
        &encode_fcrw(&color.frames).unwrap(),
    );

    put(
        &root.join("manifest_parse"),
        "basic",
        b"source_id,split,label\nclip-a,train,indoor\nclip-b,validation,\nclip-c,test,outdoor\n",
    );

    let net = Mlp::seeded(&[4, 3, 2], &[Activation::Relu, Activation::Sigmoid], 7);
    put(&root.join("mlp_checkpoint"), "small", &write_mlp(&net).unwrap());

    let ae = AutoencoderModel::new_seeded((4, 4, 1), 3, 1, TaildropDistribution::default(), 7);
    put(
        &root.join("autoencoder_checkpoint"),
        "small",
        &ae.to_bytes().unwrap(),
    );

    let pred = PredictorModel::new_seeded(2, 3, 1, 7);
    put(
        &root.join("predictor_checkpoint"),
        "small",
        &pred.to_bytes().unwrap(),
    );

    put(
        &root.join("fcmv_decode"),
        "coarse",
        &encode_monolithic(&gray.frames, 8, 2).unwrap(),
    );
    put(
        &root.join("fcmv_decode"),
        "lossless",
        &encode_monolithic(&gray.frames, 1, 2).unwrap(),
    );

    // Wire seed: chunk-size byte, then a header + two segments + end marker.
    // Header payload: frame u32 BE, segment count u8, segment width u16 BE.
    // Segment payload: frame u32 BE, segment index u8, width f32 LE scalars.
    let tiny = synth_sequence(SynthKind::MovingSquare, 1, (4, 4, 1), 3).unwrap();
    let latent = encode(&ae, &tiny.frames[0]).unwrap();
    let mut stream = vec![13u8];
    let mut header = 0u32.to_be_bytes().to_vec();
    header.push(ae.segment_count as u8);
    header.extend((ae.segment_width as u16).to_be_bytes());
    stream.extend(frame_message(MessageKind::FrameHeader, &header).unwrap());
    for seg in 0..2 {
        let mut payload = 0u32.to_be_bytes().to_vec();
        payload.push(seg as u8);
        for v in latent.segment(seg) {
            payload.extend((*v as f32).to_le_bytes());
        }
        stream.extend(frame_message(MessageKind::FeatureSegment, &payload).unwrap());
    }
    stream.extend(frame_message(MessageKind::EndOfVideo, &[]).unwrap());
    put(&root.join("wire_stream"), "frame", &stream);
}
