//! File format round-trips through the filesystem.

use std::path::Path;

use g2l::{checkpoint, dataset_io, Error};
use g2l_core::synthdata::{generate, SynthConfig};
use g2l_core::trainer::Encoder;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dataset_round_trip_is_bit_exact(
        videos in 0usize..5,
        moments in 2usize..7,
        dim in 1usize..9,
        overlap in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let ds = generate(&SynthConfig {
            videos,
            moments_per_video: moments,
            queries_per_video: 1,
            dim,
            topics: 3,
            overlap,
            seed,
            ..SynthConfig::default()
        }).unwrap();
        let bytes = dataset_io::encode(&ds).unwrap();
        let back = dataset_io::decode(Path::new("mem"), &bytes).unwrap();
        prop_assert_eq!(&back, &ds);
        for (a, b) in back.moments.data().iter().zip(ds.moments.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact(input in 1usize..6, hidden in 0usize..4, output in 1usize..6, seed in any::<u64>()) {
        let enc = Encoder::random(input, (hidden > 0).then_some(hidden), output, seed);
        let back = checkpoint::decode(Path::new("mem"), &checkpoint::encode(&enc).unwrap()).unwrap();
        prop_assert_eq!(back, enc);
    }
}

#[test]
fn files_round_trip_and_truncations_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.g2ld");
    let ds = generate(&SynthConfig {
        videos: 5,
        seed: 2,
        ..SynthConfig::default()
    })
    .unwrap();
    dataset_io::save(&ds, &path).unwrap();
    assert_eq!(&std::fs::read(&path).unwrap()[..5], b"G2LD1");
    assert_eq!(dataset_io::load(&path).unwrap(), ds);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    match dataset_io::load(&path) {
        Err(Error::Parse { location, .. }) => assert!(location.starts_with("byte offset")),
        other => panic!("expected parse error, got {other:?}"),
    }
    assert!(matches!(dataset_io::load(&dir.path().join("missing")), Err(Error::Io { .. })));

    let enc_path = dir.path().join("e.g2le");
    let enc = Encoder::random(32, None, 32, 4);
    checkpoint::save(&enc, &enc_path).unwrap();
    assert_eq!(&std::fs::read(&enc_path).unwrap()[..5], b"G2LE1");
    assert_eq!(checkpoint::load(&enc_path).unwrap(), enc);
}
