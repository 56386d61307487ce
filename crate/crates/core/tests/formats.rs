use proptest::prelude::*;

use nsrl::field::{Grid, ScalarField, Snapshot, VectorField};
use nsrl::io::{decode_snapshot, encode_snapshot, fnv1a, load_series, read_snapshot, write_series, write_snapshot, KeyValues};
use nsrl::Error;

fn snapshot(n: usize, box_length: f64, time: f64, vals: &[f64]) -> Snapshot {
    let g = Grid::new(n, box_length).unwrap();
    let m = n * n * n;
    let field = |k: usize| ScalarField::new(g, (0..m).map(|i| vals[(i * 7 + k) % vals.len()]).collect()).unwrap();
    Snapshot::new(time, VectorField::new([field(0), field(1), field(2)]).unwrap(), field(3)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshot_round_trip_is_bit_identical(
        n in prop::sample::select(vec![4usize, 6]),
        box_length in 0.1f64..100.0,
        time in -1e3f64..1e3,
        vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO | prop::num::f64::POSITIVE | prop::num::f64::NEGATIVE, 1..40),
    ) {
        let s = snapshot(n, box_length, time, &vals);
        let bytes = encode_snapshot(&s);
        prop_assert_eq!(bytes.len(), 28 + 32 * n * n * n);
        let back = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(encode_snapshot(&back), bytes);
        prop_assert_eq!(back.time().to_bits(), time.to_bits());
    }

    #[test]
    fn fnv_detects_single_bit_flips(data in prop::collection::vec(any::<u8>(), 1..256), pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let mut flipped = data.clone();
        let i = pos.index(data.len());
        flipped[i] ^= 1 << bit;
        prop_assert_ne!(fnv1a(&data), fnv1a(&flipped));
    }
}

#[test]
fn file_round_trip_and_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let s = snapshot(4, 6.0, 0.25, &[1.0, -2.5, 3.25, f64::MIN_POSITIVE]);
    let path = dir.path().join("a.nsrs");
    let sum = write_snapshot(&path, &s).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(fnv1a(&bytes), sum);
    assert_eq!(encode_snapshot(&read_snapshot(&path).unwrap()), bytes);
    // no temp files left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn manifest_checks_order_checksums_and_headers() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = vec![snapshot(4, 1.0, 0.0, &[1.0]), snapshot(4, 1.0, 0.5, &[2.0])];
    let m = write_series(&dir.path().join("m.json"), &snaps).unwrap();
    assert_eq!(m.entries.len(), 2);
    assert_eq!(m.entries[1].path, "m_00001.nsrs");
    assert_eq!(load_series(&dir.path().join("m.json")).unwrap().2.len(), 2);

    let text = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    std::fs::write(dir.path().join("swapped.json"), text.replace("\"time\": 0.5", "\"time\": 0.0")).unwrap();
    assert!(matches!(load_series(&dir.path().join("swapped.json")), Err(Error::Format(_))));

    let victim = dir.path().join("m_00000.nsrs");
    let mut bytes = std::fs::read(&victim).unwrap();
    bytes[40] ^= 0x80;
    std::fs::write(&victim, &bytes).unwrap();
    assert!(matches!(load_series(&dir.path().join("m.json")), Err(Error::Checksum { .. })));
}

#[test]
fn truncated_and_foreign_files_are_rejected() {
    let s = snapshot(4, 1.0, 0.0, &[0.5]);
    let bytes = encode_snapshot(&s);
    assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 8]), Err(Error::Format(_))));
    let mut v2 = bytes.clone();
    v2[4] = 2;
    assert!(matches!(decode_snapshot(&v2), Err(Error::Format(_))));
    assert!(matches!(decode_snapshot(b"NSR"), Err(Error::Format(_))));
}

#[test]
fn config_comments_and_lists() {
    let kv = KeyValues::parse("ckn_radii = 0.4, 0.2 0.1  # three radii\n# whole-line comment\nepsilon=1e-3\n").unwrap();
    assert_eq!(kv.list("ckn_radii").unwrap().unwrap(), vec![0.4, 0.2, 0.1]);
    assert_eq!(kv.required::<f64>("epsilon").unwrap(), 1e-3);
    assert!(matches!(kv.required::<f64>("t_top"), Err(Error::Config { key, .. }) if key == "t_top"));
    assert!(matches!(kv.list("epsilon"), Ok(Some(_))));
    let bad = KeyValues::parse("ckn_radii = 0.4, x").unwrap();
    assert!(matches!(bad.list("ckn_radii"), Err(Error::Config { .. })));
}
