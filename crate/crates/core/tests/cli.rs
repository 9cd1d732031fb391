use std::path::Path;
use std::process::{Command, Output};

use sparse_corr::encoder::{encode, EncoderConfig};
use sparse_corr::io::{read_features, read_motion, read_volume, write_volume};
use sparse_corr::volume::{build_sparse, CorrEntry, SparseCorrelationVolume};

fn scv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scv"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = scv(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

#[test]
fn synth_estimate_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--tx",
            "-3",
            "--ty",
            "1",
            "--seed",
            "5",
            "--out-dir",
            ".",
        ],
    );
    ok(
        d,
        &[
            "estimate", "--img1", "a.png", "--img2", "b.png", "--out", "est.flo", "--viz",
            "est.png",
        ],
    );
    assert!(d.join("est.png").exists());
    let line = ok(
        d,
        &[
            "eval", "--flow", "est.flo", "--gt", "gt.flo", "--mask", "mask.png",
        ],
    );
    let epe: f64 = line["EPE ".len()..line.find(',').unwrap()].parse().unwrap();
    assert!(epe < 1.0, "{line}");

    // Same inputs, same bytes.
    ok(
        d,
        &[
            "estimate",
            "--img1",
            "a.png",
            "--img2",
            "b.png",
            "--out",
            "again.flo",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("est.flo")).unwrap(),
        std::fs::read(d.join("again.flo")).unwrap()
    );
}

#[test]
fn eval_of_ground_truth_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "."]);
    let line = ok(d, &["eval", "--flow", "gt.flo", "--gt", "gt.flo"]);
    assert_eq!(line.trim(), "EPE 0.000, F1-all 0.00%");
}

#[test]
fn malformed_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("junk.flo"), b"PIEH\x01\x00").unwrap();
    std::fs::write(
        d.join("junk.sfm"),
        b"SFM1\xff\xff\xff\xff\xff\xff\xff\xff\x01\x00\x00\x00",
    )
    .unwrap();
    for args in [
        &["eval", "--flow", "junk.flo", "--gt", "junk.flo"][..],
        &[
            "knn", "--f1", "junk.sfm", "--f2", "junk.sfm", "--out", "m.skm",
        ],
        &["encode", "--vol", "missing.scv", "--out", "m.smt"],
        &["memory-report", "--divisor", "0"],
        &["bench", "--sizes", "0"],
    ] {
        let out = scv(d, args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
        assert!(
            !String::from_utf8_lossy(&out.stderr).contains("panicked"),
            "{args:?}"
        );
    }
}

#[test]
fn feature_knn_build_encode_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["synth", "--height", "20", "--width", "24", "--out-dir", "."],
    );
    ok(d, &["features", "--img", "a.png", "--out", "a.sfm"]);
    ok(d, &["features", "--img", "b.png", "--out", "b.sfm"]);
    ok(
        d,
        &[
            "knn", "--f1", "a.sfm", "--f2", "b.sfm", "-k", "4", "--out", "m.skm",
        ],
    );
    ok(
        d,
        &[
            "build",
            "--f1",
            "a.sfm",
            "--f2",
            "b.sfm",
            "-k",
            "4",
            "--divisor",
            "2",
            "--out",
            "v.scv",
        ],
    );
    ok(
        d,
        &[
            "encode", "--vol", "v.scv", "-r", "2", "-L", "3", "--out", "m.smt",
        ],
    );

    let f1 = read_features(d.join("a.sfm")).unwrap();
    let f2 = read_features(d.join("b.sfm")).unwrap();
    assert_eq!(f1.channels(), 24);
    let vol = read_volume(d.join("v.scv")).unwrap();
    assert_eq!(vol.divisor(), 2);
    assert_eq!(vol.entries(), build_sparse(&f1, &f2, 4).unwrap().entries());
    let motion = read_motion(d.join("m.smt")).unwrap();
    assert_eq!(
        motion,
        encode(&vol, &EncoderConfig::new(3, 2).unwrap()).unwrap()
    );
    assert_eq!(motion.channels(), 75);
}

#[test]
fn memory_report_golden_and_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(dir.path(), &["memory-report", "--table4a"]);
    assert_eq!(
        table,
        std::fs::read_to_string(golden("table4a.txt")).unwrap()
    );
    let line = ok(dir.path(), &["memory-report", "--divisor", "8", "-k", "32"]);
    assert!(line.contains("221,184 elements"), "{line}");
    assert!(line.contains("2.2e5 elements, 0.9 MB"), "{line}");
}

#[test]
fn bench_prints_every_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["bench", "--sizes", "6,10", "-k", "3", "-c", "8"],
    );
    assert_eq!(
        out.lines()
            .filter(|l| l.starts_with(char::is_numeric))
            .count(),
        2,
        "{out}"
    );
    assert!(
        out.lines()
            .any(|l| l.starts_with("6 ") && l.contains("1296")),
        "{out}"
    );
}

/// Hand-built volume encoded with L = 3, r = 2; the golden file pins the
/// exact SMT1 bytes.
fn golden_volume() -> SparseCorrelationVolume {
    let entries = vec![
        CorrEntry::new(6.0, 0.0, 2.0),
        CorrEntry::new(0.5, -1.0, 1.0),
        CorrEntry::new(-1.5, 2.25, -3.0),
        CorrEntry::new(40.0, 0.0, 5.0),
    ];
    SparseCorrelationVolume::new(1, 2, 2, 1, entries).unwrap()
}

#[test]
fn encode_matches_golden_motion_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_volume(&golden_volume(), d.join("v.scv")).unwrap();
    ok(
        d,
        &[
            "encode", "--vol", "v.scv", "-r", "2", "-L", "3", "--out", "m.smt",
        ],
    );
    let bytes = std::fs::read(d.join("m.smt")).unwrap();
    assert_eq!(bytes, std::fs::read(golden("encode_l3_r2.smt")).unwrap());

    let m = read_motion(d.join("m.smt")).unwrap();
    let p0 = m.pixel(0);
    // (6, 0) only fits at level 3, as (1.5, 0): half to (1, 0), half to
    // (2, 0). (0.5, -1) becomes (0.125, -0.25) there and adds 0.125 * 0.75
    // to (1, 0).
    assert_eq!(
        (p0[50 + 2 * 5 + 3], p0[50 + 2 * 5 + 4]),
        (1.0 + 0.125 * 0.75, 1.0)
    );
    // (0.5, -1) at level 1 splits between (0, -1) and (1, -1).
    assert_eq!((p0[5 + 2], p0[5 + 3]), (0.5, 0.5));
    // (40, 0) is outside every window; (-1.5, 2.25) only fits levels 2 and 3.
    let p1 = m.pixel(1);
    assert!((p1.iter().map(|&v| f64::from(v)).sum::<f64>() + 6.0).abs() < 1e-6);
}
