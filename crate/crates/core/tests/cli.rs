mod common;

use std::path::Path;
use std::process::Command;

use snblock::cerf::whitney_critical_values;
use snblock::synthesis::model_file::read_model;

fn snblock(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_snblock"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn fixture_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("samples.txt"),
        common::fold_1d_samples().to_text(),
    )
    .unwrap();
    std::fs::write(
        dir.path().join("block.txt"),
        common::fold_1d_block().to_text(),
    )
    .unwrap();
    dir
}

const INPUTS: [&str; 4] = ["--samples", "samples.txt", "--block", "block.txt"];

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = fixture_dir();
    let d = dir.path();
    for cmd in [
        "ingest",
        "block",
        "index",
        "certify",
        "synthesize",
        "verify",
        "graphic",
    ] {
        let mut args = vec![cmd];
        args.extend(INPUTS);
        let (code, err) = snblock(d, &args);
        assert_eq!(code, 0, "{cmd}: {err}");
    }
    assert!(read(d, "certificate.txt").contains("k=1"));
    assert!(read(d, "verify.txt").starts_with("format=snblock-verify v1\nverdict=Pass\n"));
    for name in [
        "assumptions.txt",
        "block.txt",
        "pair.txt",
        "index.txt",
        "branches.tsv",
        "graphic_arcs.tsv",
        "graphic_events.tsv",
    ] {
        assert!(!read(d, name).is_empty(), "{name}");
    }
    assert!(read(d, "graphic.svg").starts_with("<svg"));

    // cusp table against the closed-form critical values of the stored model
    let (family, _) = read_model(&read(d, "model.txt")).unwrap();
    let cusp = read(d, "cusp.tsv");
    let mut rows = cusp.lines();
    assert_eq!(rows.next(), Some("lambda\tcritical_values"));
    for row in rows {
        let (l, vals) = row.split_once('\t').unwrap();
        let l: f64 = l.parse().unwrap();
        let got: Vec<f64> = vals
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(got, whitney_critical_values(family.whitney(), l));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = fixture_dir();
    let d = dir.path();
    let mut first = Vec::new();
    for round in 0..2 {
        for cmd in ["certify", "synthesize", "verify", "graphic"] {
            let mut args = vec![cmd];
            args.extend(INPUTS);
            assert_eq!(snblock(d, &args).0, 0);
        }
        let arts: Vec<String> = [
            "certificate.txt",
            "model.txt",
            "verify.txt",
            "graphic.svg",
            "cusp.tsv",
        ]
        .iter()
        .map(|n| read(d, n))
        .collect();
        if round == 0 {
            first = arts;
        } else {
            assert_eq!(first, arts);
        }
    }
}

#[test]
fn later_stages_need_their_artifacts() {
    let dir = fixture_dir();
    let d = dir.path();
    for cmd in ["synthesize", "verify", "graphic"] {
        let mut args = vec![cmd];
        args.extend(INPUTS);
        let (code, err) = snblock(d, &args);
        assert_eq!(code, 2, "{cmd}");
        assert!(err.contains("missing artifact"), "{err}");
    }
}

#[test]
fn invalid_configuration_exits_two() {
    let dir = fixture_dir();
    let (code, err) = snblock(
        dir.path(),
        &[
            "certify",
            "--samples",
            "samples.txt",
            "--block",
            "block.txt",
            "--tol=-1",
        ],
    );
    assert_eq!(code, 2);
    assert!(err.contains("invalid configuration"), "{err}");
    let (code, _) = snblock(dir.path(), &["certify", "--block", "block.txt"]);
    assert_eq!(code, 2);
    let (code, _) = snblock(dir.path(), &["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn nontrivial_total_index_is_rejected_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // ż = −z: a single attractor for every λ, so CH(S) = ℤ in degree 0
    let samples: Vec<_> = (0..=80)
        .flat_map(|i| {
            (0..=20).map(move |j| snblock::ingest::Sample {
                x: vec![-2.0 + 0.05 * i as f64],
                lambda: 0.05 * j as f64,
                f: vec![2.0 - 0.05 * i as f64],
            })
        })
        .collect();
    let svf = snblock::ingest::SampledVectorField::new(1, samples, 2.0).unwrap();
    std::fs::write(d.join("samples.txt"), svf.to_text()).unwrap();
    std::fs::write(
        d.join("block.txt"),
        "box=-2 2\nresolution=8 ; 10\nsplit=0 1\n",
    )
    .unwrap();
    let mut args = vec!["certify"];
    args.extend(INPUTS);
    let (code, err) = snblock(d, &args);
    assert_eq!(code, 1, "{err}");
    assert!(read(d, "certificate.txt").contains("condition iii"));
}
