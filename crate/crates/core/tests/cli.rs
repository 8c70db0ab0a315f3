use std::path::Path;
use std::process::Command;

use lpradon::container::{read_container, ContainerKind};
use lpradon::filters::{fbp_direct, filtered_reference, FilterKind};
use lpradon::geometry::sampling_plan;
use lpradon::oracle::phantom_image;
use lpradon::raster::relative_l2;

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lpradon"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn phantom_file_layout() {
    let dir = tempfile::tempdir().unwrap();
    let f = p(dir.path(), "p.lpt");
    ok(&["phantom", "--size", "64", "--out", &f]);
    let bytes = std::fs::read(&f).unwrap();
    assert_eq!(&bytes[..4], b"LPT1");
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 8 + hlen + 4 * 64 * 64);
}

#[test]
fn radon_then_fbp_meets_the_oracle_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (ph, s, f) = (
        p(dir.path(), "p.lpt"),
        p(dir.path(), "s.lpt"),
        p(dir.path(), "f.lpt"),
    );
    ok(&["phantom", "--size", "128", "--out", &ph]);
    ok(&["radon", "--in", &ph, "--out", &s]);
    ok(&["fbp", "--in", &s, "--filter", "cosine", "--out", &f]);
    let img = read_container(&f)
        .unwrap()
        .to_raster(ContainerKind::Image)
        .unwrap();
    let sino = read_container(&s)
        .unwrap()
        .to_raster(ContainerKind::Sinogram)
        .unwrap();
    let reference = filtered_reference(&phantom_image(128).unwrap(), FilterKind::Cosine);
    let direct = fbp_direct(
        &sino,
        FilterKind::Cosine,
        sampling_plan(128, 3).unwrap().image_grid(),
    )
    .unwrap();
    let e_fast = relative_l2(&img.data, &reference.data);
    let e_direct = relative_l2(&direct.data, &reference.data);
    assert!(e_fast <= 1.25 * e_direct, "{e_fast} vs {e_direct}");
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let ph = p(dir.path(), "p.lpt");
    ok(&["phantom", "--size", "64", "--out", &ph]);
    let mut outs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let s = p(dir.path(), &format!("s{i}.lpt"));
        let e = p(dir.path(), &format!("e{i}.lpt"));
        ok(&[
            "--threads",
            threads,
            "radon",
            "--in",
            &ph,
            "--dose",
            "500",
            "--seed",
            "9",
            "--out",
            &s,
        ]);
        ok(&[
            "--threads",
            threads,
            "em",
            "--in",
            &s,
            "--iters",
            "3",
            "--seed",
            "2",
            "--out",
            &e,
        ]);
        outs.push((std::fs::read(&s).unwrap(), std::fs::read(&e).unwrap()));
    }
    assert!(outs[0] == outs[1]);
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (ph, s) = (p(dir.path(), "p.lpt"), p(dir.path(), "s.lpt"));
    ok(&["phantom", "--size", "32", "--out", &ph]);
    ok(&[
        "radon",
        "--in",
        &ph,
        "--method",
        "direct",
        "--sectors",
        "4",
        "--ntheta",
        "48",
        "--out",
        &s,
    ]);
    for m in ["direct", "logpolar"] {
        ok(&[
            "backproject",
            "--in",
            &s,
            "--method",
            m,
            "--out",
            &p(dir.path(), "b.lpt"),
        ]);
    }
    ok(&[
        "fbp",
        "--in",
        &s,
        "--filter",
        "shepp-logan",
        "--out",
        &p(dir.path(), "f.lpt"),
    ]);
    let k = p(dir.path(), "k.lpt");
    ok(&[
        "kernel-dump",
        "--size",
        "32",
        "--sectors",
        "3",
        "--kind",
        "backprojection",
        "--out",
        &k,
    ]);
    let c = read_container(&k).unwrap();
    assert_eq!(c.header.kind, ContainerKind::Spectrum);
    assert_eq!(c.to_complex().unwrap().len(), c.header.rows * c.header.cols);
}

#[test]
fn bench_reports_counts_and_growing_times() {
    let dir = tempfile::tempdir().unwrap();
    let j = p(dir.path(), "b.json");
    ok(&["bench", "--sizes", "128,256,512", "--json", &j]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let mut last = 0.0;
    for r in rows {
        assert_eq!(r["radon_fft_count"], 6);
        assert_eq!(r["backprojection_fft_count"], 6);
        let t = r["radon_seconds"].as_f64().unwrap();
        assert!(t > last);
        last = t;
        for stage in ["prefilter", "resample", "fft", "assemble"] {
            assert!(r["radon_stages"][stage].as_f64().is_some());
        }
    }
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["frobnicate"],
        vec!["radon", "--bogus"],
        vec!["fbp", "--in", "x", "--out", "y", "--filter", "hann"],
        vec![],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    }
}

#[test]
fn runtime_errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "radon",
        "--in",
        &p(dir.path(), "missing.lpt"),
        "--out",
        &p(dir.path(), "o.lpt"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let ph = p(dir.path(), "p.lpt");
    ok(&["phantom", "--size", "32", "--out", &ph]);
    let out = run(&["fbp", "--in", &ph, "--out", &p(dir.path(), "o.lpt")]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(&ph, b"LPX1junk").unwrap();
    let out = run(&["backproject", "--in", &ph, "--out", &p(dir.path(), "o.lpt")]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}
