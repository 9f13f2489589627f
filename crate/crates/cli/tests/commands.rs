use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fase_cli::pgm::GrayImage;
use fase_core::GramTable;
use serde_json::Value;
use tempfile::TempDir;

fn fase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = fase(args);
    assert!(
        out.status.success(),
        "fase {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_pgm(p: &Path, width: usize, height: usize, f: impl Fn(usize, usize) -> u8) {
    let pixels = (0..width * height)
        .map(|i| f(i % width, i / width))
        .collect();
    GrayImage::new(width, height, pixels)
        .unwrap()
        .save(p)
        .unwrap();
}

fn central_mask(p: &Path, size: usize, loss: usize) {
    let lo = (size - loss) / 2;
    write_pgm(p, size, size, |x, y| {
        if (lo..lo + loss).contains(&x) && (lo..lo + loss).contains(&y) {
            0
        } else {
            255
        }
    });
}

fn smooth(x: usize, y: usize) -> u8 {
    (128.0 + 60.0 * (x as f64 * 0.2).sin() + 40.0 * (y as f64 * 0.15).cos()) as u8
}

#[test]
fn nothing_lost_leaves_image_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (img, mask, out) = (
        path(&dir, "in.pgm"),
        path(&dir, "mask.pgm"),
        path(&dir, "out.pgm"),
    );
    write_pgm(&img, 24, 20, smooth);
    write_pgm(&mask, 24, 20, |_, _| 255);
    for extra in [&[][..], &["--block", "8x8", "--support", "4"][..]] {
        let mut args = vec!["conceal", s(&img), s(&mask), "-o", s(&out)];
        args.extend_from_slice(extra);
        let report: Value = serde_json::from_slice(&ok(&args).stdout).unwrap();
        assert_eq!(fs::read(&img).unwrap(), fs::read(&out).unwrap());
        assert_eq!(report["lost_pixels"], 0);
        assert_eq!(report["schema"], "fase-conceal");
        assert_eq!(report["version"], 1);
    }
}

#[test]
fn tiled_dct_atom_is_recovered() {
    // Atom (8, 8) of a 16-point DCT takes the values +-1/2 up to scale, so
    // 128 +- 50 is an exact 8-bit rendering of DC plus that atom; tiling it
    // over 32x32 gives DC plus atom (16, 16) of the 32-point DCT.
    let dir = TempDir::new().unwrap();
    let (img, mask, out) = (
        path(&dir, "in.pgm"),
        path(&dir, "mask.pgm"),
        path(&dir, "out.pgm"),
    );
    let sign = |k: usize| if matches!(k % 4, 0 | 3) { 1i32 } else { -1 };
    write_pgm(&img, 32, 32, |x, y| (128 + 50 * sign(x) * sign(y)) as u8);
    central_mask(&mask, 32, 16);
    let report = ok(&[
        "conceal",
        s(&img),
        s(&mask),
        "-o",
        s(&out),
        "--reference",
        s(&img),
        "--dict",
        "dct",
        "--gamma",
        "1",
    ]);
    let report: Value = serde_json::from_slice(&report.stdout).unwrap();
    let psnr = report["psnr"].as_f64().unwrap();
    assert!(psnr >= 60.0, "{psnr}");
    assert_eq!(report["blocks"][0]["psnr"].as_f64().unwrap(), psnr);
    assert_eq!(fs::read(&img).unwrap(), fs::read(&out).unwrap());
}

#[test]
fn dft_area_reports_full_trace() {
    let dir = TempDir::new().unwrap();
    let (img, mask, out, rep) = (
        path(&dir, "in.pgm"),
        path(&dir, "mask.pgm"),
        path(&dir, "out.pgm"),
        path(&dir, "r.json"),
    );
    write_pgm(&img, 64, 64, smooth);
    central_mask(&mask, 64, 16);
    ok(&[
        "conceal",
        s(&img),
        s(&mask),
        "-o",
        s(&out),
        "--reference",
        s(&img),
        "--dict",
        "dft",
        "--iters",
        "250",
        "--fft",
        "--report",
        s(&rep),
    ]);
    let report: Value = serde_json::from_slice(&fs::read(&rep).unwrap()).unwrap();
    let block = &report["blocks"][0];
    assert_eq!(block["trace"].as_array().unwrap().len(), 250);
    assert_eq!(block["iterations"], 250);
    assert!(report["psnr"].as_f64().unwrap().is_finite());
    assert_eq!(report["dict_size"], 4096);
    let restored = GrayImage::load(&out).unwrap();
    assert_eq!((restored.width, restored.height), (64, 64));
}

#[test]
fn block_mode_matches_whole_area_run() {
    // One lost tile whose area is the whole image must give the same pixels
    // as extrapolating the image as one area.
    let dir = TempDir::new().unwrap();
    let (img, mask) = (path(&dir, "in.pgm"), path(&dir, "mask.pgm"));
    let (a, b) = (path(&dir, "a.pgm"), path(&dir, "b.pgm"));
    write_pgm(&img, 24, 24, smooth);
    write_pgm(&mask, 24, 24, |x, y| {
        if (8..16).contains(&x) && (8..16).contains(&y) {
            0
        } else {
            255
        }
    });
    ok(&["conceal", s(&img), s(&mask), "-o", s(&a), "--iters", "30"]);
    ok(&[
        "conceal",
        s(&img),
        s(&mask),
        "-o",
        s(&b),
        "--iters",
        "30",
        "--block",
        "8x8",
        "--support",
        "8",
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&img).unwrap());
}

#[test]
fn single_thread_output_matches_default() {
    let dir = TempDir::new().unwrap();
    let (img, mask) = (path(&dir, "in.pgm"), path(&dir, "mask.pgm"));
    let (a, b) = (path(&dir, "a.pgm"), path(&dir, "b.pgm"));
    write_pgm(&img, 48, 48, smooth);
    ok(&["mask", "--size", "48x48", "--block", "8x8", "-o", s(&mask)]);
    let args = [
        "conceal",
        s(&img),
        s(&mask),
        "--block",
        "8x8",
        "--support",
        "4",
        "--iters",
        "40",
    ];
    ok(&[&args[..], &["-o", s(&a)]].concat());
    ok(&[&args[..], &["-o", s(&b), "--single-thread"]].concat());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn tables_are_idempotent_and_checked() {
    let dir = TempDir::new().unwrap();
    let (t1, t2) = (path(&dir, "a.fgrm"), path(&dir, "b.fgrm"));
    let build = |out: &Path, rho: &str| {
        ok(&[
            "tables",
            "--dict",
            "dct",
            "--size",
            "16x16",
            "--loss",
            "4x4",
            "--rho",
            rho,
            "-o",
            s(out),
        ]);
    };
    build(&t1, "0.8");
    build(&t2, "0.8");
    assert_eq!(fs::read(&t1).unwrap(), fs::read(&t2).unwrap());

    let verify = |rho: &str| {
        fase(&[
            "verify",
            "--size",
            "16x16",
            "--loss",
            "4x4",
            "--dict",
            "dct",
            "--iters",
            "20",
            "--trials",
            "3",
            "--rho",
            rho,
            "--tables",
            s(&t1),
        ])
    };
    assert!(verify("0.8").status.success());
    let stale = verify("0.7");
    assert_eq!(stale.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&stale.stderr).contains("stale"));

    let (img, mask, out) = (
        path(&dir, "in.pgm"),
        path(&dir, "mask.pgm"),
        path(&dir, "out.pgm"),
    );
    write_pgm(&img, 16, 16, smooth);
    central_mask(&mask, 16, 4);
    ok(&[
        "conceal",
        s(&img),
        s(&mask),
        "-o",
        s(&out),
        "--tables",
        s(&t1),
        "--iters",
        "20",
    ]);
    let stale = fase(&[
        "conceal",
        s(&img),
        s(&mask),
        "-o",
        s(&out),
        "--tables",
        s(&t1),
        "--rho",
        "0.7",
    ]);
    assert_eq!(stale.status.code(), Some(2));
}

#[test]
fn fft_tables_match_direct_build() {
    let dir = TempDir::new().unwrap();
    let (direct, fast) = (path(&dir, "d.fgrm"), path(&dir, "f.fgrm"));
    let base = ["tables", "--dict", "dft", "--size", "16x8", "--loss", "4x2"];
    ok(&[&base[..], &["-o", s(&direct)]].concat());
    ok(&[&base[..], &["-o", s(&fast), "--fft"]].concat());
    let (a, b) = (
        GramTable::load(&direct).unwrap(),
        GramTable::load(&fast).unwrap(),
    );
    assert_eq!(a.provenance(), b.provenance());
    for (x, y) in a.matrix().iter().zip(b.matrix()) {
        assert!((x - y).norm() <= 1e-9, "{x} vs {y}");
    }
    for (x, y) in a.d().iter().zip(b.d()) {
        assert!((x - y).abs() <= 1e-9);
    }
    assert_eq!(
        fase(&[
            "tables",
            "--dict",
            "dct",
            "--size",
            "8x8",
            "--loss",
            "2x2",
            "--fft",
            "-o",
            s(&fast)
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn verify_reports_trials() {
    let out = ok(&[
        "verify", "--size", "8x8", "--dict", "dct", "--loss", "4x4", "--iters", "50", "--trials",
        "20", "--seed", "4",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], "fase-verify");
    assert_eq!(report["trials"].as_array().unwrap().len(), 20);
    assert_eq!(report["all_pass"], true);
    assert_eq!(
        out.stdout,
        ok(&[
            "verify", "--size", "8x8", "--dict", "dct", "--loss", "4x4", "--iters", "50",
            "--trials", "20", "--seed", "4"
        ])
        .stdout
    );

    let zero: Value = serde_json::from_slice(
        &ok(&["verify", "--iters", "1", "--trials", "1", "--zero-signal"]).stdout,
    )
    .unwrap();
    assert_eq!(zero["trials"][0]["selections_equal"], true);

    assert_eq!(fase(&["verify", "--size", "128x64"]).status.code(), Some(2));
    assert_eq!(fase(&["verify", "--dict", "dst"]).status.code(), Some(2));
}

#[test]
fn bench_counts_match_closed_forms() {
    let out = ok(&[
        "bench",
        "--sizes",
        "8x8,16x8",
        "--dicts",
        "dct,union:dct+wht",
        "--iters",
        "3,7",
        "--algos",
        "se,fase,table_gen",
        "--reps",
        "1",
        "--warmup",
        "0",
        "--single-thread",
    ]);
    let mut reader = csv::Reader::from_reader(&out.stdout[..]);
    let header: Vec<_> = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_owned)
        .collect();
    assert_eq!(
        header.join(","),
        "algo,M,N,dict,iters,seconds,mul_pred,add_pred,other_pred,mul_meas,add_meas,other_meas"
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 2 * (2 + 2 + 1));
    for row in &rows {
        assert!(row[5].parse::<f64>().unwrap() >= 0.0);
        if &row[0] == "table_gen" {
            assert!(row[9].is_empty());
        } else {
            for i in 6..9 {
                assert_eq!(&row[i], &row[i + 3], "{row:?}");
            }
        }
    }
    let union_rows = rows
        .iter()
        .filter(|r| &r[1] == "8" && &r[2] == "8" && &r[3] == "128")
        .count();
    assert_eq!(union_rows, 5);
    assert_eq!(
        rows.iter()
            .filter(|r| &r[1] == "8" && &r[2] == "16")
            .count(),
        10
    );

    let sweep = ok(&[
        "bench", "--sizes", "8x8", "--atoms", "16,48", "--iters", "2", "--reps", "1", "--algos",
        "fase",
    ]);
    let text = String::from_utf8(sweep.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("fase,8,8,48,2,"));
}

#[test]
fn dictionary_files_feed_specs() {
    let dir = TempDir::new().unwrap();
    let dict = path(&dir, "d.fdic");
    ok(&["dict", "--dict", "wht", "--size", "8x4", "-o", s(&dict)]);
    let spec = format!("union:dct+file:{}", s(&dict));
    let out = ok(&[
        "verify", "--size", "8x4", "--loss", "2x2", "--dict", &spec, "--iters", "15", "--trials",
        "2",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dict_size"], 64);
    assert_eq!(
        fase(&[
            "verify",
            "--size",
            "8x8",
            "--dict",
            &format!("file:{}", s(&dict))
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn mask_generation_is_seeded() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.pgm"), path(&dir, "b.pgm"));
    for p in [&a, &b] {
        ok(&[
            "mask",
            "--size",
            "96x64",
            "--block",
            "16x16",
            "--count",
            "3",
            "--seed",
            "11",
            "-o",
            s(p),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let m = GrayImage::load(&a).unwrap();
    assert_eq!((m.width, m.height), (96, 64));
    assert_eq!(m.pixels.iter().filter(|&&v| v == 0).count(), 3 * 256);
}

#[test]
fn rejects_mismatched_inputs() {
    let dir = TempDir::new().unwrap();
    let (img, mask, out) = (
        path(&dir, "in.pgm"),
        path(&dir, "mask.pgm"),
        path(&dir, "out.pgm"),
    );
    write_pgm(&img, 16, 16, smooth);
    write_pgm(&mask, 16, 8, |_, _| 0);
    assert_eq!(
        fase(&["conceal", s(&img), s(&mask), "-o", s(&out)])
            .status
            .code(),
        Some(2)
    );
    fs::write(&mask, b"P2\n1 1\n255\n0").unwrap();
    assert_eq!(
        fase(&["conceal", s(&img), s(&mask), "-o", s(&out)])
            .status
            .code(),
        Some(2)
    );
    central_mask(&mask, 16, 4);
    assert_eq!(
        fase(&[
            "conceal",
            s(&img),
            s(&mask),
            "-o",
            s(&out),
            "--dict",
            "haar"
        ])
        .status
        .code(),
        Some(2)
    );
}
