use std::path::Path;
use std::process::{Command, Output};

use image::{GrayImage, Luma};

fn segsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segsynth")).args(args).output().expect("spawn segsynth")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, r#"{"image_width": 96, "image_height": 80, "epoch_size": 3}"#).unwrap();
    p.to_string_lossy().into_owned()
}

fn write_mask(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> bool) {
    GrayImage::from_fn(w, h, |x, y| Luma([if f(x, y) { 255 } else { 0 }])).save(path).unwrap();
}

fn disk(cx: f64, cy: f64, r: f64) -> impl Fn(u32, u32) -> bool {
    move |x, y| (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= r * r
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&segsynth(&["--help"])), 0);
    assert_eq!(code(&segsynth(&["gen", "--help"])), 0);
    assert_eq!(code(&segsynth(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&segsynth(&[])), 1);
    assert_eq!(code(&segsynth(&["no-such-command"])), 1);
    let o = segsynth(&["preview", "--count", "100", "--out", "x.png"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&segsynth(&["prompts", "--mask", "m.png", "--npos", "0"])), 1);
}

#[test]
fn gen_writes_a_verifiable_shard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("shard");
    let o = segsynth(&["gen", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("samples/s"));
    let m = segsynth::pipeline::verify_shard(&out).unwrap();
    assert_eq!((m.start, m.end, m.master_seed), (0, 3, 7));
    assert!(out.join("00000002.img.png").is_file());
    assert!(out.join("00000000.meta.json").is_file());
}

#[test]
fn gen_into_unwritable_location_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("sub");
    let o = segsynth(&["gen", "--config", &cfg, "--count", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn invalid_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let good = small_config(dir.path());
    let o = segsynth(&["validate-config", &good]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("ok "));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"module_mix": 1.5}"#).unwrap();
    let o = segsynth(&["validate-config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("module_mix"));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(code(&segsynth(&["validate-config", unknown.to_str().unwrap()])), 2);
}

#[test]
fn preview_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    for p in [&a, &b] {
        let o = segsynth(&["preview", "--config", &cfg, "--count", "5", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let img = image::open(&a).unwrap().to_rgb8();
    // 5 tiles on a 3x2 grid of 96x80 tiles with 2 px gaps.
    assert_eq!(img.dimensions(), (3 * 98 + 2, 2 * 82 + 2));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn prompts_on_a_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("disk.png");
    let inside = disk(32.0, 32.0, 10.0);
    write_mask(&mask, 64, 64, disk(32.0, 32.0, 10.0));
    let o = segsynth(&["prompts", "--mask", mask.to_str().unwrap(), "--npos", "3", "--nneg", "2", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    for (i, v) in lines.iter().enumerate() {
        let (x, y) = (v["x"].as_u64().unwrap() as u32, v["y"].as_u64().unwrap() as u32);
        if i < 3 {
            assert_eq!(v["role"], "positive");
            assert!(inside(x, y));
        } else {
            assert_eq!(v["role"], "negative");
            assert!(!inside(x, y));
        }
    }
    // First positive is the centroid pixel.
    assert_eq!((lines[0]["x"].as_i64(), lines[0]["y"].as_i64()), (Some(32), Some(32)));
    let again = segsynth(&["prompts", "--mask", mask.to_str().unwrap(), "--npos", "3", "--nneg", "2", "--seed", "5"]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn prompts_on_an_empty_mask_fail() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("empty.png");
    write_mask(&mask, 16, 16, |_, _| false);
    let o = segsynth(&["prompts", "--mask", mask.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

fn eval_dirs(root: &Path, names: &[&str]) -> [std::path::PathBuf; 3] {
    let dirs = ["gt", "same", "flip"].map(|d| root.join(d));
    for d in &dirs {
        std::fs::create_dir(d).unwrap();
    }
    for (i, n) in names.iter().enumerate() {
        let r = 6.0 + 2.0 * i as f64;
        write_mask(&dirs[0].join(n), 40, 40, disk(20.0, 20.0, r));
        write_mask(&dirs[1].join(n), 40, 40, disk(20.0, 20.0, r));
        let d = disk(20.0, 20.0, r);
        write_mask(&dirs[2].join(n), 40, 40, move |x, y| !d(x, y));
    }
    dirs
}

#[test]
fn eval_identity_and_complement() {
    let dir = tempfile::tempdir().unwrap();
    let [gt, same, flip] = eval_dirs(dir.path(), &["a.png", "b.png", "c.png"]);
    let o = segsynth(&["eval", "--pred", same.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("a.png\t1.000000"));
    assert!(out.contains("mean dice: 1.000000 ± 0.000000 (n = 3)"));

    let o = segsynth(&["eval", "--pred", flip.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mean dice: 0.000000 ± 0.000000 (n = 3)"));

    let o = segsynth(&["eval", "--pred", same.to_str().unwrap(), "--gt", gt.to_str().unwrap(), "--paired-against", same.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("t = 0.000000, df = 2, p = 1.000000 (p >= 0.05)"), "{out}");
}

#[test]
fn eval_paired_reports_band() {
    let dir = tempfile::tempdir().unwrap();
    let [gt, same, _] = eval_dirs(dir.path(), &["a.png", "b.png", "c.png", "d.png"]);
    let shrunk = dir.path().join("shrunk");
    std::fs::create_dir(&shrunk).unwrap();
    for (i, n) in ["a.png", "b.png", "c.png", "d.png"].iter().enumerate() {
        let r = 6.0 + 2.0 * i as f64;
        write_mask(&shrunk.join(n), 40, 40, disk(20.0, 20.0, r - 1.0 - 0.3 * i as f64));
    }
    let o = segsynth(&["eval", "--pred", same.to_str().unwrap(), "--gt", gt.to_str().unwrap(), "--paired-against", shrunk.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("df = 3"), "{out}");
    assert!(out.contains("(p < 0.001)") || out.contains("(0.001 <= p < 0.05)") || out.contains("(p >= 0.05)"), "{out}");
}

#[test]
fn eval_lists_orphans() {
    let dir = tempfile::tempdir().unwrap();
    let [gt, same, _] = eval_dirs(dir.path(), &["a.png", "b.png"]);
    std::fs::remove_file(same.join("b.png")).unwrap();
    write_mask(&same.join("z.png"), 40, 40, |_, _| true);
    let o = segsynth(&["eval", "--pred", same.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("b.png") && err.contains("z.png"), "{err}");
}

#[test]
fn bench_json_parses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = segsynth(&["bench", "--config", &cfg, "--count", "2", "--threads", "2", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 2);
    assert_eq!(v["single_thread"]["threads"], 1);
    assert!(v["multi_thread"]["samples_per_sec"].as_f64().unwrap() > 0.0);
    assert!(!v["stages"].as_array().unwrap().is_empty());
}

#[test]
fn serve_streams_generated_samples() {
    use std::io::{BufRead, BufReader};
    use std::process::Stdio;

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_segsynth"))
        .args(["serve", "--config", &cfg_path, "--seed", "11", "--bind", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("address line").to_string();

    let mut cfg = segsynth::pipeline::load_config(&cfg_path).unwrap();
    cfg.master_seed = 11;
    let result = (|| -> segsynth::Result<()> {
        let mut client = segsynth::stream::StreamClient::connect(addr.as_str())?;
        assert_eq!(client.config_hash(), cfg.config_hash());
        let got = client.fetch(1, 2)?;
        for (i, p) in (1u64..).zip(&got) {
            let want = segsynth::generate_sample(&cfg, i)?;
            assert_eq!(p.header.sample_index, i);
            assert_eq!(p.image, want.image);
        }
        client.bye()
    })();
    child.kill().unwrap();
    child.wait().unwrap();
    result.unwrap();
}
