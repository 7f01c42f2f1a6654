use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_convexbp");
// small enough to keep each run well under a second
const COARSE: &[&str] = &["--nb", "32", "--nr", "128", "--nt", "256", "--nang", "128", "--grid", "24"];

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("disc.txt"), "# unit disc\ndisc 0 0 1\n").unwrap();
    fs::write(dir.path().join("ellipse.txt"), "ellipse 0 0 1 0.8\n").unwrap();
    dir
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = setup();
    assert_eq!(code(&run(dir.path(), &["simulate"])), 2);
    assert_eq!(code(&run(dir.path(), &["simulate", "--domain", "disc.txt", "--nb", "4"])), 2);
    fs::write(dir.path().join("bad.txt"), "circle 0 0 1\n").unwrap();
    let out = run(dir.path(), &["simulate", "--domain", "bad.txt"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt:1:"));
    // phantom poking out of the domain
    fs::write(dir.path().join("p.txt"), "bump 0.9 0 0.3 1\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--domain", "disc.txt", "--phantom", "p.txt"])), 2);
}

#[test]
fn missing_files_exit_3() {
    let dir = setup();
    assert_eq!(code(&run(dir.path(), &["simulate", "--domain", "nope.txt"])), 3);
    let mut args = vec!["reconstruct", "--domain", "disc.txt", "--means", "none.bser", "--wave", "none.bser"];
    args.extend_from_slice(COARSE);
    assert_eq!(code(&run(dir.path(), &args)), 3);
}

#[test]
fn tolerance_breach_exits_1() {
    let dir = setup();
    let mut args = vec!["roundtrip", "--domain", "ellipse.txt", "--max-rel-l2", "1e-12"];
    args.extend_from_slice(COARSE);
    let out = run(dir.path(), &args);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/metrics.json")).unwrap()).unwrap();
    assert!(m["metrics"]["rel_l2"].as_f64().unwrap() > 1e-12);
}

#[test]
fn zero_phantom_gives_zero_data_and_image() {
    let dir = setup();
    fs::write(dir.path().join("empty.txt"), "# nothing here\n").unwrap();
    let mut args = vec!["simulate", "--domain", "ellipse.txt", "--phantom", "empty.txt"];
    args.extend_from_slice(COARSE);
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let out = dir.path().join("out");
    for f in ["means.bser", "wave.bser"] {
        let (_, t) = convexbp::io::read_bser(&out.join(f)).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0), "{f}");
    }
    args[0] = "reconstruct";
    for formula in ["wave-a", "wave-b", "means-a", "means-b"] {
        let mut a = args.clone();
        a.extend(["--formula", formula]);
        let o = run(dir.path(), &a);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let img = convexbp::io::read_grid2(&out.join("recon.grid2")).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0), "{formula}");
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = setup();
    let mut hashes = Vec::new();
    for threads in ["1", "2"] {
        let out = format!("t{threads}");
        let mut args = vec!["roundtrip", "--domain", "ellipse.txt", "--threads", threads, "--out", &out];
        args.extend_from_slice(COARSE);
        assert_eq!(code(&run(dir.path(), &args)), 0);
        let d = dir.path().join(&out);
        hashes.push(["means.bser", "wave.bser", "recon.grid2"].map(|f| sha(&d.join(f))));
    }
    assert_eq!(hashes[0], hashes[1]);
}

// Frozen from the first run of the default configuration on the unit disc.
// A change here means the simulated data changed.
#[test]
fn default_disc_simulation_matches_golden_hashes() {
    let dir = setup();
    assert_eq!(code(&run(dir.path(), &["simulate", "--domain", "disc.txt"])), 0);
    let out = dir.path().join("out");
    assert_eq!(sha(&out.join("means.bser")), "6af3193f805deafe7cfb95fc748dfcb0cb6852dec1c52604d431cab04b424631");
    assert_eq!(sha(&out.join("wave.bser")), "ec7bd4a5bde6b8a9ad1e87b9c087bf773408a6d89bb1739216a38615006e3867");
    let log = fs::read_to_string(out.join("run.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(rec["command"], "simulate");
    assert_eq!(rec["config"]["seed"], 42);
}

#[test]
fn kernel_command_writes_fields_and_profiles() {
    let dir = setup();
    fs::write(dir.path().join("sq.txt"), "superellipse 0 0 1 0.8 4\n").unwrap();
    let args = [
        "kernel", "--domain", "sq.txt", "--nb", "64", "--grid", "24", "--n-dirs", "128", "--dump-profiles", "prof",
        "--dump-stride", "32",
    ];
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["kernel_field.grid2", "residual.grid2", "gap.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let n = fs::read_dir(dir.path().join("prof")).unwrap().count();
    assert_eq!(n, 4);
    // the disc has no smoothing term at all
    let o = run(dir.path(), &["kernel", "--domain", "disc.txt", "--nb", "64", "--grid", "24", "--n-dirs", "128"]);
    assert_eq!(code(&o), 0);
    let gap: serde_json::Value = serde_json::from_slice(&fs::read(out.join("gap.json")).unwrap()).unwrap();
    assert_eq!(gap["kernel_rel_l2"].as_f64(), Some(0.0), "{gap}");
}
