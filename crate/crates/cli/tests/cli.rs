use std::path::Path;
use std::process::{Command, Output};

fn tlbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlbm")).args(args).output().expect("spawn tlbm")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn simulate_writes_metrics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = tlbm(&[
        "simulate",
        "--lx",
        "32",
        "--ly",
        "32",
        "--steps",
        "4",
        "--preset",
        "uniform",
        "--tiling",
        "2d:2x2",
        "--snapshot-every",
        "2",
        "--snapshot-format",
        "pgm,csv",
        "--tdp-watts",
        "100",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    for step in [0, 2, 4] {
        let pgm = std::fs::read(out.join(format!("temperature_{step:08}.pgm"))).unwrap();
        assert!(pgm.starts_with(b"P"));
        assert!(out.join(format!("fields_{step:08}.csv")).exists());
    }
    let m = rows(&out.join("metrics.csv"));
    assert_eq!(m.len(), 4 * 4);
    let s = rows(&out.join("summary.csv"));
    assert_eq!(s[0][0], "1024");
    assert_eq!(s[0][1], "4");
    assert!(s[0][6].parse::<f64>().unwrap() > 0.0);
    assert!(text(&o.stderr).contains("MLUPS"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[simulate]\nlx = 24\nly = 16\nsteps = 50\npreset = \"random\"\nboundary = \"periodic\"\noutput_dir = \"out\"\nsnapshot_format = []\n",
    )
    .unwrap();
    let o = tlbm(&["-c", cfg.to_str().unwrap(), "simulate", "--steps", "2", "--gy", "-2e-4"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let s = rows(&dir.path().join("out/summary.csv"));
    assert_eq!(s[0][2], "2");
}

#[test]
fn dry_run_of_a_large_lattice() {
    let o = tlbm(&["simulate", "--lx", "1024", "--ly", "8192", "--tiling", "2d:2x4", "--dry-run"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("8 ranks, tiles 512x2048"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[simulate]\nlx = 16\nly = 16\nwarp = 9\n").unwrap();
    assert_eq!(tlbm(&["-c", cfg.to_str().unwrap(), "simulate"]).status.code(), Some(2));
    assert_eq!(tlbm(&["simulate", "--lx", "16"]).status.code(), Some(2));
    assert_eq!(tlbm(&["simulate", "--lx", "16", "--ly", "16", "--tau", "0.3"]).status.code(), Some(2));
    assert_eq!(tlbm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tlbm(&["plan", "--lx", "64", "--ly", "64", "--beta", "1e-8"]).status.code(), Some(2));
}

#[test]
fn plan_writes_four_model_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = tlbm(&[
        "plan",
        "--lx",
        "1940",
        "--ly",
        "1940",
        "--beta",
        "5e-8",
        "--np-max",
        "32",
        "--bx",
        "1e9",
        "--by",
        "2e9",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(
        header(&dir.path().join("model.csv")),
        ["Np", "1d [1]", "1d_overlap [1]", "2d [1]", "2d_overlap [1]"]
    );
    let model = rows(&dir.path().join("model.csv"));
    assert_eq!(model.len(), 32);
    assert!(model.iter().all(|r| r.iter().all(|v| !v.is_empty())));
    let curve = rows(&dir.path().join("curve.csv"));
    let divisors: usize = (1..=32usize).map(|n| (1..=n).filter(|d| n % d == 0).count()).sum();
    assert_eq!(curve.len(), divisors);
}

#[test]
fn zero_halo_size_gives_flat_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = tlbm(&[
        "plan",
        "--lx",
        "1940",
        "--ly",
        "1940",
        "--beta",
        "5e-8",
        "--s",
        "0",
        "--np",
        "1,2,4,8,16",
        "--bx",
        "1e9",
        "--by",
        "2e9",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    for r in rows(&dir.path().join("curve.csv")) {
        let v: f64 = r[6].parse().unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn plan_reads_a_bandwidth_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("bw.csv");
    tlbm_planner::BandwidthTables {
        contiguous: tlbm_planner::BandwidthTable::new(vec![(1e3, 2e9), (1e6, 5e9)]).unwrap(),
        non_contiguous: tlbm_planner::BandwidthTable::new(vec![(1e3, 1e9), (1e6, 1.5e9)]).unwrap(),
    }
    .save(&table)
    .unwrap();
    let cfg = dir.path().join("plan.toml");
    std::fs::write(&cfg, "[plan]\nlx = 3600\nly = 3600\nbeta = 5e-8\nnp_max = 32\nbandwidth_table = \"bw.csv\"\noutput_dir = \"out\"\n").unwrap();
    let o = tlbm(&["-c", cfg.to_str().unwrap(), "plan"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let curve = rows(&dir.path().join("out/curve.csv"));
    let nps: std::collections::BTreeSet<usize> = curve.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(nps, (1..=32).collect());
}

#[test]
fn unknown_suite_exits_2() {
    let o = tlbm(&["validate", "energy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("conservation"));
}

#[test]
fn conservation_suite_passes() {
    let o = tlbm(&["validate", "conservation"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let lines: Vec<serde_json::Value> =
        text(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[..3].iter().all(|l| l["passed"] == true && l["suite"] == "conservation"));
    assert_eq!(lines[3]["failed"], 0);
}

#[test]
fn bench_misalignment_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = tlbm(&[
        "bench",
        "misalignment",
        "--reps",
        "5",
        "--warmup",
        "1",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let h = header(&dir.path().join("misalignment.csv"));
    assert_eq!(h[2], "offset [B]");
    assert_eq!(h[7], "bandwidth [B/s]");
    assert_eq!(tlbm(&["bench", "--reps", "2", "misalignment"]).status.code(), Some(2));
}
