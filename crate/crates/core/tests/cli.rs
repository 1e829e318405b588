use std::fs;
use std::path::Path;
use std::process::Command;

use csonbr::harness::read_reports;
use csonbr::peak::{generate_peak, PeakConfig};

fn csonbr(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_csonbr"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "csonbr {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_peak_csv(path: &Path) {
    let ds = generate_peak(&PeakConfig {
        samples: 30,
        seed: 2,
        ..Default::default()
    });
    fs::write(path, ds.to_csv_string(true)).unwrap();
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("tiny.csv");
    write_peak_csv(&data);
    let args = |out: &str| {
        vec![
            "run".to_string(),
            "--data".into(),
            data.to_string_lossy().into_owned(),
            "--phi".into(),
            "0,0.5".into(),
            "--n".into(),
            "2,3".into(),
            "--swarm".into(),
            "6".into(),
            "--iters".into(),
            "4".into(),
            "--repeats".into(),
            "2".into(),
            "--seed".into(),
            "11".into(),
            "--no-timing".into(),
            "--out".into(),
            tmp.path().join(out).to_string_lossy().into_owned(),
        ]
    };
    let a: Vec<String> = args("a");
    let b: Vec<String> = args("b");
    csonbr(&a.iter().map(String::as_str).collect::<Vec<_>>());
    csonbr(&b.iter().map(String::as_str).collect::<Vec<_>>());
    let (da, db) = (tmp.path().join("a"), tmp.path().join("b"));
    let files = sorted_files(&da);
    assert_eq!(files, sorted_files(&db));
    assert!(files.contains(&"tiny.json".to_string()));
    assert_eq!(files.len(), 2 + 4);
    for f in &files {
        assert_eq!(fs::read(da.join(f)).unwrap(), fs::read(db.join(f)).unwrap(), "{f} differs");
    }
    let reports = read_reports(&da.join("tiny.json")).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r.repeats == 2 && r.wall_seconds.is_empty()));
    let table = fs::read_to_string(da.join("tiny.txt")).unwrap();
    assert!(table.contains(" ± "));
}

#[test]
fn baselines_and_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("tiny.csv");
    write_peak_csv(&data);
    for algo in ["nbr", "lr"] {
        let out = tmp.path().join(algo);
        csonbr(&[
            "run",
            "--data",
            data.to_str().unwrap(),
            "--algo",
            algo,
            "--out",
            out.to_str().unwrap(),
        ]);
        let r = read_reports(&out.join("tiny.json")).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].algo, algo);
        assert_eq!(r[0].wall_seconds.len(), 1);
    }
}

#[test]
fn spso_half_swarm_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("tiny.csv");
    write_peak_csv(&data);
    let out = tmp.path().join("o");
    csonbr(&[
        "run",
        "--data",
        data.to_str().unwrap(),
        "--spso-half-swarm",
        "--iters",
        "2",
        "--repeats",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let r = read_reports(&out.join("tiny.json")).unwrap();
    assert_eq!(r[0].algo, "spso-nbr");
    assert_eq!((r[0].s, r[0].t_max, r[0].phi), (50, 2, None));
}

#[test]
fn bad_arguments_fail() {
    let out = Command::new(env!("CARGO_BIN_EXE_csonbr"))
        .args(["run", "--data", "/nonexistent/x.csv", "--phi", ""])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn peak_writes_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("peak");
    let stdout = csonbr(&[
        "peak",
        "--samples",
        "30",
        "--test-samples",
        "20",
        "--swarm",
        "4",
        "--iters",
        "2",
        "--n",
        "3",
        "--repeats",
        "2",
        "--out",
        out.to_str().unwrap(),
    ])
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("NBR"));
    for name in ["truth", "lr", "nbr", "cso_nbr"] {
        let text = fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,z");
        assert_eq!(lines.len(), 1 + 121 * 121);
        assert_eq!(lines[1].split(',').count(), 3);
    }
    let truth = fs::read_to_string(out.join("truth.csv")).unwrap();
    assert!(truth.lines().any(|l| l == "0,0,25"));
    let best = fs::read_to_string(out.join("best_surrogate.csv")).unwrap();
    assert_eq!(best.lines().count(), 1 + 3);
}
