use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use divisio::channels::{collisional_pair, dephasing_hd, write_choi_file, Channel};
use divisio_cli::experiments::sample_seed;
use divisio_cli::{summarize, TimingRecord};
use tempfile::TempDir;

fn divisio(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_divisio"));
    cmd.args(args).env_remove("DIVISIO_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    divisio(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn save(dir: &TempDir, name: &str, c: &Channel) -> PathBuf {
    let path = dir.path().join(name);
    write_choi_file(c, &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn query_on_identical_maps_is_divisible() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(&dir, "a.json", &dephasing_hd(2, 0.4).unwrap());
    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&a)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["kind"], "CP");
    assert!(report["distance"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn query_on_collisional_pair_is_not_divisible() {
    let dir = tempfile::tempdir().unwrap();
    let (first, target) = collisional_pair(0.75).unwrap();
    let a = save(&dir, "first.json", &first);
    let b = save(&dir, "target.json", &target);
    let report_path = dir.path().join("report.json");
    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&b), "--out", s(&report_path)]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!((report["distance"].as_f64().unwrap() - 0.5625).abs() < 1e-6);
    assert!(report["witness"]["objective"].as_f64().unwrap() > 0.5);

    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&b), "--mode", "p"]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["kind"], "P_qubit");

    // A loose enough tolerance accepts the pair.
    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&b), "--tol", "0.6"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn malformed_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(&dir, "a.json", &dephasing_hd(2, 0.4).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&cut)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cut.json"));

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["query", "--choi-a", s(&a), "--choi-b", s(&missing)])), 2);
}

#[test]
fn non_cptp_input_needs_the_override() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(&dir, "a.json", &dephasing_hd(2, 0.4).unwrap());
    let b = save(&dir, "b.json", &dephasing_hd(2, 0.4).unwrap().scale(1.5));
    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&b)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-noncptp"));
    let out = run(&["query", "--choi-a", s(&a), "--choi-b", s(&b), "--allow-noncptp"]);
    assert!(matches!(code(&out), 0 | 1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn p_mode_rejects_non_qubit_maps() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(&dir, "a.json", &dephasing_hd(3, 0.4).unwrap());
    assert_eq!(code(&run(&["query", "--choi-a", s(&a), "--choi-b", s(&a), "--mode", "p"])), 2);
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

#[test]
fn experiment_tables_have_fixed_headers() {
    let out = run(&["collisional", "--steps", "3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text), "p,cp_distance,p_distance");
    assert_eq!(text.lines().count(), 4);

    let out = run(&["dephasing", "--steps", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(header(&String::from_utf8(out.stdout).unwrap()), "t1,t2,distance");

    let out = run(&["dephasing-hd", "--dim", "3", "--steps", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text), "p,q,distance,identity_flag");
    assert_eq!(text.lines().count(), 5);

    let out = run(&["unitary-mix", "--dim", "2", "--n", "1,2", "--samples", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text), "d,n,sample,seed,solve_seconds,distance");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn json_output_carries_metadata() {
    let out = run(&["collisional", "--steps", "2", "--format", "json", "--seed", "9"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["meta"]["experiment"], "collisional");
    assert_eq!(doc["meta"]["seed"], 9);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn file_output_writes_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mix.csv");
    let out = run(&["unitary-mix", "--dim", "2,3", "--n", "1", "--samples", "2", "--seed", "5", "--out", s(&path)]);
    assert_eq!(code(&out), 0);
    assert!(path.exists());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mix.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "unitary_mix");
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["tol"], 1e-6);
    assert!(meta["summary"]["exponent"].is_number());
}

fn strip_timing(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let mut f: Vec<String> = l.split(',').map(str::to_owned).collect();
            f.remove(4);
            f
        })
        .collect()
}

#[test]
fn seeded_runs_are_reproducible() {
    let args = ["unitary-mix", "--dim", "2", "--n", "2,3", "--samples", "3", "--seed", "11"];
    let a = String::from_utf8(run(&args).stdout).unwrap();
    let b = String::from_utf8(run(&args).stdout).unwrap();
    assert_eq!(strip_timing(&a), strip_timing(&b));
    let first = &strip_timing(&a)[0];
    assert_eq!(first[3], sample_seed(11, 2, 2, 0).to_string());

    let c = run(&["collisional", "--steps", "4"]).stdout;
    let d = run(&["collisional", "--steps", "4"]).stdout;
    assert_eq!(c, d);
}

#[test]
fn summary_statistics_match_a_direct_computation() {
    let times = [0.5, 0.7, 0.9, 1.3];
    let records: Vec<TimingRecord> = times
        .iter()
        .enumerate()
        .flat_map(|(i, &t)| {
            [2usize, 4].map(|d| TimingRecord { d, n: 1, sample: i, seed: 0, solve_seconds: t * d as f64 * d as f64, distance: 0.0 })
        })
        .collect();
    let summary = summarize(&records);
    assert_eq!(summary.groups.len(), 2);
    let g = &summary.groups[0];
    assert_eq!((g.d, g.n, g.count), (2, 1, 4));
    let mean = 4.0 * times.iter().sum::<f64>() / 4.0;
    let var = times.iter().map(|t| (4.0 * t - mean).powi(2)).sum::<f64>() / 3.0;
    assert!((g.mean_seconds - mean).abs() < 1e-12);
    assert!((g.stddev_seconds - var.sqrt()).abs() < 1e-12);
    // Times scale as d², so the slope is exactly two.
    assert!((summary.exponent.unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn thread_cap_is_validated() {
    let out = divisio(&["collisional", "--steps", "2"]).env("DIVISIO_THREADS", "1").output().unwrap();
    assert_eq!(code(&out), 0);
    for bad in ["0", "many", "-3"] {
        let out = divisio(&["collisional", "--steps", "2"]).env("DIVISIO_THREADS", bad).output().unwrap();
        assert_eq!(code(&out), 2, "DIVISIO_THREADS={bad}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&run(&["collisional", "--format", "xml"])), 2);
    assert_eq!(code(&run(&["query", "--choi-a", "x.json"])), 2);
    assert_eq!(code(&run(&["collisional", "--steps", "0"])), 2);
}
