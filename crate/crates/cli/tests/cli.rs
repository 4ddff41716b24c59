use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn minosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minosc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn temporal_args(out: &Path) -> Vec<String> {
    [
        "simulate",
        "--t-end",
        "400",
        "--noise",
        "temporal",
        "--eps",
        "0.01",
        "--tau",
        "10",
        "--ensemble",
        "2",
        "--seed",
        "9",
        "--output-dir",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.display().to_string()])
    .collect()
}

fn run_ok(args: &[String]) {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = minosc(&refs);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn manifest_replays_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    run_ok(&temporal_args(&first));
    let manifest = first.join("manifest.json");
    assert!(manifest.exists());
    run_ok(&[
        "simulate".into(),
        "--config".into(),
        manifest.display().to_string(),
        "--output-dir".into(),
        second.display().to_string(),
    ]);
    let a = csvs(&first);
    assert!(!a.is_empty());
    assert_eq!(a, csvs(&second));
}

#[test]
fn runs_share_no_state_across_output_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["a", "b"].iter().map(|n| tmp.path().join(n)).collect();
    run_ok(&temporal_args(&dirs[0]));
    let mut unperturbed = vec![
        "simulate".to_string(),
        "--t-end".into(),
        "300".into(),
        "--output-dir".into(),
    ];
    unperturbed.push(tmp.path().join("between").display().to_string());
    run_ok(&unperturbed);
    run_ok(&temporal_args(&dirs[1]));
    assert_eq!(csvs(&dirs[0]), csvs(&dirs[1]));
}

#[test]
fn random_noise_without_seed_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x").display().to_string();
    let o = minosc(&["simulate", "--noise", "temporal", "--output-dir", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_params_file_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "sigma_dD = banana\n").unwrap();
    let out = tmp.path().join("x").display().to_string();
    let o = minosc(&["simulate", "--params", bad.to_str().unwrap(), "--output-dir", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = minosc(&["verify", "--quick", "--params", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_cell_scan() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("scan");
    let o = minosc(&[
        "scan",
        "--a-min",
        "0.00113",
        "--a-max",
        "0.00113",
        "--a-points",
        "1",
        "--b-min",
        "0.093",
        "--b-max",
        "0.093",
        "--b-points",
        "1",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("scan.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",1"));
    let contour = fs::read_to_string(out.join("contour_zero.csv")).unwrap();
    assert_eq!(contour.lines().count(), 1);
}

#[test]
fn absurd_scan_range_marks_cells_invalid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("scan");
    let o = minosc(&[
        "scan",
        "--a",
        "sigma_E",
        "--a-min",
        "1e-300",
        "--a-max",
        "1e300",
        "--a-points",
        "3",
        "--b",
        "sigma_de",
        "--b-min",
        "1e-300",
        "--b-max",
        "1e300",
        "--b-points",
        "2",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("scan.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn noise_gen_trace_replays_like_direct_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| tmp.path().join(n).display().to_string();
    let o = minosc(&[
        "noise-gen",
        "--kind",
        "temporal",
        "--seed",
        "9",
        "--t-end",
        "400",
        "--output-dir",
        &p("gen"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_dir(tmp.path().join("gen"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|f| f.extension().is_some_and(|e| e == "csv"))
        .unwrap();
    let (replay_dir, direct_dir) = (p("replay"), p("direct"));
    let common = ["simulate", "--t-end", "400", "--eps", "0.01"];
    let replay = [
        &common[..],
        &[
            "--noise",
            "replay",
            "--replay",
            trace.to_str().unwrap(),
            "--output-dir",
            &replay_dir,
        ],
    ]
    .concat();
    let direct = [
        &common[..],
        &["--noise", "temporal", "--seed", "9", "--output-dir", &direct_dir],
    ]
    .concat();
    assert!(minosc(&replay).status.success());
    assert!(minosc(&direct).status.success());
    let probe = |d: &str| fs::read(tmp.path().join(d).join("probe.csv")).unwrap();
    assert_eq!(probe("replay"), probe("direct"));
}
