//! Process-level checks of the binary: inputs, exit codes and output files.

use std::path::Path;
use std::process::{Command, Output};

use crt_cfo::io::write_iq_file;
use crt_cfo::{apply_channel, build_preamble, ChannelParams, RunConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crt-cfo"));
    c.env_remove("CFO_CRT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_tail(text: &str) -> serde_json::Value {
    let start = text.find("\n{").map_or(0, |i| i + 1);
    serde_json::from_str(&text[start..]).unwrap()
}

const SWEEP: &str = r#"{
  "n_fft": 64,
  "gammas": [3, 5, 7],
  "snr_grid_db": [4, 8, 12],
  "trials_per_point": 200,
  "ier_snr_grid_db": [2, 6]
}"#;

#[test]
fn sweep_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");

    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        a.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    for f in ["mse_sweep.csv", "ier_sweep.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let mse = std::fs::read_to_string(a.join("mse_sweep.csv")).unwrap();
    assert_eq!(mse.lines().count(), 1 + 4 * 3);
    assert_eq!(
        mse.lines().next().unwrap(),
        "method,snr_db,mse,ier,trials,delta_mse_theory"
    );
    let ier = std::fs::read_to_string(a.join("ier_sweep.csv")).unwrap();
    assert_eq!(ier.lines().count(), 1 + 2);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 1);
    assert_eq!(manifest["config"]["gammas"], serde_json::json!([3, 5, 7]));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("mse_sweep.json")).unwrap()).unwrap();
    assert_eq!(json["points"].as_array().unwrap().len(), 12);
}

#[test]
fn seed_flag_env_and_trial_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SWEEP);
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let o = bin()
        .args([
            "sweep",
            "--config",
            &cfg,
            "--out",
            &out("env"),
            "--trials",
            "20",
        ])
        .env("CFO_CRT_SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        &out("flag"),
        "--trials",
        "20",
        "--seed",
        "77",
    ]);
    assert!(o.status.success());
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        &out("other"),
        "--trials",
        "20",
        "--seed",
        "78",
    ]);
    assert!(o.status.success());

    let read = |d: &str| std::fs::read_to_string(Path::new(&out(d)).join("mse_sweep.csv")).unwrap();
    assert_eq!(read("env"), read("flag"));
    assert_ne!(read("env"), read("other"));
    assert_eq!(
        read("env").lines().nth(1).unwrap().split(',').nth(4),
        Some("20")
    );
    let manifest = std::fs::read_to_string(Path::new(&out("env")).join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 77"));
    assert!(manifest.contains("\"trials_per_point\": 20"));
}

#[test]
fn noiseless_sweep_reports_inf_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SWEEP);
    let out = dir.path().join("n");
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--noiseless",
        "--trials",
        "30",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("mse_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("inf")));
}

#[test]
fn non_coprime_ranges_exit_2_naming_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"n_fft": 64, "gammas": [3, 6, 7], "snr_grid_db": [10], "trials_per_point": 5}"#,
    );
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("3 and 6"), "{msg}");
}

#[test]
fn unknown_keys_and_missing_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"gammas": [3, 5, 7], "trials": 5}"#,
    );
    let o = run(&["threshold", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trials"));
    let o = run(&["threshold", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threshold_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "th.json",
        r#"{"gammas": [3, 5, 7], "deltas": [1e-6, 1e-1, 1e-3]}"#,
    );
    let o = run(&["threshold", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("eta_th_dB"));
    let report = json_tail(&text);
    let rows = report["thresholds"].as_array().unwrap();
    let eta: Vec<f64> = rows
        .iter()
        .map(|r| r["eta_th_db"].as_f64().unwrap())
        .collect();
    assert!((eta[0] - 9.3).abs() <= 0.05);
    assert!(eta[1].abs() < 0.5);
    assert!((eta[2] - 5.8).abs() <= 0.1);
    for key in ["delta", "x_delta", "eta_th_linear", "eta_th_db"] {
        assert!(rows[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn configure_ranks_and_reports_queries() {
    let o = run(&[
        "configure",
        "--n-fft",
        "512",
        "--k",
        "4",
        "--gammas",
        "2,5,7,13",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("[3, 5, 7, 11]"));
    let query = text.lines().find(|l| l.contains("[2, 5, 7, 13]")).unwrap();
    assert!(query.contains("7.69"), "{query}");

    let o = run(&[
        "configure",
        "--n-fft",
        "512",
        "--k",
        "4",
        "--top",
        "3",
        "--json",
    ]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rows[0]["threshold"]["eta_th_db"].is_f64());
    assert!(rows[0]["model"]["delta_mse"].is_f64());

    let o = run(&["configure", "--n-fft", "8", "--k", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no feasible configuration"));
}

#[test]
fn estimate_round_trip_truncation_and_silence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = r#"{"n_fft": 64, "gammas": [3, 5, 7], "methods": ["ccmle", "classic_crt"]}"#;
    let cfg_path = write(dir.path(), "est.json", cfg_text);
    let spec = RunConfig::from_json(cfg_text).unwrap().waveform().unwrap();
    let wave = build_preamble(&spec).unwrap();
    let rx = apply_channel(&wave, &ChannelParams::noiseless(10.1), &spec, 0);

    let iq = dir.path().join("cap.iq");
    write_iq_file(&iq, rx.samples()).unwrap();
    let o = run(&[
        "estimate",
        "--iq",
        iq.to_str().unwrap(),
        "--config",
        &cfg_path,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let first = &report["estimates"][0];
    assert_eq!(first["method"], "ccmle");
    assert!((first["eps_n"].as_f64().unwrap() - 10.1).abs() < 1e-9);
    assert_eq!(first["per_interval"].as_array().unwrap().len(), 3);
    assert!(first["per_interval"][0]["variance"].is_f64());
    assert!(first["eps_m"].is_f64());

    let short = dir.path().join("short.iq");
    write_iq_file(&short, &rx.samples()[..100]).unwrap();
    let o = run(&[
        "estimate",
        "--iq",
        short.to_str().unwrap(),
        "--config",
        &cfg_path,
    ]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("142") && msg.contains("100"), "{msg}");

    let zero = dir.path().join("zero.iq");
    std::fs::write(&zero, vec![0u8; 142 * 16]).unwrap();
    let o = run(&[
        "estimate",
        "--iq",
        zero.to_str().unwrap(),
        "--config",
        &cfg_path,
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("undefined phase"));
}
