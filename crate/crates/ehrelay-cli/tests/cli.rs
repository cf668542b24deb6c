//! End-to-end checks of the binary: the gen-profile -> solve -> verify
//! pipeline, CSV determinism, and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ehrelay"))
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ehrelay-cli-test-{}-{name}", std::process::id()));
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn generate_solve_verify_pipeline() {
    let profile = tmp_path("p.json");
    let solution = tmp_path("r.json");
    let profile_s = profile.to_str().unwrap();
    let solution_s = solution.to_str().unwrap();

    let out = run(&[
        "gen-profile",
        "--lambda-e", "1",
        "--energy-unit-mj", "1",
        "--horizon-ms", "100",
        "--seed", "7",
        "--out", profile_s,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&profile).unwrap();
    assert!(text.contains("\"epochs_s\"") && text.contains("\"amounts_j\""));

    let out = run(&[
        "rmax",
        "--profile", profile_s,
        "--horizon-ms", "100",
        "--peak-mw", "10",
        "--out", solution_s,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&solution).unwrap();
    assert!(text.contains("\"throughput_bits\""));

    // The solver's own output must verify cleanly.
    let out = run(&[
        "verify",
        "--policy", solution_s,
        "--profile", profile_s,
        "--horizon-ms", "100",
        "--peak-mw", "10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.contains("\"ok\": true"), "{report}");

    // Shrinking the relay limits must be flagged with exit code 2.
    let out = run(&[
        "verify",
        "--policy", solution_s,
        "--profile", profile_s,
        "--horizon-ms", "100",
        "--peak-mw", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("relay_peak"));

    let _ = fs::remove_file(&profile);
    let _ = fs::remove_file(&solution);
}

#[test]
fn tmin_subcommand_reports_completion_time() {
    let profile = tmp_path("tmin-p.json");
    fs::write(&profile, r#"{"epochs_s":[0.0],"amounts_j":[0.001]}"#).unwrap();
    let out = run(&[
        "tmin",
        "--profile", profile.to_str().unwrap(),
        "--data-kbits", "1000",
        "--peak-mw", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let t = parsed["completion_time_s"].as_f64().unwrap();
    assert!((t - 2.0).abs() < 1e-6, "completion {t}");
    let _ = fs::remove_file(&profile);
}

#[test]
fn dwf_subcommand_prints_both_formats() {
    let profile = tmp_path("dwf-p.json");
    fs::write(
        &profile,
        r#"{"epochs_s":[0.0,1.0],"amounts_j":[0.001,0.003]}"#,
    )
    .unwrap();
    let profile_s = profile.to_str().unwrap();
    let out = run(&["dwf", "--profile", profile_s, "--horizon-ms", "2000"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"single_hop_powers_w\""));

    let out = run(&[
        "dwf",
        "--profile", profile_s,
        "--horizon-ms", "2000",
        "--format", "csv",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("k,point_time_s,length_s,energy_j,power_w"));
    assert_eq!(text.lines().count(), 3, "two intervals expected:\n{text}");
    let _ = fs::remove_file(&profile);
}

#[test]
fn sweep_csv_is_deterministic() {
    let args = [
        "sweep",
        "--objective", "rmax",
        "--variable", "eh-rate",
        "--values-mw", "2,4",
        "--trials", "5",
        "--seed", "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "sweep output must be bitwise identical");
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("sweep_value,optimal,fixed_scheduling,fixed_power,upper_bound,trials_ok"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn exit_codes() {
    // Usage error: unknown flag.
    let out = run(&["rmax", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // Usage error: malformed profile JSON.
    let bad = tmp_path("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(&[
        "rmax",
        "--profile", bad.to_str().unwrap(),
        "--horizon-ms", "100",
        "--peak-mw", "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let _ = fs::remove_file(&bad);

    // Infeasible instance: payload beyond what the harvest can carry.
    let profile = tmp_path("tiny.json");
    fs::write(&profile, r#"{"epochs_s":[0.0],"amounts_j":[1e-9]}"#).unwrap();
    let out = run(&[
        "tmin",
        "--profile", profile.to_str().unwrap(),
        "--data-kbits", "1000000",
        "--peak-mw", "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let _ = fs::remove_file(&profile);

    // Help is not an error.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn baseline_subcommand_sandwich() {
    let profile = tmp_path("base-p.json");
    fs::write(
        &profile,
        r#"{"epochs_s":[0.0,0.04],"amounts_j":[0.001,0.003]}"#,
    )
    .unwrap();
    let profile_s = profile.to_str().unwrap();
    let common = ["--profile", profile_s, "--horizon-ms", "100", "--peak-mw", "10"];

    let value = |kind: &str| -> f64 {
        let mut args = vec!["baseline", "--kind", kind, "--objective", "rmax"];
        args.extend_from_slice(&common);
        let out = run(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let parsed: serde_json::Value =
            serde_json::from_slice(&out.stdout).expect("baseline emits json");
        parsed["value"].as_f64().unwrap()
    };
    let sched = value("fixed-scheduling");
    let power = value("fixed-power");
    let upper = value("upper-bound");

    let mut args = vec!["rmax"];
    args.extend_from_slice(&common);
    let out = run(&args);
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let optimal = parsed["throughput_bits"].as_f64().unwrap();

    assert!(upper >= optimal * (1.0 - 1e-9));
    assert!(optimal >= sched * (1.0 - 1e-9));
    assert!(optimal >= power * (1.0 - 1e-9));
    let _ = fs::remove_file(&profile);
}
