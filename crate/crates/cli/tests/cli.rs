//! CLI surface behavior: spec validation diagnostics, exit codes, output
//! file wiring.

use std::path::PathBuf;
use std::process::Command;

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn gbc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gbc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_spec(name: &str, body: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn minimal_spec_parses_and_rates_run() {
    let spec = write_spec(
        "ok.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[1.0]]}"#,
    );
    let out = tmp("rates_ok");
    let r = gbc(&[
        "rates",
        "--spec",
        spec.to_str().unwrap(),
        "--lambda",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("quantity,value"));
    assert!(csv.contains("mi_y1,"));
    assert!(csv.contains("s_lambda,"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json["manifest"]["unit"], "nats");
    assert!(json["manifest"]["spec_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn singular_gain_rejected_with_exit_2() {
    let spec = write_spec(
        "bad_gain.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.0]], "k": [[1.0]]}"#,
    );
    let out = tmp("never");
    let r = gbc(&[
        "rates",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("gain not invertible"), "stderr: {err}");
}

#[test]
fn indefinite_k_rejected_with_exit_2() {
    let spec = write_spec(
        "bad_k.json",
        r#"{"version": 1, "t": 2, "g1": [[1.0,0.0],[0.0,1.0]], "g2": [[0.5,0.0],[0.0,0.5]], "k": [[0.1,0.5],[0.5,0.1]]}"#,
    );
    let r = gbc(&["rates", "--spec", spec.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("k not PSD"), "stderr: {err}");
}

#[test]
fn malformed_syntax_and_missing_version_rejected() {
    let garbled = write_spec("garbled.json", "{not json");
    let r = gbc(&["rates", "--spec", garbled.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));

    let unversioned = write_spec(
        "nover.json",
        r#"{"t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[1.0]]}"#,
    );
    let r = gbc(&["rates", "--spec", unversioned.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    let r = gbc(&["no-such-command"]);
    assert_eq!(r.status.code(), Some(1));
    let r = gbc(&["region-private", "--lambdas", "2"]); // missing --spec and --seed
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn spec_hash_ignores_formatting_but_tracks_values() {
    let a = write_spec(
        "hash_a.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[1.0]]}"#,
    );
    let b = write_spec(
        "hash_b.json",
        "{\n  \"version\": 1,\n  \"t\": 1,\n  \"g1\": [[1.0]],\n  \"g2\": [[0.5]],\n  \"k\": [[1.0]]\n}",
    );
    let c = write_spec(
        "hash_c.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[0.9]]}"#,
    );
    let hash_of = |spec: &PathBuf, out: &str| -> String {
        let out = tmp(out);
        let r = gbc(&[
            "rates",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.status.code(), Some(0));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
                .unwrap();
        json["manifest"]["spec_hash"].as_str().unwrap().to_string()
    };
    let ha = hash_of(&a, "hash_out_a");
    let hb = hash_of(&b, "hash_out_b");
    let hc = hash_of(&c, "hash_out_c");
    assert_eq!(ha, hb, "reformatting must not change the hash");
    assert_ne!(ha, hc, "value changes must change the hash");
}

#[test]
fn region_private_csv_schema_and_plot() {
    let spec = write_spec(
        "schema.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[1.0]]}"#,
    );
    let out = tmp("schema_out");
    let r = gbc(&[
        "region-private",
        "--spec",
        spec.to_str().unwrap(),
        "--lambdas",
        "1.5,2,3",
        "--seed",
        "7",
        "--plot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda,R1,R2,value,converged");
    assert_eq!(lines.count(), 3);
    let plot = std::fs::read_to_string(out.with_extension("gnuplot")).unwrap();
    assert!(plot.contains("plot"));
    assert!(plot.contains(out.with_extension("csv").to_str().unwrap()));
}

#[test]
fn bits_flag_rescales_rates() {
    let spec = write_spec(
        "bits.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[1.0]]}"#,
    );
    let nats_out = tmp("bits_nats");
    let bits_out = tmp("bits_bits");
    for (flag, out) in [(false, &nats_out), (true, &bits_out)] {
        let mut args = vec![
            "rates",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        if flag {
            args.push("--bits");
        }
        assert_eq!(gbc(&args).status.code(), Some(0));
    }
    let parse_mi = |path: &PathBuf| -> f64 {
        std::fs::read_to_string(path.with_extension("csv"))
            .unwrap()
            .lines()
            .find(|l| l.starts_with("mi_y1,"))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let nats = parse_mi(&nats_out);
    let bits = parse_mi(&bits_out);
    assert!((nats / std::f64::consts::LN_2 - bits).abs() < 1e-12);
}

#[test]
fn lab_doubling_overflow_is_reported() {
    // rademacher start has variance 1 regardless of --variance; widen it by
    // asking for a start that outgrows the grid instead
    let out = tmp("overflow");
    let r = gbc(&[
        "lab",
        "doubling",
        "--start",
        "uniform",
        "--variance",
        "140",
        "--steps",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(4));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("widen the grid"), "stderr: {err}");
}

#[test]
fn verify_dpc_summary_residual_is_tiny() {
    let spec = write_spec(
        "dpc_spec.json",
        r#"{"version": 1, "t": 1, "g1": [[1.0]], "g2": [[0.5]], "k": [[1.0]]}"#,
    );
    let out = tmp("dpc_out");
    let r = gbc(&[
        "verify",
        "dpc",
        "--spec",
        spec.to_str().unwrap(),
        "--trials",
        "100",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    let max_residual = json["summary"]["max_residual"].as_f64().unwrap();
    assert!(max_residual <= 1e-9, "max residual {max_residual:e}");
}

#[test]
fn lab_doubling_final_tv_within_contract() {
    let out = tmp("doubling_out");
    let r = gbc(&[
        "lab",
        "doubling",
        "--start",
        "uniform",
        "--steps",
        "8",
        "--lambda",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "iter,s_lambda,tv,variance");
    let last = csv.lines().last().unwrap();
    let tv: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!(tv <= 2e-2, "final tv {tv}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert!(json["summary"]["final_tv"].as_f64().unwrap() <= 2e-2);
    assert!(json["summary"]["max_s_lambda_excess"].as_f64().unwrap() <= 1e-3);
}
