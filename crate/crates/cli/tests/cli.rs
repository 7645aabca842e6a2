use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manin-d5"))
        .args(args)
        .env_remove("MANIN_D5_THREADS")
        .output()
        .expect("binary runs")
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn naive_count_at_one() {
    let out = run(&["count", "--method", "naive", "--B", "1"]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["count"], 7);
    assert_eq!(lines[0]["schema"], 1);
    assert!(lines[0]["build"]
        .as_str()
        .unwrap()
        .starts_with(env!("CARGO_PKG_VERSION")));
}

#[test]
fn torsor_count_equals_direct_count() {
    let torsor = json_lines(&run(&["count", "--method", "torsor", "--B", "1e4"]));
    let direct = json_lines(&run(&["count", "--method", "direct", "--B", "10000"]));
    assert_eq!(torsor[0]["count"], direct[0]["count"]);
    assert_eq!(torsor[0]["count"], 147_336);
}

#[test]
fn bad_arguments_exit_two() {
    for args in [
        &["count", "--B", "0"][..],
        &["count", "--method", "naive", "--B", "500"],
        &["count"],
        &["count", "--B", "10", "--grid", "10:100"],
        &["constants", "--tol", "abc"],
        &["constants", "--tol", "1e-20"],
        &["constants", "--prime-cutoff", "5"],
        &["verify", "--suite", "nonsense"],
        &["verify", "--grid", "1e3:1e9"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn constants_report_alpha_exactly() {
    let out = run(&["constants", "--tol", "1e-6"]);
    assert!(out.status.success());
    let report = &json_lines(&out)[0];
    assert_eq!(report["alpha"], "1/345600");
    assert_eq!(report["simplex_volume"], "1/86400");
    assert_eq!(report["anticanonical_degree"], 4);
    let tau_inf = report["tau_infinity"]["value"].as_f64().unwrap();
    let omega = report["omega_infinity_plus"]["value"].as_f64().unwrap()
        + report["omega_infinity_minus"]["value"].as_f64().unwrap();
    assert!((omega - 12.0 * tau_inf).abs() < 1e-5);
}

#[test]
fn coarser_prime_cutoff_widens_the_tail() {
    let coarse = &json_lines(&run(&[
        "constants",
        "--tol",
        "1e-6",
        "--prime-cutoff",
        "50",
    ]))[0];
    let fine = &json_lines(&run(&[
        "constants",
        "--tol",
        "1e-6",
        "--prime-cutoff",
        "1e5",
    ]))[0];
    let tail = |r: &Value| r["tau"]["tail_bound"].as_f64().unwrap();
    assert!(tail(coarse) > tail(fine));
}

#[test]
fn passing_suites_exit_zero() {
    for args in [
        &["verify", "--suite", "lemma-base", "--B", "1000"][..],
        &["verify", "--suite", "local-factors", "--pmax", "100"],
        &["verify", "--suite", "predictor", "--grid", "1e3:1e5"],
        &["verify", "--suite", "red-1", "--grid", "1e2:1e4:3"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let summary = &json_lines(&out)[0];
        assert_eq!(summary["passed"], true);
        assert!(summary["checks"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["passed"] == true));
    }
}

#[test]
fn failing_suite_exits_one_with_named_checks() {
    let out = run(&["verify", "--suite", "densities"]);
    assert_eq!(out.status.code(), Some(1));
    let summary = &json_lines(&out)[0];
    assert_eq!(summary["passed"], false);
    let checks = summary["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks
        .iter()
        .all(|c| c["suite"] == "densities" && c["check"].is_string()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL densities"));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let cases: [&[&str]; 3] = [
        &[
            "count",
            "--method",
            "torsor",
            "--grid",
            "1e2:3e4:5",
            "--reproducible",
        ],
        &[
            "count",
            "--method",
            "direct",
            "--grid",
            "1e2:3e4:5",
            "--reproducible",
            "--format",
            "csv",
        ],
        &["verify", "--suite", "predictor", "--grid", "1e3:3e4:8"],
    ];
    for args in cases {
        let outputs: Vec<Vec<u8>> = ["1", "4", "8"]
            .iter()
            .map(|t| {
                let mut full = args.to_vec();
                full.extend(["--threads", t]);
                run(&full).stdout
            })
            .collect();
        assert!(!outputs[0].is_empty());
        assert!(outputs.iter().all(|o| *o == outputs[0]), "{args:?}");
    }
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_manin-d5"))
        .args([
            "count",
            "--method",
            "direct",
            "--B",
            "500",
            "--reproducible",
        ])
        .env("MANIN_D5_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        out.stdout,
        run(&[
            "count",
            "--method",
            "direct",
            "--B",
            "500",
            "--reproducible"
        ])
        .stdout
    );
    let bad = Command::new(env!("CARGO_BIN_EXE_manin-d5"))
        .args(["count", "--B", "10"])
        .env("MANIN_D5_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn csv_output_to_file() {
    let dir = std::env::temp_dir().join(format!("manin-d5-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("counts.csv");
    let out = run(&[
        "count",
        "--method",
        "degenerate",
        "--grid",
        "10:1000:3",
        "--format",
        "csv",
        "--reproducible",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("schema,build,B,count,method,elapsed_ms"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows
        .iter()
        .all(|r| r.starts_with("1,") && r.ends_with(",degenerate,0")));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn constants_csv_uses_full_precision() {
    let out = run(&["constants", "--tol", "1e-6", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let tau_row = text.lines().find(|l| l.contains(",tau_infinity,")).unwrap();
    let value = tau_row.split(',').nth(3).unwrap();
    let mantissa = value.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{value}");
    assert!(text.lines().any(|l| l.contains(",alpha,1/345600,")));
}
