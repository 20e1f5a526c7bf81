use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_localfrac"));
    c.env_remove("LOCALFRAC_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema() -> jsonschema::JSONSchema {
    let text = include_str!("../schema/output_record.schema.json");
    let schema: Value = serde_json::from_str(text).unwrap();
    jsonschema::JSONSchema::compile(&schema).expect("schema compiles")
}

/// Parses stdout as JSON and checks it against the shipped schema.
fn record(o: &Output) -> Value {
    let v: Value = serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)));
    let s = schema();
    if let Err(errors) = s.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("schema violations: {msgs:?}\n{v}");
    }
    v
}

fn value(o: &Output) -> f64 {
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    record(o)["value"].as_f64().unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn ml_values_and_failure() {
    let e = value(&run(&["ml", "--a", "1", "--b", "1", "--z", "1"]));
    assert!(close(e, std::f64::consts::E, 1e-15), "{e}");
    // (e^2 - 1) / 2
    let v = value(&run(&["ml", "--a", "1", "--b", "2", "--z", "2"]));
    assert!(close(v, (2f64.exp() - 1.0) / 2.0, 1e-14), "{v}");
    let neg = value(&run(&["ml", "--a", "1", "--b", "1", "--z", "-3"]));
    assert!(close(neg, (-3f64).exp(), 1e-12));
    let o = run(&["ml", "--a", "0.5", "--b", "1", "--z", "1e9"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
}

#[test]
fn deriv_examples() {
    let v = value(&run(&[
        "deriv",
        "--op",
        "n",
        "--kernel",
        "nonconformable_exp",
        "--alpha",
        "0.5",
        "--expr",
        "t^2",
        "--at",
        "1",
    ]));
    assert!(close(v, 2.0 * std::f64::consts::E, 1e-12), "{v}");
    let v = value(&run(&[
        "deriv",
        "--op",
        "n",
        "--kernel",
        "classical",
        "--alpha",
        "0.3",
        "--expr",
        "sin(t)",
        "--at",
        "0.7",
    ]));
    assert!(close(v, 0.7f64.cos(), 1e-12));
    // f' + beta f for dh:linear with F = 1
    let v = value(&run(&[
        "deriv",
        "--op",
        "dh:linear",
        "--beta",
        "0.5",
        "--kernel",
        "classical",
        "--alpha",
        "0.5",
        "--expr",
        "t",
        "--at",
        "2",
    ]));
    assert!(close(v, 2.0, 1e-12));
    // t^{1-alpha} f' / alpha
    let v = value(&run(&[
        "deriv",
        "--op",
        "point-quotient",
        "--alpha",
        "0.5",
        "--expr",
        "t^2",
        "--at",
        "4",
    ]));
    assert!(close(v, 2.0 * 8.0 / 0.5, 1e-6), "{v}");
}

#[test]
fn deriv_json_echoes_inputs() {
    let o = run(&[
        "deriv",
        "--kernel",
        "mellin_ross:a=2",
        "--alpha",
        "0.25",
        "--expr",
        "exp(-t)",
        "--at",
        "1.5",
    ]);
    let r = record(&o);
    assert_eq!(r["command"], "deriv");
    assert_eq!(r["inputs"]["kernel"], "mellin_ross:a=2");
    assert_eq!(r["inputs"]["alpha"].as_f64(), Some(0.25));
    assert_eq!(r["converged"], true);
    assert!(r["error_estimate"].as_f64().unwrap() >= 0.0);
}

#[test]
fn deriv_grid_is_csv() {
    let o = run(&[
        "deriv",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--expr",
        "t^2",
        "--grid",
        "1:4:4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value,err,converged"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        let t: f64 = row[0].parse().unwrap();
        assert_eq!(t, 1.0 + i as f64);
        let v: f64 = row[1].parse().unwrap();
        assert!(close(v, 2.0 * t.powf(1.5), 1e-10));
        assert_eq!(row[3], "true");
    }
    // the same grid as JSON
    let o = run(&[
        "deriv",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--expr",
        "t^2",
        "--grid",
        "1:4:4",
        "--format",
        "json",
    ]);
    assert_eq!(record(&o)["points"].as_array().unwrap().len(), 4);
}

#[test]
fn deriv_exit_codes() {
    let base = ["deriv", "--alpha", "0.5", "--expr", "t^2", "--at", "1"];
    let with = |extra: &[&str]| {
        let mut a: Vec<&str> = base.to_vec();
        a.extend_from_slice(extra);
        run(&a).status.code()
    };
    assert_eq!(with(&["--kernel", "nope"]), Some(2));
    assert_eq!(with(&["--op", "frobnicate", "--kernel", "classical"]), Some(2));
    assert_eq!(with(&["--op", "n"]), Some(2), "n needs a kernel");
    assert_eq!(
        run(&[
            "deriv",
            "--kernel",
            "classical",
            "--alpha",
            "0.5",
            "--expr",
            "t^",
            "--at",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "deriv",
            "--kernel",
            "classical",
            "--alpha",
            "0.5",
            "--expr",
            "ln(t)",
            "--at",
            "-1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["deriv", "--expr", "t"]).status.code(),
        Some(2),
        "missing --at/--grid"
    );

    // The limit t -> 0+ of e^{t^-1/2} 2t diverges.
    let at_zero = [
        "deriv",
        "--kernel",
        "nonconformable_exp",
        "--alpha",
        "0.5",
        "--expr",
        "t^2",
        "--at",
        "0",
    ];
    let o = run(&at_zero);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(record(&o)["converged"], false, "output is still written");
    let mut allowed = at_zero.to_vec();
    allowed.push("--allow-unconverged");
    assert_eq!(run(&allowed).status.code(), Some(0));
}

#[test]
fn deriv_at_zero_converges_for_conformable() {
    // t^{1/2} 2t -> 0
    let o = run(&[
        "deriv",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--expr",
        "t^2",
        "--at",
        "0",
    ]);
    assert!(value(&o).abs() < 1e-6);
}

#[test]
fn compare_rows() {
    let o = run(&[
        "compare",
        "--expr",
        "t^2",
        "--at",
        "1",
        "--alpha",
        "0.5",
        "--def",
        "conformable",
        "--def",
        "nonconformable_exp",
        "--def",
        "mult",
        "--def",
        "classical",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("definition,operator,value,err,converged"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    let e = std::f64::consts::E;
    for (v, want) in values.iter().zip([2.0, 2.0 * e, 2.0, 2.0]) {
        assert!(close(*v, want, 1e-10), "{v} vs {want}");
    }

    let o = run(&[
        "compare", "--expr", "7", "--at", "2", "--alpha", "0.3", "--format", "json",
    ]);
    let r = record(&o);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|row| row["value"].as_f64().unwrap().abs() <= 1e-12));

    assert_eq!(
        run(&["compare", "--expr", "t", "--at", "1", "--alpha", "0.5", "--def", "bogus"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn integrate_examples() {
    let v = value(&run(&[
        "integrate",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--expr",
        "1",
        "--from",
        "0",
        "--to",
        "1",
    ]));
    assert!(close(v, 2.0, 1e-8), "{v}");
    for kernel in ["conformable", "nonconformable_exp", "robotov", "classical"] {
        let v = value(&run(&[
            "integrate",
            "--kernel",
            kernel,
            "--alpha",
            "0.7",
            "--expr",
            "0",
            "--from",
            "0.5",
            "--to",
            "2",
        ]));
        assert_eq!(v, 0.0);
    }
    let v = value(&run(&[
        "integrate",
        "--kernel",
        "nonconformable_exp",
        "--alpha",
        "0.5",
        "--expr",
        "exp(t^(-0.5))",
        "--from",
        "1",
        "--to",
        "3",
    ]));
    assert!(close(v, 2.0, 1e-8), "{v}");
    assert_eq!(
        run(&[
            "integrate",
            "--kernel",
            "conformable",
            "--alpha",
            "0.5",
            "--expr",
            "1",
            "--from",
            "2",
            "--to",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn solve_examples() {
    let o = run(&[
        "solve",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--rhs",
        "x",
        "--t0",
        "1",
        "--x0",
        "1",
        "--t-end",
        "4",
        "--picard-check",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = record(&o);
    let e2 = 2f64.exp();
    assert!((r["final_value"].as_f64().unwrap() - e2).abs() <= 1e-6 * e2);
    assert!(r["picard_residual"].as_f64().unwrap() <= 1e-5);

    // default CSV
    let o = run(&[
        "solve", "--kernel", "robotov", "--alpha", "0.5", "--rhs", "0", "--t0", "0.5", "--x0", "3", "--t-end", "2",
    ]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x"));
    for line in lines {
        assert_eq!(line.split(',').nth(1), Some("3"));
    }

    // N x = 1 from x(t0) = 0 is the integral of 1
    let o = run(&[
        "solve",
        "--kernel",
        "one_plus_reciprocal",
        "--alpha",
        "0.4",
        "--rhs",
        "1",
        "--t0",
        "0.5",
        "--x0",
        "0",
        "--t-end",
        "3",
        "--format",
        "json",
    ]);
    let x = record(&o)["final_value"].as_f64().unwrap();
    let j = value(&run(&[
        "integrate",
        "--kernel",
        "one_plus_reciprocal",
        "--alpha",
        "0.4",
        "--expr",
        "1",
        "--from",
        "0.5",
        "--to",
        "3",
    ]));
    assert!(close(x, j, 1e-7), "{x} vs {j}");

    assert_eq!(
        run(&[
            "solve",
            "--kernel",
            "classical",
            "--alpha",
            "1",
            "--rhs",
            "x",
            "--t0",
            "1",
            "--x0",
            "1",
            "--t-end",
            "0.5"
        ])
        .status
        .code(),
        Some(2)
    );
    // blow-up: x' = x^2 from x(1) = 1 explodes at t = 2
    assert_eq!(
        run(&[
            "solve",
            "--kernel",
            "classical",
            "--alpha",
            "1",
            "--rhs",
            "x^2",
            "--t0",
            "1",
            "--x0",
            "1",
            "--t-end",
            "3"
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn verify_default_suite_is_deterministic() {
    let a = run(&["verify"]);
    let b = run(&["verify"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "two runs must be byte-identical");
    let r = record(&a);
    let totals = &r["report"]["totals"];
    assert_eq!(totals["failed"], 0);
    assert_eq!(
        totals["total"],
        totals["passed"].as_u64().unwrap() + totals["skipped"].as_u64().unwrap()
    );
}

#[test]
fn verify_seed_sources() {
    let seed_of = |o: &Output| record(o)["report"]["seed"].as_u64().unwrap();
    let default = seed_of(&run(&["verify"]));
    let env = bin().args(["verify"]).env("LOCALFRAC_SEED", "42").output().unwrap();
    assert_eq!(seed_of(&env), 42);
    assert_ne!(default, 42);
    let flag = bin()
        .args(["verify", "--seed", "7"])
        .env("LOCALFRAC_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(seed_of(&flag), 7);
    let bad = bin().args(["verify"]).env("LOCALFRAC_SEED", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_suite_file_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    std::fs::write(
        &suite,
        r#"{"cases": [
            {"property": "leibniz_defect_model", "label": "dh",
             "operator": {"op": "dh:linear", "kernel": "classical", "beta": 0.5},
             "functions": ["t", "t"], "points": [1.0], "tolerance": 1e-5},
            {"property": "product", "label": "wrong operator",
             "operator": {"op": "dh:linear", "kernel": "classical", "beta": 0.5},
             "functions": ["t", "t"], "points": [1.0], "tolerance": 1e-5}
        ]}"#,
    )
    .unwrap();
    let o = run(&["verify", "--suite", suite.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let r = record(&o);
    let cases = r["report"]["cases"].as_array().unwrap();
    assert_eq!(cases[0]["status"], "pass");
    assert!((cases[0]["residual"].as_f64().unwrap() - 0.5).abs() < 1e-5);
    assert_eq!(cases[1]["status"], "fail");

    std::fs::write(&suite, "{\"cases\": [{}]}").unwrap();
    assert_eq!(
        run(&["verify", "--suite", suite.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "--suite", "/no/such/file.json"]).status.code(), Some(2));

    std::fs::write(&suite, "{\"cases\": []}").unwrap();
    let o = run(&["verify", "--suite", suite.to_str().unwrap(), "--format", "table"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("index"));
}

#[test]
fn out_config_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let o = run(&["ml", "--a", "1", "--b", "1", "--z", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["value"].as_f64(), Some(1.0));

    let cfg = dir.path().join("defaults.conf");
    std::fs::write(&cfg, "# defaults\nformat = csv\nml_tol = 1e-14\n").unwrap();
    let o = run(&[
        "ml",
        "--a",
        "1",
        "--b",
        "1",
        "--z",
        "1",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(stdout(&o).starts_with("a,b,z,value\n"));
    let o = run(&[
        "ml",
        "--a",
        "1",
        "--b",
        "1",
        "--z",
        "1",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(record(&o)["inputs"]["tol"].as_f64(), Some(1e-14));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        run(&[
            "ml",
            "--a",
            "1",
            "--b",
            "1",
            "--z",
            "1",
            "--config",
            cfg.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );

    let one = run(&[
        "deriv",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--expr",
        "sin(t)",
        "--grid",
        "0.5:3:11",
        "--jobs",
        "1",
    ]);
    let four = run(&[
        "deriv",
        "--kernel",
        "conformable",
        "--alpha",
        "0.5",
        "--expr",
        "sin(t)",
        "--grid",
        "0.5:3:11",
        "--jobs",
        "4",
    ]);
    assert_eq!(
        one.stdout, four.stdout,
        "row order and values do not depend on the worker count"
    );
    assert_eq!(
        run(&["ml", "--a", "1", "--b", "1", "--z", "1", "--jobs", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["ml", "--a", "1"]).status.code(), Some(2));
    assert_eq!(run(&["ml", "--a", "x", "--b", "1", "--z", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["deriv", "--expr", "t", "--at", "1", "--grid", "0:1:2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn json_numbers_carry_17_significant_digits() {
    let o = run(&["ml", "--a", "1", "--b", "1", "--z", "1"]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.trim_start().starts_with("\"value\"")).unwrap();
    let num = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let digits = num.chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 17, "{num}");
}

#[test]
fn schema_rejects_malformed_records() {
    let s = schema();
    let bad = [
        serde_json::json!({"command": "ml", "inputs": {}, "converged": true}),
        serde_json::json!({"command": "deriv", "inputs": {}, "converged": true, "operator": "n", "elapsed_ms": 1}),
        serde_json::json!({"command": "verify", "inputs": {}, "converged": true, "elapsed_ms": 1,
                           "report": {"seed": 1, "totals": {"total": 0, "passed": 0, "failed": 0, "skipped": 0}, "cases": []}}),
        serde_json::json!({"command": "plot", "inputs": {}, "converged": true}),
    ];
    for v in bad {
        assert!(!s.is_valid(&v), "{v}");
    }
}
