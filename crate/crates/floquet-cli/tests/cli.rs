use std::path::Path;
use std::process::{Command, Output};

fn floquet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet"))
        .args(args)
        .env_remove("FLOQUET_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// CSV body without the `#` header block.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(l.as_bytes());
            r.records().next().unwrap().unwrap().iter().map(str::to_string).collect()
        })
        .collect()
}

fn header_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key}: ")))
        .unwrap_or_else(|| panic!("no {key} in header"))
        .to_string()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn help_and_parse_errors() {
    assert_eq!(code(&floquet(&["--help"])), 0);
    assert_eq!(code(&floquet(&["--version"])), 0);
    assert_eq!(code(&floquet(&["decode-sweep", "--bogus"])), 1);
    assert_eq!(code(&floquet(&[])), 1);
}

#[test]
fn validation_errors_exit_one() {
    let o = floquet(&["decode-sweep", "--sizes", "2x2", "--p", "0.01"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--seed is required"));
    let o = floquet(&["decode-sweep", "--sizes", "2x2", "--p", "0.7", "--seed", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("outside [0, 0.5]"));
    for bad in [
        vec!["decode-sweep", "--sizes", "2y2", "--p", "0.1", "--seed", "1"],
        vec!["decode-sweep", "--sizes", "2x2", "--p", "0.1:0.05:0.01", "--seed", "1"],
        vec!["decode-sweep", "--sizes", "2x2", "--p", "0.1", "--seed", "1", "--color", "Q"],
        vec!["diagnostics", "--size", "2x2", "--p", "0.1", "--n", "1"],
        vec!["diagnostics", "--size", "2x2", "--p", "0.1", "--variant", "planar"],
        vec!["statmech", "--widths", "4", "--p", "0.05,0.07", "--seed", "1"],
        vec!["statmech", "--widths", "4,5", "--p", "0.05,0.07", "--seed", "1"],
        vec!["statmech", "--model", "flavor", "--p", "0.4", "--label", "B9"],
        vec!["dump-lattice", "--size", "0x3"],
        vec!["verify", "--perturb", "0.7"],
    ] {
        assert_eq!(code(&floquet(&bad)), 1, "{bad:?}");
    }
}

#[test]
fn budget_exceeded_exits_three() {
    let o = floquet(&["diagnostics", "--size", "12x12", "--n", "4", "--p", "0.1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn decode_sweep_rows_and_zero_rate() {
    let o = floquet(&["decode-sweep", "--sizes", "2x2,3x3", "--p", "0:0.02:0.01", "--trials", "100", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(header_value(&text, "rng"), "ChaCha8 (rand_chacha 0.3), seed 5");
    assert_eq!(header_value(&text, "schema"), "decode-sweep/1");
    assert_eq!(header_value(&text, "config-sha256").len(), 64);
    let r = rows(&text);
    assert_eq!(r.len(), 6);
    for row in r.iter().filter(|r| r[0] == "0") {
        assert_eq!(row[3], "1");
        assert_eq!(row[5], "100");
    }
    let summary: serde_json::Value = serde_json::from_str(&stderr(&o)).unwrap();
    assert_eq!(summary["header"]["schema_version"], 1);
    assert_eq!(summary["crossings"].as_array().unwrap().len(), 1);
}

#[test]
fn identical_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| {
        let out = dir.path().join(format!("{tag}.csv"));
        let sum = dir.path().join(format!("{tag}.json"));
        let o = floquet(&[
            "--threads",
            threads,
            "decode-sweep",
            "--sizes",
            "2x2,3x3",
            "--p",
            "0.01,0.02",
            "--trials",
            "300",
            "--seed",
            "17",
            "--out",
            out.to_str().unwrap(),
            "--summary",
            sum.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (read(&out), read(&sum))
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a, b);
    let o = Command::new(env!("CARGO_BIN_EXE_floquet"))
        .args(["statmech", "--widths", "4,6", "--p", "0.05,0.1", "--samples", "20", "--seed", "2", "--bootstrap", "10"])
        .env("FLOQUET_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let p = floquet(&["statmech", "--widths", "4,6", "--p", "0.05,0.1", "--samples", "20", "--seed", "2", "--bootstrap", "10"]);
    assert_eq!(o.stdout, p.stdout);
    assert_eq!(o.stderr, p.stderr);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[diagnostics]\nsize = \"2x2\"\nn = \"2\"\np = \"0,0.5\"\nvariant = \"toric\"\n").unwrap();
    let from_file = floquet(&["--config", cfg.to_str().unwrap(), "diagnostics"]);
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    let from_flags = floquet(&["diagnostics", "--size", "2x2", "--n", "2", "--p", "0,0.5", "--variant", "toric"]);
    assert_eq!(from_file.stdout, from_flags.stdout);
    let r = rows(&stdout(&from_file));
    assert!(r.iter().all(|row| row[2] == "toric"));
    let overridden = floquet(&["--config", cfg.to_str().unwrap(), "diagnostics", "--variant", "floquet"]);
    let r = rows(&stdout(&overridden));
    assert!(r.iter().all(|row| row[2] == "floquet"));
    assert_ne!(
        header_value(&stdout(&overridden), "config-sha256"),
        header_value(&stdout(&from_file), "config-sha256")
    );
    std::fs::write(&cfg, "[diagnostics]\nsize = \"2x2\"\nwidth = 3\n").unwrap();
    assert_eq!(code(&floquet(&["--config", cfg.to_str().unwrap(), "diagnostics", "--p", "0.1"])), 1);
}

#[test]
fn diagnostics_table_rows() {
    let o = floquet(&["diagnostics", "--size", "3x3", "--n", "2,3", "--p", "0,0.5", "--variant", "both"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ln2 = std::f64::consts::LN_2;
    for row in rows(&stdout(&o)) {
        let n: f64 = row[0].parse().unwrap();
        let (p, variant) = (row[1].as_str(), row[2].as_str());
        let d: f64 = row[4].parse().unwrap();
        let i: f64 = row[5].parse().unwrap();
        let (de, ie) = match (variant, p) {
            (_, "0.5") => (ln2, -2.0 * ln2),
            ("floquet", "0") => (0.0, 2.0 * ln2),
            ("toric", "0") => (ln2 / (n - 1.0), 2.0 * ln2),
            _ => unreachable!(),
        };
        assert!((d - de).abs() < 1e-12 && (i - ie).abs() < 1e-12, "{row:?}");
    }
}

#[test]
fn diagnostics_transition_summary() {
    let dir = tempfile::tempdir().unwrap();
    let sum = dir.path().join("s.json");
    let o = floquet(&[
        "diagnostics",
        "--size",
        "3x3",
        "--p",
        "0.01:0.03:0.005",
        "--transitions",
        "--summary",
        sum.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&read(&sum)).unwrap();
    let t = &s["transitions"][0];
    assert!((t["resolution"].as_f64().unwrap() - 0.005).abs() < 1e-12);
    assert!(t["coincide"].is_boolean());
}

#[test]
fn statmech_flavor_cost_grows_with_size() {
    let o = floquet(&["statmech", "--model", "flavor", "--sizes", "2x2,3x3,4x4", "--p", "0.4", "--n", "2,3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&stderr(&o)).unwrap();
    for entry in s["size_dependence"].as_array().unwrap() {
        assert_eq!(entry["increasing"], true, "{entry}");
    }
    assert_eq!(rows(&stdout(&o)).len(), 6);
}

#[test]
fn statmech_reports_missing_crossing() {
    let o = floquet(&["statmech", "--widths", "4,6", "--p", "0.2,0.3", "--samples", "5", "--seed", "1", "--bootstrap", "0"]);
    assert_eq!(code(&o), 0);
    let err = stderr(&o);
    assert!(err.contains("no crossing"));
    let json_start = err.find('{').unwrap();
    let s: serde_json::Value = serde_json::from_str(&err[json_start..]).unwrap();
    assert_eq!(s["crossing"], false);
    assert!(s["estimate"].is_null());
    assert_eq!(rows(&stdout(&o)).len(), 4);
}

#[test]
fn verify_passes_and_detects_perturbation() {
    let o = floquet(&["verify"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("PASS oracle-vs-statmech 2x2 toric")));
    assert!(text.lines().any(|l| l.starts_with("PASS equal-classes")));
    assert!(!text.contains("FAIL"));
    let o = floquet(&["verify", "--sizes", "1x1", "--p", "0.1", "--perturb", "0.001"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL oracle-vs-statmech")));
}

#[test]
fn circuit_dump_replays() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trials.ndjson");
    let args = ["decode-sweep", "--sizes", "3x3", "--p", "0.004", "--trials", "30", "--seed", "8", "--periods", "2"];
    let mut with_dump: Vec<&str> = args.to_vec();
    with_dump.extend(["--dump-trials", dump.to_str().unwrap()]);
    assert_eq!(code(&floquet(&with_dump)), 0);
    let text = read(&dump);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 30);
    let o = floquet(&["decode-sweep", "--sizes", "3x3", "--p", "0.004", "--replay", dump.to_str().unwrap(), "--color", "R"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(header_value(&stdout(&o), "rng"), "none");
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 60);
    let s: serde_json::Value = serde_json::from_str(&stderr(&o)).unwrap();
    assert_eq!(s["judged"], 60);
    assert!(s["successes"].as_u64().unwrap() >= 50);
    let wrong = floquet(&["decode-sweep", "--sizes", "2x2", "--p", "0.004", "--replay", dump.to_str().unwrap()]);
    assert_eq!(code(&wrong), 1);
}

#[test]
fn dump_lattice_formats() {
    let o = floquet(&["dump-lattice", "--size", "2x3"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lattice"]["l1"], 2);
    assert_eq!(v["lattice"]["vertices"].as_array().unwrap().len(), 18);
    assert_eq!(v["header"]["schema"], "dump-lattice/1");
    for (table, count) in [("vertices", 18), ("edges", 54), ("plaquettes", 36)] {
        let o = floquet(&["dump-lattice", "--size", "2x3", "--format", "csv", "--table", table]);
        assert_eq!(rows(&stdout(&o)).len(), count, "{table}");
    }
}
