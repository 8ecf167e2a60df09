use std::process::{Command, Output};

use serde_json::Value;

fn ptws(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptws"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const TABLE_SPEC: [&str; 4] = ["--v0", "1.2", "--rho", "1.8"];

fn with_spec<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&TABLE_SPEC);
    v.extend_from_slice(extra);
    v
}

#[test]
fn scan_marks_cc_left_points() {
    // Step 5e-4 from 0.05 puts grid points on all three CC-left energies.
    let o = ptws(&with_spec("scan", &["--emin", "0.05", "--emax", "6", "--points", "11901"]));
    assert!(o.status.success());
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 11901);
    for e in [0.6225, 2.04, 3.8625] {
        let row = rows.iter().find(|r| (num(&r[0]) - e).abs() < 1e-9).unwrap();
        assert!(num(&row[2]) < -8.0 && num(&row[4]) < -8.0, "{row:?}");
        assert!(row[6].split('|').any(|f| f == "CC_L"));
    }
    let flagged = rows.iter().filter(|r| r[6].contains("CC_L")).count();
    assert_eq!(flagged, 3);
    for w in rows.windows(2) {
        assert!(num(&w[1][0]) > num(&w[0][0]));
    }
}

#[test]
fn reversed_scan_diverges_at_the_same_points() {
    let o = ptws(&with_spec(
        "scan",
        &["--variant", "time-reversed", "--emin", "0.05", "--emax", "6", "--points", "11901"],
    ));
    let rows = csv_rows(&o);
    let poles: Vec<f64> = rows.iter().filter(|r| r[2] == "inf").map(|r| num(&r[0])).collect();
    assert_eq!(poles.len(), 3);
    for (got, want) in poles.iter().zip([0.6225, 2.04, 3.8625]) {
        assert!((got - want).abs() < 1e-9);
    }
    assert!(rows.iter().filter(|r| r[2] == "inf").all(|r| r[6].contains("SS")));
}

#[test]
fn two_point_scan_is_the_endpoints() {
    let o = ptws(&with_spec("scan", &["--emin", "0.3", "--emax", "1.7", "--points", "2"]));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "0.3");
    assert_eq!(rows[1][0], "1.7");
}

#[test]
fn output_is_deterministic() {
    let args = with_spec("scan", &["--emin", "0.1", "--emax", "4", "--points", "97", "--format", "json"]);
    let a = ptws(&args);
    let b = ptws(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 97);
    let keys: Vec<&str> = rows[0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        ["energy_internal", "energy_display", "log10_Rl", "log10_Rr", "log10_T", "log10_absdetS", "flags"]
    );
}

#[test]
fn spectrum_families() {
    let o = ptws(&with_spec("spectrum", &["--families", "cc_left", "--max-count", "3"]));
    let rows = csv_rows(&o);
    let ev: Vec<f64> = rows.iter().map(|r| num(&r[3])).collect();
    for (got, want) in ev.iter().zip([16.94, 55.51, 105.11]) {
        assert!((got - want).abs() < 0.01, "{got}");
    }
    let o = ptws(&["spectrum", "--v0", "2", "--rho", "2", "--families", "cpa_time_reversed", "--max-count", "3"]);
    let idx: Vec<String> = csv_rows(&o).iter().map(|r| r[1].clone()).collect();
    assert_eq!(idx, ["3", "4", "5"]);
    let o = ptws(&with_spec("spectrum", &["--families", ""]));
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
    let o = ptws(&with_spec("spectrum", &["--families", "nonsense"]));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ranges_overlap_reference_intervals() {
    let o = ptws(&["ranges", "--v0", "1", "--rho", "0.0006", "--emin", "3.0017", "--emax", "3.0021"]);
    let rows = csv_rows(&o);
    assert!(rows.iter().any(|r| num(&r[2]) < 81.6954 && num(&r[3]) > 81.6791));
    let o = ptws(&[
        "ranges", "--v0", "15", "--rho", "0.000998", "--criterion", "cpa", "--emin", "14.9975", "--emax", "15.0035",
    ]);
    let rows = csv_rows(&o);
    assert!(rows.iter().any(|r| num(&r[2]) < 408.258 && num(&r[3]) > 408.096));
    let o = ptws(&[
        "ranges", "--v0", "1", "--rho", "0.0006", "--emin", "3.0017", "--emax", "3.0021", "--threshold", "1e-300",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn table1_passes() {
    let o = ptws(&["table1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r[11] == "true"));
    let m5 = rows.iter().find(|r| r[0] == "cpa_time_reversed M=5").unwrap();
    assert!((num(&m5[5]) - 143.95).abs() < 0.01);
    assert!(num(&m5[9]) < 5e-3);
}

#[test]
fn verify_passes_for_any_seed() {
    for seed in ["1", "99"] {
        let o = ptws(&["verify", "--seed", seed]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let rows = csv_rows(&o);
        assert!(rows.iter().any(|r| r[0] == "rprime_zero_spacing"));
    }
    assert_eq!(ptws(&["verify", "--seed", "5"]).stdout, ptws(&["verify", "--seed", "5"]).stdout);
}

#[test]
fn potential_profile_columns() {
    let o = ptws(&with_spec("potential", &["--x", "2", "--zeta-min", "-10", "--zeta-max", "10", "--points", "5"]));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 5);
    assert!((num(&rows[0][2]) + 1.2).abs() < 1e-6);
    assert!(num(&rows[4][2]).abs() < 1e-6);
    assert!(num(&rows[0][3]).abs() < 1e-6 && num(&rows[4][3]).abs() < 1e-6);
    let o = ptws(&with_spec("potential", &["--x", "0,4", "--zeta-min", "-1", "--zeta-max", "1", "--points", "3"]));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[1][..], ["0", "0", "-0.6", "0"]);
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# table spec\nv0 = 1.2\nrho = 1.8\nmax_count = 2\nseed = 4\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = ptws(&["spectrum", "--config", cfg, "--families", "cc_left"]);
    assert_eq!(csv_rows(&o).len(), 2);
    let o = ptws(&["spectrum", "--config", cfg, "--families", "cc_left", "--max-count", "4"]);
    assert_eq!(csv_rows(&o).len(), 4);
    let out = dir.path().join("s.csv");
    let o = ptws(&["spectrum", "--config", cfg, "--families", "cc_right", "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    let o = ptws(&["spectrum", "--config", bad.to_str().unwrap(), "--v0", "1", "--rho", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_input_exits_with_one() {
    for args in [
        vec!["scan", "--v0", "-1", "--rho", "1", "--emin", "1", "--emax", "2"],
        vec!["scan", "--v0", "1", "--rho", "1", "--emin", "2", "--emax", "1"],
        vec!["scan", "--v0", "1", "--rho", "1", "--emin", "1", "--emax", "2", "--points", "1"],
        vec!["ranges", "--v0", "1", "--rho", "1", "--emin", "1", "--emax", "2", "--threshold", "0"],
        vec!["scan", "--rho", "1", "--emin", "1", "--emax", "2"],
    ] {
        let o = ptws(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}
