//! End-to-end behaviour of the `dustcoal` binary.

use std::process::{Command, Output};

fn dustcoal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dustcoal"))
        .args(args)
        .env_remove("DUSTCOAL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn measure_info_is_exact_for_rational_dirac() {
    let out = dustcoal(&["measure-info", "--measure", "dirac:1/2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,value,exact"));
    let rows: Vec<&str> = lines.collect();
    for (name, exact) in [("mu1", "2"), ("mu2", "4"), ("gamma", "1/2"), ("alpha", "1/2"), ("rho", "2")] {
        let row = rows.iter().find(|r| r.starts_with(&format!("{name},"))).unwrap();
        assert!(row.ends_with(&format!(",{exact}")), "{row}");
    }
}

#[test]
fn measure_info_json_parses() {
    let out = dustcoal(&["measure-info", "--measure", "beta:3:1", "--format", "json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(value.to_string().contains("1.5"));
}

#[test]
fn exact_dirac_lists_strata() {
    let out = dustcoal(&["exact-dirac", "--measure", "dirac:1/2", "--depth", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "J,value,value_decimal,prob,prob_decimal");
    assert_eq!(lines.len(), 1 + 7);
    assert!(stderr(&out).contains("total mass 7/8"));
}

#[test]
fn simulate_f1_header_and_out_file() {
    let path = std::env::temp_dir().join(format!("dustcoal-f1-{}.csv", std::process::id()));
    let args = ["simulate-f1", "--reps", "20", "--jumps", "3", "--seed", "9"];
    let direct = dustcoal(&args);
    assert!(direct.status.success());
    assert!(stdout(&direct).starts_with("replicate,k,merger,jump_time,f1_value,f1_exact,stick,stick_exact\n"));
    let to_file = dustcoal(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(to_file.status.success() && to_file.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&direct));
    std::fs::remove_file(path).ok();
}

#[test]
fn seed_comes_from_flag_env_or_default() {
    let flag = dustcoal(&["mcs", "--reps", "30", "--n", "10,50", "--seed", "77"]);
    assert!(stderr(&flag).contains("seed = 77 (--seed)"));
    let env = Command::new(env!("CARGO_BIN_EXE_dustcoal"))
        .args(["mcs", "--reps", "30", "--n", "10,50"])
        .env("DUSTCOAL_SEED", "77")
        .output()
        .unwrap();
    assert!(stderr(&env).contains("seed = 77 (DUSTCOAL_SEED)"));
    assert_eq!(flag.stdout, env.stdout);
    let default = dustcoal(&["mcs", "--reps", "30", "--n", "10,50"]);
    assert!(stderr(&default).contains("seed = 0 (default)"));
    assert_ne!(default.stdout, flag.stdout);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["measure-info", "--measure", "beta:1.5:1"][..],
        &["measure-info", "--measure", "dirac:3/2"],
        &["nonmarkov", "--t0", "0.5", "--t1", "0.5", "--reps", "10"],
        &["nonmarkov", "--measure", "beta:3:1", "--reps", "10"],
        &["mcs", "--n", "100,50"],
        &["exact-dirac", "--measure", "beta:3:1"],
        &["simulate-f1", "--reps", "0"],
        &["no-such-command"],
    ] {
        let out = dustcoal(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn exact_dirac_rejects_excessive_depth() {
    let out = dustcoal(&["exact-dirac", "--depth", "64"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn nonmarkov_reports_both_forms() {
    let out = dustcoal(&["nonmarkov", "--reps", "2000", "--t0", "0,0.25", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("name,target,estimate,stderr,z,pass,reps,seed\n"));
    assert!(text.contains("nonmarkov_conditional_t0=0_derived"));
    assert!(text.contains("nonmarkov_conditional_t0=0.25_displayed"));
    assert!(text.contains("nonmarkov_t0_dependence_resolved"));
}
