use std::process::{Command, Output};

use serde_json::Value;

use divratio::construct::{validate_params, SieveParams};
use divratio::sieve::build_spf;
use divratio::PosRational;
use divratio_cli::{
    cmd_build, cmd_witness_scan, main_with_args, Format, EXIT_OK, EXIT_USAGE, HIT_CSV_HEADER,
};

fn divratio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divratio"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn q(s: &str) -> PosRational {
    s.parse().unwrap()
}

#[test]
fn build_16_9_json() {
    let out = divratio(&["build", "16/9"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["params"]["a"], "12");
    assert_eq!(v["params"]["r"], serde_json::json!(["1", "3", "1"]));
    assert_eq!(v["params"]["C"], 13);
    assert_eq!(v["ratios"]["ratio12"], "2/9");
    assert_eq!(v["exponents"], serde_json::json!(["32", "4", "9"]));
    assert_eq!(v["augmented_ratios"]["ratio13"], "16/9");
    assert_eq!(v["group_value"], "16/9");
    assert_eq!(v["closed_form"], "16/9");
}

#[test]
fn build_output_params_revalidate() {
    for t in ["16/9", "2", "1", "7/5", "40/39"] {
        let v: Value = serde_json::from_str(&cmd_build(&q(t), Format::Json).unwrap()).unwrap();
        assert!(!v["params"].is_null());
        for key in ["params", "augmented"] {
            if v[key].is_null() {
                continue;
            }
            let p = SieveParams::from_json(&v[key]).unwrap();
            assert_eq!(validate_params(&p), Ok(()), "{t} {key}");
            assert_eq!(p.to_json(), v[key]);
        }
    }
}

#[test]
fn build_unfactored_target_reports_nulls() {
    let v: Value = serde_json::from_str(&cmd_build(&q("37/31"), Format::Json).unwrap()).unwrap();
    assert_eq!(v["group_value"], "37/31");
    assert!(v["ratios"].is_null());
    assert!(v["exponents"].is_null());
    assert!(v["augmented"].is_null());
    assert!(v["params"]["C"].is_null());
}

#[test]
fn build_text_and_csv() {
    let text = cmd_build(&q("2"), Format::Text).unwrap();
    assert!(text.contains("a: 180\n"));
    assert!(text.contains("C: 181\n"));
    let csv = cmd_build(&q("2"), Format::Csv).unwrap();
    assert!(csv.starts_with("field,value\n"));
    assert!(csv.contains("word,\"f(2,3)^1\"\n"));
}

#[test]
fn decompose_formats() {
    let out = divratio(&["decompose", "7", "--format", "text"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("value: 7/1"));
    assert!(s.contains("round-trip: PASS"));
    let out = divratio(&["decompose", "11", "--format", "csv"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s, "x,y,exp\n1,1,-2\n2,3,6\n5,5,-1\n");
    let v = stdout_json(&divratio(&["decompose", "4/3"]));
    assert_eq!(v["word"], "f(1,1)^1");
}

#[test]
fn witness_scan_json_lines() {
    let out = divratio(&[
        "witness-scan",
        "4/3",
        "--x-max",
        "200",
        "--spf-limit",
        "10000",
    ]);
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let (summary, hits) = lines.split_last().unwrap();
    assert_eq!(summary["summary"]["status"], "verified");
    assert_eq!(summary["summary"]["hits"], hits.len().to_string());
    let x78 = hits.iter().find(|h| h["x"] == "78").unwrap();
    assert_eq!(x78["pair"], "2-3");
    assert_eq!(x78["n"], "2345");
    assert_eq!(x78["ratio"], "2/1");
    assert!(hits.iter().all(|h| h["matched"] == true));
}

#[test]
fn witness_scan_csv_and_inconclusive() {
    let table = build_spf(10_000).unwrap();
    let csv = cmd_witness_scan(&q("4/3"), 100, Format::Csv, &table).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HIT_CSV_HEADER));
    assert!(lines.any(|l| l.starts_with("75,1-3,902,8,8,1/1,1/1,true")));
    let out = divratio(&[
        "witness-scan",
        "37",
        "--x-max",
        "1000",
        "--spf-limit",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    assert_eq!(v["summary"]["status"], "inconclusive");
    assert_eq!(v["summary"]["bound_at"], "1");
}

#[test]
fn ratio_scan_outputs() {
    let v = stdout_json(&divratio(&[
        "ratio-scan",
        "16/9",
        "--n-max",
        "10000",
        "--spf-limit",
        "1000",
    ]));
    assert_eq!(v["first_n"], "3249");
    assert_eq!(v["count"], "1");
    let out = divratio(&[
        "ratio-scan",
        "2",
        "--n-max",
        "10",
        "--format",
        "csv",
        "--sample-cap",
        "2",
    ]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s, "target,n_max,count,first_n,sample\n2/1,10,3,1,1 5\n");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["build", "1.5"],
        vec!["build", "0"],
        vec!["build", "-3"],
        vec!["decompose"],
        vec!["frobnicate"],
        vec!["witness-scan", "2"],
        vec!["ratio-scan", "2", "--n-max", "10", "--format", "xml"],
    ] {
        let out = divratio(&args);
        assert_eq!(out.status.code(), Some(EXIT_USAGE), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_exits_zero() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    assert_eq!(
        main_with_args(["divratio", "--help"], &mut out, &mut err),
        EXIT_OK
    );
    assert!(String::from_utf8(out).unwrap().contains("witness-scan"));
}

#[test]
fn selftest_passes() {
    let out = divratio(&["selftest", "--format", "text", "--spf-limit", "300000"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{s}");
    assert!(s.contains("overall"));
    assert_eq!(s.matches("PASS").count(), 11);
}
