//! Reduced-scale invariant checks run by `divratio selftest`.

use std::fmt::Write as _;

use serde_json::{json, Value};

use divratio::construct::{
    augment_params, balance_exponents, build_params, closed_form_value, predicted_group_value,
    predicted_ratios, split_for_construction, validate_params,
};
use divratio::exactq::divisor_count_factored;
use divratio::genword::Decomposer;
use divratio::sieve::{factorize_u64, is_e2, is_prime64, SpfTable};
use divratio::witness::{
    census_primes, ratio_at, scan_ratio_hits, scan_witnesses, CensusOptions, Pair, ScanOptions,
};
use divratio::PosRational;

use crate::Format;

const SPF_CHECK_LIMIT: u64 = 200_000;
const FACTOR_LIMIT: u64 = 20_000;
const PRIME_LIMIT: u64 = 100_000;
const WORD_LIMIT: u64 = 20;
const WITNESS_X_MAX: u64 = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn render(&self, format: Format) -> String {
        let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
        match format {
            Format::Json => {
                let rows: Vec<Value> = self
                    .suites
                    .iter()
                    .map(|s| json!({"suite": s.name, "result": verdict(s.passed), "detail": s.detail}))
                    .collect();
                let mut out = serde_json::to_string_pretty(&json!({
                    "suites": rows,
                    "result": verdict(self.passed()),
                }))
                .expect("json values serialize");
                out.push('\n');
                out
            }
            Format::Csv => {
                let mut out = String::from("suite,result,detail\n");
                for s in &self.suites {
                    let _ = writeln!(
                        out,
                        "{},{},{}",
                        s.name,
                        verdict(s.passed),
                        crate::csv_field(&s.detail)
                    );
                }
                out
            }
            Format::Text => {
                let width = self.suites.iter().map(|s| s.name.len()).max().unwrap_or(0);
                let mut out = String::new();
                for s in &self.suites {
                    let _ = writeln!(
                        out,
                        "{:width$}  {}  {}",
                        s.name,
                        verdict(s.passed),
                        s.detail
                    );
                }
                let _ = writeln!(out, "{:width$}  {}", "overall", verdict(self.passed()));
                out
            }
        }
    }
}

type Check = Result<String, String>;

fn suite(name: &'static str, check: Check) -> SuiteResult {
    match check {
        Ok(detail) => SuiteResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => SuiteResult {
            name,
            passed: false,
            detail,
        },
    }
}

/// Runs every suite. Suites that read the table are skipped, and reported as
/// failures, when the table itself is inconsistent.
pub fn run(table: &SpfTable) -> SelftestReport {
    let spf = suite("spf-table", check_spf(table));
    let table_ok = spf.passed;
    let mut suites = vec![spf];
    let with_table = |name: &'static str, f: &dyn Fn(&SpfTable) -> Check| {
        if table_ok {
            suite(name, f(table))
        } else {
            suite(name, Err("skipped: spf-table invariant failed".into()))
        }
    };
    suites.push(with_table("factorize-oracle", &check_factorize));
    suites.push(suite("primality-oracle", check_primality()));
    suites.push(with_table("e2-membership", &check_e2));
    suites.push(suite("decompose-roundtrip", check_roundtrip()));
    suites.push(suite("construct-group-value", check_group_values()));
    suites.push(suite("golden-16/9", check_golden()));
    suites.push(suite("unimodular-identities", check_unimodular()));
    suites.push(with_table("witness-soundness", &check_witness));
    suites.push(with_table("ratio-census", &check_census));
    SelftestReport { suites }
}

fn check_spf(table: &SpfTable) -> Check {
    let upto = table.limit().min(SPF_CHECK_LIMIT);
    match table.find_violation(upto) {
        None => Ok(format!("spf(n) is the least prime factor for n <= {upto}")),
        Some(n) => Err(format!(
            "spf(n) is the least prime factor: violated at n = {n} (table says {:?})",
            table.spf(n)
        )),
    }
}

fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn check_factorize(table: &SpfTable) -> Check {
    for n in 1..=FACTOR_LIMIT {
        let f = factorize_u64(n, Some(table)).map_err(|e| e.to_string())?;
        let expected = trial_factor(n);
        if f.entries() != expected.as_slice() {
            return Err(format!(
                "factorization of {n} disagrees with trial division"
            ));
        }
        let d: u64 = expected.iter().map(|&(_, e)| u64::from(e) + 1).product();
        if divisor_count_factored(&f) != d.into() {
            return Err(format!("d({n}) disagrees with trial division"));
        }
    }
    Ok(format!(
        "factorization and d(n) agree with trial division for n <= {FACTOR_LIMIT}"
    ))
}

fn check_primality() -> Check {
    for n in 0..=PRIME_LIMIT {
        let trial = n >= 2 && (2..).take_while(|p| p * p <= n).all(|p| n % p != 0);
        if is_prime64(n) != trial {
            return Err(format!("primality of {n} disagrees with trial division"));
        }
    }
    for n in [
        3_215_031_751u64,
        3_825_123_056_546_413_051,
        341_550_071_728_321,
    ] {
        if is_prime64(n) {
            return Err(format!("strong pseudoprime {n} reported prime"));
        }
    }
    Ok(format!("agrees with trial division for n <= {PRIME_LIMIT}"))
}

fn check_e2(table: &SpfTable) -> Check {
    for c in [1u64, 2, 5, 13] {
        for n in 1..=FACTOR_LIMIT {
            let f = factorize_u64(n, None).map_err(|e| e.to_string())?;
            let expected =
                f.entries().len() == 2 && f.entries().iter().all(|&(p, e)| e == 1 && p > c);
            if is_e2(n, c, Some(table)) != expected {
                return Err(format!("E2 membership of {n} with C = {c} is wrong"));
            }
        }
    }
    Ok(format!("matches the definition for n <= {FACTOR_LIMIT}"))
}

fn reduced_targets(limit: u64) -> impl Iterator<Item = PosRational> {
    (1..=limit).flat_map(move |m| {
        (1..=limit)
            .filter(move |&n| num_integer::gcd(m, n) == 1)
            .map(move |n| PosRational::from_u64(m, n).expect("nonzero"))
    })
}

fn check_roundtrip() -> Check {
    let d = Decomposer::default();
    let mut count = 0;
    for q in reduced_targets(WORD_LIMIT) {
        let w = d.decompose(&q).map_err(|e| format!("{q}: {e}"))?;
        if w.value() != q {
            return Err(format!("word for {q} evaluates to {}", w.value()));
        }
        count += 1;
    }
    Ok(format!("{count} targets with m, n <= {WORD_LIMIT}"))
}

fn check_group_values() -> Check {
    let d = Decomposer::default();
    let mut count = 0;
    for q in reduced_targets(WORD_LIMIT) {
        let split = split_for_construction(&q, &d).map_err(|e| format!("{q}: {e}"))?;
        let p = build_params(&q, &d).map_err(|e| format!("{q}: {e}"))?;
        validate_params(&p).map_err(|v| format!("{q}: {v}"))?;
        let g = predicted_group_value(&p).map_err(|e| format!("{q}: {e}"))?;
        let cf = closed_form_value(&split);
        if g != q || cf != q {
            return Err(format!("{q}: group value {g}, closed form {cf}"));
        }
        count += 1;
    }
    Ok(format!("{count} targets with m, n <= {WORD_LIMIT}"))
}

fn check_golden() -> Check {
    let q = PosRational::from_u64(16, 9).expect("nonzero");
    let p = build_params(&q, &Decomposer::default()).map_err(|e| e.to_string())?;
    let r: Vec<String> = (1..=3).map(|i| p.r(i).value().to_string()).collect();
    if p.a().to_string() != "12" || r != ["1", "3", "1"] || p.c() != Some(13) {
        return Err(format!(
            "16/9 built a = {}, r = {r:?}, C = {:?}",
            p.a(),
            p.c()
        ));
    }
    let t = predicted_ratios(&p).map_err(|e| e.to_string())?;
    let got = [
        t.ratio12.to_string(),
        t.ratio23.to_string(),
        t.ratio13.to_string(),
    ];
    if got != ["2/9", "4/1", "1/2"] {
        return Err(format!("16/9 ratios {got:?}"));
    }
    let e = balance_exponents(&t);
    let e_str: Vec<String> = e.iter().map(ToString::to_string).collect();
    if e_str != ["32", "4", "9"] {
        return Err(format!("16/9 exponents {e_str:?}"));
    }
    let aug = augment_params(&p, &e).map_err(|e| e.to_string())?;
    validate_params(&aug).map_err(|v| v.to_string())?;
    let t = predicted_ratios(&aug).map_err(|e| e.to_string())?;
    if [t.ratio12, t.ratio23, t.ratio13].iter().any(|r| r != &q) {
        return Err("balanced 16/9 ratios are not all 16/9".into());
    }
    Ok("a = 12, r = (1, 3, 1), C = 13, e = (32, 4, 9)".into())
}

fn check_unimodular() -> Check {
    // Deterministic spread of even a values, including multiples of 4 and not.
    for k in 0..100u64 {
        let a = 2 + 2 * (k * 7_919 % 50_000) + k;
        let a = a + a % 2;
        let a1 = i128::from(a);
        let (a2, a3) = (a1 + 1, a1 + 2);
        for x in [0i128, 1, 1_000_000] {
            let l = |ai: i128| ai * x + 1;
            let (l1, l2, l3) = (l(a1), l(a2), l(a3));
            let vals = [
                a2 * l1 - a1 * l2,
                a3 * l2 - a2 * l3,
                a3 / 2 * l1 - a1 / 2 * l3,
            ];
            if vals != [1, 1, 1] {
                return Err(format!("a = {a}, x = {x}: {vals:?}"));
            }
        }
    }
    Ok("100 even a at x in {0, 1, 10^6}".into())
}

fn check_witness(table: &SpfTable) -> Check {
    let q = PosRational::from_u64(4, 3).expect("nonzero");
    let p = build_params(&q, &Decomposer::default()).map_err(|e| e.to_string())?;
    let scan = scan_witnesses(&p, 1, WITNESS_X_MAX, Some(table), ScanOptions::default())
        .map_err(|e| e.to_string())?;
    let counts = Pair::ALL.map(|pair| scan.count(pair));
    if counts != [569, 1149, 1701] {
        return Err(format!(
            "4/3 hit counts {counts:?} for x <= {WITNESS_X_MAX}"
        ));
    }
    for h in &scan.hits {
        let ratio = ratio_at(h.n, None).map_err(|e| e.to_string())?;
        if ratio != h.predicted {
            return Err(format!(
                "n = {} has ratio {ratio}, predicted {}",
                h.n, h.predicted
            ));
        }
    }
    Ok(format!(
        "{} hits for 4/3 with x <= {WITNESS_X_MAX}, all matched",
        scan.hits.len()
    ))
}

fn check_census(table: &SpfTable) -> Check {
    let q = PosRational::from_u64(16, 9).expect("nonzero");
    let n_max = 10_000;
    let primes = census_primes(n_max, Some(table));
    let c =
        scan_ratio_hits(&q, n_max, &primes, CensusOptions::default()).map_err(|e| e.to_string())?;
    if c.first_n != Some(3249) || c.count != 1 {
        return Err(format!(
            "16/9 census to {n_max}: first {:?}, count {}",
            c.first_n, c.count
        ));
    }
    Ok("first n with ratio 16/9 is 3249".into())
}
