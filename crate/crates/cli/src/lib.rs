//! Command-line surface: `decompose`, `build`, `witness-scan`, `ratio-scan`
//! and `selftest`.
//!
//! Every command writes to a caller-supplied sink so the output can be
//! compared byte for byte in tests. Exit codes: 0 success (including an
//! inconclusive scan), 1 usage or input error, 2 invariant violation.

pub mod selftest;

use std::fmt::Write as _;
use std::io::{self, Write};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use divratio::construct::{
    augment_params, augmentation_primes, balance_exponents, build_from_split, closed_form_value,
    predicted_group_value, predicted_ratios, split_for_construction, validate_params, RatioTriple,
    SieveParams, Split,
};
use divratio::genword::{Decomposer, GenWord};
use divratio::sieve::{build_spf, SpfTable};
use divratio::witness::{
    census_primes, scan_ratio_hits, scan_witnesses, CensusOptions, Pair, RatioCensus, ScanOptions,
    WitnessHit, WitnessScan, DEFAULT_SAMPLE_CAP,
};
use divratio::{Error, PosRational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

pub const DEFAULT_SPF_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "divratio",
    version,
    about = "Consecutive divisor-count ratios d(n+1)/d(n)"
)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Size of the smallest-prime-factor table used by scans.
    #[arg(long, global = true, default_value_t = DEFAULT_SPF_LIMIT, value_parser = clap::value_parser!(u64).range(2..))]
    pub spf_limit: u64,

    /// Maximum number of sample entries kept by `ratio-scan`.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLE_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub sample_cap: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Write TARGET as a word in the generators f(x,y).
    Decompose {
        #[arg(value_parser = parse_target)]
        target: PosRational,
    },
    /// Build sieve parameters for TARGET and every derived quantity.
    Build {
        #[arg(value_parser = parse_target)]
        target: PosRational,
    },
    /// Scan 1 <= x <= X_MAX for witnesses of the parameters built for TARGET.
    WitnessScan {
        #[arg(value_parser = parse_target)]
        target: PosRational,
        #[arg(long)]
        x_max: u64,
    },
    /// Count n <= N_MAX with d(n+1)/d(n) = TARGET.
    RatioScan {
        #[arg(value_parser = parse_target)]
        target: PosRational,
        #[arg(long)]
        n_max: u64,
    },
    /// Run reduced-scale invariant checks.
    Selftest,
}

fn parse_target(s: &str) -> Result<PosRational, String> {
    s.parse::<PosRational>().map_err(|e| e.to_string())
}

/// Parsed command line.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
    pub spf_limit: u64,
    pub sample_cap: usize,
}

impl From<Cli> for RunConfig {
    fn from(c: Cli) -> Self {
        RunConfig {
            command: c.command,
            format: c.format,
            spf_limit: c.spf_limit,
            sample_cap: c.sample_cap as usize,
        }
    }
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            format: Format::Json,
            spf_limit: DEFAULT_SPF_LIMIT,
            sample_cap: DEFAULT_SAMPLE_CAP,
        }
    }

    pub fn with_format(mut self, format: Format) -> Self {
        self.format = format;
        self
    }
}

/// A command failure tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn at(stage: &'static str) -> impl FnOnce(Error) -> Failure {
        move |e| {
            let code = match e {
                Error::Counterexample(_) => EXIT_VIOLATION,
                _ => EXIT_USAGE,
            };
            Failure {
                stage,
                code,
                message: e.to_string(),
            }
        }
    }

    fn violation(stage: &'static str, message: String) -> Failure {
        Failure {
            stage,
            code: EXIT_VIOLATION,
            message,
        }
    }
}

type CmdResult = Result<String, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli.into(), out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            code
        }
    }
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cfg.command {
        Command::Decompose { target } => cmd_decompose(target, cfg.format),
        Command::Build { target } => cmd_build(target, cfg.format),
        Command::WitnessScan { target, x_max } => {
            with_table(cfg).and_then(|t| cmd_witness_scan(target, *x_max, cfg.format, &t))
        }
        Command::RatioScan { target, n_max } => with_table(cfg)
            .and_then(|t| cmd_ratio_scan(target, *n_max, cfg.format, cfg.sample_cap, &t)),
        Command::Selftest => with_table(cfg).and_then(|t| {
            let report = selftest::run(&t);
            let text = report.render(cfg.format);
            if report.passed() {
                Ok(text)
            } else {
                let _ = out.write_all(text.as_bytes());
                Err(Failure::violation(
                    "selftest",
                    "one or more invariants failed".into(),
                ))
            }
        }),
    };
    match result {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_USAGE
            }
        },
        Err(f) => {
            let _ = writeln!(err, "error [{}]: {}", f.stage, f.message);
            f.code
        }
    }
}

fn with_table(cfg: &RunConfig) -> Result<SpfTable, Failure> {
    build_spf(cfg.spf_limit).map_err(Failure::at("spf-table"))
}

fn decomposer() -> Decomposer {
    Decomposer::default()
}

/// Quotes a CSV field when needed.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_line(v: &Value) -> String {
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn json_doc(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn cmd_decompose(target: &PosRational, format: Format) -> CmdResult {
    let word = decomposer()
        .decompose(target)
        .map_err(Failure::at("decompose"))?;
    let value = word.value();
    let pass = &value == target;
    let verdict = if pass { "PASS" } else { "FAIL" };
    let text = match format {
        Format::Json => json_doc(&json!({
            "target": target.to_string(),
            "word": word.to_string(),
            "terms": word_terms(&word),
            "value": value.to_string(),
            "round_trip": verdict,
        })),
        Format::Text => format!("word: {word}\nvalue: {value}\nround-trip: {verdict}\n"),
        Format::Csv => {
            let mut s = String::from("x,y,exp\n");
            for (g, e) in word.terms() {
                let _ = writeln!(s, "{},{},{}", g.x(), g.y(), e);
            }
            s
        }
    };
    if !pass {
        return Err(Failure::violation(
            "decompose",
            format!("word evaluates to {value}, not {target}"),
        ));
    }
    Ok(text)
}

fn word_terms(w: &GenWord) -> Value {
    Value::Array(
        w.terms()
            .iter()
            .map(|(g, e)| json!({"x": g.x().to_string(), "y": g.y().to_string(), "exp": e.to_string()}))
            .collect(),
    )
}

fn split_json(s: &Split) -> Value {
    let pairs = |v: &[divratio::genword::Generator]| -> Value {
        v.iter()
            .map(|g| json!([g.x().to_string(), g.y().to_string()]))
            .collect()
    };
    json!({"positives": pairs(&s.positives), "negatives": pairs(&s.negatives)})
}

fn triple_json(t: &RatioTriple) -> Value {
    json!({
        "ratio12": t.ratio12.to_string(),
        "ratio23": t.ratio23.to_string(),
        "ratio13": t.ratio13.to_string(),
        "d": {
            "a2r1": t.d.a2r1.to_string(),
            "a1r2": t.d.a1r2.to_string(),
            "a3r2": t.d.a3r2.to_string(),
            "a2r3": t.d.a2r3.to_string(),
            "half_a3r1": t.d.half_a3r1.to_string(),
            "half_a1r3": t.d.half_a1r3.to_string(),
        },
    })
}

/// Every artifact of the construction for one target.
pub struct BuildReport {
    pub target: PosRational,
    pub word: GenWord,
    pub split: Split,
    pub params: SieveParams,
    pub ratios: Option<RatioTriple>,
    pub exponents: Option<[BigUint; 3]>,
    pub augmentation_primes: Option<[u64; 3]>,
    pub augmented: Option<SieveParams>,
    pub augmented_ratios: Option<RatioTriple>,
    pub group_value: PosRational,
    pub closed_form: PosRational,
}

pub fn build_report(target: &PosRational) -> Result<BuildReport, Failure> {
    let d = decomposer();
    let word = d.decompose(target).map_err(Failure::at("decompose"))?;
    let split = split_for_construction(target, &d).map_err(Failure::at("split"))?;
    let params = build_from_split(&split, d.table()).map_err(Failure::at("build"))?;
    if let Err(v) = validate_params(&params) {
        return Err(Failure::violation("validate", v.to_string()));
    }
    let group_value = predicted_group_value(&params).map_err(Failure::at("predict"))?;
    let closed_form = closed_form_value(&split);
    if &group_value != target || &closed_form != target {
        return Err(Failure::violation(
            "predict",
            format!("group value {group_value} / closed form {closed_form} differ from {target}"),
        ));
    }
    let mut report = BuildReport {
        target: target.clone(),
        word,
        split,
        params,
        ratios: None,
        exponents: None,
        augmentation_primes: None,
        augmented: None,
        augmented_ratios: None,
        group_value,
        closed_form,
    };
    let ratios = match predicted_ratios(&report.params) {
        Ok(t) => t,
        Err(Error::Unfactored(_)) => return Ok(report),
        Err(e) => return Err(Failure::at("predict")(e)),
    };
    let e = balance_exponents(&ratios);
    let augmented = augment_params(&report.params, &e).map_err(Failure::at("augment"))?;
    if let Err(v) = validate_params(&augmented) {
        return Err(Failure::violation("augment", v.to_string()));
    }
    let aug_ratios = predicted_ratios(&augmented).map_err(Failure::at("augment"))?;
    for r in [
        &aug_ratios.ratio12,
        &aug_ratios.ratio23,
        &aug_ratios.ratio13,
    ] {
        if r != target {
            return Err(Failure::violation(
                "balance",
                format!("balanced ratio {r} differs from {target}"),
            ));
        }
    }
    report.augmentation_primes = Some(augmentation_primes(&report.params));
    report.ratios = Some(ratios);
    report.exponents = Some(e);
    report.augmented = Some(augmented);
    report.augmented_ratios = Some(aug_ratios);
    Ok(report)
}

impl BuildReport {
    pub fn to_json(&self) -> Value {
        let opt = |v: Option<Value>| v.unwrap_or(Value::Null);
        json!({
            "target": self.target.to_string(),
            "word": self.word.to_string(),
            "split": split_json(&self.split),
            "params": self.params.to_json(),
            "ratios": opt(self.ratios.as_ref().map(triple_json)),
            "exponents": opt(self.exponents.as_ref().map(|e| json!(e.iter().map(|x| x.to_string()).collect::<Vec<_>>()))),
            "augmentation_primes": opt(self.augmentation_primes.map(|p| json!(p.iter().map(|x| x.to_string()).collect::<Vec<_>>()))),
            "augmented": opt(self.augmented.as_ref().map(SieveParams::to_json)),
            "augmented_ratios": opt(self.augmented_ratios.as_ref().map(triple_json)),
            "group_value": self.group_value.to_string(),
            "closed_form": self.closed_form.to_string(),
        })
    }

    fn fields(&self) -> Vec<(String, String)> {
        let mut f = vec![
            ("target".to_string(), self.target.to_string()),
            ("word".to_string(), self.word.to_string()),
            ("a".to_string(), self.params.a().to_string()),
        ];
        let add_params = |f: &mut Vec<(String, String)>, prefix: &str, p: &SieveParams| {
            for i in 1..=3 {
                f.push((format!("{prefix}r{i}"), p.r(i).value().to_string()));
            }
            let c = p.c().map_or("unknown".to_string(), |c| c.to_string());
            f.push((format!("{prefix}C"), c));
        };
        add_params(&mut f, "", &self.params);
        if let Some(t) = &self.ratios {
            f.push(("ratio12".into(), t.ratio12.to_string()));
            f.push(("ratio23".into(), t.ratio23.to_string()));
            f.push(("ratio13".into(), t.ratio13.to_string()));
        }
        if let Some(e) = &self.exponents {
            for (i, x) in e.iter().enumerate() {
                f.push((format!("e{}", i + 1), x.to_string()));
            }
        }
        if let Some(p) = &self.augmented {
            add_params(&mut f, "augmented_", p);
        }
        f.push(("group_value".into(), self.group_value.to_string()));
        f.push(("closed_form".into(), self.closed_form.to_string()));
        f
    }
}

pub fn cmd_build(target: &PosRational, format: Format) -> CmdResult {
    let report = build_report(target)?;
    Ok(match format {
        Format::Json => json_doc(&report.to_json()),
        Format::Text => report
            .fields()
            .into_iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect(),
        Format::Csv => {
            let mut s = String::from("field,value\n");
            for (k, v) in report.fields() {
                let _ = writeln!(s, "{},{}", k, csv_field(&v));
            }
            s
        }
    })
}

fn hit_json(h: &WitnessHit) -> Value {
    json!({
        "x": h.x.to_string(),
        "pair": h.pair.label(),
        "n": h.n.to_string(),
        "d_n": h.d_n.to_string(),
        "d_n1": h.d_n1.to_string(),
        "ratio": h.ratio.to_string(),
        "predicted": h.predicted.to_string(),
        "matched": h.matched,
    })
}

pub const HIT_CSV_HEADER: &str = "x,pair,n,d_n,d_n1,ratio,predicted,matched";

fn hit_csv(h: &WitnessHit) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        h.x,
        h.pair.label(),
        h.n,
        h.d_n,
        h.d_n1,
        h.ratio,
        h.predicted,
        h.matched
    )
}

fn scan_summary(
    target: &PosRational,
    x_max: u64,
    params: &SieveParams,
    scan: &WitnessScan,
) -> Value {
    let counts: serde_json::Map<String, Value> = Pair::ALL
        .iter()
        .map(|&p| {
            (
                p.label().to_string(),
                Value::String(scan.count(p).to_string()),
            )
        })
        .collect();
    let status = if scan.hits.is_empty() {
        "inconclusive"
    } else {
        "verified"
    };
    json!({
        "target": target.to_string(),
        "x_max": x_max.to_string(),
        "a": params.a().to_string(),
        "C": params.c().map(|c| c.to_string()),
        "counts": counts,
        "hits": scan.hits.len().to_string(),
        "bound_at": scan.bound_at.map(|x| x.to_string()),
        "status": status,
    })
}

pub fn cmd_witness_scan(
    target: &PosRational,
    x_max: u64,
    format: Format,
    table: &SpfTable,
) -> CmdResult {
    let d = decomposer();
    let split = split_for_construction(target, &d).map_err(Failure::at("split"))?;
    let params = build_from_split(&split, Some(table)).map_err(Failure::at("build"))?;
    let scan = match scan_witnesses(&params, 1, x_max, Some(table), ScanOptions::default()) {
        Ok(s) => s,
        Err(Error::Counterexample(h)) => {
            return Err(Failure::violation(
                "witness-scan",
                format!("counterexample for target {target}: {}", hit_json(&h)),
            ))
        }
        Err(e) => return Err(Failure::at("witness-scan")(e)),
    };
    let summary = scan_summary(target, x_max, &params, &scan);
    let mut s = String::new();
    match format {
        Format::Json => {
            for h in &scan.hits {
                s.push_str(&json_line(&hit_json(h)));
            }
            s.push_str(&json_line(&json!({ "summary": summary })));
        }
        Format::Csv => {
            s.push_str(HIT_CSV_HEADER);
            s.push('\n');
            for h in &scan.hits {
                s.push_str(&hit_csv(h));
            }
        }
        Format::Text => {
            for h in &scan.hits {
                let _ = writeln!(s, "{h}");
            }
            let _ = writeln!(
                s,
                "target {target}: a = {}, C = {}",
                params.a(),
                params.c().map_or("unknown".into(), |c| c.to_string())
            );
            for p in Pair::ALL {
                let _ = writeln!(s, "pair {p}: {} hits", scan.count(p));
            }
            if let Some(x) = scan.bound_at {
                let _ = writeln!(s, "scan stopped at x = {x}: values would reach 2^63");
            }
            let _ = writeln!(
                s,
                "status: {}",
                summary["status"].as_str().unwrap_or_default()
            );
        }
    }
    Ok(s)
}

pub fn census_json(c: &RatioCensus) -> Value {
    json!({
        "target": c.target.to_string(),
        "n_max": c.n_max.to_string(),
        "count": c.count.to_string(),
        "first_n": c.first_n.map(|n| n.to_string()),
        "sample": c.sample.iter().map(u64::to_string).collect::<Vec<_>>(),
    })
}

pub fn cmd_ratio_scan(
    target: &PosRational,
    n_max: u64,
    format: Format,
    sample_cap: usize,
    table: &SpfTable,
) -> CmdResult {
    let primes = census_primes(n_max, Some(table));
    let opts = CensusOptions {
        sample_cap,
        ..CensusOptions::default()
    };
    let c = scan_ratio_hits(target, n_max, &primes, opts).map_err(Failure::at("ratio-scan"))?;
    let first = c.first_n.map_or(String::new(), |n| n.to_string());
    let sample = c
        .sample
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    Ok(match format {
        Format::Json => json_doc(&census_json(&c)),
        Format::Csv => format!(
            "target,n_max,count,first_n,sample\n{},{},{},{},{}\n",
            c.target, c.n_max, c.count, first, sample
        ),
        Format::Text => format!(
            "target: {}\nn_max: {}\ncount: {}\nfirst_n: {}\nsample: {}\n",
            c.target,
            c.n_max,
            c.count,
            if first.is_empty() { "none" } else { &first },
            sample
        ),
    })
}

/// Writes to stdout/stderr and returns the exit code.
pub fn main_entry() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = main_with_args(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
