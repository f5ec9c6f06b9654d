//! Empirical verification of the divisor-ratio identities.
//!
//! For a parameter set and an `x` where two cofactors `L_i(x)/r_i` and
//! `L_j(x)/r_j` lie in E2(C), the unimodular identities give an `n` whose
//! ratio `d(n+1)/d(n)` is predicted by the known parts alone. The scan
//! recomputes `d(n)` and `d(n+1)` from scratch and compares.
//!
//! All per-`x` arithmetic is done in `u64` below 2^63. The range is split
//! into fixed blocks that are scanned independently and concatenated in
//! order, so the output does not depend on how blocks are scheduled.

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::construct::{predicted_ratios, SieveParams};
use crate::error::{Error, Result};
use crate::exactq::{Factorization, PosRational};
use crate::sieve::{
    divisor_count, divisor_counts, factorize_u64, is_e2, isqrt, primes_up_to, SpfTable,
};

/// Every intermediate value of a scan stays strictly below this.
pub const SCAN_BOUND: u64 = 1 << 63;

/// The pair of linear forms whose cofactors are both in E2(C).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pair {
    /// `n = a1·L2(x)`
    P12,
    /// `n = a2·L3(x)`
    P23,
    /// `n = (a1/2)·L3(x)`
    P13,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P12, Pair::P23, Pair::P13];

    /// One-based indices `(i, j)`.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Pair::P12 => (1, 2),
            Pair::P23 => (2, 3),
            Pair::P13 => (1, 3),
        }
    }

    /// Machine-friendly label, e.g. `1-2`.
    pub fn label(self) -> &'static str {
        match self {
            Pair::P12 => "1-2",
            Pair::P23 => "2-3",
            Pair::P13 => "1-3",
        }
    }

    fn slot(self) -> usize {
        match self {
            Pair::P12 => 0,
            Pair::P23 => 1,
            Pair::P13 => 2,
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.indices();
        write!(f, "({i},{j})")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessHit {
    pub x: u64,
    pub pair: Pair,
    pub n: u64,
    pub d_n: u64,
    pub d_n1: u64,
    pub ratio: PosRational,
    pub predicted: PosRational,
    pub matched: bool,
}

impl fmt::Display for WitnessHit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x={} pair={} n={} d(n)={} d(n+1)={} ratio={} predicted={} matched={}",
            self.x,
            self.pair,
            self.n,
            self.d_n,
            self.d_n1,
            self.ratio,
            self.predicted,
            self.matched
        )
    }
}

/// `d(n+1)/d(n)` for `1 <= n < 2^64 - 1`.
pub fn ratio_at(n: u64, table: Option<&SpfTable>) -> Result<PosRational> {
    if n == 0 || n == u64::MAX {
        return Err(Error::Domain(format!(
            "ratio_at needs 1 <= n < 2^64 - 1, got {n}"
        )));
    }
    let dn = divisor_count(n, table)?;
    let dn1 = divisor_count(n + 1, table)?;
    PosRational::from_u64(dn1, dn)
}

/// Parameters lowered to machine words for scanning.
pub struct ScanContext<'t> {
    a: [u64; 3],
    r: [u64; 3],
    c: u64,
    /// Known part of `n` for each pair, by [`Pair::slot`].
    known: [Factorization; 3],
    known_value: [u64; 3],
    predicted: [PosRational; 3],
    x_limit: u64,
    table: Option<&'t SpfTable>,
}

fn small(v: &BigUint) -> Option<u64> {
    v.to_u64().filter(|&v| v < SCAN_BOUND)
}

impl<'t> ScanContext<'t> {
    /// Fails with [`Error::ScanBound`] at `x = 1` when the parameters
    /// themselves do not fit below 2^63.
    pub fn new(p: &SieveParams, table: Option<&'t SpfTable>) -> Result<Self> {
        let out_of_range = Error::ScanBound { x: 1 };
        let a3 = p.a3();
        let a = match (small(p.a()), small(p.a2().value()), small(a3.value())) {
            (Some(a1), Some(a2), Some(a3)) => [a1, a2, a3],
            _ => return Err(out_of_range),
        };
        let mut r = [0u64; 3];
        for (i, slot) in r.iter_mut().enumerate() {
            *slot = small(p.r(i + 1).value()).ok_or(Error::ScanBound { x: 1 })?;
        }
        let c = p.c().ok_or(Error::Unfactored("a + 1"))?;
        let triple = predicted_ratios(p)?;
        let parts = p.known_parts()?;
        let known = [parts.a1r2, parts.a2r3, parts.half_a1r3];
        let mut known_value = [0u64; 3];
        for (slot, k) in known_value.iter_mut().zip(&known) {
            *slot = small(k.value()).ok_or(Error::ScanBound { x: 1 })?;
        }
        // The largest value touched for a given x is a3·L2(x) = n + 1 of
        // pair (2,3); every other L-value, n and n + 1 is smaller.
        let max_l2 = (SCAN_BOUND - 1) / a[2];
        let x_limit = if max_l2 == 0 { 0 } else { (max_l2 - 1) / a[1] };
        Ok(ScanContext {
            a,
            r,
            c,
            known: known.map(|k| k.factors().clone()),
            known_value,
            predicted: [triple.ratio12, triple.ratio23, triple.ratio13],
            x_limit,
            table,
        })
    }

    /// Largest `x` whose values all stay below 2^63.
    pub fn x_limit(&self) -> u64 {
        self.x_limit
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn predicted(&self, pair: Pair) -> &PosRational {
        &self.predicted[pair.slot()]
    }

    fn check_x(&self, x: u64) -> Result<()> {
        if x == 0 {
            return Err(Error::Domain("x must be positive".into()));
        }
        if x > self.x_limit {
            return Err(Error::ScanBound { x });
        }
        Ok(())
    }

    /// `L_i(x)` for one-based `i`.
    fn l(&self, i: usize, x: u64) -> u64 {
        self.a[i - 1] * x + 1
    }

    /// `L_i(x) / r_i` when the division is exact.
    fn cofactor(&self, i: usize, x: u64) -> Option<u64> {
        let l = self.l(i, x);
        let r = self.r[i - 1];
        l.is_multiple_of(r).then(|| l / r)
    }

    fn in_e2(&self, i: usize, x: u64) -> bool {
        self.cofactor(i, x)
            .is_some_and(|s| is_e2(s, self.c, self.table))
    }

    /// `n` for the pair together with its factorization, assembled from the
    /// known part and the factorization of the cofactor `L_j(x)/r_j`.
    pub fn pair_n(&self, pair: Pair, x: u64) -> Result<(u64, Factorization)> {
        self.check_x(x)?;
        let (i, j) = pair.indices();
        if self.cofactor(i, x).is_none() {
            return Err(Error::Precondition(format!(
                "r{i} does not divide L{i}({x})"
            )));
        }
        let s = self
            .cofactor(j, x)
            .ok_or_else(|| Error::Precondition(format!("r{j} does not divide L{j}({x})")))?;
        let slot = pair.slot();
        let n = self.known_value[slot] * s;
        let f = self.known[slot].merge(&factorize_u64(s, self.table)?);
        Ok((n, f))
    }

    fn hit(&self, pair: Pair, x: u64) -> Result<WitnessHit> {
        let (n, _) = self.pair_n(pair, x)?;
        let d_n = divisor_count(n, self.table)?;
        let d_n1 = divisor_count(n + 1, self.table)?;
        let ratio = PosRational::from_u64(d_n1, d_n)?;
        let predicted = self.predicted(pair).clone();
        let matched = ratio == predicted;
        Ok(WitnessHit {
            x,
            pair,
            n,
            d_n,
            d_n1,
            ratio,
            predicted,
            matched,
        })
    }

    /// A hit when both cofactors of the pair are integral and in E2(C),
    /// with `d(n)` and `d(n+1)` recomputed by factoring `n` and `n+1`.
    pub fn check_pair(&self, pair: Pair, x: u64) -> Result<Option<WitnessHit>> {
        self.check_x(x)?;
        let (i, j) = pair.indices();
        if !(self.in_e2(i, x) && self.in_e2(j, x)) {
            return Ok(None);
        }
        self.hit(pair, x).map(Some)
    }

    /// All hits at one `x`, in pair order. `x` must be within the limit.
    fn hits_at(&self, x: u64, out: &mut Vec<WitnessHit>) -> Result<()> {
        let e1 = self.in_e2(1, x);
        let e2 = self.in_e2(2, x);
        if !e1 && !e2 {
            return Ok(());
        }
        let e3 = self.in_e2(3, x);
        for (pair, ok) in [
            (Pair::P12, e1 && e2),
            (Pair::P23, e2 && e3),
            (Pair::P13, e1 && e3),
        ] {
            if ok {
                let h = self.hit(pair, x)?;
                if !h.matched {
                    return Err(Error::Counterexample(Box::new(h)));
                }
                out.push(h);
            }
        }
        Ok(())
    }

    fn scan_block(&self, lo: u64, hi: u64) -> Result<Vec<WitnessHit>> {
        let mut out = Vec::new();
        for x in lo..=hi {
            self.hits_at(x, &mut out)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub block: u64,
    pub parallel: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            block: 1 << 14,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessScan {
    pub hits: Vec<WitnessHit>,
    /// First `x` left unscanned because values would reach 2^63.
    pub bound_at: Option<u64>,
}

impl WitnessScan {
    pub fn count(&self, pair: Pair) -> usize {
        self.hits.iter().filter(|h| h.pair == pair).count()
    }
}

/// Splits `lo..=hi` into consecutive blocks of at most `block` values.
fn blocks(lo: u64, hi: u64, block: u64) -> Vec<(u64, u64)> {
    let block = block.max(1);
    let mut out = Vec::new();
    let mut start = lo;
    while start <= hi {
        let end = start.saturating_add(block - 1).min(hi);
        out.push((start, end));
        if end == u64::MAX {
            break;
        }
        start = end + 1;
    }
    out
}

/// Runs `f` over the blocks and returns results in block order.
fn map_blocks<T, F>(blocks: &[(u64, u64)], parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    if parallel {
        blocks.par_iter().map(|&(lo, hi)| f(lo, hi)).collect()
    } else {
        blocks.iter().map(|&(lo, hi)| f(lo, hi)).collect()
    }
}

/// Every witness with `x_lo <= x <= x_hi`, ascending in `x` then pair.
///
/// A hit whose recomputed ratio differs from the prediction aborts the scan
/// with [`Error::Counterexample`] (the one with the smallest `x`).
pub fn scan_witnesses(
    p: &SieveParams,
    x_lo: u64,
    x_hi: u64,
    table: Option<&SpfTable>,
    opts: ScanOptions,
) -> Result<WitnessScan> {
    let lo = x_lo.max(1);
    if lo > x_hi {
        return Ok(WitnessScan {
            hits: Vec::new(),
            bound_at: None,
        });
    }
    let ctx = match ScanContext::new(p, table) {
        Ok(ctx) => ctx,
        Err(Error::ScanBound { .. }) => {
            return Ok(WitnessScan {
                hits: Vec::new(),
                bound_at: Some(lo),
            })
        }
        Err(e) => return Err(e),
    };
    let hi = x_hi.min(ctx.x_limit());
    let bound_at = (x_hi > ctx.x_limit()).then(|| lo.max(ctx.x_limit() + 1));
    let parts = blocks(lo, hi, opts.block);
    let results = map_blocks(&parts, opts.parallel, |a, b| ctx.scan_block(a, b));
    let mut hits = Vec::new();
    for r in results {
        hits.extend(r?);
    }
    Ok(WitnessScan { hits, bound_at })
}

pub const DEFAULT_SAMPLE_CAP: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioCensus {
    pub target: PosRational,
    pub n_max: u64,
    pub count: u64,
    pub first_n: Option<u64>,
    /// The first hits in ascending order, at most the sample cap of them.
    pub sample: Vec<u64>,
}

#[derive(Clone, Copy, Debug)]
pub struct CensusOptions {
    pub sample_cap: usize,
    pub block: u64,
    pub parallel: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            sample_cap: DEFAULT_SAMPLE_CAP,
            block: 1 << 16,
            parallel: true,
        }
    }
}

/// Primes up to `sqrt(n_max + 1)`, taken from the table when it reaches far
/// enough.
pub fn census_primes(n_max: u64, table: Option<&SpfTable>) -> Vec<u64> {
    let root = isqrt(n_max.saturating_add(1));
    match table {
        Some(t) if t.limit() >= root => t
            .primes()
            .iter()
            .map(|&p| u64::from(p))
            .take_while(|&p| p <= root)
            .collect(),
        _ => primes_up_to(root),
    }
}

struct Tally {
    count: u64,
    first: Option<u64>,
    sample: Vec<u64>,
}

/// One pass over `1..=n_max` counting `d(n+1)/d(n) = target` for every
/// target at once. `primes` must contain every prime up to
/// `sqrt(n_max + 1)`.
pub fn census_many(
    targets: &[PosRational],
    n_max: u64,
    primes: &[u64],
    opts: CensusOptions,
) -> Result<Vec<RatioCensus>> {
    if n_max >= u64::MAX - 1 {
        return Err(Error::Domain(format!(
            "n_max must be below 2^64 - 1, got {n_max}"
        )));
    }
    let root = isqrt(n_max + 1);
    let last = primes.last().copied().unwrap_or(1);
    if last < root && (last + 1..=root).any(crate::sieve::is_prime64) {
        return Err(Error::Precondition(format!(
            "need every prime up to {root}"
        )));
    }
    let wanted: Vec<Option<(u64, u64)>> = targets.iter().map(PosRational::to_u64_pair).collect();
    let cap = opts.sample_cap;
    let parts = blocks(1, n_max, opts.block);
    let per_block = map_blocks(&parts, opts.parallel, |lo, hi| {
        let len = (hi - lo + 2) as usize;
        let d = divisor_counts(lo, len, primes);
        let mut tallies: Vec<Tally> = wanted
            .iter()
            .map(|_| Tally {
                count: 0,
                first: None,
                sample: Vec::new(),
            })
            .collect();
        for k in 0..len - 1 {
            let (dn, dn1) = (u64::from(d[k]), u64::from(d[k + 1]));
            for (t, w) in tallies.iter_mut().zip(&wanted) {
                if let Some((num, den)) = *w {
                    if u128::from(dn1) * u128::from(den) == u128::from(dn) * u128::from(num) {
                        t.count += 1;
                        t.first.get_or_insert(lo + k as u64);
                        if t.sample.len() < cap {
                            t.sample.push(lo + k as u64);
                        }
                    }
                }
            }
        }
        tallies
    });
    let mut out: Vec<RatioCensus> = targets
        .iter()
        .map(|t| RatioCensus {
            target: t.clone(),
            n_max,
            count: 0,
            first_n: None,
            sample: Vec::new(),
        })
        .collect();
    for tallies in per_block {
        for (c, t) in out.iter_mut().zip(tallies) {
            c.count += t.count;
            if c.first_n.is_none() {
                c.first_n = t.first;
            }
            let room = cap - c.sample.len();
            c.sample.extend(t.sample.into_iter().take(room));
        }
    }
    Ok(out)
}

pub fn scan_ratio_hits(
    target: &PosRational,
    n_max: u64,
    primes: &[u64],
    opts: CensusOptions,
) -> Result<RatioCensus> {
    Ok(
        census_many(std::slice::from_ref(target), n_max, primes, opts)?
            .pop()
            .expect("one target"),
    )
}
