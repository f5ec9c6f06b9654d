//! Divisor-function and semiprime machinery for 64-bit integers.
//!
//! Factorization goes through three tiers: a smallest-prime-factor table for
//! `n <= limit`, trial division by the primes below 1024, and Pollard–Brent
//! rho on whatever composite cofactor remains. The table is optional; without
//! it the same factorization is produced by the other two tiers.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::exactq::Factorization;

/// Primes below this bound are removed by trial division before rho.
const TRIAL_BOUND: u32 = 1024;

/// Largest limit accepted by [`build_spf`] (entries are stored as `u32`).
pub const MAX_SPF_LIMIT: u64 = u32::MAX as u64 - 1;

/// Smallest-prime-factor table for `2..=limit`.
#[derive(Clone, Debug)]
pub struct SpfTable {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

/// Linear sieve; every composite is crossed out exactly once by its
/// smallest prime factor.
pub fn build_spf(limit: u64) -> Result<SpfTable> {
    if limit < 2 {
        return Err(Error::Domain(format!(
            "spf limit must be at least 2, got {limit}"
        )));
    }
    if limit > MAX_SPF_LIMIT {
        return Err(Error::Capacity(format!(
            "spf limit {limit} exceeds {MAX_SPF_LIMIT}"
        )));
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            let m = i * p as usize;
            if p > si || m > n {
                break;
            }
            spf[m] = p;
        }
    }
    Ok(SpfTable { spf, primes })
}

impl SpfTable {
    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn covers(&self, n: u64) -> bool {
        n < self.spf.len() as u64
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: u64) -> Option<u64> {
        if n < 2 || !self.covers(n) {
            return None;
        }
        Some(u64::from(self.spf[n as usize]))
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Builds a table from raw entries without checking them. Used to inject
    /// faults into self-checks.
    #[doc(hidden)]
    pub fn from_raw_unchecked(spf: Vec<u32>) -> SpfTable {
        let primes = spf
            .iter()
            .enumerate()
            .skip(2)
            .filter(|&(i, &s)| s as usize == i)
            .map(|(i, _)| i as u32)
            .collect();
        SpfTable { spf, primes }
    }

    #[doc(hidden)]
    pub fn raw(&self) -> &[u32] {
        &self.spf
    }

    /// Returns the first `n <= upto` whose entry is not its least prime
    /// divisor, checked by plain trial division.
    pub fn find_violation(&self, upto: u64) -> Option<u64> {
        let upto = upto.min(self.limit());
        (2..=upto).find(|&n| self.spf(n) != Some(smallest_factor_by_trial(n)))
    }

    fn factor_into(&self, mut n: u64, out: &mut Vec<(u64, u32)>) {
        while n > 1 {
            let p = u64::from(self.spf[n as usize]);
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
}

fn smallest_factor_by_trial(n: u64) -> u64 {
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return d;
        }
        d += 1;
    }
    n
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        primes_up_to(u64::from(TRIAL_BOUND) - 1)
            .into_iter()
            .map(|p| p as u32)
            .collect()
    })
}

/// All primes `<= bound`, by a plain sieve of Eratosthenes.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut m = i * i;
        while m <= n {
            composite[m] = true;
            m += i;
        }
    }
    out
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// This base set is a proof of primality for every n < 2^64.
const MR_BASES: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

/// Deterministic Miller–Rabin for the full `u64` range.
pub fn is_prime64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &MR_BASES {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Returns a nontrivial factor of an odd composite `n` (Brent's variant of
/// Pollard rho, deterministic sequence of increments).
fn pollard_brent(n: u64) -> u64 {
    const BATCH: u64 = 128;
    for c in 1..n {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let mut x;
        let mut ys;
        let mut g;
        loop {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            loop {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
                if k >= r || g != 1 {
                    break;
                }
            }
            r *= 2;
            if g != 1 {
                break;
            }
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g != 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("rho failed on {n}")
}

/// Factors `n` with no prime factor below [`TRIAL_BOUND`].
fn split_large(n: u64, table: Option<&SpfTable>, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if let Some(t) = table.filter(|t| t.covers(n)) {
        t.factor_into(n, out);
        return;
    }
    if n < u64::from(TRIAL_BOUND) * u64::from(TRIAL_BOUND) || is_prime64(n) {
        out.push((n, 1));
        return;
    }
    let d = pollard_brent(n);
    split_large(d, table, out);
    split_large(n / d, table, out);
}

/// Prime factorization of `1 <= n < 2^64`.
pub fn factorize_u64(n: u64, table: Option<&SpfTable>) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("cannot factor 0".into()));
    }
    let mut raw = Vec::new();
    if let Some(t) = table.filter(|t| t.covers(n)) {
        t.factor_into(n, &mut raw);
        return Ok(Factorization::from_sorted_unchecked(raw));
    }
    let mut m = n;
    for &p in small_primes() {
        let p = u64::from(p);
        if p * p > m {
            break;
        }
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            raw.push((p, e));
        }
    }
    split_large(m, table, &mut raw);
    raw.sort_unstable();
    let mut merged: Vec<(u64, u32)> = Vec::with_capacity(raw.len());
    for (p, e) in raw {
        match merged.last_mut() {
            Some((q, f)) if *q == p => *f += e,
            _ => merged.push((p, e)),
        }
    }
    Ok(Factorization::from_sorted_unchecked(merged))
}

pub fn divisor_count(n: u64, table: Option<&SpfTable>) -> Result<u64> {
    let f = factorize_u64(n, table)?;
    Ok(f.entries().iter().map(|&(_, e)| u64::from(e) + 1).product())
}

/// Membership in E2(c): `n = p1 * p2` with `p1 != p2` prime and both `> c`.
pub fn is_e2(n: u64, c: u64, table: Option<&SpfTable>) -> bool {
    // The smallest such product is (c+1)(c+2).
    if (n as u128) < (c as u128 + 1) * (c as u128 + 2) {
        return false;
    }
    if let Some(t) = table.filter(|t| t.covers(n)) {
        let p = u64::from(t.spf[n as usize]);
        let m = n / p;
        return p > c && m != p && m > 1 && u64::from(t.spf[m as usize]) == m;
    }
    for &p in small_primes() {
        let p = u64::from(p);
        if n.is_multiple_of(p) {
            let m = n / p;
            return p > c && m != p && m > 1 && is_prime64(m);
        }
    }
    if is_prime64(n) {
        return false;
    }
    let d = pollard_brent(n);
    let e = n / d;
    d != e && d.min(e) > c && is_prime64(d) && is_prime64(e)
}

/// Divisor counts of `lo..lo+len` (with `lo >= 1`), given every prime up to
/// `sqrt(lo + len - 1)` in ascending order.
pub fn divisor_counts(lo: u64, len: usize, primes: &[u64]) -> Vec<u32> {
    assert!(lo >= 1, "divisor_counts starts at 1");
    let hi = lo + len as u64;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut d = vec![1u32; len];
    for &p in primes {
        if p.saturating_mul(p) >= hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        let mut i = (first - lo) as usize;
        while i < len {
            let mut e = 1u32;
            rem[i] /= p;
            while rem[i].is_multiple_of(p) {
                rem[i] /= p;
                e += 1;
            }
            d[i] *= e + 1;
            i += p as usize;
        }
    }
    for (di, &r) in d.iter_mut().zip(&rem) {
        if r > 1 {
            *di *= 2;
        }
    }
    d
}

/// `floor(sqrt(n))`
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_is_prime(n: u64) -> bool {
        n >= 2
            && (2..)
                .take_while(|d| d * d <= n)
                .all(|d| !n.is_multiple_of(d))
    }

    fn trial_divisor_count(n: u64) -> u64 {
        let mut c = 0;
        let mut d = 1;
        while d * d <= n {
            if n.is_multiple_of(d) {
                c += if d * d == n { 1 } else { 2 };
            }
            d += 1;
        }
        c
    }

    #[test]
    fn spf_examples() {
        let t = build_spf(10).unwrap();
        assert_eq!(t.spf(4), Some(2));
        assert_eq!(t.spf(9), Some(3));
        assert_eq!(t.spf(7), Some(7));
        assert_eq!(build_spf(2).unwrap().spf(2), Some(2));
        assert_eq!(build_spf(30).unwrap().spf(30), Some(2));
        assert!(matches!(build_spf(1), Err(Error::Domain(_))));
    }

    #[test]
    fn spf_invariant_holds() {
        let t = build_spf(20_000).unwrap();
        assert_eq!(t.find_violation(20_000), None);
    }

    #[test]
    fn spf_violation_detected() {
        let mut raw = build_spf(100).unwrap().raw().to_vec();
        raw[91] = 13;
        let t = SpfTable::from_raw_unchecked(raw);
        assert_eq!(t.find_violation(100), Some(91));
    }

    #[test]
    fn factorize_examples() {
        for table in [None, Some(&build_spf(1000).unwrap())] {
            assert!(factorize_u64(1, table).unwrap().is_empty());
            assert_eq!(
                factorize_u64(3249, table).unwrap().entries(),
                &[(3, 2), (19, 2)]
            );
            assert_eq!(
                factorize_u64(35, table).unwrap().entries(),
                &[(5, 1), (7, 1)]
            );
            assert!(matches!(factorize_u64(0, table), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn factorize_large() {
        // 2^64 - 1 = 3 * 5 * 17 * 257 * 641 * 65537 * 6700417
        let f = factorize_u64(u64::MAX, None).unwrap();
        assert_eq!(
            f.entries(),
            &[
                (3, 1),
                (5, 1),
                (17, 1),
                (257, 1),
                (641, 1),
                (65537, 1),
                (6700417, 1)
            ]
        );
        // product of two primes near 2^32
        let (p, q) = (4294967291u64, 4294967279u64);
        assert_eq!(
            factorize_u64(p * q, None).unwrap().entries(),
            &[(q, 1), (p, 1)]
        );
        let sq = 4294967291u64 * 4294967291;
        assert_eq!(
            factorize_u64(sq, None).unwrap().entries(),
            &[(4294967291, 2)]
        );
        let m61 = (1u64 << 61) - 1;
        assert_eq!(factorize_u64(m61, None).unwrap().entries(), &[(m61, 1)]);
    }

    #[test]
    fn factorize_agrees_with_and_without_table() {
        let t = build_spf(5_000).unwrap();
        for n in (1..200_000u64)
            .step_by(7)
            .chain([999_999_999_989 * 3, 1 << 62])
        {
            assert_eq!(
                factorize_u64(n, Some(&t)).unwrap(),
                factorize_u64(n, None).unwrap()
            );
        }
    }

    #[test]
    fn is_prime_examples() {
        assert!(is_prime64(13));
        assert!(!is_prime64(1));
        assert!(!is_prime64(3250));
        assert!(!is_prime64(0));
        assert!(is_prime64(18446744073709551557)); // largest 64-bit prime
                                                   // strong pseudoprimes to several small bases
        for c in [3215031751u64, 3825123056546413051, 341550071728321] {
            assert!(!is_prime64(c), "{c}");
        }
    }

    #[test]
    fn is_prime_matches_trial_division() {
        for n in 0..100_000u64 {
            assert_eq!(is_prime64(n), trial_is_prime(n), "{n}");
        }
    }

    #[test]
    fn divisor_count_examples() {
        assert_eq!(divisor_count(1, None).unwrap(), 1);
        assert_eq!(divisor_count(12, None).unwrap(), 6);
        assert_eq!(divisor_count(13, None).unwrap(), 2);
        assert_eq!(divisor_count(3250, None).unwrap(), 16);
        for n in 1..5_000 {
            assert_eq!(divisor_count(n, None).unwrap(), trial_divisor_count(n));
        }
    }

    #[test]
    fn e2_examples() {
        for table in [None, Some(&build_spf(100).unwrap())] {
            assert!(is_e2(35, 3, table));
            assert!(!is_e2(49, 3, table));
            assert!(!is_e2(35, 5, table));
            assert!(!is_e2(1, 1, table));
            assert!(!is_e2(13, 1, table));
            assert!(!is_e2(30, 1, table));
        }
        let big = 1_000_003u64 * 1_000_033;
        assert!(is_e2(big, 1_000_002, None));
        assert!(!is_e2(big, 1_000_003, None));
        assert!(!is_e2(1_000_003 * 1_000_003, 5, None));
        assert!(!is_e2(1_000_003 * 1_000_033 * 7, 5, None));
        assert!(is_e2(1021 * 1_000_000_007, 1000, None));
    }

    #[test]
    fn e2_matches_factorization() {
        let t = build_spf(3_000).unwrap();
        for n in 1..60_000u64 {
            for c in [1, 2, 5, 30] {
                let f = factorize_u64(n, None).unwrap();
                let e = f.entries();
                let expect = e.len() == 2 && e.iter().all(|&(p, k)| k == 1 && p > c);
                assert_eq!(is_e2(n, c, Some(&t)), expect, "{n} {c}");
                assert_eq!(is_e2(n, c, None), expect, "{n} {c}");
            }
        }
    }

    #[test]
    fn segmented_counts_match() {
        let primes = primes_up_to(1000);
        for lo in [1u64, 2, 97, 10_000, 999_000] {
            let d = divisor_counts(lo, 1000, &primes);
            for (i, &c) in d.iter().enumerate() {
                assert_eq!(u64::from(c), trial_divisor_count(lo + i as u64));
            }
        }
    }

    #[test]
    fn isqrt_edges() {
        for n in [0u64, 1, 2, 3, 4, 15, 16, 17, u64::MAX, (1 << 62) - 1] {
            let r = isqrt(n);
            assert!(r as u128 * r as u128 <= n as u128);
            assert!((r as u128 + 1) * (r as u128 + 1) > n as u128);
        }
    }
}
