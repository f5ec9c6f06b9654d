//! Exact arithmetic on positive rationals and on integers that carry their
//! own prime factorization.
//!
//! Constructed parameters quickly outgrow 64 bits (a prime raised to the
//! 31st power is already ~72 bits), and factoring them after the fact is not
//! an option. [`FactoredInt`] keeps the factorization alongside the value so
//! that the divisor function is read off the exponents.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sieve::is_prime64;

/// A strictly positive rational number, always stored in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PosRational {
    num: BigUint,
    den: BigUint,
}

impl PosRational {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if num.is_zero() || den.is_zero() {
            return Err(Error::Domain(format!(
                "rational {num}/{den} is not strictly positive"
            )));
        }
        Ok(Self::reduced(num, den))
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self> {
        Self::new(BigUint::from(num), BigUint::from(den))
    }

    pub fn from_integer(n: BigUint) -> Result<Self> {
        Self::new(n, BigUint::one())
    }

    pub fn one() -> Self {
        PosRational {
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    fn reduced(num: BigUint, den: BigUint) -> Self {
        let g = num.gcd(&den);
        if g.is_one() {
            PosRational { num, den }
        } else {
            PosRational {
                num: num / &g,
                den: den / &g,
            }
        }
    }

    pub fn numer(&self) -> &BigUint {
        &self.num
    }

    pub fn denom(&self) -> &BigUint {
        &self.den
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// Numerator and denominator as machine words, if both fit.
    pub fn to_u64_pair(&self) -> Option<(u64, u64)> {
        Some((self.num.to_u64()?, self.den.to_u64()?))
    }

    pub fn mul(&self, other: &PosRational) -> PosRational {
        // Cross-cancel first so intermediate products stay small.
        let g1 = self.num.gcd(&other.den);
        let g2 = other.num.gcd(&self.den);
        PosRational {
            num: (&self.num / &g1) * (&other.num / &g2),
            den: (&self.den / &g2) * (&other.den / &g1),
        }
    }

    pub fn inv(&self) -> PosRational {
        PosRational {
            num: self.den.clone(),
            den: self.num.clone(),
        }
    }

    pub fn div(&self, other: &PosRational) -> PosRational {
        self.mul(&other.inv())
    }

    /// Integer power with a signed exponent.
    pub fn pow(&self, exp: i64) -> PosRational {
        let e = exp.unsigned_abs();
        let num = Pow::pow(&self.num, e);
        let den = Pow::pow(&self.den, e);
        if exp >= 0 {
            PosRational { num, den }
        } else {
            PosRational { num: den, den: num }
        }
    }

    pub fn mul_integer(&self, k: &BigUint) -> Result<PosRational> {
        PosRational::new(&self.num * k, self.den.clone())
    }
}

impl Ord for PosRational {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for PosRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PosRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for PosRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_positive_decimal(s: &str) -> Result<BigUint> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("`{s}` is not a decimal integer")));
    }
    BigUint::from_str(s).map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

/// Accepts `m/n` or a bare `m`. Decimal points and signs are rejected.
impl FromStr for PosRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (parse_positive_decimal(n)?, parse_positive_decimal(d)?),
            None => (parse_positive_decimal(s)?, BigUint::one()),
        };
        PosRational::new(num, den)
    }
}

/// Prime factorization with strictly ascending primes and nonzero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Factorization {
    entries: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn empty() -> Self {
        Factorization::default()
    }

    /// Builds a factorization from arbitrary `(prime, exponent)` pairs:
    /// repeated primes are merged, zero exponents dropped, and every prime is
    /// checked for primality.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u32)>,
    {
        let mut entries: Vec<(u64, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        entries.sort_unstable_by_key(|&(p, _)| p);
        let mut merged: Vec<(u64, u32)> = Vec::with_capacity(entries.len());
        for (p, e) in entries {
            if !is_prime64(p) {
                return Err(Error::Domain(format!("{p} is not prime")));
            }
            match merged.last_mut() {
                Some((q, f)) if *q == p => {
                    *f = f
                        .checked_add(e)
                        .ok_or_else(|| Error::Capacity(format!("exponent of {p} overflows")))?
                }
                _ => merged.push((p, e)),
            }
        }
        Ok(Factorization { entries: merged })
    }

    /// Trusted constructor for entries already sorted, merged and prime.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(u64, u32)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, e)| e > 0));
        Factorization { entries }
    }

    pub fn prime_power(p: u64, e: u32) -> Result<Self> {
        Factorization::from_pairs([(p, e)])
    }

    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn largest_prime(&self) -> Option<u64> {
        self.entries.last().map(|&(p, _)| p)
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.entries
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Multiplies the prime powers back together.
    pub fn value(&self) -> BigUint {
        self.entries.iter().fold(BigUint::one(), |acc, &(p, e)| {
            acc * Pow::pow(BigUint::from(p), e)
        })
    }

    /// Merge by summing exponents, i.e. the factorization of the product.
    pub fn merge(&self, other: &Factorization) -> Factorization {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Factorization { entries: out }
    }

    /// Removes `e` copies of `p`. Fails if `p^e` does not divide the value.
    pub fn divide_prime_power(&self, p: u64, e: u32) -> Result<Factorization> {
        let have = self.exponent_of(p);
        if have < e {
            return Err(Error::Domain(format!("{p}^{e} does not divide {self}")));
        }
        let entries = self
            .entries
            .iter()
            .filter_map(|&(q, f)| match q == p {
                true if f == e => None,
                true => Some((q, f - e)),
                false => Some((q, f)),
            })
            .collect();
        Ok(Factorization { entries })
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("1");
        }
        for (i, &(p, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Parses `p1^e1 * p2^e2 * ...`; `^1` may be omitted and `1` is the empty
/// product.
impl FromStr for Factorization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(Factorization::empty());
        }
        let mut pairs = Vec::new();
        for term in s.split('*') {
            let term = term.trim();
            let (p, e) = match term.split_once('^') {
                Some((p, e)) => (p.trim(), e.trim()),
                None => (term, "1"),
            };
            let p: u64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad prime `{p}` in `{s}`")))?;
            let e: u32 = e
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{e}` in `{s}`")))?;
            if e == 0 {
                return Err(Error::Parse(format!("zero exponent in `{s}`")));
            }
            pairs.push((p, e));
        }
        let out = Factorization::from_pairs(pairs)?;
        if out.entries.len() != s.split('*').count() {
            return Err(Error::Parse(format!("repeated prime in `{s}`")));
        }
        Ok(out)
    }
}

/// `d(value) = ∏ (e + 1)`.
pub fn divisor_count_factored(f: &Factorization) -> BigUint {
    f.entries.iter().fold(BigUint::one(), |acc, &(_, e)| {
        acc * BigUint::from(u64::from(e) + 1)
    })
}

/// A positive integer together with its complete factorization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FactoredInt {
    value: BigUint,
    factors: Factorization,
}

impl FactoredInt {
    pub fn one() -> Self {
        FactoredInt {
            value: BigUint::one(),
            factors: Factorization::empty(),
        }
    }

    pub fn from_factorization(factors: Factorization) -> Self {
        FactoredInt {
            value: factors.value(),
            factors,
        }
    }

    /// Pairs a value with a claimed factorization, checking the product.
    pub fn with_value(value: BigUint, factors: Factorization) -> Result<Self> {
        if factors.value() != value {
            return Err(Error::Domain(format!(
                "factorization {factors} does not multiply to {value}"
            )));
        }
        Ok(FactoredInt { value, factors })
    }

    pub fn prime_power(p: u64, e: u32) -> Result<Self> {
        Ok(Self::from_factorization(Factorization::prime_power(p, e)?))
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn factors(&self) -> &Factorization {
        &self.factors
    }

    pub fn divisor_count(&self) -> BigUint {
        divisor_count_factored(&self.factors)
    }

    pub fn mul(&self, other: &FactoredInt) -> FactoredInt {
        FactoredInt {
            value: &self.value * &other.value,
            factors: self.factors.merge(&other.factors),
        }
    }

    pub fn divide_prime_power(&self, p: u64, e: u32) -> Result<FactoredInt> {
        let factors = self.factors.divide_prime_power(p, e)?;
        Ok(FactoredInt {
            value: &self.value / Pow::pow(BigUint::from(p), e),
            factors,
        })
    }
}

impl fmt::Display for FactoredInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.value, self.factors)
    }
}

pub fn factored_mul(u: &FactoredInt, v: &FactoredInt) -> FactoredInt {
    u.mul(v)
}
