//! Sieve parameters built from a generator word.
//!
//! For `a ≡ 0 (mod 4)` the linear forms `L_i(x) = a_i x + 1` with
//! `(a_1, a_2, a_3) = (a, a+1, a+2)` satisfy
//!
//! ```text
//! a2·L1 − a1·L2 = a3·L2 − a2·L3 = (a3/2)·L1 − (a1/2)·L3 = 1
//! ```
//!
//! so whenever two of the cofactors `L_i(x)/r_i` are products of two large
//! primes, some `n` and `n+1` are simultaneously "known part times E2
//! cofactor". The known parts are the six products below; their divisor
//! counts give the three candidate ratios.
//!
//! `a` is always built from its prime powers. `a+1` and `(a+2)/2` are
//! factored with 64-bit arithmetic when `a + 2 < 2^64`; past that they are
//! kept as opaque parts. Opaque parts are coprime to everything else, and
//! each occurs once above and once below the fraction line of the group
//! value, so that value stays exact even when the individual ratios are
//! unavailable.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactq::{divisor_count_factored, FactoredInt, Factorization, PosRational};
use crate::genword::{Decomposer, Generator};
use crate::sieve::{factorize_u64, is_prime64, SpfTable};

/// An integer that is either fully factored or too large to factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Part {
    Factored(FactoredInt),
    Opaque(BigUint),
}

impl Part {
    pub fn value(&self) -> &BigUint {
        match self {
            Part::Factored(f) => f.value(),
            Part::Opaque(v) => v,
        }
    }

    pub fn factored(&self) -> Option<&FactoredInt> {
        match self {
            Part::Factored(f) => Some(f),
            Part::Opaque(_) => None,
        }
    }

    fn factor(value: BigUint, table: Option<&SpfTable>) -> Result<Part> {
        match value.to_u64() {
            Some(v) => {
                let f = factorize_u64(v, table)?;
                Ok(Part::Factored(FactoredInt::with_value(value, f)?))
            }
            None => Ok(Part::Opaque(value)),
        }
    }
}

/// `(a; r1, r2, r3; C)` with `a1 = a`, `a2 = a+1`, `a3 = a+2`.
///
/// `a3` is held as its odd half `(a+2)/2`. `c` is `None` exactly when a
/// part is opaque.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveParams {
    a1: FactoredInt,
    a2: Part,
    a3_half: Part,
    r: [FactoredInt; 3],
    c: Option<u64>,
}

impl SieveParams {
    /// Derives `a+1`, `(a+2)/2` and `C` from `a` and the `r_i`.
    pub fn new(a: FactoredInt, r: [FactoredInt; 3], table: Option<&SpfTable>) -> Result<Self> {
        if a.value().is_odd() {
            return Err(Error::Domain(format!("a = {} must be even", a.value())));
        }
        let shifted = a.value() + 2u32;
        let (a2, a3_half) = if shifted.to_u64().is_some() {
            (
                Part::factor(a.value() + 1u32, table)?,
                Part::factor(shifted >> 1, table)?,
            )
        } else {
            (Part::Opaque(a.value() + 1u32), Part::Opaque(shifted >> 1))
        };
        let mut p = SieveParams {
            a1: a,
            a2,
            a3_half,
            r,
            c: None,
        };
        p.c = p.largest_prime();
        Ok(p)
    }

    pub fn a(&self) -> &BigUint {
        self.a1.value()
    }

    pub fn a1(&self) -> &FactoredInt {
        &self.a1
    }

    pub fn a2(&self) -> &Part {
        &self.a2
    }

    /// `a + 2`
    pub fn a3(&self) -> Part {
        match &self.a3_half {
            Part::Factored(h) => Part::Factored(h.mul(&two())),
            Part::Opaque(h) => Part::Opaque(h << 1),
        }
    }

    /// `(a + 2) / 2`
    pub fn half_a3(&self) -> &Part {
        &self.a3_half
    }

    /// `a / 2`
    pub fn half_a1(&self) -> FactoredInt {
        self.a1
            .divide_prime_power(2, 1)
            .expect("a is even by construction")
    }

    /// `r_i` for `i` in `1..=3`.
    pub fn r(&self, i: usize) -> &FactoredInt {
        &self.r[i - 1]
    }

    pub fn c(&self) -> Option<u64> {
        self.c
    }

    pub fn is_fully_factored(&self) -> bool {
        self.a2.factored().is_some() && self.a3_half.factored().is_some()
    }

    /// `a_i` for `i` in `1..=3`, as plain values.
    pub fn a_value(&self, i: usize) -> BigUint {
        self.a() + BigUint::from(i - 1)
    }

    fn largest_prime(&self) -> Option<u64> {
        let a2 = self.a2.factored()?;
        let h = self.a3_half.factored()?;
        [self.a1.factors(), a2.factors(), h.factors()]
            .into_iter()
            .chain(self.r.iter().map(FactoredInt::factors))
            .filter_map(Factorization::largest_prime)
            .chain([2])
            .max()
    }

    /// The JSON object `{"a", "r", "C", "factors"}` with decimal strings for
    /// every value that may exceed 64 bits.
    pub fn to_json(&self) -> Value {
        let part = |p: &Part| match p {
            Part::Factored(f) => Value::String(f.factors().to_string()),
            Part::Opaque(_) => Value::Null,
        };
        json!({
            "a": self.a().to_string(),
            "r": self.r.iter().map(|r| r.value().to_string()).collect::<Vec<_>>(),
            "C": self.c,
            "factors": {
                "a1": self.a1.factors().to_string(),
                "a2": part(&self.a2),
                "a3": part(&self.a3()),
                "r1": self.r[0].factors().to_string(),
                "r2": self.r[1].factors().to_string(),
                "r3": self.r[2].factors().to_string(),
            },
        })
    }

    /// Inverse of [`SieveParams::to_json`]. Checks that every factor string
    /// multiplies to its value but does not run [`validate_params`].
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("sieve params: missing or invalid `{what}`"));
        let decimal = |v: &Value, what: &str| -> Result<BigUint> {
            let s = v.as_str().ok_or_else(|| bad(what))?;
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad(what));
            }
            s.parse::<BigUint>().map_err(|_| bad(what))
        };
        let factors = v.get("factors").ok_or_else(|| bad("factors"))?;
        let fact = |key: &str| -> Result<Option<Factorization>> {
            match factors.get(key) {
                Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => s.parse().map(Some),
                _ => Err(bad(key)),
            }
        };
        let a = decimal(v.get("a").ok_or_else(|| bad("a"))?, "a")?;
        if a.is_odd() || a.is_zero() {
            return Err(Error::Parse(format!(
                "sieve params: a = {a} must be even and positive"
            )));
        }
        let a1 = FactoredInt::with_value(a.clone(), fact("a1")?.ok_or_else(|| bad("a1"))?)?;
        let a2 = match fact("a2")? {
            Some(f) => Part::Factored(FactoredInt::from_factorization(f)),
            None => Part::Opaque(&a + 1u32),
        };
        let a3_half = match fact("a3")? {
            Some(f) => Part::Factored(FactoredInt::from_factorization(f).divide_prime_power(2, 1)?),
            None => Part::Opaque((&a + 2u32) >> 1),
        };
        let rs = v
            .get("r")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("r"))?;
        if rs.len() != 3 {
            return Err(bad("r"));
        }
        let mut r = Vec::with_capacity(3);
        for (i, rv) in rs.iter().enumerate() {
            let key = format!("r{}", i + 1);
            let f = fact(&key)?.ok_or_else(|| bad(&key))?;
            r.push(FactoredInt::with_value(decimal(rv, &key)?, f)?);
        }
        let c = match v.get("C") {
            Some(Value::Null) => None,
            Some(c) => Some(c.as_u64().ok_or_else(|| bad("C"))?),
            None => return Err(bad("C")),
        };
        Ok(SieveParams {
            a1,
            a2,
            a3_half,
            r: r.try_into().expect("three entries"),
            c,
        })
    }
}

fn two() -> FactoredInt {
    FactoredInt::prime_power(2, 1).expect("2 is prime")
}

/// The first coprimality or shape condition that a parameter set violates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ANotDivisibleBy4,
    /// `a_index` differs from `a + index - 1`.
    Shift {
        index: usize,
        found: BigUint,
    },
    REven {
        i: usize,
    },
    /// `gcd(r_i, a_i) > 1`
    RCommonWithA {
        i: usize,
        gcd: BigUint,
    },
    /// `gcd(r_i, a_i - a_j) > 1`
    RCommonWithDifference {
        i: usize,
        j: usize,
        gcd: BigUint,
    },
    /// `gcd(r_i, r_j) > 1`
    RNotCoprime {
        i: usize,
        j: usize,
        gcd: BigUint,
    },
    WrongC {
        expected: Option<u64>,
        found: Option<u64>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ANotDivisibleBy4 => write!(f, "a is not divisible by 4"),
            Violation::Shift { index, found } => {
                write!(f, "a{index} = {found} is not a + {}", index - 1)
            }
            Violation::REven { i } => write!(f, "r{i} is even"),
            Violation::RCommonWithA { i, gcd } => write!(f, "(r{i}, a{i}) = {gcd}"),
            Violation::RCommonWithDifference { i, j, gcd } => {
                write!(f, "(r{i}, a{i} - a{j}) = {gcd}")
            }
            Violation::RNotCoprime { i, j, gcd } => write!(f, "(r{i}, r{j}) = {gcd}"),
            Violation::WrongC { expected, found } => {
                let show = |c: &Option<u64>| c.map_or("unknown".to_string(), |c| c.to_string());
                write!(
                    f,
                    "C = {} but the largest prime factor is {}",
                    show(found),
                    show(expected)
                )
            }
        }
    }
}

/// Checks `4 | a`, the shifts, oddness of the `r_i`, every coprimality
/// hypothesis and the value of `C`, in that order.
pub fn validate_params(p: &SieveParams) -> std::result::Result<(), Violation> {
    let a = p.a();
    if !(a % 4u32).is_zero() {
        return Err(Violation::ANotDivisibleBy4);
    }
    let a_vals = [p.a_value(1), p.a_value(2), p.a_value(3)];
    let stored = [p.a2.value().clone(), p.a3().value().clone()];
    for (k, found) in stored.into_iter().enumerate() {
        if found != a_vals[k + 1] {
            return Err(Violation::Shift {
                index: k + 2,
                found,
            });
        }
    }
    for i in 1..=3 {
        if p.r(i).value().is_even() {
            return Err(Violation::REven { i });
        }
    }
    for i in 1..=3 {
        let g = p.r(i).value().gcd(&a_vals[i - 1]);
        if !g.is_one() {
            return Err(Violation::RCommonWithA { i, gcd: g });
        }
    }
    for i in 1..=3usize {
        for j in (1..=3usize).filter(|&j| j != i) {
            let diff = BigUint::from(i.abs_diff(j));
            let g = p.r(i).value().gcd(&diff);
            if !g.is_one() {
                return Err(Violation::RCommonWithDifference { i, j, gcd: g });
            }
        }
    }
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        let g = p.r(i).value().gcd(p.r(j).value());
        if !g.is_one() {
            return Err(Violation::RNotCoprime { i, j, gcd: g });
        }
    }
    let expected = p.largest_prime();
    if expected != p.c {
        return Err(Violation::WrongC {
            expected,
            found: p.c,
        });
    }
    Ok(())
}

fn require_valid(p: &SieveParams) -> Result<()> {
    validate_params(p).map_err(|v| Error::Precondition(format!("invalid sieve parameters: {v}")))
}

/// The three candidate ratios, one per pair of linear forms, with the six
/// divisor counts they are built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioTriple {
    /// `d(a2 r1) / d(a1 r2)`
    pub ratio12: PosRational,
    /// `d(a3 r2) / d(a2 r3)`
    pub ratio23: PosRational,
    /// `d(a3/2 · r1) / d(a1/2 · r3)`
    pub ratio13: PosRational,
    pub d: KnownParts<BigUint>,
}

/// One value per known part of `n` or `n + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnownParts<T> {
    pub a2r1: T,
    pub a1r2: T,
    pub a3r2: T,
    pub a2r3: T,
    pub half_a3r1: T,
    pub half_a1r3: T,
}

impl SieveParams {
    /// Factorizations of the six known parts. Needs every part factored.
    pub fn known_parts(&self) -> Result<KnownParts<FactoredInt>> {
        let a2 = self.a2.factored().ok_or(Error::Unfactored("a + 1"))?;
        let h3 = self
            .a3_half
            .factored()
            .ok_or(Error::Unfactored("(a + 2)/2"))?;
        let a3 = h3.mul(&two());
        let [r1, r2, r3] = &self.r;
        Ok(KnownParts {
            a2r1: a2.mul(r1),
            a1r2: self.a1.mul(r2),
            a3r2: a3.mul(r2),
            a2r3: a2.mul(r3),
            half_a3r1: h3.mul(r1),
            half_a1r3: self.half_a1().mul(r3),
        })
    }
}

pub fn predicted_ratios(p: &SieveParams) -> Result<RatioTriple> {
    require_valid(p)?;
    let k = p.known_parts()?;
    let d = |f: &FactoredInt| f.divisor_count();
    let d = KnownParts {
        a2r1: d(&k.a2r1),
        a1r2: d(&k.a1r2),
        a3r2: d(&k.a3r2),
        a2r3: d(&k.a2r3),
        half_a3r1: d(&k.half_a3r1),
        half_a1r3: d(&k.half_a1r3),
    };
    let ratio = |n: &BigUint, m: &BigUint| PosRational::new(n.clone(), m.clone());
    Ok(RatioTriple {
        ratio12: ratio(&d.a2r1, &d.a1r2)?,
        ratio23: ratio(&d.a3r2, &d.a2r3)?,
        ratio13: ratio(&d.half_a3r1, &d.half_a1r3)?,
        d,
    })
}

/// Divisor count of a product of pairwise coprime pieces, with opaque
/// pieces carried as unevaluated factors `d(atom)`.
struct Tally {
    known: Factorization,
    atoms: Vec<BigUint>,
}

impl Tally {
    fn of(pieces: &[Piece<'_>]) -> Tally {
        let mut t = Tally {
            known: Factorization::empty(),
            atoms: Vec::new(),
        };
        for piece in pieces {
            match piece {
                Piece::Int(f) => t.known = t.known.merge(f.factors()),
                Piece::Part(Part::Factored(f)) => t.known = t.known.merge(f.factors()),
                Piece::Part(Part::Opaque(v)) => t.atoms.push(v.clone()),
            }
        }
        t
    }
}

enum Piece<'a> {
    Int(&'a FactoredInt),
    Part(&'a Part),
}

/// `d(a2 r1) d(a3 r2) d(a1/2 · r3) / (d(a1 r2) d(a2 r3) d(a3/2 · r1))`,
/// i.e. `ratio12 · ratio23 / ratio13`.
pub fn predicted_group_value(p: &SieveParams) -> Result<PosRational> {
    require_valid(p)?;
    let two = two();
    let half_a1 = p.half_a1();
    let [r1, r2, r3] = &p.r;
    let (a1, a2, h3) = (&p.a1, &p.a2, &p.a3_half);
    use Piece::{Int, Part as P};
    let above = [
        Tally::of(&[P(a2), Int(r1)]),
        Tally::of(&[Int(&two), P(h3), Int(r2)]),
        Tally::of(&[Int(&half_a1), Int(r3)]),
    ];
    let below = [
        Tally::of(&[Int(a1), Int(r2)]),
        Tally::of(&[P(a2), Int(r3)]),
        Tally::of(&[P(h3), Int(r1)]),
    ];
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    let mut atoms: Vec<BigUint> = Vec::new();
    for t in &above {
        num *= divisor_count_factored(&t.known);
        atoms.extend(t.atoms.iter().cloned());
    }
    for t in &below {
        den *= divisor_count_factored(&t.known);
        for atom in &t.atoms {
            match atoms.iter().position(|x| x == atom) {
                Some(i) => {
                    atoms.swap_remove(i);
                }
                None => return Err(Error::Unfactored("an opaque part of a")),
            }
        }
    }
    if !atoms.is_empty() {
        return Err(Error::Unfactored("an opaque part of a"));
    }
    PosRational::new(num, den)
}

/// Generators assigned to the numerator and denominator sides of the
/// construction, each listed once per unit of exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub positives: Vec<Generator>,
    pub negatives: Vec<Generator>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Expands `decompose(q) · f(1,1)^-1` into unit occurrences, so that
/// `(4/3) · ∏ f(positives) / ∏ f(negatives) = q`.
pub fn split_for_construction(q: &PosRational, decomposer: &Decomposer) -> Result<Split> {
    let word = decomposer.decompose(q)?;
    let base = Generator::new(1, 1)?;
    let shifted = crate::genword::word_normalize(word.terms().iter().copied().chain([(base, -1)]))?;
    let total = shifted.occurrences();
    if total > decomposer.term_cap() as u128 {
        return Err(Error::Capacity(format!(
            "construction needs {total} generator occurrences, cap is {}",
            decomposer.term_cap()
        )));
    }
    let mut split = Split::default();
    for &(g, e) in shifted.terms() {
        let side = if e > 0 {
            &mut split.positives
        } else {
            &mut split.negatives
        };
        side.extend(std::iter::repeat_n(g, e.unsigned_abs() as usize));
    }
    Ok(split)
}

/// `(4/3) · ∏ f(x_i, y_i) · ∏ f(u_i, v_i)^-1`
pub fn closed_form_value(split: &Split) -> PosRational {
    let base = PosRational::from_u64(4, 3).expect("4/3");
    let up = split
        .positives
        .iter()
        .fold(base, |acc, g| acc.mul(&g.value()));
    split
        .negatives
        .iter()
        .fold(up, |acc, g| acc.div(&g.value()))
}

/// Smallest odd primes, ascending, skipping those for which `skip` holds.
fn odd_primes(mut skip: impl FnMut(u64) -> bool) -> impl Iterator<Item = u64> {
    (3u64..)
        .step_by(2)
        .filter(|&p| is_prime64(p))
        .filter(move |&p| !skip(p))
}

fn exponent(v: u64, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Capacity(format!("{what} exponent {v} is too large")))
}

/// `a = 4 ∏ p_i^{x_i} ∏ q_i^{u_i}`, `r = (1, ∏ p_i^{y_i}, ∏ q_i^{v_i})`,
/// with the smallest odd primes handed out in order, positives first.
pub fn build_from_split(split: &Split, table: Option<&SpfTable>) -> Result<SieveParams> {
    let mut primes = odd_primes(|_| false);
    let mut a = vec![(2u64, 2u32)];
    let mut r2 = Vec::new();
    let mut r3 = Vec::new();
    for (side, r) in [(&split.positives, &mut r2), (&split.negatives, &mut r3)] {
        for g in side {
            let p = primes.next().expect("infinitely many primes");
            a.push((p, exponent(g.x(), "generator")?));
            r.push((p, exponent(g.y(), "generator")?));
        }
    }
    let fi = |pairs: Vec<(u64, u32)>| -> Result<FactoredInt> {
        Ok(FactoredInt::from_factorization(Factorization::from_pairs(
            pairs,
        )?))
    };
    SieveParams::new(fi(a)?, [FactoredInt::one(), fi(r2)?, fi(r3)?], table)
}

pub fn build_params(q: &PosRational, decomposer: &Decomposer) -> Result<SieveParams> {
    let split = split_for_construction(q, decomposer)?;
    build_from_split(&split, decomposer.table())
}

/// The primitive positive triple proportional to
/// `(ratio23/ratio13, 1, ratio13/ratio12)`; scaling `r_i` by `π_i^{e_i - 1}`
/// then makes all three ratios equal to `ratio12 · ratio23 / ratio13`.
pub fn balance_exponents(t: &RatioTriple) -> [BigUint; 3] {
    let first = t.ratio23.div(&t.ratio13);
    let third = t.ratio13.div(&t.ratio12);
    let scale = first.denom().lcm(third.denom());
    let e = [
        first.numer() * (&scale / first.denom()),
        scale.clone(),
        third.numer() * (&scale / third.denom()),
    ];
    let g = e[0].gcd(&e[1]).gcd(&e[2]);
    e.map(|x| x / &g)
}

/// Replaces `r_i` by `r_i · π_i^{e_i - 1}` where `π_1 < π_2 < π_3` are the
/// smallest odd primes dividing none of `a1 a2 a3 r1 r2 r3`.
pub fn augment_params(p: &SieveParams, e: &[BigUint; 3]) -> Result<SieveParams> {
    require_valid(p)?;
    let mut exps = [0u32; 3];
    for (slot, ei) in exps.iter_mut().zip(e) {
        if ei.is_zero() {
            return Err(Error::Domain(
                "augmentation exponents must be positive".into(),
            ));
        }
        let v = ei
            .to_u64()
            .ok_or_else(|| Error::Capacity(format!("augmentation exponent {ei} is too large")))?;
        *slot = exponent(v - 1, "augmentation")?;
    }
    let pis = augmentation_primes(p);
    let mut r = p.r.clone();
    for ((ri, &pi), &ei) in r.iter_mut().zip(&pis).zip(&exps) {
        *ri = ri.mul(&FactoredInt::prime_power(pi, ei)?);
    }
    let mut out = SieveParams { r, ..p.clone() };
    out.c = out.largest_prime();
    Ok(out)
}

/// The primes `π_1, π_2, π_3` that [`augment_params`] would use.
pub fn augmentation_primes(p: &SieveParams) -> [u64; 3] {
    let values = [
        p.a().clone(),
        p.a2.value().clone(),
        p.a3().value().clone(),
        p.r[0].value().clone(),
        p.r[1].value().clone(),
        p.r[2].value().clone(),
    ];
    let v: Vec<u64> = odd_primes(|q| {
        let q = BigUint::from(q);
        values.iter().any(|v| (v % &q).is_zero())
    })
    .take(3)
    .collect();
    [v[0], v[1], v[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u64, d: u64) -> PosRational {
        PosRational::from_u64(n, d).unwrap()
    }

    fn int(n: u64) -> FactoredInt {
        FactoredInt::from_factorization(factorize_u64(n, None).unwrap())
    }

    fn g(x: u64, y: u64) -> Generator {
        Generator::new(x, y).unwrap()
    }

    fn r_values(p: &SieveParams) -> Vec<BigUint> {
        (1..=3).map(|i| p.r(i).value().clone()).collect()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn split_examples() {
        let d = Decomposer::default();
        let s = split_for_construction(&q(16, 9), &d).unwrap();
        assert_eq!(s.positives, vec![g(1, 1)]);
        assert!(s.negatives.is_empty());
        assert!(split_for_construction(&q(4, 3), &d).unwrap().is_empty());
        let s = split_for_construction(&q(2, 1), &d).unwrap();
        assert_eq!(s.positives, vec![g(2, 3)]);
        assert_eq!(s.negatives, vec![g(1, 1)]);
        let s = split_for_construction(&q(1, 1), &d).unwrap();
        assert!(s.positives.is_empty());
        assert_eq!(s.negatives, vec![g(1, 1)]);
    }

    #[test]
    fn build_examples() {
        let d = Decomposer::default();
        let p = build_params(&q(16, 9), &d).unwrap();
        assert_eq!(p.a(), &big(12));
        assert_eq!(r_values(&p), vec![big(1), big(3), big(1)]);
        assert_eq!(p.c(), Some(13));

        let p = build_params(&q(4, 3), &d).unwrap();
        assert_eq!(p.a(), &big(4));
        assert_eq!(r_values(&p), vec![big(1), big(1), big(1)]);
        assert_eq!(p.c(), Some(5));

        // (x, y) = (2, 3) puts 3^2 into a and 3^3 into r2.
        let p = build_params(&q(2, 1), &d).unwrap();
        assert_eq!(p.a(), &big(180));
        assert_eq!(r_values(&p), vec![big(1), big(27), big(5)]);
        assert_eq!(p.c(), Some(181));

        let p = build_params(&q(1, 1), &d).unwrap();
        assert_eq!(p.a(), &big(12));
        assert_eq!(r_values(&p), vec![big(1), big(1), big(3)]);
        assert_eq!(p.c(), Some(13));
    }

    #[test]
    fn validate_examples() {
        let d = Decomposer::default();
        let p = build_params(&q(16, 9), &d).unwrap();
        assert_eq!(validate_params(&p), Ok(()));

        let bad = SieveParams::new(int(12), [int(1), int(13), int(1)], None).unwrap();
        assert_eq!(
            validate_params(&bad),
            Err(Violation::RCommonWithA { i: 2, gcd: big(13) })
        );
        assert_eq!(
            validate_params(&bad).unwrap_err().to_string(),
            "(r2, a2) = 13"
        );

        let bad = SieveParams::new(int(12), [int(1), int(3), int(3)], None).unwrap();
        assert_eq!(
            validate_params(&bad),
            Err(Violation::RNotCoprime {
                i: 2,
                j: 3,
                gcd: big(3)
            })
        );
    }

    #[test]
    fn validate_other_violations() {
        let bad = SieveParams::new(int(6), [int(1), int(1), int(1)], None).unwrap();
        assert_eq!(validate_params(&bad), Err(Violation::ANotDivisibleBy4));
        let bad = SieveParams::new(int(4), [int(1), int(2), int(1)], None).unwrap();
        assert_eq!(validate_params(&bad), Err(Violation::REven { i: 2 }));
        let mut bad = SieveParams::new(int(4), [int(1), int(1), int(1)], None).unwrap();
        bad.c = Some(7);
        assert!(matches!(
            validate_params(&bad),
            Err(Violation::WrongC { .. })
        ));
        let mut bad = SieveParams::new(int(4), [int(1), int(1), int(1)], None).unwrap();
        bad.a2 = Part::Factored(int(7));
        assert!(matches!(
            validate_params(&bad),
            Err(Violation::Shift { index: 2, .. })
        ));
        assert!(SieveParams::new(int(5), [int(1), int(1), int(1)], None).is_err());
    }

    #[test]
    fn ratio_examples() {
        let d = Decomposer::default();
        let t = predicted_ratios(&build_params(&q(16, 9), &d).unwrap()).unwrap();
        assert_eq!(
            (t.ratio12.clone(), t.ratio23.clone(), t.ratio13.clone()),
            (q(2, 9), q(4, 1), q(1, 2))
        );
        assert_eq!(t.d.a2r1, big(2));
        assert_eq!(t.d.a1r2, big(9));
        assert_eq!(t.d.a3r2, big(8));
        assert_eq!(t.d.a2r3, big(2));
        assert_eq!(t.d.half_a3r1, big(2));
        assert_eq!(t.d.half_a1r3, big(4));

        let t = predicted_ratios(&build_params(&q(4, 3), &d).unwrap()).unwrap();
        assert_eq!(
            (t.ratio12.clone(), t.ratio23.clone(), t.ratio13.clone()),
            (q(2, 3), q(2, 1), q(1, 1))
        );
        assert_eq!(t.ratio12.mul(&t.ratio23).div(&t.ratio13), q(4, 3));
    }

    #[test]
    fn group_value_examples() {
        let d = Decomposer::default();
        for (n, m) in [(16, 9), (4, 3), (2, 1), (1, 1)] {
            let p = build_params(&q(n, m), &d).unwrap();
            assert_eq!(predicted_group_value(&p).unwrap(), q(n, m));
        }
        let s = split_for_construction(&q(2, 1), &d).unwrap();
        assert_eq!(closed_form_value(&s), q(2, 1));
    }

    #[test]
    fn balance_examples() {
        let mk = |a: PosRational, b: PosRational, c: PosRational| RatioTriple {
            ratio12: a,
            ratio23: b,
            ratio13: c,
            d: KnownParts {
                a2r1: big(1),
                a1r2: big(1),
                a3r2: big(1),
                a2r3: big(1),
                half_a3r1: big(1),
                half_a1r3: big(1),
            },
        };
        let e = |t: &RatioTriple| balance_exponents(t).map(|x| x.to_u64().unwrap());
        assert_eq!(e(&mk(q(1, 1), q(1, 1), q(1, 1))), [1, 1, 1]);
        assert_eq!(e(&mk(q(2, 9), q(4, 1), q(1, 2))), [32, 4, 9]);
        assert_eq!(e(&mk(q(2, 3), q(2, 1), q(1, 1))), [4, 2, 3]);
        // Scaling by (4, 2, 3) sends (2/3, 2, 1) to (4/3, 4/3, 4/3).
        assert_eq!(q(2, 3).mul(&q(4, 2)), q(4, 3));
        assert_eq!(q(2, 1).mul(&q(2, 3)), q(4, 3));
        assert_eq!(q(1, 1).mul(&q(4, 3)), q(4, 3));
    }

    #[test]
    fn augment_examples() {
        let d = Decomposer::default();
        let p = build_params(&q(16, 9), &d).unwrap();
        assert_eq!(augmentation_primes(&p), [5, 11, 17]);

        let same = augment_params(&p, &[big(1), big(1), big(1)]).unwrap();
        assert_eq!(same, p);

        let t = predicted_ratios(&p).unwrap();
        let e = balance_exponents(&t);
        let aug = augment_params(&p, &e).unwrap();
        assert_eq!(aug.r(1).factors().entries(), &[(5, 31)]);
        assert_eq!(aug.r(2).factors().entries(), &[(3, 1), (11, 3)]);
        assert_eq!(aug.r(3).factors().entries(), &[(17, 8)]);
        assert_eq!(aug.c(), Some(17));
        assert_eq!(validate_params(&aug), Ok(()));
        let t2 = predicted_ratios(&aug).unwrap();
        assert_eq!(t2.d.a2r1, big(64));
        for r in [&t2.ratio12, &t2.ratio23, &t2.ratio13] {
            assert_eq!(r, &q(16, 9));
        }
        assert!(augment_params(&p, &[big(0), big(1), big(1)]).is_err());
    }

    #[test]
    fn opaque_parameters_keep_group_value() {
        let d = Decomposer::default();
        let target = q(37, 31);
        let p = build_params(&target, &d).unwrap();
        assert!(!p.is_fully_factored());
        assert_eq!(p.c(), None);
        assert_eq!(validate_params(&p), Ok(()));
        assert!(matches!(predicted_ratios(&p), Err(Error::Unfactored(_))));
        assert_eq!(predicted_group_value(&p).unwrap(), target);
    }

    #[test]
    fn json_roundtrip() {
        let d = Decomposer::default();
        for t in [q(16, 9), q(2, 1), q(37, 31)] {
            let p = build_params(&t, &d).unwrap();
            let text = p.to_json().to_string();
            let back = SieveParams::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back, p);
            assert_eq!(validate_params(&back), Ok(()));
        }
        let p = build_params(&q(16, 9), &d).unwrap();
        let mut v = p.to_json();
        assert_eq!(v["a"], "12");
        assert_eq!(v["C"], 13);
        assert_eq!(v["factors"]["a3"], "2 * 7");
        v["factors"]["a1"] = Value::String("2^2 * 5".into());
        assert!(SieveParams::from_json(&v).is_err());
    }

    #[test]
    fn unimodular_identities() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = 2 * rng.gen_range(1i128..1_000_000_000);
            let (a1, a2, a3) = (a, a + 1, a + 2);
            for x in [0i128, 1, 1_000_000] {
                let l = |ai: i128| ai * x + 1;
                assert_eq!(a2 * l(a1) - a1 * l(a2), 1);
                assert_eq!(a3 * l(a2) - a2 * l(a3), 1);
                assert_eq!(a3 / 2 * l(a1) - a1 / 2 * l(a3), 1);
            }
        }
    }

    #[test]
    fn balanced_triple_is_minimal() {
        let d = Decomposer::default();
        for t in [q(16, 9), q(2, 1), q(1, 1), q(3, 2), q(5, 7)] {
            let p = build_params(&t, &d).unwrap();
            let Ok(tr) = predicted_ratios(&p) else {
                continue;
            };
            let e = balance_exponents(&tr).map(|x| x.to_u64().unwrap());
            let g = e[0].gcd(&e[1]).gcd(&e[2]);
            assert_eq!(g, 1);
            let equal = |e: [u64; 3]| {
                let f = |r: &PosRational, n: u64, m: u64| r.mul(&q(n, m));
                let v = f(&tr.ratio12, e[0], e[1]);
                v == f(&tr.ratio23, e[1], e[2]) && v == f(&tr.ratio13, e[0], e[2])
            };
            assert!(equal(e));
            for x in 1..=e[0] {
                for y in 1..=e[1] {
                    for z in 1..=e[2] {
                        if [x, y, z] != e && x <= e[0] && y <= e[1] && z <= e[2] {
                            assert!(!equal([x, y, z]), "{t}: {x} {y} {z}");
                        }
                    }
                }
            }
        }
    }
}
