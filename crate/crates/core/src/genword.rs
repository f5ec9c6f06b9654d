//! Words in the generators `f(x, y) = (x+1)(y+1)/(x+y+1)` and the
//! constructive decomposition of any positive rational into such a word.
//!
//! Primes are handled by induction: `2 = f(2,3)`, and an odd prime
//! `p = 2x + 1` equals `(x+1)^2 / f(x,x)`, where every prime factor of `x+1`
//! is smaller than `p`. A rational is then the signed product of the words of
//! the primes in its numerator and denominator.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::exactq::{Factorization, PosRational};
use crate::sieve::{factorize_u64, is_prime64, SpfTable};

/// An unordered pair `{x, y}` of positive integers, stored with `x <= y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    x: u64,
    y: u64,
}

impl Generator {
    pub fn new(x: u64, y: u64) -> Result<Self> {
        if x == 0 || y == 0 {
            return Err(Error::Domain(format!(
                "generator f({x},{y}) needs x, y >= 1"
            )));
        }
        if x.max(y) > u64::MAX / 2 {
            return Err(Error::Capacity(format!(
                "generator f({x},{y}) is too large"
            )));
        }
        Ok(Generator {
            x: x.min(y),
            y: x.max(y),
        })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn value(&self) -> PosRational {
        f_value(*self)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f({},{})", self.x, self.y)
    }
}

pub fn f_value(g: Generator) -> PosRational {
    let (x, y) = (BigUint::from(g.x), BigUint::from(g.y));
    let num = (&x + 1u32) * (&y + 1u32);
    let den = x + y + 1u32;
    PosRational::new(num, den).expect("f(x,y) is positive")
}

/// A normalized group word: generators strictly ascending, exponents
/// nonzero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GenWord {
    terms: Vec<(Generator, i64)>,
}

impl GenWord {
    pub fn empty() -> Self {
        GenWord::default()
    }

    pub fn terms(&self) -> &[(Generator, i64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Sum of `|exp|` over all terms.
    pub fn occurrences(&self) -> u128 {
        self.terms
            .iter()
            .map(|&(_, e)| u128::from(e.unsigned_abs()))
            .sum()
    }

    pub fn exponent_of(&self, g: Generator) -> i64 {
        self.terms
            .binary_search_by_key(&g, |&(h, _)| h)
            .map(|i| self.terms[i].1)
            .unwrap_or(0)
    }

    pub fn value(&self) -> PosRational {
        word_value(self)
    }

    pub fn inverse(&self) -> GenWord {
        GenWord {
            terms: self.terms.iter().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    /// `self * other^k`
    pub fn mul_pow(&self, other: &GenWord, k: i64) -> Result<GenWord> {
        let mut acc = Accumulator::from_word(self);
        acc.add_word(other, k)?;
        Ok(acc.finish())
    }
}

impl fmt::Display for GenWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("1");
        }
        for (i, (g, e)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{g}^{e}")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Accumulator {
    map: BTreeMap<Generator, i64>,
}

impl Accumulator {
    fn from_word(w: &GenWord) -> Self {
        Accumulator {
            map: w.terms.iter().copied().collect(),
        }
    }

    fn add(&mut self, g: Generator, e: i64) -> Result<()> {
        let slot = self.map.entry(g).or_insert(0);
        *slot = slot
            .checked_add(e)
            .ok_or_else(|| Error::Capacity(format!("exponent of {g} overflows")))?;
        Ok(())
    }

    fn add_word(&mut self, w: &GenWord, k: i64) -> Result<()> {
        for &(g, e) in &w.terms {
            let scaled = e
                .checked_mul(k)
                .ok_or_else(|| Error::Capacity(format!("exponent of {g} overflows")))?;
            self.add(g, scaled)?;
        }
        Ok(())
    }

    fn finish(self) -> GenWord {
        GenWord {
            terms: self.map.into_iter().filter(|&(_, e)| e != 0).collect(),
        }
    }
}

/// Merges repeated generators, drops zero exponents and sorts.
pub fn word_normalize<I>(terms: I) -> Result<GenWord>
where
    I: IntoIterator<Item = (Generator, i64)>,
{
    let mut acc = Accumulator::default();
    for (g, e) in terms {
        acc.add(g, e)?;
    }
    Ok(acc.finish())
}

/// `∏ f(g)^e`, with numerator and denominator collected before reducing.
pub fn word_value(w: &GenWord) -> PosRational {
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for &(g, e) in &w.terms {
        let v = f_value(g);
        let k = e.unsigned_abs();
        let (top, bottom) = if e > 0 {
            (v.numer(), v.denom())
        } else {
            (v.denom(), v.numer())
        };
        num *= num_traits::Pow::pow(top, k);
        den *= num_traits::Pow::pow(bottom, k);
    }
    PosRational::new(num, den).expect("word values are positive")
}

pub const DEFAULT_TERM_CAP: usize = 1_000_000;
pub const DEFAULT_DEPTH_CAP: usize = 256;

/// Decomposes rationals into generator words, memoizing the word of every
/// prime it visits.
///
/// The memo is shared behind a lock; a fill computes outside the lock and
/// the first insert for a key wins, so concurrent fills are harmless.
pub struct Decomposer {
    table: Option<Arc<SpfTable>>,
    memo: RwLock<HashMap<u64, Arc<GenWord>>>,
    term_cap: usize,
    depth_cap: usize,
}

impl Default for Decomposer {
    fn default() -> Self {
        Decomposer::new(None)
    }
}

impl Decomposer {
    pub fn new(table: Option<Arc<SpfTable>>) -> Self {
        Decomposer {
            table,
            memo: RwLock::new(HashMap::new()),
            term_cap: DEFAULT_TERM_CAP,
            depth_cap: DEFAULT_DEPTH_CAP,
        }
    }

    pub fn with_caps(mut self, term_cap: usize, depth_cap: usize) -> Self {
        self.term_cap = term_cap;
        self.depth_cap = depth_cap;
        self
    }

    pub fn term_cap(&self) -> usize {
        self.term_cap
    }

    pub fn table(&self) -> Option<&SpfTable> {
        self.table.as_deref()
    }

    pub fn decompose_prime(&self, p: u64) -> Result<Arc<GenWord>> {
        if !is_prime64(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        self.prime_word(p, 0)
    }

    fn prime_word(&self, p: u64, depth: usize) -> Result<Arc<GenWord>> {
        if let Some(w) = self.memo.read().expect("memo lock").get(&p) {
            return Ok(Arc::clone(w));
        }
        if depth > self.depth_cap {
            return Err(Error::Capacity(format!(
                "recursion depth cap {} exceeded at prime {p}",
                self.depth_cap
            )));
        }
        let word = if p == 2 {
            GenWord {
                terms: vec![(Generator::new(2, 3)?, 1)],
            }
        } else {
            // p = 2x + 1  =>  p = (x+1)^2 / f(x, x)
            let x = (p - 1) / 2;
            let half = factorize_u64(x + 1, self.table())?;
            let mut acc = Accumulator::default();
            for &(q, e) in half.entries() {
                let sub = self.prime_word(q, depth + 1)?;
                acc.add_word(&sub, 2 * i64::from(e))?;
            }
            acc.add(Generator::new(x, x)?, -1)?;
            acc.finish()
        };
        self.check_cap(&word)?;
        let mut memo = self.memo.write().expect("memo lock");
        Ok(Arc::clone(memo.entry(p).or_insert_with(|| Arc::new(word))))
    }

    fn check_cap(&self, w: &GenWord) -> Result<()> {
        if w.len() > self.term_cap {
            return Err(Error::Capacity(format!(
                "word has {} terms, cap is {}",
                w.len(),
                self.term_cap
            )));
        }
        Ok(())
    }

    fn factor_part(&self, n: &BigUint, what: &str) -> Result<Factorization> {
        match n.to_u64() {
            Some(v) => factorize_u64(v, self.table()),
            None => Err(Error::Capacity(format!(
                "{what} {n} exceeds 64 bits and cannot be factored"
            ))),
        }
    }

    /// A normalized word whose value is exactly `q`.
    pub fn decompose(&self, q: &PosRational) -> Result<GenWord> {
        let num = self.factor_part(q.numer(), "numerator")?;
        let den = self.factor_part(q.denom(), "denominator")?;
        let mut acc = Accumulator::default();
        for (f, sign) in [(&num, 1i64), (&den, -1i64)] {
            for &(p, e) in f.entries() {
                let w = self.prime_word(p, 0)?;
                acc.add_word(&w, sign * i64::from(e))?;
            }
        }
        let word = acc.finish();
        self.check_cap(&word)?;
        Ok(word)
    }
}
