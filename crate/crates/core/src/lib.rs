//! Divisor-function ratios `d(n+1)/d(n)`.
//!
//! The crate turns a positive rational `q` into a word in the generators
//! `f(x, y) = (x+1)(y+1)/(x+y+1)` ([`genword`]), builds sieve parameters
//! whose three candidate ratios multiply to `q` ([`construct`]), and checks
//! the underlying divisor identities on concrete witnesses ([`witness`]).
//!
//! ```
//! use divratio::{construct, genword::Decomposer, PosRational};
//!
//! let q: PosRational = "16/9".parse().unwrap();
//! let params = construct::build_params(&q, &Decomposer::default()).unwrap();
//! assert_eq!(params.a().to_string(), "12");
//! assert_eq!(construct::predicted_group_value(&params).unwrap(), q);
//! ```

pub mod construct;
pub mod error;
pub mod exactq;
pub mod genword;
pub mod sieve;
pub mod witness;

pub use error::{Error, Result};
pub use exactq::{FactoredInt, Factorization, PosRational};
