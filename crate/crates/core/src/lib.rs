//! Simulation lab for template-recovery attacks on leaky Hamming-distance
//! matchers.
//!
//! A secret template `x` lives in `Z_q^n`. The [`Oracle`] answers whether a
//! query lies within distance epsilon of `x` and, depending on its
//! [`LeakageMode`], also leaks the distance, the error positions or the
//! signed error values. The [`attacks`] recover `x` from those answers and
//! the [`harness`] runs them in bulk against the query-count bounds in
//! [`bounds`].

pub mod attacks;
pub mod bounds;
pub mod covering;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod space;

pub use error::{Error, Result};
pub use oracle::{ClientModel, LeakageMode, MatchResponse, Oracle, Payload, Scope, SessionShape};
pub use space::{hamming_distance, SeedSequence, SpaceParams, Template};
