//! The q-ary vector space `Z_q^n` with the Hamming metric.
//!
//! Coordinates are indexed from 0 in memory. Points of a space small enough
//! to enumerate are also addressed by a dense integer index (see
//! [`SpaceParams::index_of`]), with coordinate 0 as the most significant
//! base-q digit so that integer order is lexicographic order.

use std::fmt;

use num_bigint::BigUint;
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Alphabet size, dimension and acceptance threshold of a matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceParams {
    q: u32,
    n: usize,
    epsilon: usize,
}

impl SpaceParams {
    pub fn new(q: u32, n: usize, epsilon: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!(
                "q must be at least 2, got {q}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if epsilon > n {
            return Err(Error::InvalidParams(format!(
                "epsilon must not exceed n ({epsilon} > {n})"
            )));
        }
        Ok(Self { q, n, epsilon })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> usize {
        self.epsilon
    }

    /// Same space with a different threshold.
    pub fn with_epsilon(&self, epsilon: usize) -> Result<Self> {
        Self::new(self.q, self.n, epsilon)
    }

    /// Attacks need at least one coordinate outside the acceptance radius.
    pub fn require_attackable(&self) -> Result<()> {
        if self.epsilon >= self.n {
            return Err(Error::Usage(format!(
                "attacks require epsilon < n (epsilon = {}, n = {})",
                self.epsilon, self.n
            )));
        }
        Ok(())
    }

    /// `q^n` as an exact integer.
    pub fn space_size(&self) -> BigUint {
        BigUint::from(self.q).pow(self.n as u32)
    }

    /// `q^n` if it fits in a `u64` and does not exceed `limit`.
    pub fn enumerable_size(&self, what: &'static str, limit: u64) -> Result<u64> {
        let size = self.space_size();
        match u64::try_from(&size) {
            Ok(s) if s <= limit => Ok(s),
            _ => Err(Error::Capacity {
                what,
                needed: size,
                limit,
            }),
        }
    }

    /// Dense index of a template; coordinate 0 is the most significant digit.
    pub fn index_of(&self, t: &Template) -> u64 {
        t.coords
            .iter()
            .fold(0u64, |acc, &c| acc * u64::from(self.q) + u64::from(c))
    }

    /// Inverse of [`index_of`](Self::index_of). The caller guarantees `idx < q^n`.
    pub fn template_at(&self, mut idx: u64) -> Template {
        let q = u64::from(self.q);
        let mut coords = vec![0u32; self.n];
        for c in coords.iter_mut().rev() {
            *c = (idx % q) as u32;
            idx /= q;
        }
        Template { coords }
    }

    pub fn check(&self, t: &Template) -> Result<()> {
        if t.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: t.len(),
            });
        }
        if let Some((index, &value)) = t.coords.iter().enumerate().find(|(_, &v)| v >= self.q) {
            return Err(Error::SymbolOutOfRange {
                index,
                value,
                q: self.q,
            });
        }
        Ok(())
    }
}

impl fmt::Display for SpaceParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={} n={} epsilon={}", self.q, self.n, self.epsilon)
    }
}

/// A point of `Z_q^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Template {
    coords: Vec<u32>,
}

impl Template {
    /// Builds a template and checks it against `params`.
    pub fn new(params: &SpaceParams, coords: Vec<u32>) -> Result<Self> {
        let t = Self { coords };
        params.check(&t)?;
        Ok(t)
    }

    /// Unchecked constructor; range is validated wherever the template meets
    /// an oracle or a parameter set.
    pub fn from_coords(coords: Vec<u32>) -> Self {
        Self { coords }
    }

    pub fn constant(n: usize, value: u32) -> Self {
        Self {
            coords: vec![value; n],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> u32 {
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, value: u32) {
        self.coords[i] = value;
    }

    pub fn into_coords(self) -> Vec<u32> {
        self.coords
    }

    /// Binary complement of coordinate `i`. Only meaningful for q = 2.
    pub(crate) fn flip(&mut self, i: usize) {
        self.coords[i] ^= 1;
    }

    /// Positions where `self` and `other` differ, ascending.
    pub fn diff_positions(&self, other: &Template) -> Vec<usize> {
        self.coords
            .iter()
            .zip(&other.coords)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }

    /// Digit string, e.g. `01322`. Symbols above 9 use letters up to base 36.
    pub fn to_digit_string(&self) -> Option<String> {
        self.coords
            .iter()
            .map(|&c| char::from_digit(c, 36))
            .collect()
    }

    pub fn parse_digits(params: &SpaceParams, s: &str) -> Result<Self> {
        let coords = s
            .chars()
            .map(|ch| {
                ch.to_digit(36)
                    .ok_or_else(|| Error::Usage(format!("invalid digit {ch:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, coords)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Number of coordinates in which `x` and `y` differ.
pub fn hamming_distance(x: &Template, y: &Template) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(distance_unchecked(x.coords(), y.coords()))
}

pub(crate) fn distance_unchecked(x: &[u32], y: &[u32]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

/// Uniform point of the space.
pub fn sample_template<R: Rng + ?Sized>(params: &SpaceParams, rng: &mut R) -> Template {
    let coords = (0..params.n).map(|_| rng.gen_range(0..params.q)).collect();
    Template { coords }
}

/// Uniform point at distance exactly `k` from `x`: `k` positions chosen
/// uniformly, each replaced by a uniform non-matching symbol.
pub fn sample_at_distance<R: Rng + ?Sized>(
    params: &SpaceParams,
    x: &Template,
    k: usize,
    rng: &mut R,
) -> Result<Template> {
    params.check(x)?;
    if k > params.n {
        return Err(Error::Usage(format!(
            "distance {k} exceeds dimension {}",
            params.n
        )));
    }
    let mut y = x.clone();
    for pos in index::sample(rng, params.n, k) {
        y.coords[pos] = different_symbol(params.q, x.coords[pos], rng);
    }
    Ok(y)
}

/// Uniform symbol of `[0, q)` other than `avoid`.
pub(crate) fn different_symbol<R: Rng + ?Sized>(q: u32, avoid: u32, rng: &mut R) -> u32 {
    let v = rng.gen_range(0..q - 1);
    if v >= avoid {
        v + 1
    } else {
        v
    }
}

/// Generator owned by one trial.
pub type TrialRng = ChaCha8Rng;

/// Splits a master seed into independent per-trial generators.
///
/// Trial `i` reads the first word of ChaCha stream `i` under the master key;
/// that word is the trial's own seed, so any single trial can be replayed
/// from its recorded seed alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSequence {
    master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        let mut root = ChaCha8Rng::seed_from_u64(self.master);
        root.set_stream(trial);
        root.next_u64()
    }

    pub fn trial_rng(&self, trial: u64) -> (u64, TrialRng) {
        let seed = self.trial_seed(trial);
        (seed, ChaCha8Rng::seed_from_u64(seed))
    }
}
