//! Ball combinatorics, entropy and harmonic estimates, and the worst-case
//! query bound of every attack.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::oracle::{LeakageMode, Payload, Scope};
use crate::space::SpaceParams;

/// `|B_{q,eps}| = sum_{i=0}^{eps} C(n,i) (q-1)^i`, exact.
pub fn ball_volume(params: &SpaceParams) -> BigUint {
    ball_volume_radius(params.q(), params.n(), params.epsilon())
}

pub(crate) fn ball_volume_radius(q: u32, n: usize, radius: usize) -> BigUint {
    let q1 = BigUint::from(q - 1);
    let mut binom = BigUint::one();
    let mut pow = BigUint::one();
    let mut total = BigUint::zero();
    for i in 0..=radius.min(n) {
        if i > 0 {
            binom = binom * BigUint::from(n - i + 1) / BigUint::from(i);
            pow *= &q1;
        }
        total += &binom * &pow;
    }
    total
}

/// q-ary entropy `h_q(r)` with `h_q(0) = 0` and `h_q(1) = log_q(q-1)`.
///
/// Panics if `r` is outside `[0, 1]` or `q < 2`.
pub fn q_ary_entropy(q: u32, r: f64) -> f64 {
    assert!(q >= 2, "q must be at least 2");
    assert!((0.0..=1.0).contains(&r), "r must lie in [0, 1], got {r}");
    let lnq = f64::from(q).ln();
    let xlogx = |v: f64| if v == 0.0 { 0.0 } else { v * v.ln() / lnq };
    let base = if q == 2 {
        0.0
    } else {
        r * f64::from(q - 1).ln() / lnq
    };
    base - xlogx(r) - xlogx(1.0 - r)
}

/// n-th harmonic number as a float.
pub fn harmonic(n: u64) -> f64 {
    assert!(n >= 1, "harmonic number needs n >= 1");
    // Summing small terms first keeps the rounding error below n * ulp.
    (1..=n).rev().map(|i| 1.0 / i as f64).sum()
}

/// n-th harmonic number, exact.
pub fn harmonic_exact(n: u64) -> BigRational {
    assert!(n >= 1, "harmonic number needs n >= 1");
    (1..=n).fold(BigRational::zero(), |acc, i| {
        acc + BigRational::new(BigUint::one().into(), BigUint::from(i).into())
    })
}

/// Identifies which result an explicit bound belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Theorem {
    /// Distance leaked below the threshold.
    BelowDistance,
    /// Error positions leaked below the threshold.
    BelowPositions,
    /// Error positions and values leaked below the threshold.
    BelowPositionsValues,
    /// One-bit leakage, binary alphabet.
    Minimal,
    /// Distance leaked on every query.
    BothDistance,
    /// Error positions leaked on every query.
    BothPositions,
    /// Error positions and values leaked on every query.
    BothPositionsValues,
    /// Passive accumulation over genuine sessions.
    Accumulation,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::BelowDistance => 1,
            Theorem::BelowPositions => 2,
            Theorem::BelowPositionsValues => 3,
            Theorem::Minimal => 4,
            Theorem::BothDistance => 5,
            Theorem::BothPositions => 6,
            Theorem::BothPositionsValues => 7,
            Theorem::Accumulation => 8,
        }
    }

    /// Leading-order cost as written in the complexity table.
    pub fn stated_complexity(self) -> &'static str {
        match self {
            Theorem::BelowDistance => "q^(n-e) + q*e",
            Theorem::BelowPositions => "q^(n-e) + q",
            Theorem::BelowPositionsValues => "q^(n-e)",
            Theorem::Minimal => "2^(n-e) + n + 2e",
            Theorem::BothDistance => "n*q",
            Theorem::BothPositions => "q",
            Theorem::BothPositionsValues => "1",
            Theorem::Accumulation => "n^a log n",
        }
    }

    pub fn complexity_class(self) -> &'static str {
        match self {
            Theorem::BelowDistance
            | Theorem::BelowPositions
            | Theorem::BelowPositionsValues
            | Theorem::Minimal => "exponential",
            Theorem::BothDistance => "linear",
            Theorem::BothPositions | Theorem::BothPositionsValues => "constant",
            Theorem::Accumulation => "polynomial",
        }
    }

    /// The active theorem served by an oracle running `mode`, if any.
    pub fn for_mode(mode: LeakageMode) -> Option<Theorem> {
        Some(match (mode.scope(), mode.payload()) {
            (Scope::BelowOnly, Payload::Distance) => Theorem::BelowDistance,
            (Scope::BelowOnly, Payload::Positions) => Theorem::BelowPositions,
            (Scope::BelowOnly, Payload::PositionsValues) => Theorem::BelowPositionsValues,
            (Scope::Always, Payload::None) => Theorem::Minimal,
            (Scope::Always, Payload::Distance) => Theorem::BothDistance,
            (Scope::Always, Payload::Positions) => Theorem::BothPositions,
            (Scope::Always, Payload::PositionsValues) => Theorem::BothPositionsValues,
            (Scope::BelowOnly, Payload::None) => return None,
        })
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Th.{}", self.number())
    }
}

/// Worst-case query count of one active attack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremBound {
    pub theorem: Theorem,
    /// The table's leading expression evaluated at the parameters.
    #[serde(serialize_with = "ser_decimal")]
    pub stated: BigUint,
    /// Exact ceiling on queries for the implemented algorithm, including
    /// the constant probes the asymptotic form hides.
    #[serde(serialize_with = "ser_decimal")]
    pub explicit: BigUint,
}

/// Explicit bound of an active theorem, or `None` when it does not apply
/// (the minimal-leakage attack is binary only; accumulation counts sessions).
pub fn theorem_bound(theorem: Theorem, params: &SpaceParams) -> Option<TheoremBound> {
    let q = BigUint::from(params.q());
    let q1 = BigUint::from(params.q() - 1);
    let n = BigUint::from(params.n());
    let e = BigUint::from(params.epsilon());
    let naive = naive_search(params);
    let (stated, explicit) = match theorem {
        Theorem::BelowDistance => {
            let stated = &naive + &q1 * &e;
            let explicit = &stated + &e;
            (stated, explicit)
        }
        Theorem::BelowPositions => {
            let v = &naive + &q1;
            (v.clone(), v)
        }
        Theorem::BelowPositionsValues => (naive.clone(), &naive + 1u32),
        Theorem::Minimal => {
            if params.q() != 2 {
                return None;
            }
            let stated = &naive + &n + BigUint::from(2u32) * &e;
            let explicit = &stated + 1u32;
            (stated, explicit)
        }
        Theorem::BothDistance => (&n * &q, &n * &q1 + 1u32),
        Theorem::BothPositions => (q.clone(), q1.clone()),
        Theorem::BothPositionsValues => (BigUint::one(), BigUint::one()),
        Theorem::Accumulation => return None,
    };
    Some(TheoremBound {
        theorem,
        stated,
        explicit,
    })
}

/// `q^(n-eps)`: size of the coordinate-fixing search.
pub fn naive_search(params: &SpaceParams) -> BigUint {
    BigUint::from(params.q()).pow((params.n() - params.epsilon()) as u32)
}

/// `q^n H(n) / |B|`, exact.
pub fn greedy_cover_bound(params: &SpaceParams) -> BigRational {
    let numer =
        BigRational::from_integer(params.space_size().into()) * harmonic_exact(params.n() as u64);
    numer / BigRational::from_integer(ball_volume(params).into())
}

/// Whether a cover of `size` centers meets [`greedy_cover_bound`].
pub fn within_greedy_bound(params: &SpaceParams, size: usize) -> bool {
    BigRational::from_integer(size.into()) <= greedy_cover_bound(params)
}

/// `q^(n (1 - h_q(eps/n)))`, defined only for `eps/n <= 1 - 1/q`. The
/// sub-linear correction of the asymptotic statement is not included.
pub fn entropy_approx(params: &SpaceParams) -> Option<f64> {
    let r = params.epsilon() as f64 / params.n() as f64;
    let q = f64::from(params.q());
    if r > 1.0 - 1.0 / q {
        return None;
    }
    let h = q_ary_entropy(params.q(), r);
    Some(q.powf(params.n() as f64 * (1.0 - h)))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub params: SpaceParams,
    pub mode: LeakageMode,
    #[serde(serialize_with = "ser_decimal")]
    pub ball_volume: BigUint,
    #[serde(serialize_with = "ser_decimal")]
    pub naive_search: BigUint,
    #[serde(serialize_with = "ser_ratio")]
    pub greedy_cover_bound: BigRational,
    pub entropy_approx: Option<f64>,
    /// `None` when no active theorem covers the mode at these parameters.
    pub theorem: Option<TheoremBound>,
    /// Sessions needed by fault-controlled collection, for binary
    /// below-threshold position-and-value leaks with `eps >= 1`.
    pub fault_sessions: Option<u64>,
}

impl BoundReport {
    pub fn greedy_cover_bound_f64(&self) -> f64 {
        self.greedy_cover_bound.to_f64().unwrap_or(f64::INFINITY)
    }
}

fn ser_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(r.to_f64().unwrap_or(f64::INFINITY))
}

pub fn theoretical_bounds(params: &SpaceParams, mode: LeakageMode) -> BoundReport {
    let fault_sessions = (params.q() == 2
        && params.epsilon() >= 1
        && mode == LeakageMode::new(Scope::BelowOnly, Payload::PositionsValues))
    .then(|| params.n().div_ceil(params.epsilon()) as u64);
    BoundReport {
        params: *params,
        mode,
        ball_volume: ball_volume(params),
        naive_search: naive_search(params),
        greedy_cover_bound: greedy_cover_bound(params),
        entropy_approx: entropy_approx(params),
        theorem: Theorem::for_mode(mode).and_then(|t| theorem_bound(t, params)),
        fault_sessions,
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "space          {}", self.params)?;
        writeln!(f, "mode           {}", self.mode)?;
        writeln!(f, "ball volume    {}", self.ball_volume)?;
        writeln!(f, "naive search   {}", self.naive_search)?;
        writeln!(
            f,
            "greedy cover   {:.4}",
            self.greedy_cover_bound.to_f64().unwrap_or(f64::INFINITY)
        )?;
        match self.entropy_approx {
            Some(v) => writeln!(f, "entropy approx {v:.4}")?,
            None => writeln!(f, "entropy approx undefined (eps/n > 1 - 1/q)")?,
        }
        match &self.theorem {
            Some(tb) => writeln!(
                f,
                "{:<14} stated {} = {}, explicit bound {}",
                tb.theorem.to_string(),
                tb.theorem.stated_complexity(),
                tb.stated,
                tb.explicit
            )?,
            None => writeln!(f, "theorem        none applies to this mode and alphabet")?,
        }
        if let Some(s) = self.fault_sessions {
            writeln!(f, "fault sessions {s}")?;
        }
        Ok(())
    }
}

/// Bracket on the expected number of sessions of a weighted coupon
/// collector whose rarest coupon has probability `p_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectorBracket {
    /// `1 / p_min`
    pub lower: f64,
    /// `H(n) / p_min`
    pub upper_harmonic: f64,
    /// `(ln n + 1) / p_min`
    pub upper_log: f64,
}

impl CollectorBracket {
    pub fn new(n: usize, p_min: f64) -> Self {
        assert!(p_min > 0.0, "rarest coupon must have positive probability");
        Self {
            lower: 1.0 / p_min,
            upper_harmonic: harmonic(n as u64) / p_min,
            upper_log: ((n as f64).ln() + 1.0) / p_min,
        }
    }

    pub fn contains(&self, mean: f64) -> bool {
        self.lower <= mean && mean <= self.upper_log
    }
}
