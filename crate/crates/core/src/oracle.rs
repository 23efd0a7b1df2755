//! The leaky `Match` oracle and the genuine-client session simulator.
//!
//! An [`Oracle`] seals the enrolled template. Attack code can reach it only
//! through [`Oracle::query`] and the session methods; every read of the
//! sealed template is counted so tests can prove that nothing else touches
//! it.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{different_symbol, distance_unchecked, SpaceParams, Template};

/// When extra information leaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    /// Only on accepted queries.
    BelowOnly,
    /// On every query, accepted or not.
    Always,
}

/// What leaks beyond the accept bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    None,
    Distance,
    Positions,
    PositionsValues,
}

/// Leak contract of an oracle.
///
/// `(BelowOnly, None)` and `(Always, None)` both describe the bare one-bit
/// matcher and are normalized to the latter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeakageMode {
    scope: Scope,
    payload: Payload,
}

impl LeakageMode {
    pub const MINIMAL: LeakageMode = LeakageMode {
        scope: Scope::Always,
        payload: Payload::None,
    };

    pub const fn new(scope: Scope, payload: Payload) -> Self {
        match payload {
            Payload::None => Self::MINIMAL,
            _ => Self { scope, payload },
        }
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn payload(&self) -> Payload {
        self.payload
    }

    fn leaks_on(&self, accepted: bool) -> bool {
        self.payload != Payload::None && (accepted || self.scope == Scope::Always)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::BelowOnly => "below",
            Scope::Always => "both",
        })
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Payload::None => "none",
            Payload::Distance => "distance",
            Payload::Positions => "positions",
            Payload::PositionsValues => "posvalues",
        })
    }
}

impl fmt::Display for LeakageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.scope, self.payload)
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below" => Ok(Scope::BelowOnly),
            "both" | "always" => Ok(Scope::Always),
            _ => Err(Error::Config(format!("unknown scope {s:?} (below, both)"))),
        }
    }
}

impl FromStr for Payload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Payload::None),
            "distance" => Ok(Payload::Distance),
            "positions" => Ok(Payload::Positions),
            "posvalues" => Ok(Payload::PositionsValues),
            _ => Err(Error::Config(format!(
                "unknown payload {s:?} (none, distance, positions, posvalues)"
            ))),
        }
    }
}

/// Answer to one query. Fields the oracle's mode does not grant are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResponse {
    accepted: bool,
    distance: Option<usize>,
    error_positions: Option<Vec<usize>>,
    error_values: Option<BTreeMap<usize, i64>>,
}

impl MatchResponse {
    pub fn accepted(&self) -> bool {
        self.accepted
    }

    pub fn distance(&self) -> Option<usize> {
        self.distance
    }

    /// Erroneous coordinates (0-based, ascending).
    pub fn error_positions(&self) -> Option<&[usize]> {
        self.error_positions.as_deref()
    }

    /// `x_i - y_i` over the integers for every erroneous coordinate.
    pub fn error_values(&self) -> Option<&BTreeMap<usize, i64>> {
        self.error_values.as_ref()
    }
}

/// Leak harvested from one accepted genuine session.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Observation {
    errors: BTreeMap<usize, i64>,
}

impl Observation {
    pub fn new(errors: BTreeMap<usize, i64>) -> Self {
        Self { errors }
    }

    /// Observation of a session where the client presented `y` against `x`.
    pub fn between(x: &Template, y: &Template) -> Self {
        Self {
            errors: signed_errors(x.coords(), y.coords()),
        }
    }

    pub fn errors(&self) -> &BTreeMap<usize, i64> {
        &self.errors
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }
}

fn signed_errors(x: &[u32], y: &[u32]) -> BTreeMap<usize, i64> {
    x.iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, (&a, &b))| (i, i64::from(a) - i64::from(b)))
        .collect()
}

/// How many coordinates err in one genuine session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SessionShape {
    /// Exactly one error per session.
    #[default]
    SingleError,
    /// Uniformly between 1 and epsilon errors per session.
    MultiErrorUpToEpsilon,
}

impl FromStr for SessionShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(SessionShape::SingleError),
            "multi" => Ok(SessionShape::MultiErrorUpToEpsilon),
            _ => Err(Error::Config(format!(
                "unknown session shape {s:?} (single, multi)"
            ))),
        }
    }
}

impl fmt::Display for SessionShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionShape::SingleError => "single",
            SessionShape::MultiErrorUpToEpsilon => "multi",
        })
    }
}

/// Error behaviour of a legitimate client.
///
/// Coordinate `i` errs with weight `probs[i]`; weights of zero mark
/// non-variable coordinates that never err. Only erroring sessions are
/// emitted, so the per-session position distribution is the weights
/// normalized over the variable coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientModel {
    probs: Vec<f64>,
    shape: SessionShape,
}

impl ClientModel {
    pub fn new(probs: Vec<f64>, shape: SessionShape) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParams(
                "error probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidParams(format!(
                "error probabilities sum to {total} > 1"
            )));
        }
        if total == 0.0 {
            return Err(Error::InvalidParams(
                "at least one coordinate must be variable".into(),
            ));
        }
        Ok(Self { probs, shape })
    }

    /// Every coordinate errs with probability `1/n`.
    pub fn uniform(n: usize, shape: SessionShape) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
            shape,
        }
    }

    /// Coordinate 0 errs with probability `n^-alpha`; the remaining mass is
    /// shared equally, so coordinate 0 is the rarest whenever `alpha >= 1`.
    pub fn rarest(n: usize, alpha: f64, shape: SessionShape) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(
                "rarest-coupon model needs n >= 2".into(),
            ));
        }
        if alpha.is_nan() || alpha < 1.0 {
            return Err(Error::InvalidParams(format!(
                "alpha must be >= 1, got {alpha}"
            )));
        }
        let p1 = (n as f64).powf(-alpha);
        let rest = (1.0 - p1) / (n - 1) as f64;
        let mut probs = vec![rest; n];
        probs[0] = p1;
        Self::new(probs, shape)
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn shape(&self) -> SessionShape {
        self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_variable(&self, i: usize) -> bool {
        self.probs.get(i).is_some_and(|&p| p > 0.0)
    }

    pub fn variable_coordinates(&self) -> Vec<usize> {
        (0..self.probs.len())
            .filter(|&i| self.probs[i] > 0.0)
            .collect()
    }

    /// Per-session probability of the rarest variable coordinate.
    pub fn rarest_session_probability(&self) -> f64 {
        let total: f64 = self.probs.iter().sum();
        self.probs
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min)
            / total
    }

    /// Positions that err in one session; never empty, never above `epsilon`.
    pub fn draw_positions<R: Rng + ?Sized>(&self, epsilon: usize, rng: &mut R) -> Vec<usize> {
        let variable = self.variable_coordinates();
        let weights: Vec<f64> = variable.iter().map(|&i| self.probs[i]).collect();
        match self.shape {
            SessionShape::SingleError => {
                let dist = WeightedIndex::new(&weights).expect("positive weights");
                vec![variable[dist.sample(rng)]]
            }
            SessionShape::MultiErrorUpToEpsilon => {
                let count = rng.gen_range(1..=epsilon).min(variable.len());
                let mut picked: Vec<usize> =
                    index::sample_weighted(rng, variable.len(), |k| weights[k], count)
                        .expect("positive weights")
                        .into_iter()
                        .map(|k| variable[k])
                        .collect();
                picked.sort_unstable();
                picked
            }
        }
    }
}

/// A queried point together with the response that accepted it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedPoint {
    point: Template,
    response: MatchResponse,
}

impl AcceptedPoint {
    pub fn new(point: Template, response: MatchResponse) -> Result<Self> {
        if !response.accepted {
            return Err(Error::Usage(format!("{point} was rejected by the oracle")));
        }
        Ok(Self { point, response })
    }

    pub fn point(&self) -> &Template {
        &self.point
    }

    pub fn response(&self) -> &MatchResponse {
        &self.response
    }

    pub fn into_parts(self) -> (Template, MatchResponse) {
        (self.point, self.response)
    }
}

/// Sealed template with a read counter.
#[derive(Debug)]
struct Seal {
    secret: Template,
    reads: Cell<u64>,
}

impl Seal {
    fn open(&self) -> &Template {
        self.reads.set(self.reads.get() + 1);
        &self.secret
    }
}

/// Outcome of the harness's post-hoc comparison against the sealed template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verification {
    pub exact: bool,
    pub within_ball: bool,
}

/// One entry of an oracle transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranscriptEntry {
    Query(MatchResponse),
    Session(Observation),
}

/// `Match_{x,eps}` with a configurable leak.
#[derive(Debug)]
pub struct Oracle {
    seal: Seal,
    params: SpaceParams,
    mode: LeakageMode,
    queries: u64,
    sessions: u64,
    transcript: Option<Vec<TranscriptEntry>>,
}

impl Oracle {
    pub fn new(secret: Template, params: SpaceParams, mode: LeakageMode) -> Result<Self> {
        params.check(&secret)?;
        Ok(Self {
            seal: Seal {
                secret,
                reads: Cell::new(0),
            },
            params,
            mode,
            queries: 0,
            sessions: 0,
            transcript: None,
        })
    }

    /// Keeps every response and observation for later audit.
    pub fn record_transcript(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn mode(&self) -> LeakageMode {
        self.mode
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn session_count(&self) -> u64 {
        self.sessions
    }

    /// Number of times the sealed template has been read.
    pub fn seal_reads(&self) -> u64 {
        self.seal.reads.get()
    }

    pub fn transcript(&self) -> Option<&[TranscriptEntry]> {
        self.transcript.as_deref()
    }

    pub fn query(&mut self, y: &Template) -> Result<MatchResponse> {
        self.params.check(y)?;
        self.queries += 1;
        let secret = self.seal.open();
        let x = secret.coords();
        let d = distance_unchecked(x, y.coords());
        let accepted = d <= self.params.epsilon();
        let mut response = MatchResponse {
            accepted,
            distance: None,
            error_positions: None,
            error_values: None,
        };
        if self.mode.leaks_on(accepted) {
            let positions = || secret.diff_positions(y);
            match self.mode.payload {
                Payload::None => {}
                Payload::Distance => response.distance = Some(d),
                Payload::Positions => response.error_positions = Some(positions()),
                Payload::PositionsValues => {
                    response.distance = Some(d);
                    response.error_values = Some(signed_errors(x, y.coords()));
                    response.error_positions = Some(positions());
                }
            }
        }
        if let Some(t) = self.transcript.as_mut() {
            t.push(TranscriptEntry::Query(response.clone()));
        }
        Ok(response)
    }

    fn require_value_leak(&self, what: &str) -> Result<()> {
        if self.mode.payload != Payload::PositionsValues {
            return Err(Error::Usage(format!(
                "{what} needs an oracle leaking positions and values, mode is {}",
                self.mode
            )));
        }
        if self.params.epsilon() == 0 {
            return Err(Error::Usage(format!(
                "{what} needs epsilon >= 1 so sessions can carry errors"
            )));
        }
        Ok(())
    }

    /// One authentication by the legitimate client. The presented template
    /// errs on the positions drawn by `client`, each replaced by a uniform
    /// wrong symbol, so the session is always accepted.
    pub fn genuine_session<R: Rng + ?Sized>(
        &mut self,
        client: &ClientModel,
        rng: &mut R,
    ) -> Result<Observation> {
        self.require_value_leak("a genuine session")?;
        if client.n() != self.params.n() {
            return Err(Error::DimensionMismatch {
                expected: self.params.n(),
                got: client.n(),
            });
        }
        let positions = client.draw_positions(self.params.epsilon(), rng);
        Ok(self.session_with_errors_at(&positions, rng))
    }

    /// A session whose error locations are forced by a fault injection.
    pub fn fault_session<R: Rng + ?Sized>(
        &mut self,
        positions: &[usize],
        rng: &mut R,
    ) -> Result<Observation> {
        self.require_value_leak("a fault session")?;
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len()
            || sorted.len() > self.params.epsilon()
            || sorted.last().is_some_and(|&p| p >= self.params.n())
        {
            return Err(Error::Usage(format!(
                "fault positions must be distinct, below n = {} and at most epsilon = {} of them",
                self.params.n(),
                self.params.epsilon()
            )));
        }
        Ok(self.session_with_errors_at(&sorted, rng))
    }

    fn session_with_errors_at<R: Rng + ?Sized>(
        &mut self,
        positions: &[usize],
        rng: &mut R,
    ) -> Observation {
        self.sessions += 1;
        let x = self.seal.open();
        let mut y = x.clone();
        for &i in positions {
            y.set(i, different_symbol(self.params.q(), x.get(i), rng));
        }
        debug_assert!(distance_unchecked(x.coords(), y.coords()) <= self.params.epsilon());
        let obs = Observation::between(x, &y);
        if let Some(t) = self.transcript.as_mut() {
            t.push(TranscriptEntry::Session(obs.clone()));
        }
        obs
    }

    /// Post-hoc check used by the experiment harness once an attack has
    /// finished. Not counted as a query.
    pub fn verify(&self, candidate: &Template) -> Result<Verification> {
        self.params.check(candidate)?;
        let d = distance_unchecked(self.seal.open().coords(), candidate.coords());
        Ok(Verification {
            exact: d == 0,
            within_ball: d <= self.params.epsilon(),
        })
    }

    /// Post-hoc check that every known coordinate matches the secret.
    pub fn verify_known(&self, known: &[Option<u32>]) -> Result<bool> {
        if known.len() != self.params.n() {
            return Err(Error::DimensionMismatch {
                expected: self.params.n(),
                got: known.len(),
            });
        }
        let x = self.seal.open();
        Ok(known
            .iter()
            .zip(x.coords())
            .all(|(k, &xi)| k.is_none_or(|v| v == xi)))
    }
}

/// JSON-lines audit form of a response or observation. Positions are
/// 1-based in this format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub accepted: u8,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distance: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub positions: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<BTreeMap<usize, i64>>,
}

impl From<&MatchResponse> for AuditRecord {
    fn from(r: &MatchResponse) -> Self {
        Self {
            accepted: u8::from(r.accepted),
            distance: r.distance,
            positions: r
                .error_positions
                .as_ref()
                .map(|p| p.iter().map(|i| i + 1).collect()),
            values: r
                .error_values
                .as_ref()
                .map(|v| v.iter().map(|(i, d)| (i + 1, *d)).collect()),
        }
    }
}

impl From<&Observation> for AuditRecord {
    fn from(o: &Observation) -> Self {
        Self {
            accepted: 1,
            distance: Some(o.errors.len()),
            positions: Some(o.errors.keys().map(|i| i + 1).collect()),
            values: Some(o.errors.iter().map(|(i, d)| (i + 1, *d)).collect()),
        }
    }
}

impl From<&TranscriptEntry> for AuditRecord {
    fn from(e: &TranscriptEntry) -> Self {
        match e {
            TranscriptEntry::Query(r) => r.into(),
            TranscriptEntry::Session(o) => o.into(),
        }
    }
}
