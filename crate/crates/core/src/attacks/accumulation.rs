//! Passive collection of leaked error values from genuine sessions.

use rand::Rng;

use super::{require_binary, require_mode, AttackKind, AttackOutcome, PartialTemplate, Recovered};
use crate::error::{Error, Result};
use crate::oracle::{ClientModel, Observation, Oracle};

/// Partial template built from observed errors, binary case.
///
/// A leaked value `x_i - y_i` of +1 means `x_i = 1`, of -1 means `x_i = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulator {
    known: PartialTemplate,
}

impl Accumulator {
    pub fn new(n: usize) -> Self {
        Self {
            known: PartialTemplate::unknown(n),
        }
    }

    /// Records an observation and returns how many coordinates it revealed.
    pub fn observe(&mut self, obs: &Observation) -> Result<usize> {
        let mut fresh = 0;
        for (&i, &delta) in obs.errors() {
            let value = match delta {
                1 => 1,
                -1 => 0,
                _ => {
                    return Err(Error::Unsupported(format!(
                        "error value {delta} at coordinate {i} does not pin a binary coordinate"
                    )))
                }
            };
            if i >= self.known.coords().len() {
                return Err(Error::DimensionMismatch {
                    expected: self.known.coords().len(),
                    got: i + 1,
                });
            }
            if self.known.get(i).is_none() {
                fresh += 1;
            }
            self.known.set(i, value);
        }
        Ok(fresh)
    }

    pub fn known(&self) -> &PartialTemplate {
        &self.known
    }

    pub fn covers(&self, coords: &[usize]) -> bool {
        coords.iter().all(|&i| self.known.get(i).is_some())
    }

    fn into_outcome(self, oracle: &Oracle) -> AttackOutcome {
        let unknown = self.known.unknown_count();
        let within_ball = unknown <= oracle.params().epsilon();
        let recovered = match self.known.to_template() {
            Some(t) => Recovered::Full(t),
            None => Recovered::Partial {
                filled: within_ball.then(|| self.known.filled_with(0)),
                known: self.known,
            },
        };
        AttackOutcome {
            exact_recovery: unknown == 0,
            within_ball,
            recovered,
            queries_used: oracle.query_count(),
            sessions_used: oracle.session_count(),
        }
    }
}

/// Watches genuine sessions until every coordinate of `target` has erred
/// at least once. Issues no queries.
pub fn accumulation_collect<R: Rng + ?Sized>(
    oracle: &mut Oracle,
    client: &ClientModel,
    target: &[usize],
    rng: &mut R,
) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::Accumulation)?;
    require_binary(oracle, "accumulation")?;
    if let Some(&i) = target.iter().find(|&&i| !client.is_variable(i)) {
        return Err(Error::Usage(format!(
            "coordinate {i} never errs for this client, so collection cannot finish"
        )));
    }
    let mut acc = Accumulator::new(oracle.params().n());
    while !acc.covers(target) {
        let obs = oracle.genuine_session(client, rng)?;
        acc.observe(&obs)?;
    }
    Ok(acc.into_outcome(oracle))
}

/// Forces errors on epsilon fresh coordinates per session, reading the
/// whole template in `ceil(n / eps)` sessions.
pub fn fault_controlled_collect<R: Rng + ?Sized>(
    oracle: &mut Oracle,
    rng: &mut R,
) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::FaultControlled)?;
    require_binary(oracle, "fault-controlled collection")?;
    let (n, eps) = (oracle.params().n(), oracle.params().epsilon());
    if eps == 0 {
        return Err(Error::Usage("fault injection needs epsilon >= 1".into()));
    }
    let mut acc = Accumulator::new(n);
    let positions: Vec<usize> = (0..n).collect();
    for chunk in positions.chunks(eps) {
        let obs = oracle.fault_session(chunk, rng)?;
        acc.observe(&obs)?;
    }
    Ok(acc.into_outcome(oracle))
}
