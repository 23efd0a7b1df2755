//! Attacks on oracles that leak on every answer, accepted or not.

use super::below::apply_correction;
use super::{missing_leak, require_mode, AttackKind, AttackOutcome};
use crate::error::Result;
use crate::oracle::Oracle;
use crate::space::Template;

/// Coordinate-wise descent from the all-zeros baseline.
///
/// For each coordinate the alternatives are tried in ascending order. A
/// drop of the distance fixes the coordinate, a rise shows the baseline
/// value was right, and when every other alternative left the distance
/// unchanged the last one is taken without a query.
pub fn attack_both_distance(oracle: &mut Oracle) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::BothDistance)?;
    let (q, n) = (oracle.params().q(), oracle.params().n());
    let mut y = Template::zeros(n);
    let mut d = oracle
        .query(&y)?
        .distance()
        .ok_or_else(|| missing_leak("distance"))?;
    for i in 0..n {
        if d == 0 {
            break;
        }
        for v in 1..q {
            if v == q - 1 && v > 1 {
                y.set(i, v);
                d -= 1;
                break;
            }
            let mut probe = y.clone();
            probe.set(i, v);
            let probed = oracle
                .query(&probe)?
                .distance()
                .ok_or_else(|| missing_leak("distance"))?;
            if probed > d {
                break;
            }
            if probed < d {
                y = probe;
                d = probed;
                break;
            }
        }
    }
    Ok(AttackOutcome::exact(y, oracle))
}

/// Queries the constant vectors `0, 1, ..., q-2`. A coordinate missing from
/// the error positions of constant `c` equals `c`; coordinates flagged by
/// all of them equal `q - 1`.
pub fn attack_both_positions(oracle: &mut Oracle) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::BothPositions)?;
    let (q, n) = (oracle.params().q(), oracle.params().n());
    let mut known: Vec<Option<u32>> = vec![None; n];
    let mut unknown = n;
    for c in 0..q - 1 {
        if unknown == 0 {
            break;
        }
        let r = oracle.query(&Template::constant(n, c))?;
        let flagged = r
            .error_positions()
            .ok_or_else(|| missing_leak("error positions"))?;
        let mut next = flagged.iter().peekable();
        for (i, slot) in known.iter_mut().enumerate() {
            if next.next_if_eq(&&i).is_some() {
                continue;
            }
            if slot.is_none() {
                *slot = Some(c);
                unknown -= 1;
            }
        }
    }
    let x = known.into_iter().map(|v| v.unwrap_or(q - 1)).collect();
    Ok(AttackOutcome::exact(Template::from_coords(x), oracle))
}

/// One query of the all-zeros vector; its leak is the full correction.
pub fn attack_both_positions_values(oracle: &mut Oracle) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::BothPositionsValues)?;
    let y = Template::zeros(oracle.params().n());
    let r = oracle.query(&y)?;
    let x = apply_correction(y, &r)?;
    Ok(AttackOutcome::exact(x, oracle))
}
