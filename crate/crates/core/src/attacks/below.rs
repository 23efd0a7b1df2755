//! Attacks on oracles that leak only when the query is accepted.

use super::{missing_leak, require_mode, AttackKind, AttackOutcome};
use crate::error::Result;
use crate::oracle::{MatchResponse, Oracle};
use crate::space::Template;

use super::search::exhaustive_accept_search;

/// Exhaustive search, then a coordinate-wise descent on the leaked distance.
///
/// The descent visits coordinates from the last to the first and stops as
/// soon as the distance reaches 0. A probe that changes coordinate `i` moves
/// the distance by -1 (new value right), 0 (both wrong) or +1 (old value
/// right); a rejection can only be the +1 case. The first enumerated
/// coordinates can only be wrong if the search stopped early, and the
/// queries saved there pay for walking back to them.
pub fn attack_below_distance(oracle: &mut Oracle) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::BelowDistance)?;
    let hit = exhaustive_accept_search(oracle)?;
    let mut d = hit
        .response()
        .distance()
        .ok_or_else(|| missing_leak("distance"))?;
    let mut y = hit.into_parts().0;
    let q = oracle.params().q();
    let eps = oracle.params().epsilon();
    for i in (0..y.len()).rev() {
        if d == 0 {
            break;
        }
        let current = y.get(i);
        let alternatives: Vec<u32> = (0..q).filter(|&v| v != current).collect();
        for (k, &v) in alternatives.iter().enumerate() {
            if k + 1 == alternatives.len() && k > 0 {
                // Every other alternative kept the distance, so the current
                // value is wrong and this one is right.
                y.set(i, v);
                d -= 1;
                break;
            }
            let mut probe = y.clone();
            probe.set(i, v);
            let r = oracle.query(&probe)?;
            let probed = if r.accepted() {
                r.distance().ok_or_else(|| missing_leak("distance"))?
            } else {
                eps + 1
            };
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

/// Exhaustive search, then a value sweep over the leaked error positions.
pub fn attack_below_positions(oracle: &mut Oracle) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::BelowPositions)?;
    let hit = exhaustive_accept_search(oracle)?;
    let (y, r) = hit.into_parts();
    let flagged = r
        .error_positions()
        .ok_or_else(|| missing_leak("error positions"))?
        .to_vec();
    let x = sweep_flagged(oracle, y, &flagged)?;
    Ok(AttackOutcome::exact(x, oracle))
}

/// Resolves the flagged coordinates of an accepted `y` by sweeping values.
///
/// Each coordinate keeps a set of candidate values, initially everything but
/// `y_i`. Value `v` is written on every flagged coordinate still holding `v`
/// as one of several candidates; a coordinate that loses its flag takes `v`,
/// the others drop it. Coordinates left with one candidate are fixed without
/// a query, so at most `q - 1` queries are spent and none when `q = 2`.
fn sweep_flagged(oracle: &mut Oracle, mut y: Template, flagged: &[usize]) -> Result<Template> {
    let q = oracle.params().q();
    let mut open: Vec<(usize, Vec<u32>)> = flagged
        .iter()
        .map(|&i| (i, (0..q).filter(|&v| v != y.get(i)).collect()))
        .collect();
    for v in 0..q {
        settle(&mut y, &mut open);
        if open.is_empty() {
            break;
        }
        let mut probe = y.clone();
        let mut touched = false;
        for (i, cands) in &open {
            if cands.contains(&v) {
                probe.set(*i, v);
                touched = true;
            }
        }
        if !touched {
            continue;
        }
        let r = oracle.query(&probe)?;
        let still = r
            .error_positions()
            .ok_or_else(|| missing_leak("error positions"))?;
        for (i, cands) in &mut open {
            if probe.get(*i) != v {
                continue;
            }
            if still.binary_search(i).is_ok() {
                cands.retain(|&c| c != v);
            } else {
                *cands = vec![v];
            }
        }
    }
    settle(&mut y, &mut open);
    debug_assert!(open.is_empty());
    Ok(y)
}

fn settle(y: &mut Template, open: &mut Vec<(usize, Vec<u32>)>) {
    open.retain(|(i, cands)| {
        if let [only] = cands[..] {
            y.set(*i, only);
            false
        } else {
            true
        }
    });
}

/// Exhaustive search; the accepted response carries the full correction.
pub fn attack_below_positions_values(oracle: &mut Oracle) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::BelowPositionsValues)?;
    let hit = exhaustive_accept_search(oracle)?;
    let (y, r) = hit.into_parts();
    let x = if oracle.params().q() == 2 {
        let flagged = r
            .error_positions()
            .ok_or_else(|| missing_leak("error positions"))?
            .to_vec();
        sweep_flagged(oracle, y, &flagged)?
    } else {
        apply_correction(y, &r)?
    };
    Ok(AttackOutcome::exact(x, oracle))
}

/// `x_i = y_i + (x_i - y_i)` on every leaked coordinate.
pub(crate) fn apply_correction(mut y: Template, r: &MatchResponse) -> Result<Template> {
    let values = r
        .error_values()
        .ok_or_else(|| missing_leak("error values"))?;
    for (&i, &delta) in values {
        let xi = i64::from(y.get(i)) + delta;
        y.set(
            i,
            u32::try_from(xi).map_err(|_| missing_leak("in-range error values"))?,
        );
    }
    Ok(y)
}
