//! Recovery from the accept bit alone, binary case.

use std::fmt;
use std::str::FromStr;

use super::search::exhaustive_accept_search;
use super::{require_binary, require_mode, AttackKind, AttackOutcome};
use crate::covering::{covering_search, greedy_cover};
use crate::error::{Error, Result};
use crate::oracle::{AcceptedPoint, Oracle};
use crate::space::Template;

/// Largest n handled when the ball is too wide for the frontier walk.
const VERSION_SPACE_MAX_N: usize = 12;

/// How the minimal-leak attack finds its first accepted point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SearchStrategy {
    #[default]
    CoordinateFixing,
    GreedyCover,
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStrategy::CoordinateFixing => "fixing",
            SearchStrategy::GreedyCover => "greedy",
        })
    }
}

impl FromStr for SearchStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixing" | "coordinate-fixing" => Ok(SearchStrategy::CoordinateFixing),
            "greedy" | "greedy-cover" => Ok(SearchStrategy::GreedyCover),
            _ => Err(Error::Config(format!(
                "unknown search strategy {s:?} (fixing, greedy)"
            ))),
        }
    }
}

/// Finds an accepted point, then reads the secret off the ball boundary.
pub fn attack_minimal_binary(
    oracle: &mut Oracle,
    strategy: SearchStrategy,
) -> Result<AttackOutcome> {
    require_mode(oracle, AttackKind::MinimalBinary)?;
    require_binary(oracle, "the minimal-leak attack")?;
    oracle.params().require_attackable()?;
    let hit = match strategy {
        SearchStrategy::CoordinateFixing => exhaustive_accept_search(oracle)?,
        SearchStrategy::GreedyCover => {
            let cover = greedy_cover(oracle.params())?;
            covering_search(oracle, &cover)?
        }
    };
    let x = center_search_binary(oracle, &hit)?;
    Ok(AttackOutcome::exact(x, oracle))
}

/// Recovers the secret from an accepted point using accept bits only.
///
/// Walk: flip coordinates in order, keeping accepted flips, until the first
/// rejection. Each flip moves the distance by one, so the point before the
/// rejection sits at distance exactly epsilon and the rejected coordinate
/// was right there. Read: flip each other coordinate of that point once; a
/// rejection means it was right, an acceptance that it was wrong. The read
/// stops once epsilon wrong or `n - eps` right coordinates are known.
///
/// The walk is guaranteed to hit a rejection only when `n >= 2 eps + 1`.
/// Wider balls fall back to version-space elimination on small n.
pub fn center_search_binary(oracle: &mut Oracle, start: &AcceptedPoint) -> Result<Template> {
    require_binary(oracle, "center search")?;
    let params = *oracle.params();
    params.check(start.point())?;
    params.require_attackable()?;
    let (n, eps) = (params.n(), params.epsilon());
    if eps == 0 {
        return Ok(start.point().clone());
    }
    if n < 2 * eps + 1 {
        return version_space_search(oracle, start.point());
    }

    let mut z = start.point().clone();
    let mut crossing = None;
    for i in 0..n {
        z.flip(i);
        if !oracle.query(&z)?.accepted() {
            z.flip(i);
            crossing = Some(i);
            break;
        }
    }
    let crossing = crossing
        .ok_or_else(|| Error::Internal("frontier walk never left the acceptance ball".into()))?;

    let mut wrong = Vec::with_capacity(eps);
    let mut right = 1;
    for i in (0..n).filter(|&i| i != crossing) {
        if wrong.len() == eps {
            break;
        }
        if right == n - eps {
            wrong.push(i);
            continue;
        }
        z.flip(i);
        let accepted = oracle.query(&z)?.accepted();
        z.flip(i);
        if accepted {
            wrong.push(i);
        } else {
            right += 1;
        }
    }
    if wrong.len() != eps {
        return Err(Error::Internal(format!(
            "boundary point has {} wrong coordinates, expected {eps}",
            wrong.len()
        )));
    }
    for i in wrong {
        z.flip(i);
    }
    Ok(z)
}

/// Keeps every candidate consistent with the answers so far and queries
/// the point splitting them most evenly (lowest index on ties).
fn version_space_search(oracle: &mut Oracle, start: &Template) -> Result<Template> {
    let (n, eps) = (oracle.params().n(), oracle.params().epsilon());
    if n > VERSION_SPACE_MAX_N {
        return Err(Error::Unsupported(format!(
            "center search with n = {n} <= 2 epsilon needs n <= {VERSION_SPACE_MAX_N}"
        )));
    }
    let mask = |t: &Template| -> u32 {
        t.coords()
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &c)| acc | (c << i))
    };
    let within = |a: u32, b: u32| (a ^ b).count_ones() as usize <= eps;
    let y0 = mask(start);
    let mut alive: Vec<u32> = (0..1u32 << n).filter(|&x| within(x, y0)).collect();
    while alive.len() > 1 {
        let half = alive.len();
        let (query, _) = (0..1u32 << n)
            .map(|z| {
                let acc = alive.iter().filter(|&&x| within(x, z)).count();
                (z, acc.min(half - acc))
            })
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let coords = (0..n).map(|i| (query >> i) & 1).collect();
        let accepted = oracle.query(&Template::from_coords(coords))?.accepted();
        alive.retain(|&x| within(x, query) == accepted);
    }
    let x = *alive
        .first()
        .ok_or_else(|| Error::Internal("no template is consistent with the answers".into()))?;
    Ok(Template::from_coords(
        (0..n).map(|i| (x >> i) & 1).collect(),
    ))
}
