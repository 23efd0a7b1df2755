use crate::error::{Error, Result};
use crate::oracle::{AcceptedPoint, Oracle};
#[cfg(test)]
use crate::space::SpaceParams;
use crate::space::Template;

/// Finds an accepted point in at most `q^(n-eps)` queries.
///
/// The last epsilon coordinates stay at 0 and the first `n - eps` run
/// through the space in lexicographic order. The candidate agreeing with the
/// secret on every enumerated coordinate is at distance at most epsilon, so
/// the search always ends by then.
pub fn exhaustive_accept_search(oracle: &mut Oracle) -> Result<AcceptedPoint> {
    let params = *oracle.params();
    params.require_attackable()?;
    let free = params.n() - params.epsilon();
    let q = params.q();
    let mut candidate = Template::zeros(params.n());
    loop {
        let r = oracle.query(&candidate)?;
        if r.accepted() {
            return AcceptedPoint::new(candidate, r);
        }
        if !advance(&mut candidate, free, q) {
            return Err(Error::Internal(format!(
                "no acceptance after the full {}-coordinate search at {params}; the oracle is inconsistent",
                free
            )));
        }
    }
}

/// Next prefix in lexicographic order; false once the prefix wraps.
fn advance(t: &mut Template, free: usize, q: u32) -> bool {
    for i in (0..free).rev() {
        if t.get(i) + 1 < q {
            t.set(i, t.get(i) + 1);
            return true;
        }
        t.set(i, 0);
    }
    false
}

/// Position of `t` among the search candidates, 1-based.
#[cfg(test)]
pub(crate) fn search_rank(params: &SpaceParams, t: &Template) -> u64 {
    let free = params.n() - params.epsilon();
    t.coords()[..free]
        .iter()
        .fold(0u64, |acc, &c| acc * u64::from(params.q()) + u64::from(c))
        + 1
}
