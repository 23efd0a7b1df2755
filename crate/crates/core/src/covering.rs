//! Radius-epsilon ball covers of `Z_q^n` for the one-bit acceptance search.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::bounds::{ball_volume, harmonic};
use crate::error::{Error, Result};
use crate::oracle::{AcceptedPoint, Oracle};
use crate::space::{SpaceParams, Template};

/// Largest space the greedy construction and certification will materialize.
pub const MATERIALIZE_LIMIT: u64 = 1 << 24;
/// Largest space handed to the exact branch-and-bound.
pub const EXACT_LIMIT: u64 = 1 << 12;
/// Default work budget of the exact search, in elementary ball updates
/// (a few seconds of search).
pub const EXACT_WORK_BUDGET: u64 = 2_000_000_000;

/// Centers of radius-epsilon balls, in query order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    centers: Vec<Template>,
    params: SpaceParams,
    certified: bool,
}

impl Cover {
    /// Wraps externally supplied centers; certification is attempted when the
    /// space is small enough to enumerate.
    pub fn from_centers(params: SpaceParams, centers: Vec<Template>) -> Result<Self> {
        for c in &centers {
            params.check(c)?;
        }
        let certified = match params.enumerable_size("cover certification", MATERIALIZE_LIMIT) {
            Ok(_) => certify(&params, &centers)?,
            Err(_) => false,
        };
        Ok(Self {
            centers,
            params,
            certified,
        })
    }

    pub fn centers(&self) -> &[Template] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    /// Every point of the space lies within epsilon of some center.
    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// One center per line as a base-q digit string.
    pub fn to_lines(&self) -> Result<String> {
        let mut out = String::new();
        for c in &self.centers {
            let digits = c
                .to_digit_string()
                .ok_or_else(|| Error::Unsupported("cover export needs q <= 36".into()))?;
            writeln!(out, "{digits}").expect("writing to a String");
        }
        Ok(out)
    }

    pub fn from_lines(params: SpaceParams, text: &str) -> Result<Self> {
        let centers = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| Template::parse_digits(&params, l))
            .collect::<Result<Vec<_>>>()?;
        Self::from_centers(params, centers)
    }
}

/// Dense-index view of an enumerable space.
struct IndexSpace {
    q: u64,
    n: usize,
    radius: usize,
    weights: Vec<u64>,
}

impl IndexSpace {
    fn new(params: &SpaceParams) -> Self {
        let q = u64::from(params.q());
        let n = params.n();
        let mut weights = vec![1u64; n];
        for i in (0..n.saturating_sub(1)).rev() {
            weights[i] = weights[i + 1] * q;
        }
        Self {
            q,
            n,
            radius: params.epsilon(),
            weights,
        }
    }

    fn size(&self) -> u64 {
        self.weights.first().map_or(1, |w| w * self.q)
    }

    /// Calls `f` once for every point within the radius of `center`.
    fn for_each_in_ball(&self, center: u64, f: &mut impl FnMut(u64)) {
        let digits: Vec<u64> = self.weights.iter().map(|w| (center / w) % self.q).collect();
        self.visit(0, center, self.radius, &digits, f);
    }

    fn visit(&self, pos: usize, idx: u64, budget: usize, digits: &[u64], f: &mut impl FnMut(u64)) {
        if pos == self.n || budget == 0 {
            f(idx);
            return;
        }
        self.visit(pos + 1, idx, budget, digits, f);
        let base = idx - digits[pos] * self.weights[pos];
        for v in (0..self.q).filter(|&v| v != digits[pos]) {
            self.visit(pos + 1, base + v * self.weights[pos], budget - 1, digits, f);
        }
    }

    fn ball(&self, center: u64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_in_ball(center, &mut |i| out.push(i as u32));
        out
    }
}

/// Checks full coverage by marking every ball.
pub fn certify(params: &SpaceParams, centers: &[Template]) -> Result<bool> {
    params.enumerable_size("cover certification", MATERIALIZE_LIMIT)?;
    let space = IndexSpace::new(params);
    let mut covered = vec![false; space.size() as usize];
    for c in centers {
        space.for_each_in_ball(params.index_of(c), &mut |i| covered[i as usize] = true);
    }
    Ok(covered.into_iter().all(|b| b))
}

/// All `q^(n-eps)` vectors whose last epsilon coordinates are 0, in
/// lexicographic order. Every point agrees with one of them on the first
/// `n - eps` coordinates, so the cover is certified by construction.
pub fn coordinate_fixing_cover(params: &SpaceParams) -> Result<Cover> {
    let free = params.n() - params.epsilon();
    let prefix = SpaceParams::new(params.q(), free.max(1), 0)?;
    let count = if free == 0 {
        1
    } else {
        prefix.enumerable_size("coordinate-fixing cover", MATERIALIZE_LIMIT)?
    };
    let centers = (0..count)
        .map(|i| {
            let mut coords = if free == 0 {
                Vec::new()
            } else {
                prefix.template_at(i).into_coords()
            };
            coords.resize(params.n(), 0);
            Template::from_coords(coords)
        })
        .collect();
    Ok(Cover {
        centers,
        params: *params,
        certified: true,
    })
}

pub fn greedy_cover(params: &SpaceParams) -> Result<Cover> {
    greedy_cover_with_limit(params, MATERIALIZE_LIMIT)
}

/// Greedy set cover: repeatedly take the center whose ball holds the most
/// uncovered points, lexicographically smallest on ties.
///
/// Small balls keep every gain exact incrementally, at `q^n |B|` total
/// updates. Large balls recompute all gains after each pick as the group
/// convolution of the uncovered set with the ball, at `O(q^n n q)` per pick.
pub fn greedy_cover_with_limit(params: &SpaceParams, limit: u64) -> Result<Cover> {
    let size = params.enumerable_size("greedy cover", limit)?;
    let space = IndexSpace::new(params);
    let volume = u64::try_from(&ball_volume(params)).expect("ball inside enumerable space");
    // Expected picks are about q^n H(n) / |B|.
    let per_pick = 2.0 * (space.n as f64) * space.q as f64;
    let picks = size as f64 * harmonic(space.n as u64) / volume as f64;
    let picked = if (volume as f64) <= per_pick * picks {
        greedy_tracked(&space, size, volume)
    } else {
        greedy_convolved(&space, size)
    };
    Ok(Cover {
        centers: picked.into_iter().map(|c| params.template_at(c)).collect(),
        params: *params,
        certified: true,
    })
}

/// Lazy max-heap over exact gains: a popped entry whose gain went stale is
/// pushed back with its current gain.
fn greedy_tracked(space: &IndexSpace, size: u64, volume: u64) -> Vec<u64> {
    let mut gain = vec![volume; size as usize];
    let mut covered = vec![false; size as usize];
    let mut uncovered = size;
    let mut heap: BinaryHeap<(u64, Reverse<u64>)> = (0..size)
        .map(|c| (volume, Reverse(c)))
        .collect::<Vec<_>>()
        .into();
    let mut picked = Vec::new();
    let mut fresh = Vec::new();
    while uncovered > 0 {
        let (g, Reverse(c)) = heap
            .pop()
            .expect("an uncovered point keeps its centers positive");
        let actual = gain[c as usize];
        if g != actual {
            if actual > 0 {
                heap.push((actual, Reverse(c)));
            }
            continue;
        }
        fresh.clear();
        space.for_each_in_ball(c, &mut |i| {
            if !covered[i as usize] {
                fresh.push(i);
            }
        });
        for &i in &fresh {
            covered[i as usize] = true;
            space.for_each_in_ball(i, &mut |j| gain[j as usize] -= 1);
        }
        uncovered -= fresh.len() as u64;
        picked.push(c);
    }
    picked
}

fn greedy_convolved(space: &IndexSpace, size: u64) -> Vec<u64> {
    let len = size as usize;
    let mut ball = vec![Complex64::new(0.0, 0.0); len];
    space.for_each_in_ball(0, &mut |i| ball[i as usize] = Complex64::new(1.0, 0.0));
    let dft = GroupDft::new(space.q as usize);
    dft.apply(&mut ball, false);
    let mut covered = vec![false; len];
    let mut uncovered = size;
    let mut picked = Vec::new();
    let mut work = vec![Complex64::new(0.0, 0.0); len];
    while uncovered > 0 {
        for (w, &c) in work.iter_mut().zip(&covered) {
            *w = Complex64::new(if c { 0.0 } else { 1.0 }, 0.0);
        }
        dft.apply(&mut work, false);
        for (w, b) in work.iter_mut().zip(&ball) {
            *w *= b;
        }
        dft.apply(&mut work, true);
        let mut best = (0i64, 0usize);
        for (c, w) in work.iter().enumerate() {
            let g = (w.re / len as f64).round() as i64;
            if g > best.0 {
                best = (g, c);
            }
        }
        let c = best.1 as u64;
        space.for_each_in_ball(c, &mut |i| {
            if !covered[i as usize] {
                covered[i as usize] = true;
                uncovered -= 1;
            }
        });
        picked.push(c);
    }
    picked
}

/// Unnormalized DFT over `Z_q^n`, one length-q transform per coordinate.
struct GroupDft {
    q: usize,
    roots: Vec<Complex64>,
}

impl GroupDft {
    fn new(q: usize) -> Self {
        let roots = (0..q)
            .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / q as f64))
            .collect();
        Self { q, roots }
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let q = self.q;
        let mut buf = vec![Complex64::new(0.0, 0.0); q];
        let mut stride = 1;
        while stride < data.len() {
            for hi in (0..data.len()).step_by(stride * q) {
                for base in hi..hi + stride {
                    for (k, out) in buf.iter_mut().enumerate() {
                        *out = (0..q)
                            .map(|j| {
                                let root = self.roots[j * k % q];
                                data[base + j * stride] * if inverse { root.conj() } else { root }
                            })
                            .sum();
                    }
                    for (k, v) in buf.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
            stride *= q;
        }
    }
}

pub fn exact_min_cover_size(params: &SpaceParams) -> Result<usize> {
    exact_min_cover_size_with_budget(params, EXACT_WORK_BUDGET)
}

/// Minimum number of radius-epsilon balls covering the space, by
/// branch-and-bound. Test oracle for tiny spaces only.
///
/// Branches on the centers able to cover the lowest uncovered point and
/// prunes with `depth + ceil(uncovered / best_gain)`. The first branch is
/// reduced by the symmetries fixing the origin: the center covering the
/// origin can be taken to be `1^w 0^(n-w)` for some weight `w <= eps`.
pub fn exact_min_cover_size_with_budget(params: &SpaceParams, work_budget: u64) -> Result<usize> {
    let size = params.enumerable_size("exact cover", EXACT_LIMIT)?;
    let volume = u64::try_from(&ball_volume(params)).expect("ball inside enumerable space");
    if volume == size {
        return Ok(1);
    }
    let upper = greedy_cover(params)?.len();
    let lower = size.div_ceil(volume) as usize;
    if upper == lower {
        return Ok(upper);
    }

    let space = IndexSpace::new(params);
    let balls: Vec<Vec<u32>> = (0..size).map(|c| space.ball(c)).collect();
    let mut search = ExactSearch {
        balls: &balls,
        cover_count: vec![0; size as usize],
        gain: vec![volume as u32; size as usize],
        uncovered: size as usize,
        best: upper,
        lower,
        work: 0,
        budget: work_budget,
    };

    let roots: Vec<u32> = (0..=params.epsilon())
        .map(|w| {
            let mut coords = vec![0u32; params.n()];
            coords[..w].iter_mut().for_each(|c| *c = 1);
            params.index_of(&Template::from_coords(coords)) as u32
        })
        .collect();
    for r in roots {
        search.add(r);
        search.dfs(1)?;
        search.remove(r);
        if search.best == search.lower {
            break;
        }
    }
    Ok(search.best)
}

struct ExactSearch<'a> {
    balls: &'a [Vec<u32>],
    cover_count: Vec<u16>,
    gain: Vec<u32>,
    uncovered: usize,
    best: usize,
    lower: usize,
    work: u64,
    budget: u64,
}

impl ExactSearch<'_> {
    fn add(&mut self, c: u32) {
        self.work += self.balls[c as usize].len() as u64;
        for &p in &self.balls[c as usize] {
            let cnt = &mut self.cover_count[p as usize];
            *cnt += 1;
            if *cnt == 1 {
                self.uncovered -= 1;
                self.work += self.balls[p as usize].len() as u64;
                for &c2 in &self.balls[p as usize] {
                    self.gain[c2 as usize] -= 1;
                }
            }
        }
    }

    fn remove(&mut self, c: u32) {
        self.work += self.balls[c as usize].len() as u64;
        for &p in &self.balls[c as usize] {
            let cnt = &mut self.cover_count[p as usize];
            *cnt -= 1;
            if *cnt == 0 {
                self.uncovered += 1;
                self.work += self.balls[p as usize].len() as u64;
                for &c2 in &self.balls[p as usize] {
                    self.gain[c2 as usize] += 1;
                }
            }
        }
    }

    fn dfs(&mut self, depth: usize) -> Result<()> {
        if self.work > self.budget {
            return Err(Error::BudgetExhausted(self.budget));
        }
        if self.uncovered == 0 {
            self.best = self.best.min(depth);
            return Ok(());
        }
        // Each uncovered point p needs a center whose gain is at most
        // m(p), the best gain among centers covering p, so the remaining
        // centers number at least sum 1/m(p). Branch on the point with the
        // smallest m(p).
        let mut need = 0.0;
        let mut target = (u32::MAX, 0);
        for (p, _) in self.cover_count.iter().enumerate().filter(|(_, &c)| c == 0) {
            let m = self.balls[p]
                .iter()
                .map(|&c| self.gain[c as usize])
                .max()
                .expect("balls are non-empty");
            need += 1.0 / f64::from(m);
            if m < target.0 {
                target = (m, p);
            }
        }
        self.work += (self.cover_count.len() + self.uncovered * self.balls[0].len()) as u64;
        let remaining = (need - 1e-9).ceil() as usize;
        if depth + remaining >= self.best {
            return Ok(());
        }
        let target = target.1;
        let mut options: Vec<u32> = self.balls[target].clone();
        options.sort_by_key(|&c| (Reverse(self.gain[c as usize]), c));
        for c in options {
            self.add(c);
            self.dfs(depth + 1)?;
            self.remove(c);
            if self.best == self.lower || depth + 1 >= self.best {
                break;
            }
        }
        Ok(())
    }
}

/// Queries the centers in order and returns the first accepted one.
pub fn covering_search(oracle: &mut Oracle, cover: &Cover) -> Result<AcceptedPoint> {
    if cover.params() != oracle.params() {
        return Err(Error::Usage(format!(
            "cover built for {}, oracle runs {}",
            cover.params(),
            oracle.params()
        )));
    }
    if !cover.is_certified() {
        return Err(Error::Usage(
            "cover is not certified to cover the space".into(),
        ));
    }
    for c in cover.centers() {
        let r = oracle.query(c)?;
        if r.accepted() {
            return AcceptedPoint::new(c.clone(), r);
        }
    }
    Err(Error::Internal(
        "certified cover exhausted without acceptance; the oracle is inconsistent".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::greedy_cover_bound;
    use crate::oracle::LeakageMode;
    use crate::space::distance_unchecked;
    use num_rational::BigRational;

    fn p(q: u32, n: usize, e: usize) -> SpaceParams {
        SpaceParams::new(q, n, e).unwrap()
    }

    // Independent certification: direct distance check for every point.
    fn brute_covers(params: &SpaceParams, centers: &[Template]) -> bool {
        let size = params.space_size().try_into().unwrap();
        (0..size).all(|i: u64| {
            let t = params.template_at(i);
            centers
                .iter()
                .any(|c| distance_unchecked(c.coords(), t.coords()) <= params.epsilon())
        })
    }

    // Independent oracle: smallest k such that some k-subset of points covers.
    fn brute_min_cover(params: &SpaceParams) -> usize {
        let size: u64 = params.space_size().try_into().unwrap();
        let pts: Vec<Template> = (0..size).map(|i| params.template_at(i)).collect();
        for k in 1..=pts.len() {
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                let chosen: Vec<Template> = idx.iter().map(|&i| pts[i].clone()).collect();
                if brute_covers(params, &chosen) {
                    return k;
                }
                let mut j = k;
                while j > 0 && idx[j - 1] == pts.len() - k + j - 1 {
                    j -= 1;
                }
                if j == 0 {
                    break;
                }
                idx[j - 1] += 1;
                for m in j..k {
                    idx[m] = idx[m - 1] + 1;
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn ball_enumeration_matches_distance() {
        let params = p(3, 4, 2);
        let space = IndexSpace::new(&params);
        for c in [0u64, 17, 80] {
            let mut got = space.ball(c);
            got.sort_unstable();
            let center = params.template_at(c);
            let want: Vec<u32> = (0..81u64)
                .filter(|&i| {
                    distance_unchecked(params.template_at(i).coords(), center.coords()) <= 2
                })
                .map(|i| i as u32)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn coordinate_fixing_examples() {
        let c = coordinate_fixing_cover(&p(2, 3, 1)).unwrap();
        let got: Vec<Vec<u32>> = c.centers().iter().map(|t| t.coords().to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 0]]
        );
        assert!(brute_covers(&p(2, 3, 1), c.centers()));
        assert_eq!(coordinate_fixing_cover(&p(3, 4, 4)).unwrap().len(), 1);
        assert_eq!(coordinate_fixing_cover(&p(3, 4, 0)).unwrap().len(), 81);
    }

    #[test]
    fn greedy_examples() {
        let c = greedy_cover(&p(2, 3, 1)).unwrap();
        assert_eq!(c.len(), 2);
        assert!(brute_covers(&p(2, 3, 1), c.centers()));
        assert_eq!(greedy_cover(&p(3, 3, 3)).unwrap().len(), 1);
        let c7 = greedy_cover(&p(2, 7, 1)).unwrap();
        assert!(c7.len() <= 41);
        assert!(c7.len() >= 16);
        assert!(brute_covers(&p(2, 7, 1), c7.centers()));
    }

    #[test]
    fn greedy_first_center_is_origin() {
        let c = greedy_cover(&p(3, 4, 1)).unwrap();
        assert_eq!(c.centers()[0], Template::zeros(4));
    }

    #[test]
    fn greedy_capacity_guard() {
        let err = greedy_cover_with_limit(&p(2, 10, 1), 512).unwrap_err();
        assert!(matches!(err, Error::Capacity { limit: 512, .. }));
        assert!(greedy_cover(&p(2, 30, 1)).is_err());
    }

    #[test]
    fn greedy_is_certified_and_within_chvatal_factor() {
        // Chvatal: greedy <= H(max ball) * fractional optimum = H(|B|) q^n/|B|.
        for (q, max_n) in [(2u32, 9usize), (3, 5), (4, 4)] {
            for n in 1..=max_n {
                for e in 0..=n {
                    let params = p(q, n, e);
                    let cover = greedy_cover(&params).unwrap();
                    assert!(certify(&params, cover.centers()).unwrap());
                    assert!(brute_covers(&params, cover.centers()));
                    let vol = ball_volume(&params);
                    let h = crate::bounds::harmonic_exact(u64::try_from(&vol).unwrap());
                    let bound = BigRational::from_integer(params.space_size().into()) * h
                        / BigRational::from_integer(vol.into());
                    assert!(BigRational::from_integer(cover.len().into()) <= bound);
                }
            }
        }
    }

    #[test]
    fn tracked_and_convolved_greedy_pick_the_same_centers() {
        for (q, max_n) in [(2u32, 10usize), (3, 6), (4, 5), (5, 3)] {
            for n in 1..=max_n {
                for e in 0..=n {
                    let params = p(q, n, e);
                    let space = IndexSpace::new(&params);
                    let size = space.size();
                    let vol = u64::try_from(&ball_volume(&params)).unwrap();
                    assert_eq!(
                        greedy_tracked(&space, size, vol),
                        greedy_convolved(&space, size),
                        "{params}"
                    );
                }
            }
        }
    }

    #[test]
    fn greedy_within_stated_bound_for_hamming_code_length() {
        let params = p(2, 8, 2);
        let cover = greedy_cover(&params).unwrap();
        let bound = greedy_cover_bound(&params);
        assert!(BigRational::from_integer(cover.len().into()) <= bound);
    }

    #[test]
    fn exact_examples() {
        assert_eq!(exact_min_cover_size(&p(2, 3, 1)).unwrap(), 2);
        assert_eq!(exact_min_cover_size(&p(2, 2, 1)).unwrap(), 2);
        assert_eq!(brute_min_cover(&p(2, 2, 1)), 2);
        assert_eq!(brute_min_cover(&p(2, 3, 1)), 2);
        assert_eq!(exact_min_cover_size(&p(3, 3, 3)).unwrap(), 1);
        assert_eq!(exact_min_cover_size(&p(2, 7, 1)).unwrap(), 16);
    }

    #[test]
    fn exact_matches_brute_force_on_tiny_spaces() {
        for (q, n) in [(2u32, 4usize), (3, 2), (3, 3), (4, 2), (2, 5)] {
            for e in 0..=n {
                let params = p(q, n, e);
                let exact = exact_min_cover_size(&params).unwrap();
                if exact <= 5 {
                    assert_eq!(exact, brute_min_cover(&params), "q={q} n={n} e={e}");
                }
            }
        }
    }

    #[test]
    fn exact_guards() {
        assert!(matches!(
            exact_min_cover_size(&p(2, 13, 1)).unwrap_err(),
            Error::Capacity { .. }
        ));
        assert!(matches!(
            exact_min_cover_size_with_budget(&p(2, 10, 1), 10).unwrap_err(),
            Error::BudgetExhausted(10)
        ));
    }

    #[test]
    fn covering_search_returns_first_accepted_center() {
        let params = p(2, 8, 2);
        let cover = greedy_cover(&params).unwrap();
        let target = cover.centers()[3].clone();
        let mut o = Oracle::new(target.clone(), params, LeakageMode::MINIMAL).unwrap();
        let hit = covering_search(&mut o, &cover).unwrap();
        assert!(o.query_count() <= 4);
        assert!(distance_unchecked(hit.point().coords(), target.coords()) <= 2);
        let bound = greedy_cover_bound(&params);
        assert!(BigRational::from_integer(cover.len().into()) <= bound);
        for i in (0..256).step_by(7) {
            let mut o = Oracle::new(params.template_at(i), params, LeakageMode::MINIMAL).unwrap();
            covering_search(&mut o, &cover).unwrap();
            assert!(o.query_count() as usize <= cover.len());
        }
    }

    #[test]
    fn covering_search_rejects_foreign_or_uncertified_covers() {
        let params = p(2, 4, 1);
        let mut o = Oracle::new(Template::zeros(4), params, LeakageMode::MINIMAL).unwrap();
        let other = greedy_cover(&p(2, 4, 2)).unwrap();
        assert!(covering_search(&mut o, &other).is_err());
        let partial = Cover::from_centers(params, vec![Template::constant(4, 1)]).unwrap();
        assert!(!partial.is_certified());
        assert!(covering_search(&mut o, &partial).is_err());
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn export_import_round_trip() {
        let params = p(3, 4, 1);
        let cover = greedy_cover(&params).unwrap();
        let text = cover.to_lines().unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().next(), Some("0000"));
        let back = Cover::from_lines(params, &text).unwrap();
        assert_eq!(back, cover);
        assert!(Cover::from_lines(params, "0003\n").is_err());
    }
}
