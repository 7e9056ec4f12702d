//! Packing numbers, Minkowski-dimension estimation over a shrinking ε
//! schedule, and s-dimensional content estimation.
//!
//! On the circle the packing number is computed exactly; in higher dimension
//! and on Z_p a deterministic greedy produces a maximal separated set, which
//! is within fixed covering factors of the optimum — an additive constant in
//! log N that leaves dimension slopes untouched.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::exact::{log2_rational, ratio_to_f64, ExactScalar, Rational};
use crate::group::{GroupPoint, GroupSpace, SpaceKind};
use crate::target::{cmp_checked, validate_single_field, TargetSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PackingMethod {
    /// Sort-and-sweep on the circle; the count is the exact maximum.
    Exact1d,
    /// Deterministic greedy insertion; maximal, not necessarily maximum.
    Greedy,
}

impl fmt::Display for PackingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PackingMethod::Exact1d => write!(f, "exact-1d"),
            PackingMethod::Greedy => write!(f, "greedy"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PackingResult {
    pub eps: ExactScalar,
    pub count: u64,
    pub method: PackingMethod,
}

/// Largest number of input points that are pairwise at least 2ε apart.
///
/// A subset of circle points is 2ε-separated exactly when every cyclic gap
/// between chosen neighbours is ≥ 2ε. If some input gap already exceeds the
/// threshold, greedy sweeping from the point after the widest gap is optimal
/// (the wrap-around constraint is slack). Otherwise every maximum packing,
/// being inclusion-maximal, must contain a point within 2ε of the first
/// input point, and greedy from a member of an optimal packing is optimal;
/// trying each candidate anchor in that window settles the exact count.
pub fn packing_number(
    space: &GroupSpace,
    points: &[GroupPoint],
    eps: &ExactScalar,
) -> Result<PackingResult> {
    if !eps.is_positive() {
        return Err(Error::Domain("packing scale must be positive".into()));
    }
    if points.is_empty() {
        return Err(Error::Domain("packing of an empty point list".into()));
    }
    let two = ExactScalar::from_int(2);
    let threshold = eps.checked_mul(&two)?;
    match space.kind() {
        SpaceKind::Torus { dim: 1 } => {
            let mut xs = Vec::with_capacity(points.len());
            for p in points {
                let c = p
                    .as_torus()
                    .filter(|c| c.len() == 1)
                    .ok_or_else(|| Error::Domain("expected circle points".into()))?;
                xs.push(c[0].clone());
            }
            let count = packing_circle(xs, &threshold)?;
            Ok(PackingResult { eps: eps.clone(), count, method: PackingMethod::Exact1d })
        }
        _ => {
            let count = packing_greedy(space, points, &threshold)?;
            Ok(PackingResult { eps: eps.clone(), count, method: PackingMethod::Greedy })
        }
    }
}

fn packing_circle(coords: Vec<ExactScalar>, threshold: &ExactScalar) -> Result<u64> {
    validate_single_field(coords.iter().chain(std::iter::once(threshold)))?;
    let mut xs = coords;
    xs.sort_by(cmp_checked);
    xs.dedup();
    let m = xs.len();
    if m == 1 {
        return Ok(1);
    }
    let one = ExactScalar::one();
    // widest gap between cyclically consecutive input points
    let mut best_gap: Option<(ExactScalar, usize)> = None;
    for i in 0..m {
        let gap = if i + 1 < m {
            xs[i + 1].checked_sub(&xs[i])?
        } else {
            xs[0].checked_add(&one)?.checked_sub(&xs[m - 1])?
        };
        let wider = match &best_gap {
            Some((g, _)) => cmp_checked(&gap, g) == Ordering::Greater,
            None => true,
        };
        if wider {
            best_gap = Some((gap, (i + 1) % m));
        }
    }
    let (max_gap, after_gap) = best_gap.expect("at least two points");
    if cmp_checked(&max_gap, threshold) != Ordering::Less {
        return Ok(greedy_around(&xs, after_gap, threshold));
    }
    // No slack gap: try every anchor within the threshold window of xs[0].
    // All input gaps are < threshold here, so the window is short.
    let mut anchors = vec![0usize];
    let upper = xs[0].checked_add(threshold)?;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if cmp_checked(x, &upper) == Ordering::Less {
            anchors.push(i);
        } else {
            break;
        }
    }
    let lower = xs[0].checked_add(&one)?.checked_sub(threshold)?;
    for i in (1..m).rev() {
        if cmp_checked(&xs[i], &lower) == Ordering::Greater {
            anchors.push(i);
        } else {
            break;
        }
    }
    let mut best = 1;
    for a in anchors {
        best = best.max(greedy_around(&xs, a, threshold));
    }
    Ok(best)
}

/// Cyclic greedy from a fixed anchor: walk once around the circle in cover
/// coordinates, taking every point that keeps both the gap to the previous
/// selection and the wrap-around gap back to the anchor at or above the
/// threshold.
fn greedy_around(xs: &[ExactScalar], anchor: usize, threshold: &ExactScalar) -> u64 {
    let m = xs.len();
    let one = ExactScalar::one();
    let add = |a: &ExactScalar, b: &ExactScalar| a.checked_add(b).expect("single field");
    let base = &xs[anchor];
    let limit = add(base, &one).checked_sub(threshold).expect("single field");
    let mut last = base.clone();
    let mut count = 1u64;
    for step in 1..m {
        let idx = (anchor + step) % m;
        let pos = if anchor + step < m { xs[idx].clone() } else { add(&xs[idx], &one) };
        let gap = pos.checked_sub(&last).expect("single field");
        if cmp_checked(&gap, threshold) != Ordering::Less
            && cmp_checked(&pos, &limit) != Ordering::Greater
        {
            count += 1;
            last = pos;
        }
    }
    count
}

/// Exact 2ε-packing count for grid points given as maximal index runs,
/// avoiding materializing one exact coordinate per grid point.
///
/// The runs are inclusive index intervals [a, b] at resolution R, sorted and
/// disjoint (not merged across the wrap point). Grid points k/R and k'/R are
/// at least 2ε apart on the circle iff their cyclic index distance is at
/// least δ = ⌈2ε·R⌉, so the problem is integral. The case analysis mirrors
/// `packing_number`: a candidate gap ≥ δ cuts the circle into a line where
/// leftmost-greedy is optimal; otherwise some maximum packing has a member
/// within cyclic index distance < δ of the first candidate, and greedy
/// anchored at each such candidate settles the exact count.
pub fn packing_number_grid_circle(
    runs: &[(u64, u64)],
    resolution: u64,
    eps: &Rational,
) -> Result<PackingResult> {
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;

    if resolution == 0 {
        return Err(Error::Domain("resolution must be at least 1".into()));
    }
    if eps.numer().sign() != num_bigint::Sign::Plus {
        return Err(Error::Domain("packing scale must be positive".into()));
    }
    let mut total = 0u64;
    for (i, &(a, b)) in runs.iter().enumerate() {
        if a > b || b >= resolution {
            return Err(Error::Domain(format!("malformed grid run [{a}, {b}]")));
        }
        if i > 0 && a <= runs[i - 1].1 {
            return Err(Error::Domain("grid runs must be sorted and disjoint".into()));
        }
        total += b - a + 1;
    }
    let eps_scalar = ExactScalar::from_rational(eps.clone());
    let done = |count: u64| PackingResult {
        eps: eps_scalar.clone(),
        count,
        method: PackingMethod::Exact1d,
    };
    if total == 0 {
        return Ok(done(0));
    }

    // δ = ⌈2ε·R⌉: the least admissible cyclic index distance.
    let num = eps.numer() * 2 * BigInt::from(resolution);
    let den = eps.denom();
    let delta_big: BigInt = (num + den - BigInt::from(1)) / den;
    let delta = match delta_big.to_u64() {
        Some(d) => d,
        None => return Ok(done(1)),
    };
    if delta <= 1 {
        // distinct grid points are automatically separated
        return Ok(done(total));
    }
    if delta > resolution / 2 {
        // two points would need both cyclic gaps ≥ δ, summing past R
        return Ok(done(1));
    }

    // Candidates on an unrolled line [0, 3R): anchors can sit in the second
    // copy and their windows reach into the third, but never further.
    let m = runs.len();
    let mut starts = Vec::with_capacity(3 * m);
    let mut ends = Vec::with_capacity(3 * m);
    for shift in [0, resolution, 2 * resolution] {
        for &(a, b) in runs {
            starts.push(a + shift);
            ends.push(b + shift);
        }
    }
    // First candidate ≥ target on the unrolled line.
    let next_candidate = |target: u64| -> Option<u64> {
        let i = ends.partition_point(|&e| e < target);
        (i < ends.len()).then(|| starts[i].max(target))
    };
    // Greedy around the circle from a selected anchor; limit keeps the wrap
    // gap back to the anchor at ≥ δ.
    let greedy = |anchor: u64| -> u64 {
        let limit = anchor + resolution - delta;
        let mut count = 1u64;
        let mut target = anchor + delta;
        while let Some(c) = next_candidate(target) {
            if c > limit {
                break;
            }
            count += 1;
            target = c + delta;
        }
        count
    };

    // A candidate gap ≥ δ makes the wrap constraint slack: cut there.
    for i in 0..m {
        let (next_start, gap) = if i + 1 < m {
            (runs[i + 1].0, runs[i + 1].0 - runs[i].1)
        } else {
            (runs[0].0, runs[0].0 + resolution - runs[m - 1].1)
        };
        if gap >= delta {
            return Ok(done(greedy(next_start)));
        }
    }

    // No slack anywhere: anchor on every candidate within cyclic index
    // distance < δ of the first candidate.
    let p0 = runs[0].0;
    let mut anchors = Vec::new();
    for (lo, hi) in [(p0, p0 + delta - 1), (p0 + resolution - delta + 1, p0 + resolution - 1)] {
        let mut i = ends.partition_point(|&e| e < lo);
        while i < ends.len() && starts[i] <= hi {
            let from = starts[i].max(lo);
            let to = ends[i].min(hi);
            anchors.extend(from..=to);
            i += 1;
        }
    }
    let mut best = 1;
    for a in anchors {
        best = best.max(greedy(a));
    }
    Ok(done(best))
}

/// Greedy insertion in deterministic point order (coordinate-lexicographic,
/// digit-lexicographic for Z_p): keep a point iff it is ≥ threshold from
/// every kept point. The result is maximal: every rejected point is within
/// the threshold of some kept one.
fn packing_greedy(
    space: &GroupSpace,
    points: &[GroupPoint],
    threshold: &ExactScalar,
) -> Result<u64> {
    let mut pts: Vec<GroupPoint> = points.to_vec();
    match space.kind() {
        SpaceKind::Torus { .. } => {
            let coords: Vec<&ExactScalar> = pts
                .iter()
                .map(|p| p.as_torus().map(|c| c.iter()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Domain("expected torus points".into()))?
                .into_iter()
                .flatten()
                .collect();
            validate_single_field(coords)?;
            pts.sort_by(|a, b| {
                let (ca, cb) = (a.as_torus().unwrap(), b.as_torus().unwrap());
                ca.iter()
                    .zip(cb)
                    .map(|(x, y)| cmp_checked(x, y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            });
        }
        SpaceKind::PAdic { .. } => {
            for p in &pts {
                if p.as_padic().is_none() {
                    return Err(Error::Domain("expected p-adic points".into()));
                }
            }
            pts.sort_by(|a, b| a.as_padic().unwrap().digits.cmp(&b.as_padic().unwrap().digits));
        }
    }
    pts.dedup();
    let mut kept: Vec<GroupPoint> = Vec::new();
    'next: for p in pts {
        for k in &kept {
            let d = space.distance(k, &p)?;
            if d.compare(threshold)? == Ordering::Less {
                continue 'next;
            }
        }
        kept.push(p);
    }
    Ok(kept.len() as u64)
}

#[derive(Clone, Debug)]
pub struct DimensionEstimate {
    /// (−log2 ε, log2 N) pairs in schedule order.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope through the samples.
    pub slope: f64,
    /// Slopes of consecutive sample pairs.
    pub pair_slopes: Vec<f64>,
    /// Proxy for the lower Minkowski dimension (liminf side).
    pub min_slope: f64,
    /// Proxy for the upper Minkowski dimension (limsup side).
    pub max_slope: f64,
    pub r_squared: f64,
}

fn log2_scalar(x: &ExactScalar) -> f64 {
    match x.as_rational() {
        Some(r) => log2_rational(r),
        None => x.approx().log2(),
    }
}

/// Fit log N against −log ε. The minimum consecutive-pair slope is the
/// liminf proxy matching a lower-dimension bound; the least-squares slope
/// always lies between the extreme pair slopes because it is a convex
/// combination of pairwise slopes.
pub fn dimension_estimate(series: &[(ExactScalar, u64)]) -> Result<DimensionEstimate> {
    if series.len() < 2 {
        return Err(Error::Insufficient("dimension estimate needs at least 2 samples".into()));
    }
    for w in series.windows(2) {
        if w[1].0.compare(&w[0].0)? != Ordering::Less {
            return Err(Error::Domain("ε must decrease strictly".into()));
        }
    }
    let mut samples = Vec::with_capacity(series.len());
    for (eps, n) in series {
        if !eps.is_positive() {
            return Err(Error::Domain("ε must be positive".into()));
        }
        if *n == 0 {
            return Err(Error::Domain("packing count must be positive".into()));
        }
        samples.push((-log2_scalar(eps), (*n as f64).log2()));
    }
    let mut pair_slopes = Vec::with_capacity(samples.len() - 1);
    for w in samples.windows(2) {
        pair_slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
    }
    let min_slope = pair_slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_slope = pair_slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = samples.len() as f64;
    let sx: f64 = samples.iter().map(|s| s.0).sum();
    let sy: f64 = samples.iter().map(|s| s.1).sum();
    let sxx: f64 = samples.iter().map(|s| s.0 * s.0).sum();
    let sxy: f64 = samples.iter().map(|s| s.0 * s.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss_tot: f64 = samples.iter().map(|s| (s.1 - sy / n).powi(2)).sum();
    let ss_res: f64 =
        samples.iter().map(|s| (s.1 - slope * s.0 - intercept).powi(2)).sum();
    // a sub-ulp total sum of squares means the counts are constant
    let r_squared = if ss_tot < 1e-18 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(DimensionEstimate { samples, slope, pair_slopes, min_slope, max_slope, r_squared })
}

/// What the content of: either an analytic target set, or a finite set of
/// points treated as a degenerate closed set.
pub enum ContentSubject<'a> {
    Target(&'a TargetSet),
    Points { space: &'a GroupSpace, points: &'a [GroupPoint] },
}

#[derive(Clone, Debug)]
pub struct ContentSample {
    pub eps: ExactScalar,
    /// μ(S_ε) − μ(S), exact.
    pub growth: ExactScalar,
    /// growth / ε^{d−s} as a float (the exponent need not be rational).
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ContentEstimate {
    pub s: Rational,
    /// d − s, the ε exponent.
    pub exponent: f64,
    pub samples: Vec<ContentSample>,
    /// Proxy for the upper s-content.
    pub max_ratio: f64,
    /// Ratio at the smallest ε, the limit proxy.
    pub final_ratio: f64,
}

/// Ratio series (μ(S_ε) − μ(S)) / ε^{d−s} over a decreasing ε grid. Bounded
/// ratios indicate finite upper s-dimensional content.
pub fn content_estimate(
    subject: ContentSubject<'_>,
    s: &Rational,
    grid: &[ExactScalar],
) -> Result<ContentEstimate> {
    if grid.is_empty() {
        return Err(Error::Domain("empty dilation grid".into()));
    }
    for w in grid.windows(2) {
        if w[1].compare(&w[0])? != Ordering::Less {
            return Err(Error::Domain("dilation grid must decrease strictly".into()));
        }
    }
    if !grid[grid.len() - 1].is_positive() {
        return Err(Error::Domain("dilation grid must be positive".into()));
    }
    let target;
    let set: &TargetSet = match subject {
        ContentSubject::Target(t) => t,
        ContentSubject::Points { space, points } => {
            target = TargetSet::from_points(space, points)?;
            &target
        }
    };
    let d = Rational::from_integer(set.ambient_dim().into());
    let diff = &d - s;
    if diff < Rational::from_integer(0.into()) {
        return Err(Error::Domain("content exponent d − s must be nonnegative".into()));
    }
    let exponent = ratio_to_f64(&diff);
    let mu = set.measure();
    let mut samples = Vec::with_capacity(grid.len());
    for eps in grid {
        let growth = set.dilate(eps)?.measure().checked_sub(&mu)?;
        let ratio = growth.approx() / eps.approx().powf(exponent);
        samples.push(ContentSample { eps: eps.clone(), growth, ratio });
    }
    let max_ratio = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    let final_ratio = samples.last().expect("nonempty grid").ratio;
    Ok(ContentEstimate { s: s.clone(), exponent, samples, max_ratio, final_ratio })
}
