//! Finite-horizon heavy sets along translation orbits.
//!
//! A point is heavy for horizon n when every centered hit count
//! S_j = Σ_{i<j} (χ_A(x+ig) − γ) stays strictly positive, j = 1..n. This
//! module builds the deficit traces, the stage schedule n_i = q_i^{2k/(d−ψ)}
//! with its rational dilation radii, per-stage verdicts against dilated
//! targets, and the seeded Monte-Carlo checks (maximal inequality,
//! orthogonality) used by the experiment harness.

pub mod sweep;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::diophantine::{best_below, BelowApprox};
use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::group::{GroupPoint, GroupSpace, SpaceKind};
use crate::target::{cmp_checked, TargetSet};

/// Hard ceiling on any single-orbit horizon.
const HORIZON_CAP: u64 = 1 << 32;

/// Which deficit family a trace belongs to: X runs against the raw target at
/// level μ(A); Y(i) against the dilated target at the rational level p_i/q_i;
/// Z(i) against the dilated target at its exact measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Variant {
    X,
    Y { stage: usize },
    Z { stage: usize },
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::X => write!(f, "X"),
            Variant::Y { stage } => write!(f, "Y({stage})"),
            Variant::Z { stage } => write!(f, "Z({stage})"),
        }
    }
}

/// One orbit's worth of partial sums S_1..S_n, kept exact.
#[derive(Clone, Debug)]
pub struct DeficitTrace {
    pub x: GroupPoint,
    pub g: GroupPoint,
    pub gamma: ExactScalar,
    pub variant: Variant,
    /// χ_A(x + ig) for i = 0..n−1.
    pub hits: Vec<bool>,
    /// S_j for j = 1..n; sums[j−1] pairs with hits[j−1].
    pub sums: Vec<ExactScalar>,
}

/// Outcome of a strict-positivity scan over one trace.
#[derive(Clone, Debug)]
pub struct HeavyVerdict {
    pub heavy: bool,
    /// Least j with S_j ≤ 0, if any.
    pub first_failure: Option<u64>,
    pub min_partial_sum: ExactScalar,
}

impl DeficitTrace {
    pub fn horizon(&self) -> u64 {
        self.sums.len() as u64
    }

    pub fn verdict(&self) -> HeavyVerdict {
        let mut min = self.sums[0].clone();
        let mut first_failure = None;
        for (j, s) in self.sums.iter().enumerate() {
            if s.compare(&min).expect("sums share one field") == Ordering::Less {
                min = s.clone();
            }
            if first_failure.is_none() && !s.is_positive() {
                first_failure = Some(j as u64 + 1);
            }
        }
        HeavyVerdict { heavy: first_failure.is_none(), first_failure, min_partial_sum: min }
    }

    /// Re-verify the defining recurrence: each increment is exactly 1−γ on a
    /// hit and −γ on a miss.
    pub fn check_increments(&self) -> Result<()> {
        let gain = ExactScalar::one().checked_sub(&self.gamma)?;
        let loss = self.gamma.neg();
        let mut prev = ExactScalar::zero();
        for (j, (s, hit)) in self.sums.iter().zip(&self.hits).enumerate() {
            let step = s.checked_sub(&prev)?;
            let expected = if *hit { &gain } else { &loss };
            if step != *expected {
                return Err(Error::Invariant(format!(
                    "increment at j={} is {step}, expected {expected}",
                    j + 1
                )));
            }
            prev = s.clone();
        }
        Ok(())
    }

    /// Y-variant discreteness: every partial sum times q is an integer.
    pub fn check_denominator(&self, q: &BigInt) -> Result<()> {
        let qs = ExactScalar::from_bigint(q.clone());
        for (j, s) in self.sums.iter().enumerate() {
            let scaled = s.checked_mul(&qs)?;
            if !scaled.is_integer() {
                return Err(Error::Invariant(format!(
                    "q·S_{} = {scaled} is not an integer",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

fn check_level(gamma: &ExactScalar) -> Result<()> {
    if gamma.is_negative() || gamma.compare(&ExactScalar::one())? == Ordering::Greater {
        return Err(Error::Domain("level γ must lie in [0, 1]".into()));
    }
    Ok(())
}

fn check_horizon(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if n > HORIZON_CAP {
        return Err(Error::ResourceCap(format!("horizon {n} exceeds cap {HORIZON_CAP}")));
    }
    Ok(())
}

/// The full deficit trace of (x, g) against `target` at level γ.
pub fn deficit_trace(
    space: &GroupSpace,
    x: &GroupPoint,
    g: &GroupPoint,
    target: &TargetSet,
    gamma: &ExactScalar,
    variant: Variant,
    n: u64,
) -> Result<DeficitTrace> {
    check_horizon(n)?;
    check_level(gamma)?;
    target.check_space(space)?;
    let gain = ExactScalar::one().checked_sub(gamma)?;
    let loss = gamma.neg();
    let mut pos = x.clone();
    let mut sum = ExactScalar::zero();
    let mut hits = Vec::with_capacity(n as usize);
    let mut sums = Vec::with_capacity(n as usize);
    for j in 1..=n {
        let hit = target.contains(&pos)?;
        sum = sum.checked_add(if hit { &gain } else { &loss })?;
        hits.push(hit);
        sums.push(sum.clone());
        if j < n {
            pos = space.translate(&pos, g)?;
        }
    }
    Ok(DeficitTrace {
        x: x.clone(),
        g: g.clone(),
        gamma: gamma.clone(),
        variant,
        hits,
        sums,
    })
}

/// Strict-positivity verdict without materializing the trace.
pub fn is_heavy(
    space: &GroupSpace,
    x: &GroupPoint,
    g: &GroupPoint,
    target: &TargetSet,
    gamma: &ExactScalar,
    n: u64,
) -> Result<HeavyVerdict> {
    check_horizon(n)?;
    check_level(gamma)?;
    target.check_space(space)?;
    let gain = ExactScalar::one().checked_sub(gamma)?;
    let loss = gamma.neg();
    let mut pos = x.clone();
    let mut sum = ExactScalar::zero();
    let mut min: Option<ExactScalar> = None;
    let mut first_failure = None;
    for j in 1..=n {
        let hit = target.contains(&pos)?;
        sum = sum.checked_add(if hit { &gain } else { &loss })?;
        let lower = match &min {
            None => true,
            Some(m) => sum.compare(m)? == Ordering::Less,
        };
        if lower {
            min = Some(sum.clone());
        }
        if first_failure.is_none() && !sum.is_positive() {
            first_failure = Some(j);
        }
        if j < n {
            pos = space.translate(&pos, g)?;
        }
    }
    Ok(HeavyVerdict {
        heavy: first_failure.is_none(),
        first_failure,
        min_partial_sum: min.expect("horizon ≥ 1"),
    })
}

/// Least j ≤ n with S_j ≤ 0, stopping at the first failure.
pub fn first_failure(
    space: &GroupSpace,
    x: &GroupPoint,
    g: &GroupPoint,
    target: &TargetSet,
    gamma: &ExactScalar,
    n: u64,
) -> Result<Option<u64>> {
    check_horizon(n)?;
    check_level(gamma)?;
    let gain = ExactScalar::one().checked_sub(gamma)?;
    let loss = gamma.neg();
    let mut pos = x.clone();
    let mut sum = ExactScalar::zero();
    for j in 1..=n {
        let hit = target.contains(&pos)?;
        sum = sum.checked_add(if hit { &gain } else { &loss })?;
        if !sum.is_positive() {
            return Ok(Some(j));
        }
        if j < n {
            pos = space.translate(&pos, g)?;
        }
    }
    Ok(None)
}

/// First-failure indices over the whole sampling lattice, in grid order.
pub fn grid_first_failures(
    space: &GroupSpace,
    target: &TargetSet,
    gamma: &ExactScalar,
    g: &GroupPoint,
    resolution: u64,
    cap: u64,
    horizon: u64,
) -> Result<Vec<Option<u64>>> {
    let grid = space.grid_points(resolution, cap)?;
    grid.par_iter()
        .map(|x| first_failure(space, x, g, target, gamma, horizon))
        .collect()
}

/// One stage of the proof schedule: horizon n = ⌊q^{2k/(d−ψ)}⌋ and a
/// rational dilation radius ε ≤ n^{−1/2}.
#[derive(Clone, Debug)]
pub struct Stage {
    /// 1-based position in the schedule.
    pub index: usize,
    pub p: BigInt,
    pub q: BigInt,
    /// p/q in lowest terms; the rational level the Y-variant runs at.
    pub level: Rational,
    pub k: u32,
    pub psi: Rational,
    pub dim: Rational,
    pub n: u64,
    /// Largest admissible rational ≤ n^{−1/2}; shrinking the radius only
    /// shrinks the dilated set, so every inequality that needs ε ≤ n^{−1/2}
    /// survives the substitution.
    pub eps: Rational,
    /// Whether eps equals n^{−1/2} exactly (n a perfect square).
    pub eps_exact: bool,
}

impl Stage {
    pub fn eps_scalar(&self) -> ExactScalar {
        ExactScalar::from_rational(self.eps.clone())
    }

    pub fn level_scalar(&self) -> ExactScalar {
        ExactScalar::from_rational(self.level.clone())
    }
}

/// The largest rational ≤ n^{−1/2} with denominator ≤ max(q², ⌈√n⌉), and
/// whether it is exact. The q² cap mirrors the schedule's bookkeeping; the
/// ⌈√n⌉ fallback keeps the radius positive when q² < √n.
fn eps_envelope(n: u64, q: &BigInt) -> Result<(Rational, bool)> {
    let root = n.sqrt();
    if root * root == n {
        return Ok((Rational::new(BigInt::one(), BigInt::from(root)), true));
    }
    let inv_sqrt = ExactScalar::sqrt_rational(&Rational::new(BigInt::one(), BigInt::from(n)))?;
    let max_den = (q * q).max(BigInt::from(root + 1));
    let r = best_below(&inv_sqrt, &max_den)?;
    if !r.is_positive() {
        return Err(Error::Invariant(format!("dilation radius collapsed to zero at n={n}")));
    }
    Ok((r, false))
}

/// Build the stage schedule from a certified below-approximating sequence:
/// n_i = ⌊q_i^{2k/(d−ψ)}⌋, ε_i the rational envelope of n_i^{−1/2}.
pub fn make_schedule(seq: &BelowApprox, psi: &Rational, dim: &Rational) -> Result<Vec<Stage>> {
    if psi < &Rational::zero() {
        return Err(Error::Domain("boundary exponent ψ must be nonnegative".into()));
    }
    if psi >= dim {
        return Err(Error::Domain(
            "boundary exponent ψ must lie strictly below the ambient dimension".into(),
        ));
    }
    let expo = Rational::from_integer(BigInt::from(2 * seq.k)) / (dim - psi);
    let e_num = expo
        .numer()
        .to_u32()
        .ok_or_else(|| Error::Domain("schedule exponent out of range".into()))?;
    let e_den = expo
        .denom()
        .to_u32()
        .ok_or_else(|| Error::Domain("schedule exponent out of range".into()))?;
    let mut stages: Vec<Stage> = Vec::with_capacity(seq.entries.len());
    for (i, entry) in seq.entries.iter().enumerate() {
        let n_big = entry.q.pow(e_num).nth_root(e_den);
        let n = n_big
            .to_u64()
            .filter(|n| *n <= HORIZON_CAP)
            .ok_or_else(|| {
                Error::ResourceCap(format!("stage {} horizon exceeds cap", i + 1))
            })?;
        let (eps, eps_exact) = eps_envelope(n, &entry.q)?;
        if let Some(prev) = stages.last() {
            if n <= prev.n {
                return Err(Error::Invariant(format!(
                    "stage horizons must strictly increase (n_{} = {} after {})",
                    i + 1,
                    n,
                    prev.n
                )));
            }
            if eps >= prev.eps {
                return Err(Error::Invariant(format!(
                    "dilation radii must strictly decrease at stage {}",
                    i + 1
                )));
            }
        }
        stages.push(Stage {
            index: i + 1,
            p: entry.p.clone(),
            q: entry.q.clone(),
            level: Rational::new(entry.p.clone(), entry.q.clone()),
            k: seq.k,
            psi: psi.clone(),
            dim: dim.clone(),
            n,
            eps,
            eps_exact,
        });
    }
    Ok(stages)
}

/// The rational-measure branch: the level is μ(A) = p/q itself at every
/// stage and the horizons are supplied directly.
pub fn fixed_schedule(
    level: &Rational,
    horizons: &[u64],
    k: u32,
    psi: &Rational,
    dim: &Rational,
) -> Result<Vec<Stage>> {
    if !level.is_positive() || level >= &Rational::one() {
        return Err(Error::Domain("rational level must lie in (0, 1)".into()));
    }
    if horizons.is_empty() {
        return Err(Error::Insufficient("empty horizon list".into()));
    }
    let mut stages: Vec<Stage> = Vec::with_capacity(horizons.len());
    for (i, &n) in horizons.iter().enumerate() {
        check_horizon(n)?;
        let (eps, eps_exact) = eps_envelope(n, level.denom())?;
        if let Some(prev) = stages.last() {
            if n <= prev.n {
                return Err(Error::Domain("horizons must strictly increase".into()));
            }
            if eps >= prev.eps {
                return Err(Error::Invariant(format!(
                    "dilation radii must strictly decrease at stage {}",
                    i + 1
                )));
            }
        }
        stages.push(Stage {
            index: i + 1,
            p: level.numer().clone(),
            q: level.denom().clone(),
            level: level.clone(),
            k,
            psi: psi.clone(),
            dim: dim.clone(),
            n,
            eps,
            eps_exact,
        });
    }
    Ok(stages)
}

/// A stage verdict together with the dilation bookkeeping.
#[derive(Clone, Debug)]
pub struct StageVerdict {
    pub verdict: HeavyVerdict,
    /// The dilated target swallowed the whole group: the verdict is the
    /// trivial one (every increment is 1 − p/q > 0).
    pub degenerate: bool,
    pub dilated_measure: ExactScalar,
}

/// Heavy verdict for (x, g) against the stage's dilated target at level
/// p_i/q_i over horizon n_i.
pub fn h_y_verdict(
    space: &GroupSpace,
    x: &GroupPoint,
    g: &GroupPoint,
    target: &TargetSet,
    stage: &Stage,
) -> Result<StageVerdict> {
    if stage.level >= Rational::one() {
        return Err(Error::Domain("stage level must be below 1".into()));
    }
    let dilated = target.dilate(&stage.eps_scalar())?;
    let measure = dilated.measure();
    if dilated.is_full() {
        let min = ExactScalar::one().checked_sub(&stage.level_scalar())?;
        return Ok(StageVerdict {
            verdict: HeavyVerdict { heavy: true, first_failure: None, min_partial_sum: min },
            degenerate: true,
            dilated_measure: measure,
        });
    }
    let verdict = is_heavy(space, x, g, &dilated, &stage.level_scalar(), stage.n)?;
    Ok(StageVerdict { verdict, degenerate: false, dilated_measure: measure })
}

/// Fraction of the sampling lattice satisfying a predicate, as an exact
/// count over the lattice size.
pub fn measure_estimate<F>(
    space: &GroupSpace,
    resolution: u64,
    cap: u64,
    pred: F,
) -> Result<Rational>
where
    F: Fn(&GroupPoint) -> Result<bool> + Sync,
{
    let grid = space.grid_points(resolution, cap)?;
    let count = grid
        .par_iter()
        .map(|p| pred(p).map(u64::from))
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    Ok(Rational::new(BigInt::from(count), BigInt::from(grid.len() as u64)))
}

/// J(x, g) = #{j ∈ [0, n): x + jg satisfies `member`}.
pub fn j_count<F>(
    space: &GroupSpace,
    x: &GroupPoint,
    g: &GroupPoint,
    n: u64,
    member: F,
) -> Result<u64>
where
    F: Fn(&GroupPoint) -> Result<bool>,
{
    check_horizon(n)?;
    let mut pos = x.clone();
    let mut count = 0u64;
    for j in 0..n {
        if member(&pos)? {
            count += 1;
        }
        if j + 1 < n {
            pos = space.translate(&pos, g)?;
        }
    }
    Ok(count)
}

/// Distinct-value census of a trace's partial sums.
#[derive(Clone, Debug)]
pub struct DistinctSums {
    pub count: usize,
    /// Smallest gap between two distinct values; None when all sums agree.
    pub min_separation: Option<ExactScalar>,
}

/// Count distinct partial-sum values. For rational levels p/q the distinct
/// values are multiples of 1/q, so consecutive distinct values must be at
/// least 1/q apart; that separation is re-verified exactly.
pub fn distinct_sums(trace: &DeficitTrace) -> Result<DistinctSums> {
    let mut sorted: Vec<&ExactScalar> = trace.sums.iter().collect();
    sorted.sort_by(|a, b| cmp_checked(a, b));
    sorted.dedup_by(|a, b| *a == *b);
    let mut min_sep: Option<ExactScalar> = None;
    for w in sorted.windows(2) {
        let gap = w[1].checked_sub(w[0])?;
        let smaller = match &min_sep {
            None => true,
            Some(m) => gap.compare(m)? == Ordering::Less,
        };
        if smaller {
            min_sep = Some(gap);
        }
    }
    if let (Some(level), Some(sep)) = (trace.gamma.as_rational(), &min_sep) {
        let floor = ExactScalar::from_rational(Rational::new(
            BigInt::one(),
            level.denom().clone(),
        ));
        if sep.compare(&floor)? == Ordering::Less {
            return Err(Error::Invariant(format!(
                "distinct sums separated by {sep}, below 1/{}",
                level.denom()
            )));
        }
    }
    Ok(DistinctSums { count: sorted.len(), min_separation: min_sep })
}

/// H(A, g) collapses analytically when the target is null or full.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegenerateHeavy {
    /// μ(A) = 0: every positive partial sum forces a hit at every step, so
    /// the heavy set is A itself.
    HeavyEqualsTarget,
    /// μ(A) = 1: every partial sum is identically 0, never strictly
    /// positive, so the heavy set is empty.
    HeavyIsEmpty,
}

pub fn degenerate_case(target: &TargetSet) -> Option<DegenerateHeavy> {
    let m = target.measure();
    if m.is_zero() {
        Some(DegenerateHeavy::HeavyEqualsTarget)
    } else if m == ExactScalar::one() {
        Some(DegenerateHeavy::HeavyIsEmpty)
    } else {
        None
    }
}

/// A uniform draw from the closed ε-ball around x.
pub fn sample_in_ball<R: Rng>(
    space: &GroupSpace,
    x: &GroupPoint,
    eps: &Rational,
    rng: &mut R,
) -> Result<GroupPoint> {
    if !eps.is_positive() {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    match (space.kind(), x) {
        (SpaceKind::Torus { .. }, GroupPoint::Torus(coords)) => {
            let scale = Rational::new(BigInt::one(), BigInt::one() << 53);
            let coords = coords
                .iter()
                .map(|c| {
                    // δ = ε·(2u − 1) with u a 53-bit dyadic in [0, 1).
                    let mantissa = rng.gen::<u64>() >> 11;
                    let signed = Rational::from_integer(BigInt::from(
                        2 * mantissa as i64 - (1i64 << 53),
                    )) * &scale;
                    let delta = ExactScalar::from_rational(eps * signed);
                    Ok(c.checked_add(&delta)?.mod1())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GroupPoint::Torus(coords))
        }
        (SpaceKind::PAdic { prime, depth }, GroupPoint::PAdic(p)) => {
            // Keep the first m digits where p^{−m} ≤ ε; randomize the tail.
            let eps_s = ExactScalar::from_rational(eps.clone());
            let mut m = 0u32;
            let mut value = Rational::one();
            let p_rat = Rational::from_integer(BigInt::from(*prime));
            while m < *depth
                && ExactScalar::from_rational(value.clone().recip()).compare(&eps_s)?
                    == Ordering::Greater
            {
                value *= &p_rat;
                m += 1;
            }
            let mut digits = p.digits.clone();
            for d in digits.iter_mut().skip(m as usize) {
                *d = rng.gen_range(0..*prime);
            }
            Ok(GroupPoint::PAdic(crate::group::PAdicPoint { prime: *prime, digits }))
        }
        _ => Err(Error::Domain("point does not belong to this space".into())),
    }
}

/// Monte-Carlo check of the maximal inequality: the empirical mean of
/// max_k S_k² against (log(4n)/log 2)²·(n/4), using E|Z_j|² ≤ 1/4.
#[derive(Clone, Debug)]
pub struct LoeveReport {
    pub horizon: u64,
    pub samples: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub std_err: f64,
    pub pass: bool,
}

/// Z-variant maximal-inequality check. `dilated` is the already-dilated
/// target; the centering level is its exact measure.
pub fn loeve_check(
    space: &GroupSpace,
    dilated: &TargetSet,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<LoeveReport> {
    check_horizon(n)?;
    if samples == 0 {
        return Err(Error::Insufficient("at least one sample required".into()));
    }
    dilated.check_space(space)?;
    let gamma = dilated.measure();
    check_level(&gamma)?;
    let gain = ExactScalar::one().checked_sub(&gamma)?;
    let loss = gamma.neg();
    let values = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let x = space.uniform_point(&mut rng);
            let g = space.uniform_point(&mut rng);
            let mut pos = x;
            let mut sum = ExactScalar::zero();
            let mut max_abs = ExactScalar::zero();
            for j in 1..=n {
                let hit = dilated.contains(&pos)?;
                sum = sum.checked_add(if hit { &gain } else { &loss })?;
                let abs = sum.abs();
                if abs.compare(&max_abs)? == Ordering::Greater {
                    max_abs = abs;
                }
                if j < n {
                    pos = space.translate(&pos, &g)?;
                }
            }
            let m = max_abs.to_f64().0;
            Ok(m * m)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_err) = mean_and_se(&values);
    let log_term = (4.0 * n as f64).log2();
    let rhs = log_term * log_term * (n as f64 / 4.0);
    let lhs = mean;
    Ok(LoeveReport { horizon: n, samples, lhs, rhs, std_err, pass: lhs <= rhs + 3.0 * std_err })
}

#[derive(Clone, Debug)]
pub struct OrthogonalityRow {
    pub i: u64,
    pub j: u64,
    /// Ê[Z_i Z_j] over the sampled (x, g).
    pub estimate: f64,
    pub std_err: f64,
    pub mean_i: f64,
    pub mean_i_se: f64,
    pub mean_j: f64,
    pub mean_j_se: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug)]
pub struct OrthogonalityReport {
    pub samples: u64,
    pub rows: Vec<OrthogonalityRow>,
    pub max_abs_estimate: f64,
    pub pass: bool,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, (var / n).sqrt())
}

/// Pair-correlation check: for each step pair (i, j), i ≠ j, estimate
/// E[Z_i Z_j] over uniform (x, g) and flag estimates outside 4 standard
/// errors of 0. The per-index means are checked against 0 the same way.
pub fn orthogonality_check(
    space: &GroupSpace,
    dilated: &TargetSet,
    pairs: &[(u64, u64)],
    samples: u64,
    seed: u64,
) -> Result<OrthogonalityReport> {
    if samples == 0 {
        return Err(Error::Insufficient("at least one sample required".into()));
    }
    dilated.check_space(space)?;
    let gamma = dilated.measure();
    check_level(&gamma)?;
    let gamma_f = gamma.to_f64().0;
    for (i, j) in pairs {
        if i == j {
            return Err(Error::Domain("orthogonality pairs must have i ≠ j".into()));
        }
    }
    let rows = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_idx, &(i, j))| -> Result<OrthogonalityRow> {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(pair_idx as u64);
            let mut products = Vec::with_capacity(samples as usize);
            let mut zi = Vec::with_capacity(samples as usize);
            let mut zj = Vec::with_capacity(samples as usize);
            for _ in 0..samples {
                let x = space.uniform_point(&mut rng);
                let g = space.uniform_point(&mut rng);
                let xi = space.translate(&x, &space.scale(&g, i)?)?;
                let xj = space.translate(&x, &space.scale(&g, j)?)?;
                let a = if dilated.contains(&xi)? { 1.0 - gamma_f } else { -gamma_f };
                let b = if dilated.contains(&xj)? { 1.0 - gamma_f } else { -gamma_f };
                products.push(a * b);
                zi.push(a);
                zj.push(b);
            }
            let (estimate, std_err) = mean_and_se(&products);
            let (mean_i, mean_i_se) = mean_and_se(&zi);
            let (mean_j, mean_j_se) = mean_and_se(&zj);
            let within_tolerance = estimate.abs() <= 4.0 * std_err
                && mean_i.abs() <= 4.0 * mean_i_se
                && mean_j.abs() <= 4.0 * mean_j_se;
            Ok(OrthogonalityRow {
                i,
                j,
                estimate,
                std_err,
                mean_i,
                mean_i_se,
                mean_j,
                mean_j_se,
                within_tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_estimate = rows.iter().map(|r| r.estimate.abs()).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.within_tolerance);
    Ok(OrthogonalityReport { samples, rows, max_abs_estimate, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::below_sequence;
    use crate::target::{IntervalUnion, PAdicBallUnion};
    use proptest::prelude::*;

    fn q(s: &str) -> ExactScalar {
        s.parse().unwrap()
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn interval(l: &str, r: &str) -> TargetSet {
        TargetSet::Intervals(IntervalUnion::from_endpoints(&[(q(l), q(r))]).unwrap())
    }

    fn golden() -> ExactScalar {
        q("(sqrt(5) - 1)/2")
    }

    #[test]
    fn trace_matches_hand_orbit_for_golden_step() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let x = GroupPoint::torus1(q("0"));
        let g = GroupPoint::torus1(golden());
        let tr = deficit_trace(&t1, &x, &g, &a, &q("1/2"), Variant::X, 3).unwrap();
        // Orbit 0, 0.618…, 0.236…: hit, miss, hit.
        assert_eq!(tr.hits, vec![true, false, true]);
        assert_eq!(tr.sums, vec![q("1/2"), q("0"), q("1/2")]);
        tr.check_increments().unwrap();

        let v = tr.verdict();
        assert!(!v.heavy);
        assert_eq!(v.first_failure, Some(2));
        assert_eq!(v.min_partial_sum, q("0"));
    }

    #[test]
    fn horizon_one_is_membership() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let g = GroupPoint::torus1(q("1/7"));
        let inside = is_heavy(&t1, &GroupPoint::torus1(q("0")), &g, &a, &q("1/2"), 1).unwrap();
        assert!(inside.heavy);
        assert_eq!(inside.min_partial_sum, q("1/2"));

        let outside = is_heavy(&t1, &GroupPoint::torus1(q("3/5")), &g, &a, &q("1/2"), 1).unwrap();
        assert!(!outside.heavy);
        assert_eq!(outside.first_failure, Some(1));
        assert_eq!(outside.min_partial_sum, q("-1/2"));
    }

    #[test]
    fn golden_interval_heavy_at_horizon_one() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = TargetSet::Intervals(
            IntervalUnion::from_endpoints(&[(q("0"), golden())]).unwrap(),
        );
        let g = GroupPoint::torus1(golden());
        let v = is_heavy(&t1, &GroupPoint::torus1(q("0")), &g, &a, &golden(), 1).unwrap();
        assert!(v.heavy);
        assert_eq!(v.min_partial_sum, q("(3 - sqrt(5))/2")); // 1 − γ
    }

    #[test]
    fn padic_alternating_orbit() {
        let z2 = GroupSpace::padic(2, 4).unwrap();
        let even = TargetSet::PAdicBalls(
            PAdicBallUnion::from_centers(2, &[(crate::group::PAdicPoint::zero(2, 4), 1)])
                .unwrap(),
        );
        let x = GroupPoint::PAdic(crate::group::PAdicPoint::zero(2, 4));
        let g = GroupPoint::PAdic(crate::group::PAdicPoint::from_value(2, 4, 1));
        let tr = deficit_trace(&z2, &x, &g, &even, &q("1/2"), Variant::X, 2).unwrap();
        assert_eq!(tr.sums, vec![q("1/2"), q("0")]);
        assert_eq!(tr.verdict().first_failure, Some(2));
    }

    #[test]
    fn schedule_follows_the_exponent_formula() {
        // d=1, ψ=0, k=2: n = q⁴, ε = 1/q².
        let seq = below_sequence(&golden(), 4).unwrap();
        let stages = make_schedule(&seq, &rat(0, 1), &rat(1, 1)).unwrap();
        let ns: Vec<u64> = stages.iter().map(|s| s.n).collect();
        assert_eq!(ns, vec![1, 16, 625, 28561]);
        let eps: Vec<String> = stages.iter().map(|s| s.eps.to_string()).collect();
        assert_eq!(eps, vec!["1", "1/4", "1/25", "1/169"]);
        assert!(stages.iter().all(|s| s.eps_exact));
        assert_eq!(stages[2].q, BigInt::from(5));
        assert_eq!(stages[2].level, rat(3, 5));
    }

    #[test]
    fn schedule_handles_other_orders_and_dimensions() {
        // d=1, ψ=0, k=3, q=2 → n = 2⁶ = 64, ε = 1/8.
        let seq = BelowApprox::from_entries(
            q("(sqrt(5) - 1)/2"),
            &[(BigInt::from(0), BigInt::from(1)), (BigInt::from(1), BigInt::from(2))],
            3,
            rat(2, 1),
        )
        .unwrap();
        let stages = make_schedule(&seq, &rat(0, 1), &rat(1, 1)).unwrap();
        assert_eq!(stages[1].n, 64);
        assert_eq!(stages[1].eps, rat(1, 8));

        // d=2, ψ=1, k=2, q=3: the exponent 2k/(d−ψ) = 4 gives n = 3⁴ = 81,
        // ε = 1/9.
        let seq = BelowApprox::from_entries(
            q("(sqrt(5) - 1)/2"),
            &[(BigInt::from(1), BigInt::from(3))],
            2,
            rat(3, 1),
        )
        .unwrap();
        let stages = make_schedule(&seq, &rat(1, 1), &rat(2, 1)).unwrap();
        assert_eq!(stages[0].n, 81);
        assert_eq!(stages[0].eps, rat(1, 9));
    }

    #[test]
    fn schedule_rejects_flat_exponents() {
        let seq = below_sequence(&golden(), 3).unwrap();
        assert!(matches!(
            make_schedule(&seq, &rat(1, 1), &rat(1, 1)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_schedule(&seq, &rat(3, 2), &rat(1, 1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn envelope_is_exact_on_squares_and_below_otherwise() {
        let stages =
            fixed_schedule(&rat(1, 2), &[10, 100, 1000], 2, &rat(0, 1), &rat(1, 1)).unwrap();
        // √10 is irrational: the best denominator-≤-4 rational below 1/√10.
        assert_eq!(stages[0].eps, rat(1, 4));
        assert!(!stages[0].eps_exact);
        assert_eq!(stages[1].eps, rat(1, 10));
        assert!(stages[1].eps_exact);
        // ⌈√1000⌉ = 32 and 1/32 < 1/√1000 < 1/31.
        assert_eq!(stages[2].eps, rat(1, 32));
    }

    #[test]
    fn stage_verdict_matches_direct_arithmetic() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let stage = Stage {
            index: 1,
            p: BigInt::from(12),
            q: BigInt::from(29),
            level: rat(12, 29),
            k: 2,
            psi: rat(0, 1),
            dim: rat(1, 1),
            n: 1,
            eps: rat(1, 25),
            eps_exact: true,
        };
        let g = GroupPoint::torus1(golden());
        let out = h_y_verdict(&t1, &GroupPoint::torus1(q("0")), &g, &a, &stage).unwrap();
        assert!(!out.degenerate);
        assert_eq!(out.dilated_measure, q("29/50"));
        assert!(out.verdict.heavy);
        assert_eq!(out.verdict.min_partial_sum, q("17/29"));
    }

    #[test]
    fn stage_verdict_flags_degenerate_dilation() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let stage = Stage {
            index: 1,
            p: BigInt::from(12),
            q: BigInt::from(29),
            level: rat(12, 29),
            k: 2,
            psi: rat(0, 1),
            dim: rat(1, 1),
            n: 5,
            eps: rat(1, 4),
            eps_exact: true,
        };
        let g = GroupPoint::torus1(golden());
        let out = h_y_verdict(&t1, &GroupPoint::torus1(q("2/3")), &g, &a, &stage).unwrap();
        assert!(out.degenerate);
        assert!(out.verdict.heavy);
        assert_eq!(out.dilated_measure, q("1"));
        assert_eq!(out.verdict.min_partial_sum, q("17/29"));
    }

    #[test]
    fn grid_fraction_counts_closed_endpoints() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let frac = measure_estimate(&t1, 1000, 1 << 20, |p| a.contains(p)).unwrap();
        assert_eq!(frac, rat(501, 1000));

        let nothing = measure_estimate(&t1, 64, 1 << 20, |_| Ok(false)).unwrap();
        assert!(nothing.is_zero());

        let z2 = GroupSpace::padic(2, 8).unwrap();
        let even = TargetSet::PAdicBalls(
            PAdicBallUnion::from_centers(2, &[(crate::group::PAdicPoint::zero(2, 8), 1)])
                .unwrap(),
        );
        let frac = measure_estimate(&z2, 16, 1 << 20, |p| even.contains(p)).unwrap();
        assert_eq!(frac, rat(1, 2));
    }

    #[test]
    fn j_count_examples() {
        let t1 = GroupSpace::torus(1).unwrap();
        let x = GroupPoint::torus1(q("0"));
        let g = GroupPoint::torus1(q("1/3"));
        assert_eq!(j_count(&t1, &x, &g, 9, |_| Ok(false)).unwrap(), 0);

        // Membership in [0, 1/2] along the period-3 orbit {0, 1/3, 2/3}.
        let a = interval("0", "1/2");
        assert_eq!(j_count(&t1, &x, &g, 9, |p| a.contains(p)).unwrap(), 6);
    }

    #[test]
    fn distinct_sums_census() {
        let t1 = GroupSpace::torus(1).unwrap();
        // Constant-χ segment: strictly monotone sums, all distinct.
        let a = interval("0", "9/10");
        let x = GroupPoint::torus1(q("0"));
        let g = GroupPoint::torus1(q("1/8"));
        let tr = deficit_trace(&t1, &x, &g, &a, &q("1/3"), Variant::X, 5).unwrap();
        let d = distinct_sums(&tr).unwrap();
        assert_eq!(d.count, 5);
        assert_eq!(d.min_separation.unwrap(), q("2/3"));

        // Alternating hits at level 1/2: values {1/2, 0}.
        let b = interval("0", "1/4");
        let g = GroupPoint::torus1(q("1/2"));
        let tr = deficit_trace(&t1, &x, &g, &b, &q("1/2"), Variant::Y { stage: 1 }, 6).unwrap();
        tr.check_denominator(&BigInt::from(2)).unwrap();
        let d = distinct_sums(&tr).unwrap();
        assert_eq!(d.count, 2);
        assert_eq!(d.min_separation.unwrap(), q("1/2"));
    }

    #[test]
    fn degenerate_measures_short_circuit() {
        let full = interval("0", "1");
        assert_eq!(degenerate_case(&full), Some(DegenerateHeavy::HeavyIsEmpty));
        let point = interval("1/3", "1/3");
        assert_eq!(degenerate_case(&point), Some(DegenerateHeavy::HeavyEqualsTarget));
        let half = interval("0", "1/2");
        assert_eq!(degenerate_case(&half), None);
    }

    #[test]
    fn loeve_bound_at_horizon_one_is_unity() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let rep = loeve_check(&t1, &a, 1, 64, 11).unwrap();
        assert_eq!(rep.rhs, 1.0);
        assert!(rep.pass);
        assert!(rep.lhs <= 0.25 + 1e-12); // |S_1| ∈ {1/2}, squared
    }

    #[test]
    fn loeve_full_target_is_identically_zero() {
        let t1 = GroupSpace::torus(1).unwrap();
        let full = interval("0", "1");
        let rep = loeve_check(&t1, &full, 16, 32, 5).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn loeve_passes_on_a_dilated_golden_target() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = TargetSet::Intervals(
            IntervalUnion::from_endpoints(&[(q("0"), golden())]).unwrap(),
        );
        let dilated = a.dilate(&q("1/25")).unwrap();
        let rep = loeve_check(&t1, &dilated, 64, 200, 20260815).unwrap();
        assert!(rep.pass, "lhs={} rhs={}", rep.lhs, rep.rhs);
        assert!(rep.lhs < rep.rhs);
    }

    #[test]
    fn loeve_is_deterministic_for_a_seed() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let r1 = loeve_check(&t1, &a, 8, 50, 99).unwrap();
        let r2 = loeve_check(&t1, &a, 8, 50, 99).unwrap();
        assert_eq!(r1.lhs, r2.lhs);
        assert_eq!(r1.std_err, r2.std_err);
    }

    #[test]
    fn orthogonality_vanishes_for_full_target() {
        let t1 = GroupSpace::torus(1).unwrap();
        let full = interval("0", "1");
        let rep = orthogonality_check(&t1, &full, &[(0, 1), (2, 5)], 128, 3).unwrap();
        assert_eq!(rep.max_abs_estimate, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn orthogonality_is_within_tolerance_on_the_half_interval() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let rep = orthogonality_check(&t1, &a, &[(0, 1)], 2000, 7).unwrap();
        assert!(rep.pass, "estimate {}", rep.max_abs_estimate);
        assert!(rep.max_abs_estimate < 0.05);
    }

    #[test]
    fn orthogonality_rejects_diagonal_pairs() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        assert!(matches!(
            orthogonality_check(&t1, &a, &[(3, 3)], 16, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn grid_failures_agree_with_pointwise_verdicts() {
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let g = GroupPoint::torus1(q("sqrt(2) - 1"));
        let ff = grid_first_failures(&t1, &a, &q("1/2"), &g, 40, 1 << 20, 20).unwrap();
        let grid = t1.grid_points(40, 1 << 20).unwrap();
        for (x, f) in grid.iter().zip(&ff) {
            let v = is_heavy(&t1, x, &g, &a, &q("1/2"), 20).unwrap();
            assert_eq!(v.first_failure, *f);
            assert_eq!(v.heavy, f.is_none());
        }
    }

    #[test]
    fn ball_transfer_from_heavy_points() {
        // Paper-anchored: x ∈ h_X(n_i, g) forces the whole ε_i-ball into
        // h_Y(n_i, g). Level 1/2 at horizon 100, ε = 1/10.
        let t1 = GroupSpace::torus(1).unwrap();
        let a = interval("0", "1/2");
        let stages = fixed_schedule(&rat(1, 2), &[100], 2, &rat(0, 1), &rat(1, 1)).unwrap();
        let stage = &stages[0];
        let g = GroupPoint::torus1(q("sqrt(2) - 1"));
        let grid = t1.grid_points(200, 1 << 20).unwrap();
        let mut heavy_xs = Vec::new();
        for x in &grid {
            if first_failure(&t1, x, &g, &a, &q("1/2"), stage.n).unwrap().is_none() {
                heavy_xs.push(x.clone());
            }
        }
        assert!(!heavy_xs.is_empty(), "expected a heavy grid point at horizon 100");
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for x in heavy_xs.iter().take(10) {
            for _ in 0..3 {
                let y = sample_in_ball(&t1, x, &stage.eps, &mut rng).unwrap();
                let d = t1.distance(x, &y).unwrap();
                assert!(d.compare(&stage.eps_scalar()).unwrap() != Ordering::Greater);
                let out = h_y_verdict(&t1, &y, &g, &a, stage).unwrap();
                assert!(out.verdict.heavy);
            }
        }
    }

    proptest! {
        #[test]
        fn increments_and_verdict_consistency(
            xn in 0i64..24, gn in 1i64..24, num in 0i64..6, n in 1u64..12
        ) {
            let t1 = GroupSpace::torus(1).unwrap();
            let a = interval("1/8", "5/8");
            let x = GroupPoint::torus1(ExactScalar::from_ratio(xn, 24).unwrap());
            let g = GroupPoint::torus1(ExactScalar::from_ratio(gn, 24).unwrap());
            let gamma = ExactScalar::from_ratio(num, 6).unwrap();
            let tr = deficit_trace(&t1, &x, &g, &a, &gamma, Variant::X, n).unwrap();
            tr.check_increments().unwrap();
            let v = tr.verdict();
            let w = is_heavy(&t1, &x, &g, &a, &gamma, n).unwrap();
            prop_assert_eq!(v.heavy, w.heavy);
            prop_assert_eq!(v.first_failure, w.first_failure);
            prop_assert_eq!(&v.min_partial_sum, &w.min_partial_sum);
            prop_assert_eq!(
                first_failure(&t1, &x, &g, &a, &gamma, n).unwrap(),
                v.first_failure
            );
            // heavy ⇔ no failure ⇔ strictly positive minimum, exactly.
            prop_assert_eq!(v.heavy, v.min_partial_sum.is_positive());
        }

        #[test]
        fn nesting_is_monotone_in_the_horizon(
            xn in 0i64..20, gn in 1i64..20, n in 2u64..14
        ) {
            let t1 = GroupSpace::torus(1).unwrap();
            let a = interval("0", "1/2");
            let x = GroupPoint::torus1(ExactScalar::from_ratio(xn, 20).unwrap());
            let g = GroupPoint::torus1(ExactScalar::from_ratio(gn, 20).unwrap());
            let deep = is_heavy(&t1, &x, &g, &a, &q("1/2"), n).unwrap();
            let shallow = is_heavy(&t1, &x, &g, &a, &q("1/2"), n - 1).unwrap();
            if deep.heavy {
                prop_assert!(shallow.heavy);
            }
        }

        #[test]
        fn j_count_bounded_by_distinct_sums(
            xn in 0i64..16, gn in 1i64..16
        ) {
            // Paper-anchored: J(x, g) ≤ #{distinct partial sums}.
            let t1 = GroupSpace::torus(1).unwrap();
            let a = interval("0", "1/2");
            let stages = fixed_schedule(&rat(1, 2), &[9], 2, &rat(0, 1), &rat(1, 1)).unwrap();
            let stage = &stages[0];
            let x = GroupPoint::torus1(ExactScalar::from_ratio(xn, 16).unwrap());
            let g = GroupPoint::torus1(ExactScalar::from_ratio(gn, 16).unwrap());
            let dilated = a.dilate(&stage.eps_scalar()).unwrap();
            if !dilated.is_full() {
                let tr = deficit_trace(
                    &t1, &x, &g, &dilated, &stage.level_scalar(),
                    Variant::Y { stage: 1 }, stage.n,
                ).unwrap();
                let census = distinct_sums(&tr).unwrap();
                let j = j_count(&t1, &x, &g, stage.n, |p| {
                    Ok(h_y_verdict(&t1, p, &g, &a, stage)?.verdict.heavy)
                }).unwrap();
                prop_assert!(j as usize <= census.count.max(1));
            }
        }

        #[test]
        fn sampled_ball_points_stay_inside(
            xn in 0i64..12, en in 1i64..8, seed in 0u64..32
        ) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let eps = rat(en, 16);
            let t1 = GroupSpace::torus(1).unwrap();
            let x = GroupPoint::torus1(ExactScalar::from_ratio(xn, 12).unwrap());
            let y = sample_in_ball(&t1, &x, &eps, &mut rng).unwrap();
            let d = t1.distance(&x, &y).unwrap();
            prop_assert!(d.compare(&ExactScalar::from_rational(eps.clone())).unwrap()
                != Ordering::Greater);

            let z3 = GroupSpace::padic(3, 6).unwrap();
            let xp = GroupPoint::PAdic(crate::group::PAdicPoint::from_value(3, 6, xn as u64));
            let yp = sample_in_ball(&z3, &xp, &eps, &mut rng).unwrap();
            let dp = z3.distance(&xp, &yp).unwrap();
            prop_assert!(dp.compare(&ExactScalar::from_rational(eps)).unwrap()
                != Ordering::Greater);
        }
    }
}
