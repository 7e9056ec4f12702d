//! Compact abelian groups with exact translation, invariant metric, and
//! Haar-measure primitives: the d-torus under the max-norm and truncated
//! p-adic integers under the p^(−v) metric.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::exact::{ratio_to_f64, ExactScalar, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Torus { dim: u32 },
    PAdic { prime: u32, depth: u32 },
}

/// A group instance together with its Ahlfors-regularity data: constants
/// c3 ≤ c4 and exponent `dim` such that c3·ε^dim ≤ μ(ball ε) ≤ c4·ε^dim
/// for all ε ≤ 1/2.
#[derive(Clone, Debug)]
pub struct GroupSpace {
    kind: SpaceKind,
    dim: Rational,
    c3: Rational,
    c4: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicPoint {
    pub prime: u32,
    /// Base-p digits, least significant first; length = truncation depth m.
    pub digits: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupPoint {
    Torus(Vec<ExactScalar>),
    PAdic(PAdicPoint),
}

impl PAdicPoint {
    pub fn from_value(prime: u32, depth: u32, value: u64) -> Self {
        let mut digits = Vec::with_capacity(depth as usize);
        let mut v = value;
        for _ in 0..depth {
            digits.push((v % prime as u64) as u32);
            v /= prime as u64;
        }
        PAdicPoint { prime, digits }
    }

    pub fn zero(prime: u32, depth: u32) -> Self {
        PAdicPoint { prime, digits: vec![0; depth as usize] }
    }

    /// Index of the first digit where the two truncations differ.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        self.digits.iter().zip(&other.digits).position(|(a, b)| a != b)
    }
}

impl GroupPoint {
    pub fn torus1(x: ExactScalar) -> Self {
        GroupPoint::Torus(vec![x.mod1()])
    }

    pub fn torus(coords: Vec<ExactScalar>) -> Self {
        GroupPoint::Torus(coords.into_iter().map(|c| c.mod1()).collect())
    }

    pub fn as_torus(&self) -> Option<&[ExactScalar]> {
        match self {
            GroupPoint::Torus(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_padic(&self) -> Option<&PAdicPoint> {
        match self {
            GroupPoint::PAdic(p) => Some(p),
            _ => None,
        }
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl GroupSpace {
    pub fn torus(dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("torus dimension must be at least 1".into()));
        }
        let two_pow_d = Rational::from_integer(BigInt::from(2u32).pow(dim).into());
        Ok(GroupSpace {
            kind: SpaceKind::Torus { dim },
            dim: Rational::from_integer(BigInt::from(dim)),
            c3: two_pow_d.clone(),
            c4: two_pow_d,
        })
    }

    pub fn padic(prime: u32, depth: u32) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::Config(format!("{prime} is not prime")));
        }
        if depth == 0 {
            return Err(Error::Config("truncation depth must be at least 1".into()));
        }
        Ok(GroupSpace {
            kind: SpaceKind::PAdic { prime, depth },
            dim: Rational::one(),
            c3: Rational::new(BigInt::one(), BigInt::from(prime)),
            c4: Rational::one(),
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn dimension(&self) -> &Rational {
        &self.dim
    }

    pub fn regularity_constants(&self) -> (&Rational, &Rational) {
        (&self.c3, &self.c4)
    }

    pub fn torus_dim(&self) -> Option<u32> {
        match self.kind {
            SpaceKind::Torus { dim } => Some(dim),
            _ => None,
        }
    }

    fn check_point(&self, x: &GroupPoint) -> Result<()> {
        match (&self.kind, x) {
            (SpaceKind::Torus { dim }, GroupPoint::Torus(coords))
                if coords.len() == *dim as usize => Ok(()),
            (SpaceKind::PAdic { prime, depth }, GroupPoint::PAdic(p))
                if p.prime == *prime && p.digits.len() == *depth as usize => Ok(()),
            _ => Err(Error::Domain("point does not belong to this space".into())),
        }
    }

    /// x + g, exactly. Torus: coordinatewise mod-1 addition; p-adic: base-p
    /// addition with carry, truncated at depth m. An isometry in both cases.
    pub fn translate(&self, x: &GroupPoint, g: &GroupPoint) -> Result<GroupPoint> {
        self.check_point(x)?;
        self.check_point(g)?;
        match (x, g) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => {
                let coords = a
                    .iter()
                    .zip(b)
                    .map(|(u, v)| {
                        // Both inputs lie in [0, 1), so the sum is in [0, 2)
                        // and reduction needs at most one comparison.
                        let s = u.checked_add(v)?;
                        if s.compare(&ExactScalar::one())? == Ordering::Less {
                            Ok(s)
                        } else {
                            s.checked_sub(&ExactScalar::one())
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(GroupPoint::Torus(coords))
            }
            (GroupPoint::PAdic(a), GroupPoint::PAdic(b)) => {
                let p = a.prime;
                let mut carry = 0u32;
                let digits = a
                    .digits
                    .iter()
                    .zip(&b.digits)
                    .map(|(u, v)| {
                        let s = u + v + carry;
                        carry = s / p;
                        s % p
                    })
                    .collect();
                Ok(GroupPoint::PAdic(PAdicPoint { prime: p, digits }))
            }
            _ => unreachable!("check_point filters mismatches"),
        }
    }

    /// Invariant metric. Torus: max over coordinates of the wrapped distance
    /// min(|Δ|, 1 − |Δ|); p-adic: p^(−v) with v the first differing digit,
    /// and 0 when all m digits agree (truncation semantics).
    pub fn distance(&self, x: &GroupPoint, y: &GroupPoint) -> Result<ExactScalar> {
        self.check_point(x)?;
        self.check_point(y)?;
        match (x, y) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => {
                let half = ExactScalar::from_ratio(1, 2)?;
                let one = ExactScalar::one();
                let mut best = ExactScalar::zero();
                for (u, v) in a.iter().zip(b) {
                    let delta = u.checked_sub(v)?.mod1();
                    let wrapped = if delta.compare(&half)? == Ordering::Greater {
                        one.checked_sub(&delta)?
                    } else {
                        delta
                    };
                    if wrapped.compare(&best)? == Ordering::Greater {
                        best = wrapped;
                    }
                }
                Ok(best)
            }
            (GroupPoint::PAdic(a), GroupPoint::PAdic(b)) => match a.first_difference(b) {
                None => Ok(ExactScalar::zero()),
                Some(v) => Ok(ExactScalar::from_rational(Rational::new(
                    BigInt::one(),
                    BigInt::from(a.prime).pow(v as u32),
                ))),
            },
            _ => unreachable!("check_point filters mismatches"),
        }
    }

    /// Haar measure of a closed ε-ball. Torus max-norm: min(2ε, 1)^d;
    /// p-adic: p^(−n) for the smallest n ≥ 0 with p^(−n) ≤ ε.
    pub fn ball_measure(&self, eps: &ExactScalar) -> Result<ExactScalar> {
        if !eps.is_positive() {
            return Err(Error::Domain("ball radius must be positive".into()));
        }
        match self.kind {
            SpaceKind::Torus { dim } => {
                let side = eps.checked_add(eps)?;
                let side = if side.compare(&ExactScalar::one())? == Ordering::Greater {
                    ExactScalar::one()
                } else {
                    side
                };
                Ok(side.pow_u32(dim))
            }
            SpaceKind::PAdic { prime, .. } => {
                let mut n = 0u32;
                let mut value = Rational::one();
                let p = Rational::from_integer(BigInt::from(prime));
                let e = ExactScalar::one().checked_div(eps)?; // compare p^n vs 1/ε
                while ExactScalar::from_rational(value.clone()).compare(&e)?
                    == Ordering::Less
                {
                    value *= &p;
                    n += 1;
                    if n > 1_000_000 {
                        return Err(Error::ResourceCap(
                            "p-adic ball radius too small".into(),
                        ));
                    }
                }
                Ok(ExactScalar::from_rational(value.recip()))
            }
        }
    }

    /// Check c3·ε^d ≤ ball_measure(ε) ≤ c4·ε^d exactly at each grid point
    /// and report the tightest constants observed. Failure is a result, not
    /// an error.
    pub fn verify_regularity(&self, grid: &[ExactScalar]) -> Result<RegularityReport> {
        if grid.is_empty() {
            return Err(Error::Insufficient("empty epsilon grid".into()));
        }
        for w in grid.windows(2) {
            if w[0].compare(&w[1])? != Ordering::Greater {
                return Err(Error::Domain("epsilon grid must be strictly decreasing".into()));
            }
        }
        // d = u/v rational: m ≥ c·ε^(u/v) ⟺ m^v ≥ c^v·ε^u for positive
        // quantities, keeping every comparison inside the quadratic field.
        let u = self.dim.numer().to_u32().ok_or_else(|| {
            Error::Domain("dimension exponent out of range".into())
        })?;
        let v = self.dim.denom().to_u32().ok_or_else(|| {
            Error::Domain("dimension exponent out of range".into())
        })?;
        let c3 = ExactScalar::from_rational(self.c3.clone()).pow_u32(v);
        let c4 = ExactScalar::from_rational(self.c4.clone()).pow_u32(v);
        let dim_f = ratio_to_f64(&self.dim);

        let mut rows = Vec::with_capacity(grid.len());
        let mut observed_c3 = f64::INFINITY;
        let mut observed_c4 = f64::NEG_INFINITY;
        let mut pass = true;
        for eps in grid {
            if !eps.is_positive() {
                return Err(Error::Domain("epsilon grid entries must be positive".into()));
            }
            let measure = self.ball_measure(eps)?;
            let m_pow = measure.pow_u32(v);
            let e_pow = eps.pow_u32(u);
            let lower_ok = m_pow.compare(&c3.checked_mul(&e_pow)?)? != Ordering::Less;
            let upper_ok = m_pow.compare(&c4.checked_mul(&e_pow)?)? != Ordering::Greater;
            pass &= lower_ok && upper_ok;
            let ratio = (measure.to_f64().0.ln() - dim_f * eps.to_f64().0.ln()).exp();
            observed_c3 = observed_c3.min(ratio);
            observed_c4 = observed_c4.max(ratio);
            rows.push(RegularityRow {
                eps: eps.clone(),
                measure,
                ratio,
                lower_ok,
                upper_ok,
            });
        }
        Ok(RegularityReport { rows, observed_c3, observed_c4, pass })
    }

    /// Deterministic sampling lattice. Torus: the R^d lattice (j₁/R, …);
    /// p-adic: all p^t truncations with t = min(m, ⌈log_p R⌉), ordered by
    /// value.
    pub fn grid_points(&self, resolution: u64, cap: u64) -> Result<Vec<GroupPoint>> {
        if resolution == 0 {
            return Err(Error::Domain("resolution must be at least 1".into()));
        }
        match self.kind {
            SpaceKind::Torus { dim } => {
                let total = (resolution as u128).checked_pow(dim).filter(|t| *t <= cap as u128)
                    .ok_or_else(|| {
                        Error::ResourceCap(format!(
                            "grid of {resolution}^{dim} points exceeds cap {cap}"
                        ))
                    })?;
                let r = BigInt::from(resolution);
                let coords_for = |j: u64| {
                    ExactScalar::from_rational(Rational::new(BigInt::from(j), r.clone()))
                };
                let mut points = Vec::with_capacity(total as usize);
                let mut odometer = vec![0u64; dim as usize];
                loop {
                    points.push(GroupPoint::Torus(
                        odometer.iter().map(|&j| coords_for(j)).collect(),
                    ));
                    // Lexicographic increment, last coordinate fastest.
                    let mut axis = dim as usize;
                    loop {
                        if axis == 0 {
                            return Ok(points);
                        }
                        axis -= 1;
                        odometer[axis] += 1;
                        if odometer[axis] < resolution {
                            break;
                        }
                        odometer[axis] = 0;
                    }
                }
            }
            SpaceKind::PAdic { prime, depth } => {
                let mut t = 0u32;
                let mut count = 1u64;
                while count < resolution && t < depth {
                    count = count.saturating_mul(prime as u64);
                    t += 1;
                }
                if count > cap {
                    return Err(Error::ResourceCap(format!(
                        "grid of {count} p-adic points exceeds cap {cap}"
                    )));
                }
                Ok((0..count)
                    .map(|v| GroupPoint::PAdic(PAdicPoint::from_value(prime, depth, v)))
                    .collect())
            }
        }
    }

    /// One uniform sample; dyadic 53-bit coordinates on the torus, uniform
    /// digits p-adically. Deterministic given the RNG state.
    pub fn uniform_point<R: Rng>(&self, rng: &mut R) -> GroupPoint {
        match self.kind {
            SpaceKind::Torus { dim } => GroupPoint::Torus(
                (0..dim)
                    .map(|_| {
                        let mantissa = rng.gen::<u64>() >> 11;
                        ExactScalar::from_rational(Rational::new(
                            BigInt::from(mantissa),
                            BigInt::one() << 53,
                        ))
                    })
                    .collect(),
            ),
            SpaceKind::PAdic { prime, depth } => GroupPoint::PAdic(PAdicPoint {
                prime,
                digits: (0..depth).map(|_| rng.gen_range(0..prime)).collect(),
            }),
        }
    }

    /// g + g + … (j times) in one step; used by pair-correlation sampling.
    pub fn scale(&self, g: &GroupPoint, j: u64) -> Result<GroupPoint> {
        self.check_point(g)?;
        match g {
            GroupPoint::Torus(coords) => {
                let jj = ExactScalar::from_bigint(BigInt::from(j));
                let scaled = coords
                    .iter()
                    .map(|c| Ok(jj.checked_mul(c)?.mod1()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GroupPoint::Torus(scaled))
            }
            GroupPoint::PAdic(a) => {
                let p = a.prime as u64;
                let mut carry: u64 = 0;
                let digits = a
                    .digits
                    .iter()
                    .map(|&dig| {
                        let s = dig as u64 * j + carry;
                        carry = s / p;
                        (s % p) as u32
                    })
                    .collect();
                Ok(GroupPoint::PAdic(PAdicPoint { prime: a.prime, digits }))
            }
        }
    }
}

pub struct RegularityRow {
    pub eps: ExactScalar,
    pub measure: ExactScalar,
    /// measure / ε^d as a float (diagnostic only).
    pub ratio: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

pub struct RegularityReport {
    pub rows: Vec<RegularityRow>,
    pub observed_c3: f64,
    pub observed_c4: f64,
    pub pass: bool,
}

#[allow(unused)]
fn rational_scalar(num: i64, den: i64) -> ExactScalar {
    ExactScalar::from_ratio(num, den).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn q(s: &str) -> ExactScalar {
        s.parse().unwrap()
    }

    #[test]
    fn torus_translation() {
        let t = GroupSpace::torus(1).unwrap();
        let moved = t
            .translate(&GroupPoint::torus1(q("1/4")), &GroupPoint::torus1(q("1/2")))
            .unwrap();
        assert_eq!(moved, GroupPoint::torus1(q("3/4")));

        let irr = t
            .translate(&GroupPoint::torus1(q("3/4")), &GroupPoint::torus1(q("sqrt(2) - 1")))
            .unwrap();
        // mod1(3/4 + √2 − 1) = √2 − 1/4.
        assert_eq!(irr, GroupPoint::torus1(q("sqrt(2) - 1/4")));
    }

    #[test]
    fn padic_translation_carries() {
        let z2 = GroupSpace::padic(2, 4).unwrap();
        let one = GroupPoint::PAdic(PAdicPoint::from_value(2, 4, 1));
        let two = z2.translate(&one, &one).unwrap();
        assert_eq!(two.as_padic().unwrap().digits, vec![0, 1, 0, 0]);
    }

    #[test]
    fn torus_distance_wraps() {
        let t = GroupSpace::torus(1).unwrap();
        let d = t
            .distance(&GroupPoint::torus1(q("9/10")), &GroupPoint::torus1(q("1/10")))
            .unwrap();
        assert_eq!(d, q("1/5"));
    }

    #[test]
    fn torus_distance_max_norm() {
        let t = GroupSpace::torus(2).unwrap();
        let x = GroupPoint::torus(vec![q("0"), q("0")]);
        let y = GroupPoint::torus(vec![q("1/2"), q("1/4")]);
        assert_eq!(t.distance(&x, &y).unwrap(), q("1/2"));
    }

    #[test]
    fn padic_distance_first_difference() {
        let z3 = GroupSpace::padic(3, 3).unwrap();
        let x = GroupPoint::PAdic(PAdicPoint { prime: 3, digits: vec![1, 2, 0] });
        let y = GroupPoint::PAdic(PAdicPoint { prime: 3, digits: vec![1, 0, 0] });
        assert_eq!(z3.distance(&x, &y).unwrap(), q("1/3"));
    }

    #[test]
    fn ball_measures() {
        let t2 = GroupSpace::torus(2).unwrap();
        assert_eq!(t2.ball_measure(&q("1/10")).unwrap(), q("1/25"));

        let z2 = GroupSpace::padic(2, 8).unwrap();
        assert_eq!(z2.ball_measure(&q("1/3")).unwrap(), q("1/4"));

        let t1 = GroupSpace::torus(1).unwrap();
        assert_eq!(t1.ball_measure(&q("3/4")).unwrap(), q("1"));
    }

    #[test]
    fn regularity_reports() {
        let t1 = GroupSpace::torus(1).unwrap();
        let rep = t1.verify_regularity(&[q("1/2"), q("1/4"), q("1/8")]).unwrap();
        assert!(rep.pass);
        assert!((rep.observed_c3 - 2.0).abs() < 1e-9);
        assert!((rep.observed_c4 - 2.0).abs() < 1e-9);

        let z2 = GroupSpace::padic(2, 8).unwrap();
        let rep = z2.verify_regularity(&[q("1/2"), q("1/4"), q("1/8")]).unwrap();
        assert!(rep.pass);
        assert!((rep.observed_c3 - 1.0).abs() < 1e-9);
        assert!((rep.observed_c4 - 1.0).abs() < 1e-9);

        // Off-power radii keep the ratio within [c3, c4] = [1/2, 1].
        let rep = z2.verify_regularity(&[q("1/3"), q("1/5")]).unwrap();
        assert!(rep.pass);
        assert!(rep.observed_c3 >= 0.5);

        let t2 = GroupSpace::torus(2).unwrap();
        let rep = t2.verify_regularity(&[q("1/10")]).unwrap();
        assert!(rep.pass);
        assert!((rep.observed_c3 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn grids_are_deterministic() {
        let t1 = GroupSpace::torus(1).unwrap();
        let g = t1.grid_points(4, 1 << 20).unwrap();
        let coords: Vec<_> = g
            .iter()
            .map(|p| p.as_torus().unwrap()[0].to_string())
            .collect();
        assert_eq!(coords, vec!["0", "1/4", "1/2", "3/4"]);

        let z2 = GroupSpace::padic(2, 2).unwrap();
        let g = z2.grid_points(4, 1 << 20).unwrap();
        let digit_rows: Vec<_> = g.iter().map(|p| p.as_padic().unwrap().digits.clone()).collect();
        assert_eq!(digit_rows, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);

        let t2 = GroupSpace::torus(2).unwrap();
        assert_eq!(t2.grid_points(2, 1 << 20).unwrap().len(), 4);
    }

    #[test]
    fn grid_cap_is_enforced() {
        let t2 = GroupSpace::torus(2).unwrap();
        assert!(matches!(
            t2.grid_points(10_000, 1_000_000),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(GroupSpace::torus(0).is_err());
        assert!(GroupSpace::padic(4, 3).is_err());
        assert!(GroupSpace::padic(2, 0).is_err());
    }

    #[test]
    fn scale_matches_repeated_translation() {
        let z3 = GroupSpace::padic(3, 5).unwrap();
        let g = GroupPoint::PAdic(PAdicPoint::from_value(3, 5, 7));
        let mut acc = GroupPoint::PAdic(PAdicPoint::zero(3, 5));
        for j in 0..20u64 {
            assert_eq!(z3.scale(&g, j).unwrap(), acc);
            acc = z3.translate(&acc, &g).unwrap();
        }

        let t = GroupSpace::torus(1).unwrap();
        let g = GroupPoint::torus1(q("sqrt(2) - 1"));
        let mut acc = GroupPoint::torus1(q("0"));
        for j in 0..20u64 {
            assert_eq!(t.scale(&g, j).unwrap(), acc);
            acc = t.translate(&acc, &g).unwrap();
        }
    }

    proptest! {
        #[test]
        fn translation_is_isometry_on_torus(
            xs in proptest::collection::vec((-30i64..30, 1i64..17), 2),
            ys in proptest::collection::vec((-30i64..30, 1i64..17), 2),
            gs in proptest::collection::vec((-30i64..30, 1i64..17), 2),
        ) {
            let t = GroupSpace::torus(2).unwrap();
            let mk = |v: &Vec<(i64, i64)>| GroupPoint::torus(
                v.iter().map(|(n, d)| ExactScalar::from_ratio(*n, *d).unwrap()).collect(),
            );
            let (x, y, g) = (mk(&xs), mk(&ys), mk(&gs));
            let before = t.distance(&x, &y).unwrap();
            let after = t
                .distance(&t.translate(&x, &g).unwrap(), &t.translate(&y, &g).unwrap())
                .unwrap();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn translation_is_isometry_on_z5(x in 0u64..3125, y in 0u64..3125, g in 0u64..3125) {
            let z5 = GroupSpace::padic(5, 5).unwrap();
            let mk = |v| GroupPoint::PAdic(PAdicPoint::from_value(5, 5, v));
            let (x, y, g) = (mk(x), mk(y), mk(g));
            let before = z5.distance(&x, &y).unwrap();
            let after = z5
                .distance(&z5.translate(&x, &g).unwrap(), &z5.translate(&y, &g).unwrap())
                .unwrap();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn grid_translation_invariance(j in 0u64..12) {
            // Translating by a grid point permutes the torus grid.
            let t = GroupSpace::torus(1).unwrap();
            let grid = t.grid_points(12, 1 << 20).unwrap();
            let g = GroupPoint::torus1(ExactScalar::from_ratio(j as i64, 12).unwrap());
            let mut translated: Vec<String> = grid
                .iter()
                .map(|p| {
                    t.translate(p, &g).unwrap().as_torus().unwrap()[0].to_string()
                })
                .collect();
            translated.sort();
            let mut original: Vec<String> = grid
                .iter()
                .map(|p| p.as_torus().unwrap()[0].to_string())
                .collect();
            original.sort();
            prop_assert_eq!(translated, original);
        }

        #[test]
        fn ball_measure_monotone(n1 in 1i64..100, d1 in 1i64..100, n2 in 1i64..100, d2 in 1i64..100) {
            let e1 = ExactScalar::from_ratio(n1, d1 * 100).unwrap();
            let e2 = ExactScalar::from_ratio(n2, d2 * 100).unwrap();
            let (lo, hi) = if e1.compare(&e2).unwrap() == Ordering::Less {
                (e1, e2)
            } else {
                (e2, e1)
            };
            for space in [GroupSpace::torus(2).unwrap(), GroupSpace::padic(3, 10).unwrap()] {
                let m_lo = space.ball_measure(&lo).unwrap();
                let m_hi = space.ball_measure(&hi).unwrap();
                prop_assert_ne!(m_lo.compare(&m_hi).unwrap(), Ordering::Greater);
            }
        }
    }

    #[test]
    fn uniform_points_are_deterministic() {
        let t = GroupSpace::torus(2).unwrap();
        let mut r1 = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        assert_eq!(t.uniform_point(&mut r1), t.uniform_point(&mut r2));
    }
}
