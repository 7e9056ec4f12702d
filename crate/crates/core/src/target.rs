//! Closed target sets with exact membership, exact Haar measure, ε-dilation
//! under the max norm, and content certificates for the dilation growth.
//!
//! Three families are supported — finite unions of closed circle arcs (d = 1),
//! of axis-aligned torus boxes (d ≥ 1), and of p-adic balls — because each
//! admits exact measure, exact dilation, and an analytic boundary dimension.
//! That is exactly the ground truth the bound checker needs.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::group::{GroupPoint, GroupSpace, PAdicPoint, SpaceKind};

/// Comparison helper for scalars already known to share one quadratic field
/// (enforced when a set is constructed).
pub(crate) fn cmp_checked(a: &ExactScalar, b: &ExactScalar) -> Ordering {
    a.compare(b).expect("operands confined to a single quadratic field")
}

/// Reject mixtures of distinct radicands up front so later sorts and folds
/// cannot fail.
pub(crate) fn validate_single_field<'a, I: IntoIterator<Item = &'a ExactScalar>>(
    values: I,
) -> Result<()> {
    let mut seen: u64 = 0;
    for v in values {
        let d = v.radicand();
        if d != 0 {
            if seen == 0 {
                seen = d;
            } else if seen != d {
                return Err(Error::FieldMismatch(seen, d));
            }
        }
    }
    Ok(())
}

fn check_dilation_radius(eps: &ExactScalar) -> Result<()> {
    if eps.is_negative() {
        return Err(Error::Domain("dilation radius must be nonnegative".into()));
    }
    Ok(())
}

/// A closed arc on the unit circle: the points start + t (mod 1) for
/// 0 ≤ t ≤ len. `len` = 0 is a single point, `len` = 1 the full circle
/// (canonicalized to start = 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleArc {
    start: ExactScalar,
    len: ExactScalar,
}

impl CircleArc {
    pub fn new(start: ExactScalar, len: ExactScalar) -> Result<Self> {
        if len.is_negative() {
            return Err(Error::Domain("arc length must be nonnegative".into()));
        }
        if len.compare(&ExactScalar::one())? != Ordering::Less {
            return Ok(CircleArc::full());
        }
        Ok(CircleArc { start: start.mod1(), len })
    }

    /// Arc from endpoint `l` to endpoint `r` walking forward, so [0.9, 0.1]
    /// wraps through 0. Equal endpoints give a single point; a difference of
    /// one or more whole turns gives the full circle.
    pub fn from_endpoints(l: &ExactScalar, r: &ExactScalar) -> Result<Self> {
        let raw = r.checked_sub(l)?;
        if raw.compare(&ExactScalar::one())? != Ordering::Less {
            return Ok(CircleArc::full());
        }
        let len = if raw.is_negative() { raw.mod1() } else { raw };
        CircleArc::new(l.clone(), len)
    }

    pub fn full() -> Self {
        CircleArc { start: ExactScalar::zero(), len: ExactScalar::one() }
    }

    pub fn point(x: &ExactScalar) -> Self {
        CircleArc { start: x.mod1(), len: ExactScalar::zero() }
    }

    pub fn start(&self) -> &ExactScalar {
        &self.start
    }

    pub fn len(&self) -> &ExactScalar {
        &self.len
    }

    pub fn is_full(&self) -> bool {
        self.len == ExactScalar::one()
    }

    /// Forward endpoint start + len, reduced mod 1.
    pub fn end(&self) -> ExactScalar {
        self.start.checked_add(&self.len).expect("arc endpoints share a field").mod1()
    }

    pub fn contains(&self, x: &ExactScalar) -> Result<bool> {
        let off = x.checked_sub(&self.start)?.mod1();
        // off < 1 always, so the full circle (len = 1) accepts everything.
        Ok(off.compare(&self.len)? != Ordering::Greater)
    }

    /// Circle distance from x to the arc (0 when x lies on it).
    pub fn distance_to(&self, x: &ExactScalar) -> Result<ExactScalar> {
        if self.contains(x)? {
            return Ok(ExactScalar::zero());
        }
        // Walking forward from x the first arc point met is `start`; walking
        // backward it is `end`. The nearer of the two is the distance.
        let fwd = self.start.checked_sub(x)?.mod1();
        let bwd = x.checked_sub(&self.end())?.mod1();
        Ok(if fwd.compare(&bwd)? == Ordering::Greater { bwd } else { fwd })
    }

    /// Whether `other` ⊆ `self` (both closed).
    pub fn contains_arc(&self, other: &CircleArc) -> Result<bool> {
        if self.is_full() {
            return Ok(true);
        }
        if other.is_full() {
            return Ok(false);
        }
        let off = other.start.checked_sub(&self.start)?.mod1();
        let reach = off.checked_add(&other.len)?;
        Ok(reach.compare(&self.len)? != Ordering::Greater)
    }

    fn dilated(&self, eps: &ExactScalar) -> Result<CircleArc> {
        let start = self.start.checked_sub(eps)?;
        let len = self.len.checked_add(eps)?.checked_add(eps)?;
        CircleArc::new(start, len)
    }
}

impl fmt::Display for CircleArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_full() {
            write!(f, "[full circle]")
        } else {
            write!(f, "[{}, {}]", self.start, self.end())
        }
    }
}

/// Normalize closed arcs: split wraparound arcs at 0, merge every overlapping
/// or touching pair in linear coordinates (closed sets that touch are
/// connected), then glue the two pieces meeting at the cut point back
/// together. Callers guarantee a single quadratic field.
fn normalize_arcs(raw: Vec<CircleArc>) -> Result<Vec<CircleArc>> {
    let one = ExactScalar::one();
    let mut pieces: Vec<(ExactScalar, ExactScalar)> = Vec::new();
    for arc in raw {
        if arc.is_full() {
            return Ok(vec![CircleArc::full()]);
        }
        let end = arc.start.checked_add(&arc.len)?;
        if end.compare(&one)? != Ordering::Greater {
            pieces.push((arc.start, end));
        } else {
            pieces.push((arc.start.clone(), one.clone()));
            pieces.push((ExactScalar::zero(), end.checked_sub(&one)?));
        }
    }
    if pieces.is_empty() {
        return Ok(Vec::new());
    }
    pieces.sort_by(|p, q| cmp_checked(&p.0, &q.0).then_with(|| cmp_checked(&p.1, &q.1)));
    let mut merged: Vec<(ExactScalar, ExactScalar)> = Vec::with_capacity(pieces.len());
    for (lo, hi) in pieces {
        match merged.last_mut() {
            Some(last) if cmp_checked(&lo, &last.1) != Ordering::Greater => {
                if cmp_checked(&hi, &last.1) == Ordering::Greater {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    if merged.len() == 1 && merged[0].0.is_zero() && merged[0].1 == one {
        return Ok(vec![CircleArc::full()]);
    }
    // 0 and 1 are the same circle point: a piece ending at 1 and a piece
    // starting at 0 form one arc across the cut.
    let glue = merged.len() >= 2 && merged[0].0.is_zero() && merged[merged.len() - 1].1 == one;
    let wrap = if glue {
        let first = merged.remove(0);
        let last = merged.pop().expect("at least two pieces");
        Some((last.0, first.1))
    } else {
        None
    };
    let mut arcs: Vec<CircleArc> = Vec::with_capacity(merged.len() + 1);
    for (lo, hi) in merged {
        arcs.push(CircleArc { len: hi.checked_sub(&lo)?, start: lo });
    }
    if let Some((lo, wrap_hi)) = wrap {
        // Length (1 − lo) + wrap_hi < 1: the glued arc still misses the
        // strict gaps that separated it from the remaining pieces.
        let len = one.checked_sub(&lo)?.checked_add(&wrap_hi)?;
        arcs.push(CircleArc { start: lo, len });
    }
    Ok(arcs)
}

/// Finite union of closed arcs on the circle, kept normalized: sorted by
/// start, pairwise disjoint and non-touching. The full circle is a single
/// arc of length 1, the empty set an empty list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalUnion {
    arcs: Vec<CircleArc>,
}

impl IntervalUnion {
    pub fn new(arcs: Vec<CircleArc>) -> Result<Self> {
        validate_single_field(arcs.iter().flat_map(|a| [&a.start, &a.len]))?;
        Ok(IntervalUnion { arcs: normalize_arcs(arcs)? })
    }

    pub fn from_endpoints(pairs: &[(ExactScalar, ExactScalar)]) -> Result<Self> {
        let arcs = pairs
            .iter()
            .map(|(l, r)| CircleArc::from_endpoints(l, r))
            .collect::<Result<Vec<_>>>()?;
        IntervalUnion::new(arcs)
    }

    pub fn from_points(points: &[ExactScalar]) -> Result<Self> {
        IntervalUnion::new(points.iter().map(CircleArc::point).collect())
    }

    pub fn empty() -> Self {
        IntervalUnion { arcs: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalUnion { arcs: vec![CircleArc::full()] }
    }

    pub fn arcs(&self) -> &[CircleArc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].is_full()
    }

    pub fn measure(&self) -> ExactScalar {
        let mut m = ExactScalar::zero();
        for a in &self.arcs {
            m = m.checked_add(&a.len).expect("normalized arcs share a field");
        }
        m
    }

    pub fn contains(&self, x: &ExactScalar) -> Result<bool> {
        for a in &self.arcs {
            if a.contains(x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn distance_to(&self, x: &ExactScalar) -> Result<ExactScalar> {
        let mut best: Option<ExactScalar> = None;
        for a in &self.arcs {
            let d = a.distance_to(x)?;
            if d.is_zero() {
                return Ok(d);
            }
            best = Some(match best {
                Some(b) if d.compare(&b)? == Ordering::Less => d,
                Some(b) => b,
                None => d,
            });
        }
        best.ok_or_else(|| Error::Domain("distance to the empty set".into()))
    }

    pub fn dilate(&self, eps: &ExactScalar) -> Result<IntervalUnion> {
        check_dilation_radius(eps)?;
        if eps.is_zero() {
            return Ok(self.clone());
        }
        let arcs = self.arcs.iter().map(|a| a.dilated(eps)).collect::<Result<Vec<_>>>()?;
        Ok(IntervalUnion { arcs: normalize_arcs(arcs)? })
    }

    /// Largest ε for which dilation by ε grows the measure by exactly
    /// 2ε·(arc count): half the smallest complement gap. None when the union
    /// is empty or already the full circle.
    pub fn merge_threshold(&self) -> Option<ExactScalar> {
        if self.arcs.is_empty() || self.is_full() {
            return None;
        }
        let n = self.arcs.len();
        let mut min_gap: Option<ExactScalar> = None;
        for i in 0..n {
            let end = self.arcs[i].end();
            let next = &self.arcs[(i + 1) % n];
            let raw = next.start.checked_sub(&end).expect("single field").mod1();
            // A single point has end = start; its complement gap is the
            // whole circle, not zero.
            let gap = if raw.is_zero() { ExactScalar::one() } else { raw };
            min_gap = Some(match min_gap {
                Some(g) if gap.compare(&g).expect("single field") == Ordering::Less => gap,
                Some(g) => g,
                None => gap,
            });
        }
        let half = ExactScalar::from_ratio(1, 2).expect("constant");
        min_gap.map(|g| g.checked_mul(&half).expect("single field"))
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.arcs.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// An axis-aligned box on T^d: the product of one closed arc per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusBox {
    sides: Vec<CircleArc>,
}

impl TorusBox {
    pub fn new(sides: Vec<CircleArc>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::Domain("box needs at least one axis".into()));
        }
        Ok(TorusBox { sides })
    }

    pub fn from_endpoints(pairs: &[(ExactScalar, ExactScalar)]) -> Result<Self> {
        let sides = pairs
            .iter()
            .map(|(l, r)| CircleArc::from_endpoints(l, r))
            .collect::<Result<Vec<_>>>()?;
        TorusBox::new(sides)
    }

    pub fn sides(&self) -> &[CircleArc] {
        &self.sides
    }

    pub fn dim(&self) -> u32 {
        self.sides.len() as u32
    }

    pub fn volume(&self) -> ExactScalar {
        let mut v = ExactScalar::one();
        for s in &self.sides {
            v = v.checked_mul(&s.len).expect("box sides share a field");
        }
        v
    }

    pub fn contains_coords(&self, x: &[ExactScalar]) -> Result<bool> {
        if x.len() != self.sides.len() {
            return Err(Error::Domain("coordinate dimension mismatch".into()));
        }
        for (side, c) in self.sides.iter().zip(x) {
            if !side.contains(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn contains_box(&self, other: &TorusBox) -> Result<bool> {
        if other.sides.len() != self.sides.len() {
            return Err(Error::Domain("box dimension mismatch".into()));
        }
        for (s, o) in self.sides.iter().zip(&other.sides) {
            if !s.contains_arc(o)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Max-norm distance from a coordinate vector to the box.
    pub fn distance_to(&self, x: &[ExactScalar]) -> Result<ExactScalar> {
        if x.len() != self.sides.len() {
            return Err(Error::Domain("coordinate dimension mismatch".into()));
        }
        let mut worst = ExactScalar::zero();
        for (side, c) in self.sides.iter().zip(x) {
            let d = side.distance_to(c)?;
            if d.compare(&worst)? == Ordering::Greater {
                worst = d;
            }
        }
        Ok(worst)
    }

    fn dilated(&self, eps: &ExactScalar) -> Result<TorusBox> {
        let sides = self.sides.iter().map(|s| s.dilated(eps)).collect::<Result<Vec<_>>>()?;
        TorusBox::new(sides)
    }
}

impl fmt::Display for TorusBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                write!(f, " × ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

const MAX_UNION_CELLS: u128 = 1 << 20;

/// Exact measure of a union of boxes: refine the torus into the grid of
/// cells cut by every box face and test one interior point per cell. Cell
/// interiors never meet a face, so one point decides the whole cell.
fn union_volume(dim: u32, boxes: &[TorusBox]) -> Result<ExactScalar> {
    if boxes.is_empty() {
        return Ok(ExactScalar::zero());
    }
    let one = ExactScalar::one();
    let half = ExactScalar::from_ratio(1, 2).expect("constant");
    let mut cell_axes: Vec<Vec<(ExactScalar, ExactScalar)>> = Vec::with_capacity(dim as usize);
    let mut cells: u128 = 1;
    for axis in 0..dim as usize {
        let mut pts: Vec<ExactScalar> = Vec::with_capacity(2 * boxes.len());
        for b in boxes {
            let side = &b.sides[axis];
            pts.push(side.start.clone());
            pts.push(side.end());
        }
        pts.sort_by(cmp_checked);
        pts.dedup();
        cells = cells.saturating_mul(pts.len() as u128);
        if cells > MAX_UNION_CELLS {
            return Err(Error::ResourceCap(format!(
                "box-union refinement needs more than {MAX_UNION_CELLS} cells"
            )));
        }
        let k = pts.len();
        let mut cs = Vec::with_capacity(k);
        for i in 0..k {
            let lo = pts[i].clone();
            let hi = if i + 1 < k { pts[i + 1].clone() } else { pts[0].checked_add(&one)? };
            let width = hi.checked_sub(&lo)?;
            let mid = lo.checked_add(&hi)?.checked_mul(&half)?.mod1();
            cs.push((mid, width));
        }
        cell_axes.push(cs);
    }
    let mut idx = vec![0usize; dim as usize];
    let mut total = ExactScalar::zero();
    loop {
        let coords: Vec<ExactScalar> =
            idx.iter().zip(&cell_axes).map(|(&i, cs)| cs[i].0.clone()).collect();
        let mut inside = false;
        for b in boxes {
            if b.contains_coords(&coords)? {
                inside = true;
                break;
            }
        }
        if inside {
            let mut w = one.clone();
            for (&i, cs) in idx.iter().zip(&cell_axes) {
                w = w.checked_mul(&cs[i].1)?;
            }
            total = total.checked_add(&w)?;
        }
        let mut axis = dim as usize;
        loop {
            if axis == 0 {
                return Ok(total);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < cell_axes[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Finite union of axis-aligned boxes on T^d. Boxes may overlap; membership
/// and the exact union measure are computed on the union itself, and boxes
/// contained in another are pruned so the stored list is an antichain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxUnion {
    dim: u32,
    boxes: Vec<TorusBox>,
    measure: ExactScalar,
}

impl BoxUnion {
    pub fn new(dim: u32, boxes: Vec<TorusBox>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("box union needs dimension ≥ 1".into()));
        }
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::Domain("box dimension mismatch".into()));
            }
        }
        validate_single_field(
            boxes.iter().flat_map(|b| b.sides.iter()).flat_map(|s| [&s.start, &s.len]),
        )?;
        let mut kept: Vec<TorusBox> = Vec::new();
        'outer: for b in boxes {
            for k in &kept {
                if k.contains_box(&b)? {
                    continue 'outer;
                }
            }
            let mut next = Vec::with_capacity(kept.len() + 1);
            for k in kept {
                if !b.contains_box(&k)? {
                    next.push(k);
                }
            }
            next.push(b);
            kept = next;
        }
        let measure = union_volume(dim, &kept)?;
        Ok(BoxUnion { dim, boxes: kept, measure })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn boxes(&self) -> &[TorusBox] {
        &self.boxes
    }

    pub fn measure(&self) -> &ExactScalar {
        &self.measure
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.measure == ExactScalar::one()
    }

    pub fn contains(&self, x: &[ExactScalar]) -> Result<bool> {
        if x.len() != self.dim as usize {
            return Err(Error::Domain("coordinate dimension mismatch".into()));
        }
        for b in &self.boxes {
            if b.contains_coords(x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn distance_to(&self, x: &[ExactScalar]) -> Result<ExactScalar> {
        let mut best: Option<ExactScalar> = None;
        for b in &self.boxes {
            let d = b.distance_to(x)?;
            if d.is_zero() {
                return Ok(d);
            }
            best = Some(match best {
                Some(c) if d.compare(&c)? == Ordering::Less => d,
                Some(c) => c,
                None => d,
            });
        }
        best.ok_or_else(|| Error::Domain("distance to the empty set".into()))
    }

    pub fn dilate(&self, eps: &ExactScalar) -> Result<BoxUnion> {
        check_dilation_radius(eps)?;
        if eps.is_zero() {
            return Ok(self.clone());
        }
        let boxes = self.boxes.iter().map(|b| b.dilated(eps)).collect::<Result<Vec<_>>>()?;
        BoxUnion::new(self.dim, boxes)
    }
}

impl fmt::Display for BoxUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boxes.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "({b})")?;
        }
        Ok(())
    }
}

/// A ball in Z_p: all points whose first `prefix.len()` base-p digits (least
/// significant first) match the prefix. Radius p^{−len}; the empty prefix is
/// the whole group.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PAdicBall {
    prefix: Vec<u32>,
}

impl PAdicBall {
    pub fn from_center(center: &PAdicPoint, exponent: u32) -> Result<Self> {
        if exponent as usize > center.digits.len() {
            return Err(Error::Domain("ball radius finer than the working depth".into()));
        }
        Ok(PAdicBall { prefix: center.digits[..exponent as usize].to_vec() })
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn exponent(&self) -> u32 {
        self.prefix.len() as u32
    }

    fn measure(&self, prime: u32) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(prime).pow(self.exponent()))
    }

    fn contains_point(&self, x: &PAdicPoint) -> Result<bool> {
        if x.digits.len() < self.prefix.len() {
            return Err(Error::Domain("point depth shallower than the ball".into()));
        }
        Ok(x.digits[..self.prefix.len()] == self.prefix[..])
    }
}

/// Canonicalize a set of prefixes: drop balls inside another ball, then merge
/// every complete family of p siblings into its parent, repeating until no
/// merge applies. The result is the unique minimal antichain for the union.
fn normalize_balls(prime: u32, balls: Vec<PAdicBall>) -> Vec<PAdicBall> {
    let mut set: BTreeSet<Vec<u32>> = balls.into_iter().map(|b| b.prefix).collect();
    let snapshot: Vec<Vec<u32>> = set.iter().cloned().collect();
    for q in &snapshot {
        for i in 0..q.len() {
            if set.contains(&q[..i].to_vec()) {
                set.remove(q);
                break;
            }
        }
    }
    loop {
        let mut families: HashMap<Vec<u32>, u32> = HashMap::new();
        for q in &set {
            if !q.is_empty() {
                *families.entry(q[..q.len() - 1].to_vec()).or_insert(0) += 1;
            }
        }
        let mut merged = false;
        for (parent, count) in families {
            if count == prime {
                for digit in 0..prime {
                    let mut child = parent.clone();
                    child.push(digit);
                    set.remove(&child);
                }
                set.insert(parent);
                merged = true;
            }
        }
        if !merged {
            break;
        }
    }
    set.into_iter().map(|prefix| PAdicBall { prefix }).collect()
}

/// Finite union of balls in Z_p, kept as the minimal antichain of digit
/// prefixes. Clopen: the boundary is empty, so small dilations are the
/// identity and the boundary dimension is 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdicBallUnion {
    prime: u32,
    balls: Vec<PAdicBall>,
}

impl PAdicBallUnion {
    pub fn new(prime: u32, balls: Vec<PAdicBall>) -> Result<Self> {
        if prime < 2 {
            return Err(Error::Domain("prime must be at least 2".into()));
        }
        for b in &balls {
            if b.prefix.iter().any(|&d| d >= prime) {
                return Err(Error::Domain("ball digit exceeds the base".into()));
            }
        }
        Ok(PAdicBallUnion { prime, balls: normalize_balls(prime, balls) })
    }

    pub fn from_centers(prime: u32, items: &[(PAdicPoint, u32)]) -> Result<Self> {
        let mut balls = Vec::with_capacity(items.len());
        for (center, exponent) in items {
            if center.prime != prime {
                return Err(Error::Domain("ball center from a different prime".into()));
            }
            balls.push(PAdicBall::from_center(center, *exponent)?);
        }
        PAdicBallUnion::new(prime, balls)
    }

    pub fn empty(prime: u32) -> Self {
        PAdicBallUnion { prime, balls: Vec::new() }
    }

    pub fn full(prime: u32) -> Self {
        PAdicBallUnion { prime, balls: vec![PAdicBall { prefix: Vec::new() }] }
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn balls(&self) -> &[PAdicBall] {
        &self.balls
    }

    pub fn max_exponent(&self) -> u32 {
        self.balls.iter().map(|b| b.exponent()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.balls.len() == 1 && self.balls[0].prefix.is_empty()
    }

    pub fn measure(&self) -> ExactScalar {
        let mut m = Rational::new(BigInt::from(0), BigInt::one());
        for b in &self.balls {
            m += b.measure(self.prime);
        }
        ExactScalar::from_rational(m)
    }

    pub fn contains(&self, x: &PAdicPoint) -> Result<bool> {
        if x.prime != self.prime {
            return Err(Error::Domain("point from a different prime".into()));
        }
        for b in &self.balls {
            if b.contains_point(x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn distance_to(&self, x: &PAdicPoint) -> Result<ExactScalar> {
        if x.prime != self.prime {
            return Err(Error::Domain("point from a different prime".into()));
        }
        if self.balls.is_empty() {
            return Err(Error::Domain("distance to the empty set".into()));
        }
        let mut deepest_match: Option<usize> = None;
        for b in &self.balls {
            if b.contains_point(x)? {
                return Ok(ExactScalar::zero());
            }
            let j = x
                .digits
                .iter()
                .zip(&b.prefix)
                .position(|(a, c)| a != c)
                .expect("mismatch exists for a non-containing ball");
            deepest_match = Some(deepest_match.map_or(j, |m| m.max(j)));
        }
        let j = deepest_match.expect("at least one ball");
        Ok(ExactScalar::from_rational(Rational::new(
            BigInt::one(),
            BigInt::from(self.prime).pow(j as u32),
        )))
    }

    pub fn dilate(&self, eps: &ExactScalar) -> Result<PAdicBallUnion> {
        check_dilation_radius(eps)?;
        if eps.is_zero() || self.balls.is_empty() {
            return Ok(self.clone());
        }
        // Smallest n with p^{−n} ≤ ε; beyond the deepest prefix the dilation
        // is the identity (clopen balls, ε below the digit granularity).
        let mut n_eps: Option<u32> = None;
        for n in 0..=self.max_exponent() {
            let radius = ExactScalar::from_rational(Rational::new(
                BigInt::one(),
                BigInt::from(self.prime).pow(n),
            ));
            if radius.compare(eps)? != Ordering::Greater {
                n_eps = Some(n);
                break;
            }
        }
        let Some(n) = n_eps else {
            return Ok(self.clone());
        };
        let balls = self
            .balls
            .iter()
            .map(|b| PAdicBall { prefix: b.prefix[..b.prefix.len().min(n as usize)].to_vec() })
            .collect();
        Ok(PAdicBallUnion { prime: self.prime, balls: normalize_balls(self.prime, balls) })
    }
}

impl fmt::Display for PAdicBallUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.balls.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, b) in self.balls.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            let digits: Vec<String> = b.prefix.iter().map(|d| d.to_string()).collect();
            write!(f, "B[{}]·{}^-{}", digits.join(","), self.prime, b.exponent())?;
        }
        Ok(())
    }
}

/// A closed target set in one of the supported families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSet {
    Intervals(IntervalUnion),
    Boxes(BoxUnion),
    PAdicBalls(PAdicBallUnion),
}

impl TargetSet {
    pub fn ambient_dim(&self) -> u32 {
        match self {
            TargetSet::Intervals(_) => 1,
            TargetSet::Boxes(b) => b.dim(),
            TargetSet::PAdicBalls(_) => 1,
        }
    }

    pub fn check_space(&self, space: &GroupSpace) -> Result<()> {
        let ok = match (self, space.kind()) {
            (TargetSet::Intervals(_), SpaceKind::Torus { dim }) => *dim == 1,
            (TargetSet::Boxes(b), SpaceKind::Torus { dim }) => *dim == b.dim(),
            (TargetSet::PAdicBalls(u), SpaceKind::PAdic { prime, depth }) => {
                *prime == u.prime() && u.max_exponent() <= *depth
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("target set does not live in this space".into()))
        }
    }

    pub fn contains(&self, x: &GroupPoint) -> Result<bool> {
        match (self, x) {
            (TargetSet::Intervals(u), GroupPoint::Torus(c)) if c.len() == 1 => u.contains(&c[0]),
            (TargetSet::Boxes(b), GroupPoint::Torus(c)) => b.contains(c),
            (TargetSet::PAdicBalls(u), GroupPoint::PAdic(p)) => u.contains(p),
            _ => Err(Error::Domain("point does not live in the target's space".into())),
        }
    }

    pub fn measure(&self) -> ExactScalar {
        match self {
            TargetSet::Intervals(u) => u.measure(),
            TargetSet::Boxes(b) => b.measure().clone(),
            TargetSet::PAdicBalls(u) => u.measure(),
        }
    }

    pub fn dilate(&self, eps: &ExactScalar) -> Result<TargetSet> {
        Ok(match self {
            TargetSet::Intervals(u) => TargetSet::Intervals(u.dilate(eps)?),
            TargetSet::Boxes(b) => TargetSet::Boxes(b.dilate(eps)?),
            TargetSet::PAdicBalls(u) => TargetSet::PAdicBalls(u.dilate(eps)?),
        })
    }

    /// Analytic boundary dimension: 0 for finite arc unions (finite boundary),
    /// d − 1 for box unions (finitely many faces), 0 for clopen p-adic sets.
    pub fn boundary_dimension(&self) -> Rational {
        match self {
            TargetSet::Intervals(_) => Rational::from_integer(BigInt::from(0)),
            TargetSet::Boxes(b) => Rational::from_integer(BigInt::from(b.dim() - 1)),
            TargetSet::PAdicBalls(_) => Rational::from_integer(BigInt::from(0)),
        }
    }

    pub fn distance_to(&self, x: &GroupPoint) -> Result<ExactScalar> {
        match (self, x) {
            (TargetSet::Intervals(u), GroupPoint::Torus(c)) if c.len() == 1 => {
                u.distance_to(&c[0])
            }
            (TargetSet::Boxes(b), GroupPoint::Torus(c)) => b.distance_to(c),
            (TargetSet::PAdicBalls(u), GroupPoint::PAdic(p)) => u.distance_to(p),
            _ => Err(Error::Domain("point does not live in the target's space".into())),
        }
    }

    pub fn is_full(&self) -> bool {
        match self {
            TargetSet::Intervals(u) => u.is_full(),
            TargetSet::Boxes(b) => b.is_full(),
            TargetSet::PAdicBalls(u) => u.is_full(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            TargetSet::Intervals(u) => u.is_empty(),
            TargetSet::Boxes(b) => b.is_empty(),
            TargetSet::PAdicBalls(u) => u.is_empty(),
        }
    }

    /// Only interval unions have a sharp pre-merge regime; other families
    /// return None and skip the content precondition.
    pub fn merge_threshold(&self) -> Option<ExactScalar> {
        match self {
            TargetSet::Intervals(u) => u.merge_threshold(),
            _ => None,
        }
    }

    pub fn interval_count(&self) -> Option<usize> {
        match self {
            TargetSet::Intervals(u) => Some(u.arcs().len()),
            _ => None,
        }
    }

    /// Degenerate target made of finitely many points (at the working depth
    /// for p-adic spaces).
    pub fn from_points(space: &GroupSpace, points: &[GroupPoint]) -> Result<TargetSet> {
        match space.kind() {
            SpaceKind::Torus { dim: 1 } => {
                let mut xs = Vec::with_capacity(points.len());
                for p in points {
                    let c = p
                        .as_torus()
                        .filter(|c| c.len() == 1)
                        .ok_or_else(|| Error::Domain("expected 1-dimensional torus points".into()))?;
                    xs.push(c[0].clone());
                }
                Ok(TargetSet::Intervals(IntervalUnion::from_points(&xs)?))
            }
            SpaceKind::Torus { dim } => {
                let mut boxes = Vec::with_capacity(points.len());
                for p in points {
                    let c = p
                        .as_torus()
                        .filter(|c| c.len() == *dim as usize)
                        .ok_or_else(|| Error::Domain("point dimension mismatch".into()))?;
                    boxes.push(TorusBox::new(c.iter().map(CircleArc::point).collect())?);
                }
                Ok(TargetSet::Boxes(BoxUnion::new(*dim, boxes)?))
            }
            SpaceKind::PAdic { prime, .. } => {
                let mut balls = Vec::with_capacity(points.len());
                for p in points {
                    let pt = p
                        .as_padic()
                        .ok_or_else(|| Error::Domain("expected p-adic points".into()))?;
                    if pt.prime != *prime {
                        return Err(Error::Domain("point from a different prime".into()));
                    }
                    balls.push(PAdicBall::from_center(pt, pt.digits.len() as u32)?);
                }
                Ok(TargetSet::PAdicBalls(PAdicBallUnion::new(*prime, balls)?))
            }
        }
    }
}

impl fmt::Display for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSet::Intervals(u) => write!(f, "{u}"),
            TargetSet::Boxes(b) => write!(f, "{b}"),
            TargetSet::PAdicBalls(u) => write!(f, "{u}"),
        }
    }
}

/// One grid row of a content certificate: exact dilated measure, growth
/// μ(A_ε) − μ(A), and the certified ratio growth / ε^{d−s}.
#[derive(Clone, Debug)]
pub struct ContentRow {
    pub eps: ExactScalar,
    pub dilated_measure: ExactScalar,
    pub growth: ExactScalar,
    pub ratio: ExactScalar,
}

/// Certificate that μ(A_ε) − μ(A) ≤ c1·ε^{d−s} holds exactly at every grid ε,
/// with c1 the smallest such constant on the grid. For interval unions the
/// analytic constant 2·(arc count) is carried alongside. τ is a diagnostic
/// fallback exponent: the smallest τ with growth ≤ ε^{d−s−τ} pointwise.
#[derive(Clone, Debug)]
pub struct ContentCertificate {
    pub s: Rational,
    pub c1: ExactScalar,
    pub analytic_c1: Option<ExactScalar>,
    pub tau: Option<f64>,
    pub eps_max: ExactScalar,
    pub eps_min: ExactScalar,
    pub rows: Vec<ContentRow>,
}

fn exponent_u32(r: &Rational) -> Result<u32> {
    if !r.is_integer() {
        return Err(Error::Domain("content exponent d − s must be an integer".into()));
    }
    r.to_integer()
        .to_u32()
        .ok_or_else(|| Error::Domain("content exponent d − s out of range".into()))
}

pub fn content_certificate(a: &TargetSet, grid: &[ExactScalar]) -> Result<ContentCertificate> {
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
    if let Some(threshold) = a.merge_threshold() {
        if grid[0].compare(&threshold)? == Ordering::Greater {
            return Err(Error::Domain(format!(
                "largest grid ε {} exceeds the merge-degeneracy threshold {}",
                grid[0], threshold
            )));
        }
    }
    let s = a.boundary_dimension();
    let d = Rational::from_integer(BigInt::from(a.ambient_dim()));
    let u = exponent_u32(&(&d - &s))?;
    let mu = a.measure();
    let mut rows = Vec::with_capacity(grid.len());
    let mut c1 = ExactScalar::zero();
    for eps in grid {
        let dilated_measure = a.dilate(eps)?.measure();
        let growth = dilated_measure.checked_sub(&mu)?;
        let ratio = growth.checked_div(&eps.pow_u32(u))?;
        if ratio.compare(&c1)? == Ordering::Greater {
            c1 = ratio.clone();
        }
        rows.push(ContentRow { eps: eps.clone(), dilated_measure, growth, ratio });
    }
    let analytic_c1 = a.interval_count().map(|n| ExactScalar::from_int(2 * n as i64));
    let mut tau: Option<f64> = None;
    for row in &rows {
        // growth ≤ ε^{u−τ} ⟺ τ ≥ u − ln(growth)/ln(ε) for ε < 1.
        if row.growth.is_positive() && row.eps.compare(&ExactScalar::one())? == Ordering::Less {
            let t = u as f64 - row.growth.approx().ln() / row.eps.approx().ln();
            if t > 0.0 && tau.is_none_or(|cur| t > cur) {
                tau = Some(t);
            }
        }
    }
    Ok(ContentCertificate {
        s,
        c1,
        analytic_c1,
        tau,
        eps_max: grid[0].clone(),
        eps_min: grid[grid.len() - 1].clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> ExactScalar {
        s.parse().unwrap()
    }

    fn frac(n: i64, d: i64) -> ExactScalar {
        ExactScalar::from_ratio(n, d).unwrap()
    }

    fn intervals(pairs: &[(&str, &str)]) -> IntervalUnion {
        let pairs: Vec<(ExactScalar, ExactScalar)> =
            pairs.iter().map(|(l, r)| (parse(l), parse(r))).collect();
        IntervalUnion::from_endpoints(&pairs).unwrap()
    }

    #[test]
    fn boundary_points_are_members() {
        let u = intervals(&[("0", "1/2")]);
        assert!(u.contains(&parse("1/2")).unwrap());
        assert!(u.contains(&parse("0")).unwrap());
        assert!(!u.contains(&parse("3/5")).unwrap());
    }

    #[test]
    fn membership_decided_exactly_for_irrationals() {
        // Oracle: √2 − 1 ≤ 1/2 ⟺ √2 ≤ 3/2 ⟺ 2·2² ≤ 3².
        assert!(2 * 2 * 2 <= 3 * 3);
        let u = intervals(&[("0", "1/2")]);
        assert!(u.contains(&parse("sqrt(2) - 1")).unwrap());
    }

    #[test]
    fn even_ball_excludes_odd_numbers() {
        let u = PAdicBallUnion::from_centers(2, &[(PAdicPoint::zero(2, 8), 1)]).unwrap();
        assert!(!u.contains(&PAdicPoint::from_value(2, 8, 1)).unwrap());
        assert!(u.contains(&PAdicPoint::from_value(2, 8, 6)).unwrap());
    }

    #[test]
    fn golden_interval_has_irrational_measure() {
        let u = intervals(&[("0", "(sqrt(5) - 1)/2")]);
        assert_eq!(u.measure(), parse("(sqrt(5) - 1)/2"));
        assert!(!u.measure().is_rational());
    }

    #[test]
    fn disjoint_quarters_have_rational_measure() {
        let u = intervals(&[("0", "1/4"), ("1/2", "3/4")]);
        assert_eq!(u.measure(), frac(1, 2));
        assert!(u.measure().is_rational());
        assert_eq!(u.arcs().len(), 2);
    }

    #[test]
    fn ternary_ball_measure() {
        let u = PAdicBallUnion::from_centers(3, &[(PAdicPoint::zero(3, 5), 1)]).unwrap();
        assert_eq!(u.measure(), frac(1, 3));
    }

    #[test]
    fn dilation_merges_a_narrow_gap() {
        // [1/10, 3/10] ∪ [7/20, 1/2] dilated by 1/20: the gap of width 1/20
        // closes, leaving the single arc [1/20, 11/20].
        let u = intervals(&[("1/10", "3/10"), ("7/20", "1/2")]);
        assert_eq!(u.measure(), frac(7, 20));
        let d = u.dilate(&frac(1, 20)).unwrap();
        assert_eq!(d.arcs().len(), 1);
        assert_eq!(d.arcs()[0].start(), &frac(1, 20));
        assert_eq!(d.arcs()[0].end(), frac(11, 20));
        assert_eq!(d.measure(), frac(1, 2));
    }

    #[test]
    fn dilating_a_box_wraps_and_scales() {
        let b = TorusBox::from_endpoints(&[
            (parse("0"), parse("1/2")),
            (parse("0"), parse("1/2")),
        ])
        .unwrap();
        let u = BoxUnion::new(2, vec![b]).unwrap();
        assert_eq!(u.measure(), &frac(1, 4));
        let d = u.dilate(&frac(1, 10)).unwrap();
        assert_eq!(d.boxes().len(), 1);
        for side in d.boxes()[0].sides() {
            assert_eq!(side.start(), &frac(9, 10));
            assert_eq!(side.len(), &frac(7, 10));
        }
        assert_eq!(d.measure(), &frac(49, 100));
    }

    #[test]
    fn small_dilation_of_clopen_ball_is_identity() {
        let u = PAdicBallUnion::from_centers(2, &[(PAdicPoint::zero(2, 8), 1)]).unwrap();
        let d = u.dilate(&frac(1, 8)).unwrap();
        assert_eq!(d, u);
    }

    #[test]
    fn dilation_of_clopen_ball_past_granularity_grows() {
        let center = PAdicPoint::zero(2, 8);
        let u = PAdicBallUnion::from_centers(2, &[(center, 2)]).unwrap();
        assert_eq!(u.measure(), frac(1, 4));
        let d = u.dilate(&frac(1, 2)).unwrap();
        assert_eq!(d.measure(), frac(1, 2));
        assert_eq!(d.max_exponent(), 1);
    }

    #[test]
    fn boundary_dimensions_are_analytic() {
        let i = TargetSet::Intervals(intervals(&[("0", "1/2")]));
        assert_eq!(i.boundary_dimension(), Rational::from_integer(BigInt::from(0)));
        let b3 = TorusBox::from_endpoints(&[
            (parse("0"), parse("1/2")),
            (parse("0"), parse("1/2")),
            (parse("0"), parse("1/2")),
        ])
        .unwrap();
        let b = TargetSet::Boxes(BoxUnion::new(3, vec![b3]).unwrap());
        assert_eq!(b.boundary_dimension(), Rational::from_integer(BigInt::from(2)));
        let p = TargetSet::PAdicBalls(
            PAdicBallUnion::from_centers(3, &[(PAdicPoint::zero(3, 5), 1)]).unwrap(),
        );
        assert_eq!(p.boundary_dimension(), Rational::from_integer(BigInt::from(0)));
    }

    #[test]
    fn content_certificate_single_interval() {
        // Growth of [0, 1/2] under dilation by ε is exactly 2ε while 2ε stays
        // below the complement, so both grid rows certify c1 = 2 at s = 0.
        let a = TargetSet::Intervals(intervals(&[("0", "1/2")]));
        let cert = content_certificate(&a, &[frac(1, 10), frac(1, 100)]).unwrap();
        assert_eq!(cert.rows[0].growth, frac(1, 5));
        assert_eq!(cert.rows[1].growth, frac(1, 50));
        assert_eq!(cert.c1, frac(2, 1));
        assert_eq!(cert.analytic_c1, Some(frac(2, 1)));
        assert_eq!(cert.s, Rational::from_integer(BigInt::from(0)));
    }

    #[test]
    fn content_certificate_two_intervals_premerge() {
        // Two arcs grow by 4ε up to (and at) the touch threshold. The gap
        // between 3/10 and 7/20 is 1/20, so the threshold is 1/40: there the
        // dilated arcs touch in a point and the growth is still exactly 4ε.
        let a = TargetSet::Intervals(intervals(&[("1/10", "3/10"), ("7/20", "1/2")]));
        assert_eq!(a.merge_threshold(), Some(frac(1, 40)));
        let cert = content_certificate(&a, &[frac(1, 40), frac(1, 100)]).unwrap();
        assert_eq!(cert.rows[0].growth, frac(1, 10));
        assert_eq!(cert.rows[1].growth, frac(1, 25));
        assert_eq!(cert.c1, frac(4, 1));
        assert_eq!(cert.analytic_c1, Some(frac(4, 1)));
    }

    #[test]
    fn content_certificate_clopen_is_trivial() {
        let a = TargetSet::PAdicBalls(
            PAdicBallUnion::from_centers(2, &[(PAdicPoint::zero(2, 8), 1)]).unwrap(),
        );
        let cert = content_certificate(&a, &[frac(1, 8), frac(1, 16)]).unwrap();
        assert!(cert.rows.iter().all(|r| r.growth.is_zero()));
        assert!(cert.c1.is_zero());
        assert_eq!(cert.tau, None);
    }

    #[test]
    fn content_certificate_rejects_bad_grids() {
        let a = TargetSet::Intervals(intervals(&[("1/10", "3/10"), ("7/20", "1/2")]));
        assert!(matches!(content_certificate(&a, &[]), Err(Error::Domain(_))));
        assert!(matches!(
            content_certificate(&a, &[frac(1, 100), frac(1, 40)]),
            Err(Error::Domain(_))
        ));
        // 1/20 dilates past the touch threshold 1/40: the two arcs overlap
        // and the growth drops to 3ε, so the grid is rejected outright.
        assert!(matches!(
            content_certificate(&a, &[frac(1, 20)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn wraparound_arcs_glue_across_zero() {
        let u = intervals(&[("4/5", "9/10"), ("9/10", "1/10")]);
        assert_eq!(u.arcs().len(), 1);
        assert_eq!(u.arcs()[0].start(), &frac(4, 5));
        assert_eq!(u.measure(), frac(3, 10));
        assert!(u.contains(&parse("0")).unwrap());
        assert!(u.contains(&frac(1, 10)).unwrap());
        assert!(!u.contains(&frac(1, 9)).unwrap());
    }

    #[test]
    fn covering_arcs_normalize_to_full() {
        let u = intervals(&[("0", "2/3"), ("1/2", "1/4")]);
        assert!(u.is_full());
        assert_eq!(u.measure(), frac(1, 1));
        assert!(u.contains(&parse("sqrt(2) - 1")).unwrap());
    }

    #[test]
    fn point_sets_dilate_to_matching_arcs() {
        let u = IntervalUnion::from_points(&[frac(1, 5), frac(4, 5)]).unwrap();
        assert!(u.measure().is_zero());
        assert!(u.contains(&frac(1, 5)).unwrap());
        assert!(!u.contains(&frac(1, 2)).unwrap());
        let d = u.dilate(&frac(1, 10)).unwrap();
        assert_eq!(d.arcs().len(), 2);
        assert_eq!(d.measure(), frac(2, 5));
        assert_eq!(d.arcs()[0].start(), &frac(1, 10));
        assert_eq!(d.arcs()[0].end(), frac(3, 10));
    }

    #[test]
    fn distance_reaches_the_nearer_endpoint() {
        let u = intervals(&[("0", "1/2")]);
        assert_eq!(u.distance_to(&frac(3, 4)).unwrap(), frac(1, 4));
        assert_eq!(u.distance_to(&frac(11, 20)).unwrap(), frac(1, 20));
        assert!(u.distance_to(&frac(1, 4)).unwrap().is_zero());
    }

    #[test]
    fn overlapping_boxes_measure_by_inclusion_exclusion() {
        // Oracle: 1/4 + 1/4 − 1/16 = 7/16.
        let a = TorusBox::from_endpoints(&[
            (parse("0"), parse("1/2")),
            (parse("0"), parse("1/2")),
        ])
        .unwrap();
        let b = TorusBox::from_endpoints(&[
            (parse("1/4"), parse("3/4")),
            (parse("1/4"), parse("3/4")),
        ])
        .unwrap();
        let u = BoxUnion::new(2, vec![a, b]).unwrap();
        assert_eq!(u.measure(), &frac(7, 16));
    }

    #[test]
    fn boxes_wrap_around_axes() {
        let b = TorusBox::from_endpoints(&[
            (parse("3/4"), parse("1/4")),
            (parse("0"), parse("1/2")),
        ])
        .unwrap();
        let u = BoxUnion::new(2, vec![b]).unwrap();
        assert_eq!(u.measure(), &frac(1, 4));
        assert!(u.contains(&[parse("0"), parse("0")]).unwrap());
        assert!(!u.contains(&[frac(1, 2), parse("0")]).unwrap());
    }

    #[test]
    fn complete_sibling_families_merge() {
        let zero = PAdicPoint::zero(2, 8);
        let one = PAdicPoint::from_value(2, 8, 1);
        let u = PAdicBallUnion::from_centers(2, &[(zero, 1), (one, 1)]).unwrap();
        assert!(u.is_full());
        assert_eq!(u.measure(), frac(1, 1));

        let z3 = PAdicBallUnion::from_centers(
            3,
            &[(PAdicPoint::zero(3, 5), 1), (PAdicPoint::from_value(3, 5, 1), 1)],
        )
        .unwrap();
        assert!(!z3.is_full());
        assert_eq!(z3.measure(), frac(2, 3));
        assert_eq!(z3.balls().len(), 2);
    }

    #[test]
    fn nested_balls_are_subsumed() {
        let zero = PAdicPoint::zero(2, 8);
        let two = PAdicPoint::from_value(2, 8, 2);
        let u = PAdicBallUnion::from_centers(2, &[(zero, 1), (two, 2)]).unwrap();
        assert_eq!(u.balls().len(), 1);
        assert_eq!(u.max_exponent(), 1);
        assert_eq!(u.measure(), frac(1, 2));
    }

    #[test]
    fn dilation_covering_the_circle_is_flagged_full() {
        let a = TargetSet::Intervals(intervals(&[("0", "1/2")]));
        let d = a.dilate(&frac(1, 4)).unwrap();
        assert!(d.is_full());
        assert_eq!(d.measure(), frac(1, 1));
    }

    #[test]
    fn space_mismatches_are_rejected() {
        let a = TargetSet::Intervals(intervals(&[("0", "1/2")]));
        let p2 = GroupPoint::torus(vec![frac(1, 4), frac(1, 4)]);
        assert!(a.contains(&p2).is_err());
        let padic = GroupPoint::PAdic(PAdicPoint::zero(2, 8));
        assert!(a.contains(&padic).is_err());

        let space = GroupSpace::padic(2, 4).unwrap();
        let deep =
            PAdicBallUnion::from_centers(2, &[(PAdicPoint::zero(2, 6), 6)]).unwrap();
        assert!(TargetSet::PAdicBalls(deep).check_space(&space).is_err());
        let shallow =
            PAdicBallUnion::from_centers(2, &[(PAdicPoint::zero(2, 6), 3)]).unwrap();
        assert!(TargetSet::PAdicBalls(shallow).check_space(&space).is_ok());
    }

    #[test]
    fn point_cloud_targets_in_higher_dimension() {
        let space = GroupSpace::torus(2).unwrap();
        let pts = vec![
            GroupPoint::torus(vec![frac(1, 4), frac(1, 4)]),
            GroupPoint::torus(vec![frac(3, 4), frac(1, 2)]),
        ];
        let a = TargetSet::from_points(&space, &pts).unwrap();
        assert!(a.measure().is_zero());
        assert!(a.contains(&pts[0]).unwrap());
        assert!(!a.contains(&GroupPoint::torus(vec![frac(1, 4), frac(1, 2)])).unwrap());
        let d = a.dilate(&frac(1, 10)).unwrap();
        assert_eq!(d.measure(), frac(2, 25));
    }

    fn arc_strategy() -> impl Strategy<Value = CircleArc> {
        (0i64..24, 0i64..=24)
            .prop_map(|(s, l)| CircleArc::new(frac(s, 24), frac(l, 24)).unwrap())
    }

    fn union_strategy() -> impl Strategy<Value = IntervalUnion> {
        proptest::collection::vec(arc_strategy(), 0..4)
            .prop_map(|arcs| IntervalUnion::new(arcs).unwrap())
    }

    proptest! {
        #[test]
        fn normalization_preserves_membership(
            raw in proptest::collection::vec(arc_strategy(), 0..4),
            xi in 0i64..48,
        ) {
            let x = frac(xi, 48);
            let direct = raw.iter().map(|a| a.contains(&x).unwrap()).any(|b| b);
            let u = IntervalUnion::new(raw).unwrap();
            prop_assert_eq!(u.contains(&x).unwrap(), direct);
            // structural invariants of the normal form
            let arcs = u.arcs();
            if !(u.is_full() || arcs.is_empty()) {
                for i in 0..arcs.len() {
                    let gap = arcs[(i + 1) % arcs.len()]
                        .start()
                        .checked_sub(&arcs[i].end())
                        .unwrap()
                        .mod1();
                    if arcs.len() > 1 {
                        prop_assert!(gap.is_positive());
                    }
                }
            }
            let total = u.measure();
            prop_assert!(total.compare(&frac(1, 1)).unwrap() != Ordering::Greater);
        }

        #[test]
        fn dilated_membership_matches_distance(
            u in union_strategy(),
            xi in 0i64..48,
            ei in 1i64..12,
        ) {
            prop_assume!(!u.is_empty());
            let x = frac(xi, 48);
            let eps = frac(ei, 48);
            let inside = u.dilate(&eps).unwrap().contains(&x).unwrap();
            let close = u.distance_to(&x).unwrap().compare(&eps).unwrap() != Ordering::Greater;
            prop_assert_eq!(inside, close);
        }

        #[test]
        fn dilation_is_monotone(
            u in union_strategy(),
            xi in 0i64..48,
            e1 in 0i64..12,
            e2 in 0i64..12,
        ) {
            let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let x = frac(xi, 48);
            let in_small = u.dilate(&frac(small, 48)).unwrap().contains(&x).unwrap();
            let in_large = u.dilate(&frac(large, 48)).unwrap().contains(&x).unwrap();
            prop_assert!(!in_small || in_large);
        }

        #[test]
        fn dilation_never_shrinks_measure(u in union_strategy(), ei in 1i64..24) {
            let eps = frac(ei, 48);
            let before = u.measure();
            let after = u.dilate(&eps).unwrap().measure();
            prop_assert!(after.compare(&before).unwrap() != Ordering::Less);
            if !(u.is_empty() || u.is_full()) {
                // positive dilation of a nonempty, non-full arc union always
                // adds measure (growth 0 is the clopen p-adic phenomenon)
                prop_assert!(after.compare(&before).unwrap() == Ordering::Greater);
            }
        }

        #[test]
        fn ball_union_measure_counts_leaves(
            raw in proptest::collection::vec((0u32..=4, 0u64..16), 0..5),
        ) {
            let items: Vec<(PAdicPoint, u32)> = raw
                .iter()
                .map(|&(exp, val)| (PAdicPoint::from_value(2, 4, val), exp))
                .collect();
            let u = PAdicBallUnion::from_centers(2, &items).unwrap();
            // oracle: fraction of the 16 depth-4 residues covered
            let mut covered = 0u32;
            for v in 0..16u64 {
                if u.contains(&PAdicPoint::from_value(2, 4, v)).unwrap() {
                    covered += 1;
                }
            }
            prop_assert_eq!(u.measure(), frac(covered as i64, 16));
            // normalization is idempotent
            let again = PAdicBallUnion::new(2, u.balls().to_vec()).unwrap();
            prop_assert_eq!(again, u);
        }

        #[test]
        fn box_union_measure_matches_grid_count(
            raw in proptest::collection::vec(((0i64..4, 0i64..=4), (0i64..4, 0i64..=4)), 1..3),
        ) {
            let boxes: Vec<TorusBox> = raw
                .iter()
                .map(|&((s1, l1), (s2, l2))| {
                    TorusBox::new(vec![
                        CircleArc::new(frac(s1, 4), frac(l1, 4)).unwrap(),
                        CircleArc::new(frac(s2, 4), frac(l2, 4)).unwrap(),
                    ])
                    .unwrap()
                })
                .collect();
            let u = BoxUnion::new(2, boxes).unwrap();
            // oracle: endpoints sit on the 1/4 grid, so counting the centers
            // of the sixteen 1/4-cells gives the exact measure
            let mut covered = 0i64;
            for i in 0..4i64 {
                for j in 0..4i64 {
                    let c = [frac(2 * i + 1, 8), frac(2 * j + 1, 8)];
                    if u.contains(&c).unwrap() {
                        covered += 1;
                    }
                }
            }
            prop_assert_eq!(u.measure(), &frac(covered, 16));
        }
    }
}
