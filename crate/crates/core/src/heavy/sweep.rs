//! Exact heavy-set sweep on the circle.
//!
//! For fixed step g and horizon n the verdict of x only changes when some
//! orbit point x + ig crosses a target endpoint, i.e. at the critical
//! positions {endpoint − i·g : 0 ≤ i < n}. Those positions cut the circle
//! into cells on which every χ term — hence every partial sum — is constant.
//! The sweep sorts the critical positions, replays the crossings through a
//! lazy min segment tree holding the integerized partial sums, and reads one
//! first-failure index per cell: O((n + R)·log n) for a whole grid instead
//! of O(R·n) pointwise work.

use std::cmp::Ordering;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::target::IntervalUnion;

/// Sentinel: no failing index at or below the sweep horizon.
pub const NO_FAILURE: u32 = u32::MAX;

const SWEEP_HORIZON_CAP: u64 = 1 << 21;
const SWEEP_RESOLUTION_CAP: u64 = 1 << 24;
const SWEEP_EVENT_CAP: u64 = 1 << 20;

/// Integerized partial sums: heavy at j ⇔ m_j ≥ 1, failure ⇔ m_j ≤ 0.
enum Level {
    /// γ = p/q: m_j = q·hits_j − j·p; a χ flip moves suffixes by ±q.
    Rational { p: i64, q: i64 },
    /// Irrational γ: m_j = hits_j − ⌊jγ⌋; flips move suffixes by ±1.
    Irrational { floors: Vec<i64> },
}

impl Level {
    fn classify(gamma: &ExactScalar, n: u64) -> Result<(Level, i64)> {
        if gamma.is_negative() || gamma.compare(&ExactScalar::one())? == Ordering::Greater {
            return Err(Error::Domain("level γ must lie in [0, 1]".into()));
        }
        if let Some(r) = gamma.as_rational() {
            let q = r
                .denom()
                .to_i64()
                .filter(|q| (*q as i128) * (n as i128 + 1) < 1i128 << 60)
                .ok_or_else(|| {
                    Error::ResourceCap("level denominator too large for this horizon".into())
                })?;
            let p = r.numer().to_i64().ok_or_else(|| {
                Error::ResourceCap("level numerator out of range".into())
            })?;
            Ok((Level::Rational { p, q }, q))
        } else {
            // ⌊jγ⌋ via the running fractional part; each step is one exact
            // add and compare on numbers whose size grows like log j.
            let one = ExactScalar::one();
            let mut frac = ExactScalar::zero();
            let mut floor = 0i64;
            let mut floors = Vec::with_capacity(n as usize);
            for _ in 0..n {
                frac = frac.checked_add(gamma)?;
                if frac.compare(&one)? != Ordering::Less {
                    frac = frac.checked_sub(&one)?;
                    floor += 1;
                }
                floors.push(floor);
            }
            Ok((Level::Irrational { floors }, 1))
        }
    }

    fn value(&self, j: u64, hits: i64) -> i64 {
        match self {
            Level::Rational { p, q } => q * hits - j as i64 * p,
            Level::Irrational { floors } => hits - floors[j as usize - 1],
        }
    }
}

/// Lazy min segment tree over j = 1..n supporting suffix increments.
struct MinTree {
    n: usize,
    mins: Vec<i64>,
    lazy: Vec<i64>,
}

impl MinTree {
    fn new(values: &[i64]) -> MinTree {
        let n = values.len();
        let mut t = MinTree { n, mins: vec![0; 4 * n], lazy: vec![0; 4 * n] };
        t.build(1, 1, n, values);
        t
    }

    fn build(&mut self, node: usize, lo: usize, hi: usize, values: &[i64]) {
        if lo == hi {
            self.mins[node] = values[lo - 1];
            return;
        }
        let mid = (lo + hi) / 2;
        self.build(2 * node, lo, mid, values);
        self.build(2 * node + 1, mid + 1, hi, values);
        self.mins[node] = self.mins[2 * node].min(self.mins[2 * node + 1]);
    }

    fn add_suffix(&mut self, from: usize, delta: i64) {
        if from <= self.n {
            self.add(1, 1, self.n, from, delta);
        }
    }

    fn add(&mut self, node: usize, lo: usize, hi: usize, from: usize, delta: i64) {
        if from <= lo {
            self.mins[node] += delta;
            self.lazy[node] += delta;
            return;
        }
        if hi < from {
            return;
        }
        let mid = (lo + hi) / 2;
        self.add(2 * node, lo, mid, from, delta);
        self.add(2 * node + 1, mid + 1, hi, from, delta);
        self.mins[node] =
            self.mins[2 * node].min(self.mins[2 * node + 1]) + self.lazy[node];
    }

    /// Leftmost j with m_j ≤ 0, or NO_FAILURE.
    fn first_nonpositive(&self) -> u32 {
        if self.mins[1] > 0 {
            return NO_FAILURE;
        }
        let (mut node, mut lo, mut hi, mut acc) = (1usize, 1usize, self.n, 0i64);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let below = acc + self.lazy[node];
            if self.mins[2 * node] + below <= 0 {
                node = 2 * node;
                hi = mid;
            } else {
                node = 2 * node + 1;
                lo = mid + 1;
            }
            acc = below;
        }
        lo as u32
    }
}

struct Event {
    pos: ExactScalar,
    key: f64,
    /// First partial-sum index the flip reaches (= orbit index + 1).
    suffix: u32,
    open: bool,
}

/// Verdict structure of one (target, γ, g, n) sweep at resolution R.
pub struct CircleSweep {
    resolution: u64,
    horizon: u64,
    /// First failing index for each grid point k/R; NO_FAILURE = heavy.
    grid_first_fail: Vec<u32>,
    /// Sorted distinct critical positions in [0, 1).
    boundaries: Vec<ExactScalar>,
    boundary_keys: Vec<f64>,
    /// First failure exactly at boundaries[i].
    at_fail: Vec<u32>,
    /// First failure on the open cell following boundaries[i], cyclically.
    open_fail: Vec<u32>,
    /// Cell value when the circle has no critical positions at all.
    uniform_fail: u32,
}

/// Sweep `target` at level γ under translation by g, horizon n, grid R.
pub fn sweep_circle(
    target: &IntervalUnion,
    gamma: &ExactScalar,
    g: &ExactScalar,
    horizon: u64,
    resolution: u64,
) -> Result<CircleSweep> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if horizon > SWEEP_HORIZON_CAP {
        return Err(Error::ResourceCap(format!(
            "sweep horizon {horizon} exceeds cap {SWEEP_HORIZON_CAP}"
        )));
    }
    if resolution == 0 {
        return Err(Error::Domain("resolution must be at least 1".into()));
    }
    if resolution > SWEEP_RESOLUTION_CAP {
        return Err(Error::ResourceCap(format!(
            "sweep resolution {resolution} exceeds cap {SWEEP_RESOLUTION_CAP}"
        )));
    }

    // Constant-χ circles have a single cell decided by the sign of the
    // constant increment.
    if target.is_empty() || target.is_full() {
        let heavy = target.is_full()
            && gamma.compare(&ExactScalar::one())? == Ordering::Less
            && !gamma.is_negative();
        let fail = if heavy { NO_FAILURE } else { 1 };
        Level::classify(gamma, 1)?; // still validate the level range
        return Ok(CircleSweep {
            resolution,
            horizon,
            grid_first_fail: vec![fail; resolution as usize],
            boundaries: Vec::new(),
            boundary_keys: Vec::new(),
            at_fail: Vec::new(),
            open_fail: Vec::new(),
            uniform_fail: fail,
        });
    }

    let (level, weight) = Level::classify(gamma, horizon)?;
    let g = g.mod1();
    let one = ExactScalar::one();

    let event_count = 2u64 * target.arcs().len() as u64 * horizon;
    if event_count > SWEEP_EVENT_CAP {
        return Err(Error::ResourceCap(format!(
            "{event_count} sweep events exceed cap {SWEEP_EVENT_CAP}"
        )));
    }

    // Critical positions endpoint − i·g, generated by repeated subtraction.
    let mut events: Vec<Event> = Vec::with_capacity(event_count as usize);
    for arc in target.arcs() {
        for (endpoint, open) in [(arc.start().clone(), true), (arc.end().mod1(), false)] {
            let mut pos = endpoint;
            for i in 0..horizon {
                events.push(Event {
                    key: pos.to_f64().0,
                    suffix: (i + 1) as u32,
                    open,
                    pos: pos.clone(),
                });
                if i + 1 < horizon {
                    pos = pos.checked_sub(&g)?.mod1();
                }
            }
        }
    }

    // Order by float key, then repair any cluster of near-ties exactly; two
    // distinct positions more than 1e-9 apart are ordered correctly by the
    // keys alone.
    events.sort_unstable_by(|a, b| a.key.partial_cmp(&b.key).expect("finite keys"));
    let mut i = 0;
    while i < events.len() {
        let mut j = i + 1;
        while j < events.len() && events[j].key - events[j - 1].key < 1e-9 {
            j += 1;
        }
        if j - i > 1 {
            events[i..j]
                .sort_by(|a, b| a.pos.compare(&b.pos).expect("positions share one field"));
        }
        i = j;
    }

    // State at x = 0, taken directly from the orbit of 0.
    let n = horizon as usize;
    let mut hits0 = Vec::with_capacity(n);
    let mut pos = ExactScalar::zero();
    for i in 0..horizon {
        hits0.push(target.contains(&pos)?);
        if i + 1 < horizon {
            let s = pos.checked_add(&g)?;
            pos = if s.compare(&one)? == Ordering::Less { s } else { s.checked_sub(&one)? };
        }
    }
    let mut init = Vec::with_capacity(n);
    let mut hits = 0i64;
    for j in 1..=horizon {
        hits += i64::from(hits0[j as usize - 1]);
        init.push(level.value(j, hits));
    }
    let mut tree = MinTree::new(&init);
    let initial_fail = tree.first_nonpositive();

    // Group events at exactly equal positions and replay the crossings.
    // At a boundary t the opens are already active (closed left endpoints)
    // and the closes are still active (closed right endpoints); both drop
    // out only past t. The state at x = 0 already contains any events
    // sitting at position 0, so their opens are skipped and re-applied at
    // the end, which must reproduce the initial state exactly.
    let mut boundaries = Vec::new();
    let mut boundary_keys = Vec::new();
    let mut at_fail = Vec::new();
    let mut open_fail = Vec::new();
    let mut idx = 0;
    while idx < events.len() {
        let mut end = idx + 1;
        while end < events.len() && events[end].pos == events[idx].pos {
            end += 1;
        }
        let at_zero = boundaries.is_empty() && events[idx].pos.is_zero();
        for e in &events[idx..end] {
            if e.open && !at_zero {
                tree.add_suffix(e.suffix as usize, weight);
            }
        }
        at_fail.push(tree.first_nonpositive());
        for e in &events[idx..end] {
            if !e.open {
                tree.add_suffix(e.suffix as usize, -weight);
            }
        }
        open_fail.push(tree.first_nonpositive());
        boundaries.push(events[idx].pos.clone());
        boundary_keys.push(events[idx].key);
        idx = end;
    }

    // Closing the cycle must restore the state at x = 0.
    if !boundaries.is_empty() && boundaries[0].is_zero() {
        let first_len = events.iter().take_while(|e| e.pos == boundaries[0]).count();
        for e in &events[..first_len] {
            if e.open {
                tree.add_suffix(e.suffix as usize, weight);
            }
        }
    }
    if tree.first_nonpositive() != initial_fail {
        return Err(Error::Invariant(
            "sweep did not return to its initial state after a full cycle".into(),
        ));
    }

    // Walk the grid through the cells. Indices with k/R < t take the open
    // cell before t, an index with k/R = t takes the boundary value.
    let r = resolution;
    let r_scalar = ExactScalar::from_bigint(r.into());
    let mut grid = vec![0u32; r as usize];
    let mut cur = *open_fail.last().expect("at least one boundary");
    let mut k = 0u64;
    for (b, pos) in boundaries.iter().enumerate() {
        let scaled = pos.checked_mul(&r_scalar)?;
        let kf = scaled
            .floor()
            .to_u64()
            .ok_or_else(|| Error::Invariant("grid index out of range".into()))?;
        let below_end = if scaled.is_integer() { kf } else { kf + 1 };
        let below_end = below_end.min(r);
        if below_end > k {
            grid[k as usize..below_end as usize].fill(cur);
            k = below_end;
        }
        if scaled.is_integer() && kf < r && k == kf {
            grid[kf as usize] = at_fail[b];
            k = kf + 1;
        }
        cur = open_fail[b];
    }
    if k < r {
        grid[k as usize..].fill(cur);
    }

    Ok(CircleSweep {
        resolution,
        horizon,
        grid_first_fail: grid,
        boundaries,
        boundary_keys,
        at_fail,
        open_fail,
        uniform_fail: NO_FAILURE,
    })
}

impl CircleSweep {
    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Per-grid-point first failures, NO_FAILURE meaning heavy through the
    /// sweep horizon.
    pub fn first_failures(&self) -> &[u32] {
        &self.grid_first_fail
    }

    pub fn boundaries(&self) -> &[ExactScalar] {
        &self.boundaries
    }

    fn check_sub_horizon(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.horizon {
            return Err(Error::Domain(format!(
                "queried horizon {n} outside 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Heavy/not-heavy per grid point at any horizon up to the sweep's.
    pub fn heavy_grid(&self, n: u64) -> Result<Vec<bool>> {
        self.check_sub_horizon(n)?;
        Ok(self.grid_first_fail.iter().map(|&f| f as u64 > n).collect())
    }

    pub fn heavy_count(&self, n: u64) -> Result<u64> {
        self.check_sub_horizon(n)?;
        Ok(self.grid_first_fail.iter().filter(|&&f| f as u64 > n).count() as u64)
    }

    /// Exact fraction of heavy grid points.
    pub fn heavy_fraction(&self, n: u64) -> Result<Rational> {
        Ok(Rational::new(
            self.heavy_count(n)?.into(),
            self.resolution.into(),
        ))
    }

    /// Maximal runs [a, b] of consecutive heavy grid indices (not merged
    /// across the wrap point; packing on the circle handles that itself).
    pub fn heavy_runs(&self, n: u64) -> Result<Vec<(u64, u64)>> {
        self.check_sub_horizon(n)?;
        let mut runs = Vec::new();
        let mut start: Option<u64> = None;
        for (k, &f) in self.grid_first_fail.iter().enumerate() {
            if f as u64 > n {
                if start.is_none() {
                    start = Some(k as u64);
                }
            } else if let Some(s) = start.take() {
                runs.push((s, k as u64 - 1));
            }
        }
        if let Some(s) = start {
            runs.push((s, self.resolution - 1));
        }
        Ok(runs)
    }

    /// First failing index at an arbitrary exact point, from the cell
    /// structure: float keys narrow the search, exact comparisons decide.
    pub fn first_failure_at(&self, x: &ExactScalar) -> Result<Option<u64>> {
        let x = x.mod1();
        let fail = if self.boundaries.is_empty() {
            self.uniform_fail
        } else {
            let key = x.to_f64().0;
            let start = self.boundary_keys.partition_point(|k| *k < key - 1e-9);
            let mut last_le = start.checked_sub(1);
            let mut idx = start;
            let mut at = None;
            while idx < self.boundaries.len() && self.boundary_keys[idx] <= key + 1e-9 {
                match self.boundaries[idx].compare(&x)? {
                    Ordering::Less => {
                        last_le = Some(idx);
                        idx += 1;
                    }
                    Ordering::Equal => {
                        at = Some(self.at_fail[idx]);
                        break;
                    }
                    Ordering::Greater => break,
                }
            }
            match (at, last_le) {
                (Some(f), _) => f,
                (None, Some(i)) => self.open_fail[i],
                // Before the first boundary: the wrap cell.
                (None, None) => *self.open_fail.last().expect("nonempty boundaries"),
            }
        };
        Ok(if fail == NO_FAILURE { None } else { Some(fail as u64) })
    }

    /// Heavy verdict at an arbitrary exact point and horizon.
    pub fn heavy_at(&self, x: &ExactScalar, n: u64) -> Result<bool> {
        self.check_sub_horizon(n)?;
        Ok(match self.first_failure_at(x)? {
            None => true,
            Some(f) => f > n,
        })
    }
}
