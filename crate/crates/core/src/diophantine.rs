//! Continued-fraction machinery: expansion with periodic-tail detection for
//! quadratic irrationals, convergents, below-approximating sequences with
//! exact order certificates, Liouville-style constructions for large order,
//! and best rational approximation from below under a denominator cap.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{log2_bigint, log2_rational, ExactScalar, Rational};

#[derive(Clone, Debug)]
pub struct ContinuedFraction {
    /// Partial quotients a₀, a₁, …; a₀ = 0 for inputs in (0, 1).
    pub quotients: Vec<BigInt>,
    /// If present, quotients from this index onward repeat forever
    /// (quadratic irrationals are eventually periodic).
    pub period_start: Option<usize>,
}

impl ContinuedFraction {
    pub fn is_finite(&self) -> bool {
        self.period_start.is_none()
    }

    /// The i-th partial quotient, unfolding the periodic tail on demand.
    pub fn quotient(&self, i: usize) -> Option<BigInt> {
        if i < self.quotients.len() {
            return Some(self.quotients[i].clone());
        }
        let start = self.period_start?;
        let len = self.quotients.len() - start;
        Some(self.quotients[start + (i - start) % len].clone())
    }
}

/// Expand γ ∈ (0, 1) to at most `count` partial quotients. Terminates early
/// exactly when γ is rational; detects the periodic tail for quadratic γ by
/// recurrence of the complete-quotient state.
pub fn cf_expand(gamma: &ExactScalar, count: usize) -> Result<ContinuedFraction> {
    if count == 0 {
        return Err(Error::Domain("quotient count must be at least 1".into()));
    }
    if !gamma.is_positive()
        || gamma.compare(&ExactScalar::one())? != std::cmp::Ordering::Less
    {
        return Err(Error::Domain("continued-fraction input must lie in (0, 1)".into()));
    }
    let mut quotients = vec![BigInt::zero()];
    let mut period_start = None;
    let mut state = gamma.clone();
    let mut seen: HashMap<ExactScalar, usize> = HashMap::new();
    while quotients.len() < count {
        if state.is_zero() {
            break; // rational input fully expanded
        }
        if !state.is_rational() {
            if let Some(&at) = seen.get(&state) {
                period_start = Some(at);
                break;
            }
            seen.insert(state.clone(), quotients.len());
        }
        let z = ExactScalar::one().checked_div(&state)?;
        let a = z.floor();
        state = z.mod1();
        quotients.push(a);
    }
    // Unfold the detected cycle so the prefix holds `count` quotients.
    if let Some(start) = period_start {
        let cycle: Vec<BigInt> = quotients[start..].to_vec();
        let mut i = 0;
        while quotients.len() < count {
            quotients.push(cycle[i % cycle.len()].clone());
            i += 1;
        }
    }
    Ok(ContinuedFraction { quotients, period_start })
}

/// First `n` convergents p_j/q_j by the standard recurrence
/// p_j = a_j p_{j−1} + p_{j−2}, q_j = a_j q_{j−1} + q_{j−2}.
pub fn convergents(cf: &ContinuedFraction, n: usize) -> Result<Vec<(BigInt, BigInt)>> {
    let mut out = Vec::with_capacity(n);
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (BigInt::zero(), BigInt::one()); // placeholder, set below
    for j in 0..n {
        let a = cf.quotient(j).ok_or_else(|| {
            Error::Domain(format!(
                "finite continued fraction has only {} quotients, {} requested",
                cf.quotients.len(),
                n
            ))
        })?;
        if j == 0 {
            p = a.clone();
            q = BigInt::one();
        } else {
            let p_next = &a * &p + &p_prev;
            let q_next = &a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
        }
        out.push((p.clone(), q.clone()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BelowEntry {
    pub p: BigInt,
    pub q: BigInt,
    /// γ − p/q, exact and nonnegative.
    pub gap: ExactScalar,
}

/// A certified below-approximating sequence: p_i/q_i ≤ γ with
/// 0 ≤ γ − p_i/q_i < c2 / q_i^k for every entry.
#[derive(Clone, Debug)]
pub struct BelowApprox {
    pub gamma: ExactScalar,
    pub entries: Vec<BelowEntry>,
    pub c2: Rational,
    pub k: u32,
}

impl BelowApprox {
    /// Assemble from raw fractions, recomputing gaps and running the full
    /// exact certificate check.
    pub fn from_entries(
        gamma: ExactScalar,
        fractions: &[(BigInt, BigInt)],
        k: u32,
        c2: Rational,
    ) -> Result<Self> {
        let entries = fractions
            .iter()
            .map(|(p, q)| {
                if !q.is_positive() {
                    return Err(Error::Invariant("denominator must be positive".into()));
                }
                let approx = ExactScalar::from_rational(Rational::new(p.clone(), q.clone()));
                let gap = gamma.checked_sub(&approx)?;
                Ok(BelowEntry { p: p.clone(), q: q.clone(), gap })
            })
            .collect::<Result<Vec<_>>>()?;
        let seq = BelowApprox { gamma, entries, c2, k };
        seq.verify()?;
        Ok(seq)
    }

    /// The definitional certificate: denominators strictly increasing,
    /// fractions in lowest terms, and 0 ≤ γ − p/q < c2/q^k exactly.
    pub fn verify(&self) -> Result<()> {
        let mut prev_q: Option<&BigInt> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if !e.q.is_positive() {
                return Err(Error::Invariant(format!("entry {i}: q must be positive")));
            }
            if let Some(pq) = prev_q {
                if &e.q <= pq {
                    return Err(Error::Invariant(format!(
                        "entry {i}: denominators must strictly increase"
                    )));
                }
            }
            prev_q = Some(&e.q);
            if e.p.gcd(&e.q) != BigInt::one() {
                return Err(Error::Invariant(format!("entry {i}: {}/{} not reduced", e.p, e.q)));
            }
            let approx = ExactScalar::from_rational(Rational::new(e.p.clone(), e.q.clone()));
            let gap = self.gamma.checked_sub(&approx)?;
            if gap != e.gap {
                return Err(Error::Invariant(format!("entry {i}: stored gap is stale")));
            }
            if gap.is_negative() {
                return Err(Error::Invariant(format!(
                    "entry {i}: {}/{} exceeds the target value",
                    e.p, e.q
                )));
            }
            let bound = ExactScalar::from_rational(
                &self.c2 / Rational::from_integer(e.q.pow(self.k)),
            );
            if gap.compare(&bound)? != std::cmp::Ordering::Less {
                return Err(Error::Invariant(format!(
                    "entry {i}: gap ≥ c2/q^k (order-{} certificate fails)",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// The even-indexed convergents of an irrational γ ∈ (0, 1): each lies below
/// γ and satisfies 0 ≤ γ − p/q < 1/q², giving an order-2 certificate with
/// c2 = 1.
pub fn below_sequence(gamma: &ExactScalar, count: usize) -> Result<BelowApprox> {
    if gamma.is_rational() {
        return Err(Error::Domain(
            "rational measure: use the rational branch, not a below-sequence".into(),
        ));
    }
    if count == 0 {
        return Err(Error::Domain("entry count must be at least 1".into()));
    }
    let cf = cf_expand(gamma, 2 * count + 1)?;
    let conv = convergents(&cf, 2 * count - 1)?;
    let fractions: Vec<(BigInt, BigInt)> = conv
        .into_iter()
        .step_by(2)
        .map(|(p, q)| {
            let g = p.gcd(&q);
            (p / &g, q / g)
        })
        .collect();
    BelowApprox::from_entries(gamma.clone(), &fractions, 2, Rational::one())
}

#[derive(Clone, Debug)]
pub struct OrderEstimate {
    /// Least-squares estimate of the approximation order (−slope of
    /// log gap against log q).
    pub k_hat: f64,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    /// Entries dropped because their gap was exactly zero (rational hits).
    pub excluded: usize,
}

fn log2_scalar(x: &ExactScalar) -> f64 {
    match x.as_rational() {
        Some(r) => log2_rational(r),
        None => x.approx().log2(),
    }
}

/// Regression diagnostic for the order of a below-sequence. Not used to set
/// k anywhere; the certified k comes from configuration.
pub fn estimate_order(seq: &BelowApprox) -> Result<OrderEstimate> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0usize;
    for e in &seq.entries {
        if e.gap.is_zero() {
            excluded += 1;
            continue;
        }
        xs.push(log2_bigint(&e.q));
        ys.push(log2_scalar(&e.gap));
    }
    if xs.len() < 3 {
        return Err(Error::Insufficient(format!(
            "order regression needs at least 3 positive gaps, found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Insufficient("all denominators equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot <= f64::EPSILON { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(OrderEstimate { k_hat: -slope, residuals, r_squared, excluded })
}

/// Construct a base-b Liouville-style value γ = Σ_{j≤levels} b^(−n_j) with
/// n_1 = 1 and n_{j+1} = k·n_j, materialized as its deepest exact rational
/// truncation. The level-j truncations p_j/q_j (q_j = b^{n_j}) form a
/// below-sequence of order k with c2 = 2.
pub fn liouville_below(k: u32, levels: u32, base: u32) -> Result<(ExactScalar, BelowApprox)> {
    if k < 2 {
        return Err(Error::Domain("order k must be at least 2".into()));
    }
    if base < 2 {
        return Err(Error::Domain("base must be at least 2".into()));
    }
    if levels == 0 {
        return Err(Error::Domain("at least one level required".into()));
    }
    // n_levels = k^(levels−1); the deepest denominator has n·log2(b) bits.
    let mut exponents = vec![1u64];
    for _ in 1..levels {
        let next = exponents.last().unwrap().checked_mul(k as u64).ok_or_else(|| {
            Error::ResourceCap("Liouville exponent ladder overflows".into())
        })?;
        exponents.push(next);
    }
    let deepest_bits = *exponents.last().unwrap() as f64 * (base as f64).log2();
    if deepest_bits > 1_000_000.0 {
        return Err(Error::ResourceCap(format!(
            "deepest denominator needs ~{deepest_bits:.0} bits"
        )));
    }
    let b = BigInt::from(base);
    let gamma: Rational = exponents
        .iter()
        .map(|&n| Rational::new(BigInt::one(), b.pow(n as u32)))
        .sum();
    let fractions: Vec<(BigInt, BigInt)> = exponents
        .iter()
        .map(|&n| {
            let q = b.pow(n as u32);
            // Truncation: Σ_{l ≤ j} b^(n_j − n_l); ≡ 1 mod b, so already reduced.
            let p = exponents
                .iter()
                .take_while(|&&m| m <= n)
                .map(|&m| b.pow((n - m) as u32))
                .sum::<BigInt>();
            (p, q)
        })
        .collect();
    let gamma = ExactScalar::from_rational(gamma);
    let seq = BelowApprox::from_entries(
        gamma.clone(),
        &fractions,
        k,
        Rational::from_integer(BigInt::from(2)),
    )?;
    Ok((gamma, seq))
}

/// Largest rational p/q ≤ x with 1 ≤ q ≤ max_den, by a Stern–Brocot descent
/// with mediant jumps. Exact for rational and quadratic x.
pub fn best_below(x: &ExactScalar, max_den: &BigInt) -> Result<Rational> {
    if !max_den.is_positive() {
        return Err(Error::Domain("denominator cap must be positive".into()));
    }
    if let Some(r) = x.as_rational() {
        if r.denom() <= max_den {
            return Ok(r.clone());
        }
    }
    // Invariant: l = a/b ≤ x < u = c/d with bc − ad = 1.
    let floor = x.floor();
    let (mut a, mut b) = (floor.clone(), BigInt::one());
    let (mut c, mut d) = (floor + BigInt::one(), BigInt::one());
    // x − l scaled by b: zero exactly when l hits a rational x.
    let l_gap = |a: &BigInt, b: &BigInt| -> Result<ExactScalar> {
        x.checked_mul(&ExactScalar::from_bigint(b.clone()))?
            .checked_sub(&ExactScalar::from_bigint(a.clone()))
    };
    loop {
        // Walk l toward x through mediants with u: l ← (a + t·c)/(b + t·d).
        // Value constraint: t ≤ (x·b − a)/(c − x·d); the denominator is
        // positive because u > x.
        let num = l_gap(&a, &b)?;
        if num.is_zero() {
            return Ok(Rational::new(a, b));
        }
        let xd = x.checked_mul(&ExactScalar::from_bigint(d.clone()))?;
        let den = ExactScalar::from_bigint(c.clone()).checked_sub(&xd)?;
        let t_value = num.checked_div(&den)?.floor();
        let t_den = (max_den - &b).div_floor(&d);
        let t = t_value.clone().min(t_den.clone());
        if t.is_positive() {
            a += &t * &c;
            b += &t * &d;
        }
        if t_den <= t_value {
            // The denominator budget binds; every finer mediant from here on
            // would need an even larger denominator.
            return Ok(Rational::new(a, b));
        }
        // Walk u toward x: u ← (c + s·a)/(d + s·b), s ≤ (c − x·d)/(x·b − a).
        let gap = l_gap(&a, &b)?;
        if gap.is_zero() {
            return Ok(Rational::new(a, b));
        }
        let xd = x.checked_mul(&ExactScalar::from_bigint(d.clone()))?;
        let num = ExactScalar::from_bigint(c.clone()).checked_sub(&xd)?;
        let ratio = num.checked_div(&gap)?;
        // u must stay strictly above x: an exact-integer ratio means the
        // s-th mediant lands on x itself, so stop one short.
        let mut s = ratio.floor();
        if ratio.is_integer() {
            s -= BigInt::one();
        }
        debug_assert!(s.is_positive(), "alternating Stern-Brocot step must advance");
        c += &s * &a;
        d += &s * &b;
    }
}
