//! Exact arithmetic over Q(√D): rationals plus one optional quadratic radical.
//!
//! Every membership test, strict-positivity check, and approximation
//! inequality in this crate is decided here with integer arithmetic only.
//! Floats appear solely as export artifacts (`to_f64`) carrying a rigorous
//! error bound, never inside a decision.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest radicand we accept after square extraction: below this bound the
/// trial-division sieve certifies square-freeness completely.
const MAX_RADICAND: u64 = 1_000_000_000_000;

/// A number a + b·√D with a, b rational and D square-free.
///
/// Canonical form: D = 0 if and only if b = 0 (pure rationals), D never 1,
/// D square-free. Two values are equal exactly when their canonical triples
/// are equal, so `PartialEq`/`Hash` derive from the fields.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    a: Rational,
    b: Rational,
    d: u64,
}

impl ExactScalar {
    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::from_rational(Rational::from_integer(n))
    }

    pub fn from_rational(a: Rational) -> Self {
        ExactScalar { a, b: Rational::zero(), d: 0 }
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Self::from_rational(Rational::new(BigInt::from(num), BigInt::from(den))))
    }

    /// √r for a nonnegative rational r, normalized to b·√D with D square-free.
    pub fn sqrt_rational(r: &Rational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Domain("square root of a negative value".into()));
        }
        // √(p/q) = √(pq) / q
        let radicand = r.numer() * r.denom();
        let coeff = Rational::new(BigInt::one(), r.denom().clone());
        Self::with_radical(Rational::zero(), coeff, radicand)
    }

    pub fn sqrt_int(d: u64) -> Result<Self> {
        Self::with_radical(Rational::zero(), Rational::one(), BigInt::from(d))
    }

    /// Construct a + b·√r, extracting square factors of r so the stored
    /// radicand is square-free (r = 0 or 1 folds into the rational part).
    pub fn with_radical(a: Rational, b: Rational, radicand: BigInt) -> Result<Self> {
        if radicand.is_negative() {
            return Err(Error::Domain("negative radicand".into()));
        }
        if b.is_zero() || radicand.is_zero() {
            return Ok(Self::from_rational(a));
        }
        let (square_free, root) = extract_square_factor(&radicand)?;
        let b = b * Rational::from_integer(root);
        if square_free == 1 {
            return Ok(Self::from_rational(a + b));
        }
        Ok(ExactScalar { a, b, d: square_free })
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn radical_coeff(&self) -> &Rational {
        &self.b
    }

    pub fn is_rational(&self) -> bool {
        self.d == 0
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        if self.is_rational() {
            Some(&self.a)
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.d == 0 && self.a.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.d == 0 && self.a.is_integer()
    }

    /// The shared radicand for a binary operation, or an error when the two
    /// operands live in genuinely different quadratic fields.
    fn joint_radicand(&self, other: &Self) -> Result<u64> {
        match (self.d, other.d) {
            (0, d) | (d, 0) => Ok(d),
            (d1, d2) if d1 == d2 => Ok(d1),
            (d1, d2) => Err(Error::FieldMismatch(d1, d2)),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let d = self.joint_radicand(other)?;
        let b = &self.b + &other.b;
        Ok(ExactScalar {
            a: &self.a + &other.a,
            d: if b.is_zero() { 0 } else { d },
            b,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let d = self.joint_radicand(other)?;
        // (a1 + b1√d)(a2 + b2√d) = a1a2 + b1b2·d + (a1b2 + a2b1)√d
        let rad = Rational::from_integer(BigInt::from(d));
        let a = &self.a * &other.a + &self.b * &other.b * &rad;
        let b = &self.a * &other.b + &other.a * &self.b;
        Ok(ExactScalar { a, d: if b.is_zero() { 0 } else { d }, b })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        let d = self.joint_radicand(other)?;
        // 1/(a + b√d) = (a − b√d) / (a² − b²d); the norm is nonzero because
        // √d is irrational and (a, b) ≠ (0, 0).
        let rad = Rational::from_integer(BigInt::from(d));
        let norm = &other.a * &other.a - &other.b * &other.b * &rad;
        debug_assert!(!norm.is_zero());
        let inv = ExactScalar {
            a: &other.a / &norm,
            b: -(&other.b / &norm),
            d: other.d,
        };
        self.checked_mul(&inv)
    }

    pub fn neg(&self) -> Self {
        ExactScalar { a: -&self.a, b: -&self.b, d: self.d }
    }

    pub fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Exact sign of a + b√d by integer cross-multiplication.
    pub fn sign(&self) -> Ordering {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // Opposite signs: |a| vs |b|√d decided by a² vs b²·d. Equality is
        // impossible (it would force √d rational).
        let rad = Rational::from_integer(BigInt::from(self.d));
        let lhs = &self.a * &self.a;
        let rhs = &self.b * &self.b * rad;
        let cmp = lhs.cmp(&rhs);
        debug_assert_ne!(cmp, Ordering::Equal);
        if sa == Ordering::Greater {
            cmp
        } else {
            cmp.reverse()
        }
    }

    pub fn compare(&self, other: &Self) -> Result<Ordering> {
        Ok(self.checked_sub(other)?.sign())
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    /// Exact floor. For b ≠ 0 write x = (P + R√d)/Q with integer P, R and
    /// Q > 0; then ⌊R√d⌋ = ⌊√(R²d)⌋ for R > 0 and −⌊√(R²d)⌋ − 1 for R < 0
    /// (R²d is never a perfect square when d ≥ 2 is square-free), and
    /// ⌊x⌋ = ⌊(P + ⌊R√d⌋)/Q⌋ because R√d is irrational.
    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor().to_integer();
        }
        let q = self.a.denom().lcm(self.b.denom());
        let p = self.a.numer() * (&q / self.a.denom());
        let r = self.b.numer() * (&q / self.b.denom());
        let s = (&r * &r * BigInt::from(self.d)).sqrt();
        let t = if r.is_positive() { s } else { -s - 1 };
        (p + t).div_floor(&q)
    }

    pub fn ceil(&self) -> BigInt {
        -self.neg().floor()
    }

    /// Fractional part in [0, 1); differs from x by an integer.
    pub fn mod1(&self) -> Self {
        let f = ExactScalar::from_bigint(self.floor());
        self.checked_sub(&f).expect("integer shares every field")
    }

    pub fn pow_u32(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = ExactScalar::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base).expect("same field");
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base).expect("same field");
            }
        }
        acc
    }

    /// Nearest-effort double value. No bound; for decisions use `compare`.
    pub fn approx(&self) -> f64 {
        let mut v = ratio_to_f64(&self.a);
        if !self.b.is_zero() {
            v += ratio_to_f64(&self.b) * (self.d as f64).sqrt();
        }
        v
    }

    /// Double approximation together with a rigorous error bound:
    /// |x − value| ≤ bound. The bound is the smallest power of two not less
    /// than the exact error, found by exact comparisons.
    pub fn to_f64(&self) -> (f64, f64) {
        let v = self.approx();
        if !v.is_finite() {
            return (v, f64::INFINITY);
        }
        let back = ExactScalar::from_rational(
            Rational::from_float(v).expect("finite float is rational"),
        );
        let err = self.checked_sub(&back).expect("rational shares every field").abs();
        if err.is_zero() {
            return (v, 0.0);
        }
        // Locate the least e with err ≤ 2^e: seed near the true exponent,
        // bracket by galloping, then binary search. Every probe is an exact
        // comparison, so a poor seed costs iterations, never correctness.
        let seed = err.floor_log2_seed().clamp(-1100, 1100);
        let above = |e: i64| err.compare(&pow2(e)).expect("rational") == Ordering::Greater;
        let mut hi = seed;
        let mut step = 1i64;
        while above(hi) {
            hi += step;
            step *= 2;
        }
        let mut lo = hi - 1;
        step = 1;
        while lo > -1100 && !above(lo) {
            hi = lo;
            lo -= step;
            step *= 2;
        }
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if above(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Keep the bound nonzero: exp2 underflows past the denormal floor.
        (v, exp2_i64(hi).max(f64::MIN_POSITIVE))
    }

    /// floor(log₂|x|) up to a few units, for x ≠ 0, without long scans.
    ///
    /// The float sum a + b√d is trusted only when it is large against the
    /// magnitudes of its two terms; otherwise the sum cancels, its conjugate
    /// a − b√d does not (their product a² − d·b² splits the exponent), and
    /// the exponent comes from the conjugate and the exact norm instead.
    fn floor_log2_seed(&self) -> i64 {
        if self.b.is_zero() {
            return floor_log2_ratio_abs(&self.a);
        }
        let fa = ratio_to_f64(&self.a);
        let fb = ratio_to_f64(&self.b) * (self.d as f64).sqrt();
        let scale = fa.abs().max(fb.abs());
        let direct = fa + fb;
        if scale.is_finite() && scale > 0.0 && direct.abs() > scale * 1e-6 {
            return direct.abs().log2().floor() as i64;
        }
        let rad = Rational::from_integer(BigInt::from(self.d));
        let norm = &self.a * &self.a - &self.b * &self.b * &rad;
        let conj = fa - fb;
        if norm.is_zero() || !conj.is_finite() || conj == 0.0 {
            // Every term underflowed or the value defies canonical form;
            // any seed stays correct, just slower.
            return 0;
        }
        floor_log2_ratio_abs(&norm) - (conj.abs().log2().floor() as i64)
    }
}

/// Exact floor(log₂|r|) for r ≠ 0 from bit lengths plus one shifted compare.
fn floor_log2_ratio_abs(r: &Rational) -> i64 {
    let n = r.numer().abs();
    let d = r.denom().abs();
    let c = n.bits() as i64 - d.bits() as i64;
    // |r| ∈ (2^(c−1), 2^(c+1)), so the floor is c or c−1.
    let at_least_c = if c >= 0 { n >= (&d << c as u64) } else { (&n << (-c) as u64) >= d };
    if at_least_c {
        c
    } else {
        c - 1
    }
}

/// 2^e as an exact scalar.
fn pow2(e: i64) -> ExactScalar {
    let one = BigInt::one();
    let r = if e >= 0 {
        Rational::from_integer(one << e as usize)
    } else {
        Rational::new(one.clone(), one << (-e) as usize)
    };
    ExactScalar::from_rational(r)
}

fn exp2_i64(e: i64) -> f64 {
    // f64 powers of two are exact within range; out of range saturates.
    (e as f64).exp2()
}

fn rational_sign(r: &Rational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Split r ≥ 1 into (square_free, root) with r = square_free · root².
/// Trial division by primes up to 10⁶ fully certifies inputs below 10¹²;
/// larger leftovers are accepted only when they are perfect squares.
fn extract_square_factor(radicand: &BigInt) -> Result<(u64, BigInt)> {
    let mut root = BigInt::one();
    let mut n = radicand.clone();
    let mut square_free: u64 = 1;

    let push_prime = |sf: &mut u64, p: u64| -> Result<()> {
        *sf = sf
            .checked_mul(p)
            .filter(|v| *v <= MAX_RADICAND)
            .ok_or_else(|| Error::Domain("radicand too large to certify square-free".into()))?;
        Ok(())
    };

    let mut p: u64 = 2;
    while BigInt::from(p) * BigInt::from(p) <= n && p <= 1_000_000 {
        let bp = BigInt::from(p);
        let mut count = 0u32;
        while (&n % &bp).is_zero() {
            n /= &bp;
            count += 1;
        }
        if count > 0 {
            for _ in 0..count / 2 {
                root *= &bp;
            }
            if count % 2 == 1 {
                push_prime(&mut square_free, p)?;
            }
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    if !n.is_one() {
        // Leftover cofactor: all prime factors exceed 10⁶. A perfect square
        // must be p² (extract it); otherwise it is square-free only if it is
        // prime or a product of two distinct primes, which is guaranteed
        // below 10¹² but not above.
        let s = n.sqrt();
        if (&s * &s) == n {
            root *= s;
        } else {
            let small = n
                .to_u64()
                .filter(|v| *v <= MAX_RADICAND)
                .ok_or_else(|| Error::Domain("radicand too large to certify square-free".into()))?;
            push_prime(&mut square_free, small)?;
        }
    }
    Ok((square_free, root))
}

/// log₂ of a positive big integer, accurate to ~1 ulp of the 53-bit mantissa.
pub fn log2_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "log2 of non-positive integer");
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("small int fits f64").log2();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().expect("53-bit int fits f64");
    top.log2() + shift as f64
}

/// log₂ of a positive rational, safe for magnitudes far outside f64 range.
pub fn log2_rational(r: &Rational) -> f64 {
    assert!(r.is_positive(), "log2 of non-positive rational");
    log2_bigint(r.numer()) - log2_bigint(r.denom())
}

/// Rational → f64 conversion that stays accurate when numerator or
/// denominator overflow f64 range.
pub fn ratio_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer().abs().to_f64();
    let den = r.denom().to_f64();
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    match (num, den) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => sign * n / d,
        _ => {
            let log = log2_bigint(&r.numer().abs()) - log2_bigint(r.denom());
            sign * log.exp2()
        }
    }
}

impl fmt::Display for ExactScalar {
    /// Canonical text form: "p/q", "p/q + r/s*sqrt(D)", or "r/s*sqrt(D)";
    /// denominators of 1 are dropped. Round-trips through `FromStr`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn ratio(r: &Rational) -> String {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        }
        if self.b.is_zero() {
            return write!(f, "{}", ratio(&self.a));
        }
        let radical = format!("{}*sqrt({})", ratio(&self.b.abs()), self.d);
        if self.a.is_zero() {
            if self.b.is_negative() {
                return write!(f, "-{radical}");
            }
            return write!(f, "{radical}");
        }
        let op = if self.b.is_negative() { '-' } else { '+' };
        write!(f, "{} {} {}", ratio(&self.a), op, radical)
    }
}

impl FromStr for ExactScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { bytes: s.as_bytes(), pos: 0 };
        let value = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input at byte {} in {s:?}",
                p.pos
            )));
        }
        Ok(value)
    }
}

/// Recursive-descent parser for scalar expressions:
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := '-' unary | atom
///   atom   := '(' expr ')' | 'sqrt' atom | number
///   number := digits ('.' digits)?
struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<ExactScalar> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc.checked_add(&self.term()?)?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc.checked_sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ExactScalar> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = acc.checked_mul(&self.unary()?)?;
                }
                b'/' => {
                    self.pos += 1;
                    acc = acc.checked_div(&self.unary()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<ExactScalar> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<ExactScalar> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Parse("expected ')'".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b's') => {
                if self.bytes[self.pos..].starts_with(b"sqrt") {
                    self.pos += 4;
                    let arg = self.atom()?;
                    let r = arg.as_rational().ok_or_else(|| {
                        Error::Parse("sqrt argument must be rational".into())
                    })?;
                    ExactScalar::sqrt_rational(r)
                } else {
                    Err(Error::Parse(format!("unexpected token at byte {}", self.pos)))
                }
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            _ => Err(Error::Parse(format!("unexpected token at byte {}", self.pos))),
        }
    }

    fn number(&mut self) -> Result<ExactScalar> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = &self.bytes[start..self.pos];
        let mut frac_part: &[u8] = b"";
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_part = &self.bytes[fs..self.pos];
            if frac_part.is_empty() {
                return Err(Error::Parse("digits required after decimal point".into()));
            }
        }
        let digits: Vec<u8> = int_part.iter().chain(frac_part.iter()).copied().collect();
        let num = BigInt::parse_bytes(&digits, 10)
            .ok_or_else(|| Error::Parse("invalid number".into()))?;
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(ExactScalar::from_rational(Rational::new(num, den)))
    }
}

impl serde::Serialize for ExactScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for ExactScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> ExactScalar {
        s.parse().unwrap()
    }

    #[test]
    fn rational_addition() {
        assert_eq!(parse("1/2").checked_add(&parse("1/3")).unwrap(), parse("5/6"));
    }

    #[test]
    fn difference_of_squares() {
        let x = parse("-1 + sqrt(2)");
        let y = parse("1 + sqrt(2)");
        assert_eq!(x.checked_mul(&y).unwrap(), ExactScalar::one());
    }

    #[test]
    fn golden_doubling() {
        let g = parse("(sqrt(5) - 1)/2");
        assert_eq!(g.checked_add(&g).unwrap(), parse("sqrt(5) - 1"));
    }

    #[test]
    fn compare_sqrt2_minus_one_vs_two_fifths() {
        // Independent oracle: √2 − 1 > 2/5 ⟺ √2 > 7/5 ⟺ 2·5² > 7².
        assert!(2 * 5 * 5 > 7 * 7);
        let lhs = parse("sqrt(2) - 1");
        assert_eq!(lhs.compare(&parse("2/5")).unwrap(), Ordering::Greater);
    }

    #[test]
    fn compare_golden_vs_three_fifths() {
        // Oracle: (√5−1)/2 > 3/5 ⟺ √5 > 11/5 ⟺ 5·5² > 11².
        assert!(5 * 5 * 5 > 11 * 11);
        let golden = parse("(sqrt(5) - 1)/2");
        assert_eq!(golden.compare(&parse("3/5")).unwrap(), Ordering::Greater);
        assert_eq!(parse("1/2").compare(&parse("1/2")).unwrap(), Ordering::Equal);
    }

    #[test]
    fn mixing_radicands_is_rejected() {
        let err = parse("sqrt(2)").checked_add(&parse("sqrt(3)")).unwrap_err();
        assert!(matches!(err, Error::FieldMismatch(2, 3)));
    }

    #[test]
    fn mod1_examples() {
        assert_eq!(parse("5/2").mod1(), parse("1/2"));
        assert_eq!(parse("sqrt(2)").mod1(), parse("sqrt(2) - 1"));
        assert_eq!(parse("-1/4").mod1(), parse("3/4"));
    }

    #[test]
    fn floor_of_golden_ratio() {
        let phi = parse("(1 + sqrt(5))/2");
        assert_eq!(phi.floor(), BigInt::from(1));
        assert_eq!(phi.mod1(), parse("(sqrt(5) - 1)/2"));
    }

    #[test]
    fn floor_matches_float_on_negatives() {
        assert_eq!(parse("-sqrt(2)").floor(), BigInt::from(-2));
        assert_eq!(parse("-1 - sqrt(2)").floor(), BigInt::from(-3));
        assert_eq!(parse("-7/2").floor(), BigInt::from(-4));
    }

    #[test]
    fn to_f64_one_third() {
        let (v, bound) = parse("1/3").to_f64();
        assert_eq!(v, 1.0 / 3.0);
        assert!(bound <= 2f64.powi(-52), "bound {bound} too loose");
    }

    #[test]
    fn to_f64_zero_is_exact() {
        assert_eq!(ExactScalar::zero().to_f64(), (0.0, 0.0));
    }

    #[test]
    fn to_f64_sqrt2_minus_one() {
        // Oracle: independent float evaluation of the same quantity.
        let (v, bound) = parse("sqrt(2) - 1").to_f64();
        assert!((v - (2f64.sqrt() - 1.0)).abs() <= 1e-15);
        assert!(bound <= 2f64.powi(-50));
    }

    #[test]
    fn to_f64_survives_huge_magnitudes() {
        let tiny = ExactScalar::from_rational(Rational::new(
            BigInt::one(),
            BigInt::from(2u32).pow(4096),
        ));
        let (v, bound) = tiny.to_f64();
        assert_eq!(v, 0.0);
        // The bound must stay a true bound: nonzero (the value is not 0)
        // yet no larger than the smallest positive double.
        assert!(bound > 0.0 && bound <= f64::MIN_POSITIVE);
        let err = tiny
            .checked_sub(&ExactScalar::from_rational(Rational::from_float(v).unwrap()))
            .unwrap()
            .abs();
        let bound_exact =
            ExactScalar::from_rational(Rational::from_float(bound).unwrap());
        assert_ne!(err.compare(&bound_exact).unwrap(), Ordering::Greater);
        assert!((log2_rational(tiny.as_rational().unwrap()) + 4096.0).abs() < 1e-9);
    }

    #[test]
    fn radicand_normalization() {
        assert_eq!(parse("sqrt(8)"), parse("2*sqrt(2)"));
        assert_eq!(parse("sqrt(8)").radicand(), 2);
        assert_eq!(parse("sqrt(9)"), parse("3"));
        assert_eq!(parse("sqrt(0)"), ExactScalar::zero());
        assert_eq!(parse("sqrt(1)"), ExactScalar::one());
        assert_eq!(parse("sqrt(45/4)"), parse("3/2*sqrt(5)"));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "3/8",
            "(sqrt(5) - 1)/2",
            "-1/2 - 1/3*sqrt(7)",
            "0",
            "42",
            "sqrt(2)",
            "0.25",
        ] {
            let x = parse(text);
            assert_eq!(parse(&x.to_string()), x, "round trip failed for {text}");
        }
        assert_eq!(parse("0.25"), parse("1/4"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("".parse::<ExactScalar>().is_err());
        assert!("1 +".parse::<ExactScalar>().is_err());
        assert!("sqrt(sqrt(2))".parse::<ExactScalar>().is_err());
        assert!("1/0".parse::<ExactScalar>().is_err());
        assert!("two".parse::<ExactScalar>().is_err());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let err = ExactScalar::one().checked_div(&ExactScalar::zero()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn floor_of_scaled_radicals_is_exact() {
        // j·γ for the golden ratio: floors must match exact integer sqrt of 5j².
        let gamma = parse("(sqrt(5) - 1)/2");
        for j in 1i64..200 {
            let jj = ExactScalar::from_int(j).checked_mul(&gamma).unwrap();
            let expect = ((5.0 * (j as f64) * (j as f64)).sqrt() as i64 - j) / 2;
            // float oracle is only a sanity cross-check; adjacent values differ by ≥ 1/2
            let f = jj.floor();
            assert!((f.clone() - BigInt::from(expect)).abs() <= BigInt::one());
            let frac = jj.mod1();
            assert!(frac.sign() != Ordering::Less);
            assert_eq!(frac.compare(&ExactScalar::one()).unwrap(), Ordering::Less);
            let back = frac.checked_add(&ExactScalar::from_bigint(f)).unwrap();
            assert_eq!(back, jj);
        }
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-40i64..40, 1i64..20)
            .prop_map(|(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn q_sqrt2() -> impl Strategy<Value = ExactScalar> {
        (small_rational(), small_rational()).prop_map(|(a, b)| {
            ExactScalar::with_radical(a, b, BigInt::from(2)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn field_axioms_hold(x in q_sqrt2(), y in q_sqrt2(), z in q_sqrt2()) {
            let xy_z = x.checked_add(&y).unwrap().checked_add(&z).unwrap();
            let x_yz = x.checked_add(&y.checked_add(&z).unwrap()).unwrap();
            prop_assert_eq!(&xy_z, &x_yz);

            let lhs = x.checked_mul(&y.checked_add(&z).unwrap()).unwrap();
            let rhs = x.checked_mul(&y).unwrap()
                .checked_add(&x.checked_mul(&z).unwrap()).unwrap();
            prop_assert_eq!(&lhs, &rhs);

            let xy = x.checked_mul(&y).unwrap();
            let yx = y.checked_mul(&x).unwrap();
            prop_assert_eq!(&xy, &yx);

            if !y.is_zero() {
                let q = x.checked_div(&y).unwrap();
                prop_assert_eq!(q.checked_mul(&y).unwrap(), x.clone());
            }
        }

        #[test]
        fn mod1_is_canonical(x in q_sqrt2()) {
            let m = x.mod1();
            prop_assert!(m.sign() != Ordering::Less);
            prop_assert_eq!(m.compare(&ExactScalar::one()).unwrap(), Ordering::Less);
            let back = m.checked_add(&ExactScalar::from_bigint(x.floor())).unwrap();
            prop_assert_eq!(back, x.clone());
            prop_assert_eq!(m.mod1(), m);
        }

        #[test]
        fn compare_consistent_with_floats(x in q_sqrt2(), y in q_sqrt2()) {
            let (vx, bx) = x.to_f64();
            let (vy, by) = y.to_f64();
            if (vx - vy).abs() > bx + by {
                let expected = if vx < vy { Ordering::Less } else { Ordering::Greater };
                prop_assert_eq!(x.compare(&y).unwrap(), expected);
            }
        }

        #[test]
        fn display_round_trip(x in q_sqrt2()) {
            let text = x.to_string();
            prop_assert_eq!(text.parse::<ExactScalar>().unwrap(), x);
        }
    }
}
