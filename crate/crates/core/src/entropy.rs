//! Shannon entropy in nats over floating-point or exact rational probabilities.
//!
//! Exact entropies live in [`LogForm`]: finite sums `Σ c_k ln(a_k)` with
//! rational coefficients and integer atoms. Two forms are compared by
//! refining their atoms to a pairwise coprime base, over which the logarithms
//! are linearly independent over the rationals, so equality is decided
//! exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Extended real entropy value: finite, or `-∞` (log of an empty count).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub const NEG_INFINITY: EntropyValue = EntropyValue(f64::NEG_INFINITY);

    /// Panics on NaN or `+∞`, which never arise from finite alphabets.
    pub fn new(v: f64) -> EntropyValue {
        assert!(
            !v.is_nan() && v != f64::INFINITY,
            "invalid entropy value {v}"
        );
        EntropyValue(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::NEG_INFINITY {
            write!(f, "-inf")
        } else if let Some(p) = f.precision() {
            write!(f, "{:.*}", p, self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Arithmetic on entropy sums: either `f64` or an exact [`LogForm`].
pub trait EntropySum: Clone + fmt::Debug + Send + Sync + Add<Output = Self> + Zero {
    fn scale(&self, k: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl EntropySum for f64 {
    fn scale(&self, k: i64) -> f64 {
        self * k as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Probability scalars. `f64` for measured or irrational weights,
/// `BigRational` for exact-statistics work.
pub trait Prob:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    type Log: EntropySum;

    fn to_f64(&self) -> f64;
    fn from_ratio(num: u64, den: u64) -> Self;
    /// `-p ln p` with `0 ln 0 = 0`.
    fn neg_plogp(&self) -> Self::Log;
    /// Whether values are exact (so tolerances collapse to equality).
    fn exact() -> bool;
    /// The exact rational value, for exact scalars.
    fn to_rational(&self) -> Option<BigRational>;

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }

    /// Equality up to `tol`, or exact equality for exact scalars.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if Self::exact() {
            self == other
        } else {
            self.abs_diff(other).to_f64() <= tol
        }
    }
}

impl Prob for f64 {
    type Log = f64;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(num: u64, den: u64) -> f64 {
        num as f64 / den as f64
    }

    fn neg_plogp(&self) -> f64 {
        if *self > 0.0 {
            -self * self.ln()
        } else {
            0.0
        }
    }

    fn exact() -> bool {
        false
    }

    fn to_rational(&self) -> Option<BigRational> {
        None
    }
}

impl Prob for BigRational {
    type Log = LogForm;

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn from_ratio(num: u64, den: u64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn neg_plogp(&self) -> LogForm {
        if self.is_zero() {
            return LogForm::zero();
        }
        // -p ln p = p ln(den) - p ln(num)
        let num = self.numer().magnitude().clone();
        let den = self.denom().magnitude().clone();
        let mut out = LogForm::zero();
        out.add_term(den, self.clone());
        out.add_term(num, -self.clone());
        out
    }

    fn exact() -> bool {
        true
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

/// Converts a big rational to the nearest `f64` without overflowing on huge
/// numerators or denominators.
pub fn ratio_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = q.numer().bits().max(q.denom().bits()) as i64 - 60;
    let (n, d) = if shift > 0 {
        (q.numer() >> shift as usize, q.denom() >> shift as usize)
    } else {
        (q.numer().clone(), q.denom().clone())
    };
    n.to_f64().unwrap_or(0.0) / d.to_f64().unwrap_or(1.0)
}

fn ln_biguint(a: &BigUint) -> f64 {
    let bits = a.bits();
    if bits < 1000 {
        if let Some(x) = a.to_f64() {
            return x.ln();
        }
    }
    let shift = bits - 64;
    (a >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact real number `Σ c_k ln(a_k)` with rational `c_k` and integer `a_k > 1`.
#[derive(Clone, Debug, Default)]
pub struct LogForm {
    terms: BTreeMap<BigUint, BigRational>,
}

impl LogForm {
    /// `ln(q)` for a positive rational `q`.
    pub fn ln_rational(q: &BigRational) -> LogForm {
        assert!(q.is_positive(), "logarithm of a non-positive rational");
        let mut out = LogForm::zero();
        out.add_term(q.numer().magnitude().clone(), BigRational::one());
        out.add_term(q.denom().magnitude().clone(), -BigRational::one());
        out
    }

    fn add_term(&mut self, atom: BigUint, coeff: BigRational) {
        if atom.is_one() || coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(atom).or_insert_with(BigRational::zero);
        *entry += coeff;
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn scale_rational(&self, k: &BigRational) -> LogForm {
        let mut out = LogForm::zero();
        for (a, c) in &self.terms {
            out.add_term(a.clone(), c * k);
        }
        out
    }

    /// Rewrites the form over a pairwise coprime base; the result is canonical.
    pub fn normalized(&self) -> LogForm {
        let atoms: Vec<BigUint> = self.terms.keys().cloned().collect();
        let base = coprime_base(&atoms);
        let mut out = LogForm::zero();
        for (atom, c) in &self.terms {
            let mut rest = atom.clone();
            for b in &base {
                let mut e = 0u64;
                while (&rest % b).is_zero() {
                    rest /= b;
                    e += 1;
                }
                if e > 0 {
                    out.add_term(b.clone(), c * BigRational::from_integer(BigInt::from(e)));
                }
            }
            debug_assert!(rest.is_one(), "coprime base must factor every atom");
        }
        out
    }

    pub fn is_zero_exact(&self) -> bool {
        self.normalized().terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &BigRational)> {
        self.terms.iter()
    }
}

/// Factor refinement: a pairwise coprime set whose products generate every input.
fn coprime_base(nums: &[BigUint]) -> Vec<BigUint> {
    let mut base: Vec<BigUint> = Vec::new();
    let mut work: Vec<BigUint> = nums
        .iter()
        .filter(|n| **n > BigUint::one())
        .cloned()
        .collect();
    while let Some(x) = work.pop() {
        if x.is_one() {
            continue;
        }
        match base.iter().position(|b| !x.gcd(b).is_one()) {
            None => base.push(x),
            Some(i) => {
                let b = base.swap_remove(i);
                let g = x.gcd(&b);
                work.push(&b / &g);
                work.push(&x / &g);
                work.push(g);
            }
        }
    }
    base.sort();
    base
}

impl PartialEq for LogForm {
    fn eq(&self, other: &LogForm) -> bool {
        (self.clone() - other.clone()).is_zero_exact()
    }
}

impl Zero for LogForm {
    fn zero() -> LogForm {
        LogForm {
            terms: BTreeMap::new(),
        }
    }

    fn is_zero(&self) -> bool {
        self.is_zero_exact()
    }
}

impl Add for LogForm {
    type Output = LogForm;

    fn add(mut self, rhs: LogForm) -> LogForm {
        for (a, c) in rhs.terms {
            self.add_term(a, c);
        }
        self
    }
}

impl Neg for LogForm {
    type Output = LogForm;

    fn neg(self) -> LogForm {
        LogForm {
            terms: self.terms.into_iter().map(|(a, c)| (a, -c)).collect(),
        }
    }
}

impl Sub for LogForm {
    type Output = LogForm;

    fn sub(self, rhs: LogForm) -> LogForm {
        self + (-rhs)
    }
}

impl EntropySum for LogForm {
    fn scale(&self, k: i64) -> LogForm {
        self.scale_rational(&BigRational::from_integer(BigInt::from(k)))
    }

    fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| ratio_to_f64(c) * ln_biguint(a))
            .sum()
    }
}

impl fmt::Display for LogForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.normalized();
        if n.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = n
            .terms
            .iter()
            .map(|(a, c)| format!("({c})*ln({a})"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Shannon entropy `-Σ p ln p` of a finite distribution, in nats.
pub fn shannon_entropy<'a, P: Prob, I: IntoIterator<Item = &'a P>>(probs: I) -> P::Log {
    probs
        .into_iter()
        .fold(P::Log::zero(), |acc, p| acc + p.neg_plogp())
}

/// Exact rational `num/den` helper.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_entropy_examples() {
        assert!((shannon_entropy(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
        let h = shannon_entropy(&[0.25, 0.75]);
        let expect = 0.25 * 4f64.ln() + 0.75 * (4.0f64 / 3.0).ln();
        assert!((h - expect).abs() < 1e-15);
    }

    #[test]
    fn exact_entropy_of_uniform_is_ln_n() {
        let p = vec![ratio(1, 6); 6];
        let h = shannon_entropy(&p);
        assert_eq!(h, LogForm::ln_rational(&ratio(6, 1)));
        assert!((h.to_f64() - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn coprime_refinement_detects_hidden_identities() {
        // ln 12 = 2 ln 2 + ln 3, ln 18 = ln 2 + 2 ln 3
        let a = LogForm::ln_rational(&ratio(12, 1)) + LogForm::ln_rational(&ratio(18, 1));
        let b = LogForm::ln_rational(&ratio(6, 1)).scale(3);
        assert_eq!(a, b);
        let c = LogForm::ln_rational(&ratio(4, 1));
        assert_ne!(c, LogForm::ln_rational(&ratio(8, 1)));
        assert_eq!(c.scale(3), LogForm::ln_rational(&ratio(8, 1)).scale(2));
        assert!(LogForm::ln_rational(&ratio(1, 1)).is_zero());
    }

    #[test]
    fn big_ratio_to_float() {
        let big = BigRational::new(BigInt::from(10).pow(400) * 3, BigInt::from(10).pow(400) * 4);
        assert!((ratio_to_f64(&big) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn entropy_value_display() {
        assert_eq!(EntropyValue::NEG_INFINITY.to_string(), "-inf");
        assert_eq!(format!("{:.3}", EntropyValue::new(0.5)), "0.500");
    }
}
