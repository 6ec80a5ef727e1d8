use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Prob;

fn log2_bigint(x: &BigInt) -> f64 {
    debug_assert!(x.sign() == Sign::Plus);
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().expect("fits in u64").to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_u64().expect("top bits").to_f64().unwrap().log2() + shift as f64
}

fn power_of_two_exponent(x: &BigInt) -> Option<u64> {
    let bits = x.bits();
    if bits == 0 {
        return None;
    }
    (x.trailing_zeros() == Some(bits - 1)).then_some(bits - 1)
}

/// `log2(r)` for a positive rational.
///
/// Ratios of powers of two are evaluated exactly; ratios close to one go
/// through `ln_1p` so that tiny deviations (e.g. `1 - (1-p)^T` for large `T`)
/// keep their relative precision.
pub fn log2_ratio(r: &Prob) -> f64 {
    assert!(r.is_positive(), "log2 of non-positive rational {r}");
    let (num, den) = (r.numer(), r.denom());
    if let (Some(a), Some(b)) = (power_of_two_exponent(num), power_of_two_exponent(den)) {
        return a as f64 - b as f64;
    }
    let diff = num - den;
    // |num - den| < den / 2, i.e. r in (1/2, 3/2)
    if (&diff.abs() << 1u32) < *den {
        let d = BigRational::new(diff, den.clone()).to_f64().expect("finite");
        return d.ln_1p() / std::f64::consts::LN_2;
    }
    log2_bigint(num) - log2_bigint(den)
}

/// A per-sample log-ratio `log2(p/q)`.
///
/// `value` is `+∞` when `q = 0` (only produced by the extended routines used
/// in verifiers), in which case `exact` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleValue {
    pub value: f64,
    pub exact: Option<(Prob, Prob)>,
}

impl SampleValue {
    pub fn from_ratio(p: Prob, q: Prob) -> Self {
        assert!(p.is_positive() && q.is_positive());
        let value = log2_ratio(&(&p / &q));
        SampleValue { value, exact: Some((p, q)) }
    }

    pub fn zero() -> Self {
        SampleValue::from_ratio(Prob::one(), Prob::one())
    }

    pub fn infinite() -> Self {
        SampleValue { value: f64::INFINITY, exact: None }
    }

    pub fn is_finite(&self) -> bool {
        self.exact.is_some()
    }

    /// `p / q`, or `None` for `+∞`.
    pub fn ratio(&self) -> Option<Prob> {
        self.exact.as_ref().map(|(p, q)| p / q)
    }

    /// Sum of log-ratios; exact forms multiply.
    pub fn add(&self, other: &SampleValue) -> SampleValue {
        match (&self.exact, &other.exact) {
            (Some((p1, q1)), Some((p2, q2))) => SampleValue::from_ratio(p1 * p2, q1 * q2),
            _ => SampleValue::infinite(),
        }
    }

    /// Difference of log-ratios; panics if `other` is infinite.
    pub fn sub(&self, other: &SampleValue) -> SampleValue {
        let (p2, q2) = other.exact.as_ref().expect("finite subtrahend");
        match &self.exact {
            Some((p1, q1)) => SampleValue::from_ratio(p1 * q2, q1 * p2),
            None => SampleValue::infinite(),
        }
    }

    /// Exact comparison of the underlying log-ratios (∞ is largest).
    pub fn cmp_exact(&self, other: &SampleValue) -> std::cmp::Ordering {
        match (self.ratio(), other.ratio()) {
            (Some(a), Some(b)) => a.cmp(&b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
    }

    /// Exact equality of the log-ratios.
    pub fn exact_eq(&self, other: &SampleValue) -> bool {
        self.cmp_exact(other) == std::cmp::Ordering::Equal
    }

    /// `2^{-value}` as an exact rational (`0` for `+∞`).
    pub fn inverse_ratio(&self) -> Prob {
        match &self.exact {
            Some((p, q)) => q / p,
            None => Prob::zero(),
        }
    }
}
