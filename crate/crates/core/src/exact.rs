//! Integer and rational helpers shared by the geometry and rate modules.
//!
//! Ceilings of logarithm ratios are never taken through floating point
//! alone: a float gives the starting guess and integer powers decide the
//! boundary.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// `base^exp` as an unsigned big integer.
pub(crate) fn upow(base: u32, exp: u64) -> BigUint {
    BigUint::from(base).pow(u32::try_from(exp).expect("exponent fits u32"))
}

/// `base^exp` as a rational, signed exponent allowed.
pub(crate) fn rpow(base: u32, exp: i64) -> BigRational {
    let mag = upow(base, exp.unsigned_abs());
    let mag = BigRational::from_integer(mag.into());
    if exp >= 0 {
        mag
    } else {
        mag.recip()
    }
}

/// Exact dyadic rational equal to a finite `f64`.
pub(crate) fn dyadic(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

fn ln_biguint(n: &BigUint) -> f64 {
    debug_assert!(!n.is_zero());
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().expect("small biguint").ln();
    }
    let shift = bits - 53;
    let top = (n >> shift).to_f64().expect("top bits fit");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational, accurate to a few ulps even when the
/// numerator or denominator has thousands of bits.
pub(crate) fn ln_rational(q: &BigRational) -> f64 {
    assert!(q.is_positive(), "ln of non-positive rational");
    let num = q.numer().magnitude();
    let den = q.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// Smallest `k >= 0` with `m2^k >= m1^n1`, i.e. the exact value of
/// `ceil(n1 * log_{m2} m1)` for integer bases.
pub(crate) fn ceil_log_ratio(m1: u32, m2: u32, n1: u64) -> u64 {
    debug_assert!(m1 >= 2 && m2 >= 2);
    if n1 == 0 {
        return 0;
    }
    let target = upow(m1, n1);
    let guess = (n1 as f64 * (f64::from(m1)).ln() / (f64::from(m2)).ln()).ceil();
    let mut k = if guess.is_finite() && guess > 0.0 {
        guess as u64
    } else {
        0
    };
    while k > 0 && upow(m2, k - 1) >= target {
        k -= 1;
    }
    while upow(m2, k) < target {
        k += 1;
    }
    k
}
