//! Log-space helpers and normal-distribution functions on top of `libm`.

use core::f64::consts::{LN_2, PI, SQRT_2};

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `ln(e^a + e^b)`.
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(exp(lo - hi))
}

/// `ln(e^a - e^b)` for `a >= b`.
pub(crate) fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a <= b {
        return f64::NEG_INFINITY;
    }
    // log(e^a - e^b) = a + log(1 - e^(b-a))
    a + log1m_exp(b - a)
}

/// `ln(1 - e^x)` for `x < 0`.
fn log1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        libm::log(-libm::expm1(x))
    } else {
        libm::log1p(-exp(x))
    }
}

/// `ln(erfc(x))`, accurate far into the upper tail.
pub(crate) fn log_erfc(x: f64) -> f64 {
    if x < 20.0 {
        return ln(libm::erfc(x));
    }
    // Asymptotic expansion: erfc(x) ~ e^{-x^2}/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6))
    let x2 = x * x;
    let inv = 1.0 / x2;
    let series = 1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv * inv * inv;
    -x2 - ln(x) - 0.5 * ln(PI) + ln(series)
}

/// `ln Φ(x)` for the standard normal CDF.
pub(crate) fn log_ndtr(x: f64) -> f64 {
    // Φ(x) = erfc(-x/√2)/2
    log_erfc(-x / SQRT_2) - LN_2
}

#[cfg(test)]
pub(crate) fn ndtr(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}
