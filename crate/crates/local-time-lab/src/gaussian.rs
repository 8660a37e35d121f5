//! Heat kernel, its spatial derivatives, and Hermite polynomials normalised as
//! `H_n = (-1)^n / n! · e^{x²/2} dⁿ/dxⁿ e^{-x²/2}`.
//!
//! With this normalisation `H_n = He_n / n!` where `He_n` are the
//! probabilists' Hermite polynomials.

use std::f64::consts::PI;

use crate::error::{ensure, Result};

/// Order of a Hermite polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HermiteOrder(pub usize);

/// A point `(t, y)` at which the `n`-th spatial derivative of `p_t` is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelPoint {
    pub t: f64,
    pub y: f64,
    pub n: usize,
}

impl HeatKernelPoint {
    pub fn new(n: usize, t: f64, y: f64) -> Result<Self> {
        ensure(t > 0.0 && t.is_finite(), || {
            format!("heat kernel time must be positive, got {t}")
        })?;
        Ok(Self { t, y, n })
    }
}

/// `H_n(x)` through `(k+1) H_{k+1} = x H_k - H_{k-1}`.
pub fn hermite(n: HermiteOrder, x: f64) -> f64 {
    let n = n.0;
    if n == 0 {
        return 1.0;
    }
    let mut h0 = 1.0;
    let mut h1 = x;
    for k in 1..n {
        let h2 = (x * h1 - h0) / (k + 1) as f64;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_0(x), …, H_n(x)`.
pub fn hermite_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let v = (x * out[k] - out[k - 1]) / (k + 1) as f64;
        out.push(v);
    }
    out
}

/// Probabilists' `He_n(x) = n! H_n(x)`.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut h0 = 1.0;
    let mut h1 = x;
    for k in 1..n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Exact `H_n(0)`: zero for odd `n`, `(-1)^m / (2^m m!)` for `n = 2m`.
pub fn hermite_at_zero(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let m = n / 2;
    let mut v = 1.0;
    for k in 1..=m {
        v /= 2.0 * k as f64;
    }
    if m % 2 == 1 {
        -v
    } else {
        v
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `p_t(y) = (2πt)^{-1/2} e^{-y²/(2t)}`.
pub fn heat_kernel(t: f64, y: f64) -> Result<f64> {
    let pt = HeatKernelPoint::new(0, t, y)?;
    Ok(heat_kernel_unchecked(pt.t, pt.y))
}

#[inline]
pub(crate) fn heat_kernel_unchecked(t: f64, y: f64) -> f64 {
    (-y * y / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// `∂ⁿ_y p_t(y) = n! t^{-n/2} (-1)^n p_t(y) H_n(y/√t)`.
pub fn heat_kernel_deriv(pt: HeatKernelPoint) -> Result<f64> {
    let pt = HeatKernelPoint::new(pt.n, pt.t, pt.y)?;
    Ok(heat_kernel_deriv_unchecked(pt.n, pt.t, pt.y))
}

#[inline]
pub(crate) fn heat_kernel_deriv_unchecked(n: usize, t: f64, y: f64) -> f64 {
    let s = t.sqrt();
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    sign * s.powi(-(n as i32)) * heat_kernel_unchecked(t, y) * hermite_he(n, y / s)
}

/// `E[p_t^{(n)}(N)]` for `N ~ Normal(mean, var)`, which equals
/// `p_{t+var}^{(n)}(mean)` by the semigroup property.
pub fn expected_heat_deriv(n: usize, t: f64, mean: f64, var: f64) -> Result<f64> {
    ensure(t > 0.0 && t.is_finite(), || {
        format!("heat kernel time must be positive, got {t}")
    })?;
    ensure(var >= 0.0 && var.is_finite(), || {
        format!("variance must be non-negative, got {var}")
    })?;
    Ok(heat_kernel_deriv_unchecked(n, t + var, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_orders() {
        assert_eq!(hermite(HermiteOrder(0), 3.7), 1.0);
        assert_eq!(hermite(HermiteOrder(1), 2.0), 2.0);
        assert_eq!(hermite(HermiteOrder(2), 0.0), -0.5);
        assert_eq!(hermite(HermiteOrder(4), 0.0), 0.125);
        // H_3 = (x³ - 3x)/6
        assert_relative_eq!(hermite(HermiteOrder(3), 1.3), (1.3f64.powi(3) - 3.9) / 6.0);
    }

    #[test]
    fn he_is_factorial_multiple() {
        for n in 0..20 {
            let x = 0.37 * n as f64 - 2.0;
            assert_relative_eq!(
                hermite_he(n, x),
                factorial(n) * hermite(HermiteOrder(n), x),
                max_relative = 1e-11,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn kernel_values() {
        assert_relative_eq!(heat_kernel(1.0, 0.0).unwrap(), 0.398_942_280_401_432_7);
        let p = HeatKernelPoint::new(3, 0.5, 0.0).unwrap();
        assert_eq!(heat_kernel_deriv(p).unwrap(), 0.0);
        let p = HeatKernelPoint::new(2, 1.0, 0.0).unwrap();
        assert_relative_eq!(heat_kernel_deriv(p).unwrap(), -0.398_942_280_401_432_7);
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(HeatKernelPoint::new(0, 0.0, 1.0).is_err());
        assert!(heat_kernel(-1.0, 0.0).is_err());
        assert!(expected_heat_deriv(1, 0.0, 0.0, 1.0).is_err());
        assert!(expected_heat_deriv(1, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn degenerate_variance_collapses() {
        let direct = heat_kernel_deriv(HeatKernelPoint::new(2, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(expected_heat_deriv(2, 1.0, 0.5, 0.0).unwrap(), direct);
        assert_eq!(expected_heat_deriv(5, 0.3, 0.0, 0.7).unwrap(), 0.0);
    }
}
