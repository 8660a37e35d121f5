//! Small statistics toolkit: mergeable moments, pairwise summation and
//! least-squares fits with heteroscedasticity-robust errors.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{ensure, Result};

/// Running mean and variance, mergeable in any order up to rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Moments {
            n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    pub fn from_slice(xs: &[f64]) -> Moments {
        let mut m = Moments::default();
        for &x in xs {
            m.push(x);
        }
        m
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// `xs`, not on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample variance with its standard error (fourth-moment formula).
pub fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let m2 = pairwise_sum(&dev2) / n;
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let m4 = pairwise_sum(&dev4) / n;
    let var = m2 * n / (n - 1.0);
    let se = ((m4 - m2 * m2) / n).max(0.0).sqrt();
    (var, se)
}

/// Skewness and excess kurtosis.
pub fn skew_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Straight-line fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Heteroscedasticity-robust (HC3) standard error of the slope.
    pub slope_se: f64,
    /// Classical standard error of the slope.
    pub slope_se_ols: f64,
    /// 95% interval for the slope from the robust error.
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
    pub n: usize,
}

impl LineFit {
    pub fn t_stat(&self) -> f64 {
        self.slope / self.slope_se_ols
    }
}

/// Ordinary least squares with HC3 slope errors.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    ensure(xs.len() == ys.len(), || "x and y lengths differ".into())?;
    ensure(xs.len() >= 3, || format!("need at least 3 points, got {}", xs.len()))?;
    ensure(xs.iter().chain(ys).all(|v| v.is_finite()), || "non-finite data".into())?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    ensure(sxx > 0.0, || "x values are all equal".into())?;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ssr = 0.0;
    let mut meat = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let e = y - intercept - slope * x;
        ssr += e * e;
        let lev = 1.0 / n + (x - mx).powi(2) / sxx;
        let u = e / (1.0 - lev).max(1e-12);
        meat += (x - mx).powi(2) * u * u;
    }
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let df = n - 2.0;
    let slope_se_ols = if df > 0.0 { (ssr / df / sxx).sqrt() } else { f64::NAN };
    let slope_se = meat.sqrt() / sxx;
    let tq = if df > 0.0 {
        StudentsT::new(0.0, 1.0, df).map(|t| t.inverse_cdf(0.975)).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        slope_se_ols,
        slope_ci: (slope - tq * slope_se, slope + tq * slope_se),
        r_squared: if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 },
        n: xs.len(),
    })
}

/// Fit `ln y = intercept + slope · ln h`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LineFit> {
    ensure(points.len() >= 4, || {
        format!("a log-log fit needs at least 4 points, got {}", points.len())
    })?;
    ensure(points.iter().all(|&(h, y)| h > 0.0 && y > 0.0), || {
        "log-log fit needs positive h and y".into()
    })?;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    fit_line(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h| (h, 3.0 * h * h)).collect();
        let f = fit_loglog(&pts).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        let pts = [(0.1, 1.0), (0.2, 0.0), (0.3, 1.0), (0.4, 2.0)];
        assert!(fit_loglog(&pts).is_err());
        assert!(fit_loglog(&pts[..3]).is_err());
    }

    #[test]
    fn merged_moments_match_direct() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        let all = Moments::from_slice(&xs);
        let merged = Moments::from_slice(&xs[..40]).merge(Moments::from_slice(&xs[40..]));
        assert_relative_eq!(all.mean, merged.mean, max_relative = 1e-14);
        assert_relative_eq!(all.variance(), merged.variance(), max_relative = 1e-12);
    }
}
