//! Riesz-type kernels: `ψ`, `f_h`, `g_h` (Fourier and spatial forms), the
//! convolved Riesz kernel `K^β_t = f_β ∗ p_t'` and the self-convolution
//! constant `c_γ` in `f_γ ∗ f_γ = c_γ f_{2γ-1}`.
//!
//! Fourier transforms are unitary, `ĝ(ξ) = (2π)^{-1/2} ∫ g(x) e^{-ixξ} dx`,
//! so `g_h = F^{-1} f_h` has the same L² norm as `f_h`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;
use statrs::function::beta::beta as beta_fn;
use statrs::function::gamma::gamma;

use crate::error::{ensure, Result};
use crate::gaussian::heat_kernel_unchecked;
use crate::quad::{integrate, integrate_algebraic, integrate_points, Estimate, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszSpec {
    pub beta: f64,
    pub h: f64,
    pub gamma: Option<f64>,
}

impl RieszSpec {
    pub fn new(beta: f64, h: f64) -> Result<Self> {
        let s = Self {
            beta,
            h,
            gamma: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Spec with `β = 2γ - 1`.
    pub fn from_gamma(gamma: f64, h: f64) -> Result<Self> {
        ensure(gamma > 0.75 && gamma < 1.0, || {
            format!("gamma must lie in (3/4, 1), got {gamma}")
        })?;
        let s = Self {
            beta: 2.0 * gamma - 1.0,
            h,
            gamma: Some(gamma),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.beta > 0.5 && self.beta <= 1.0, || {
            format!("beta must lie in (1/2, 1], got {}", self.beta)
        })?;
        ensure(self.h > 0.0 && self.h.is_finite(), || {
            format!("h must be positive, got {}", self.h)
        })?;
        if let Some(g) = self.gamma {
            ensure(self.beta == 2.0 * g - 1.0, || {
                format!("beta {} is not 2*gamma - 1 for gamma {g}", self.beta)
            })?;
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.h.powf(-(2.5 - self.beta))
    }
}

/// `ψ(z) = sin²(z/2)`.
#[inline]
pub fn psi(z: f64) -> f64 {
    let s = (0.5 * z).sin();
    s * s
}

/// `ψ(z) / z²`, continuous at the origin.
fn psi_over_sq(z: f64) -> f64 {
    if z == 0.0 {
        0.25
    } else {
        let s = (0.5 * z).sin() / z;
        s * s
    }
}

/// `f_h(ξ) = h^{-(5/2-β)} ψ(hξ) / |ξ|^{3-β}`.
pub fn f_h_fourier(spec: &RieszSpec, xi: f64) -> Result<f64> {
    spec.validate()?;
    ensure(xi != 0.0 && xi.is_finite(), || {
        "f_h has a pole at xi = 0".to_string()
    })?;
    Ok(spec.scale() * psi(spec.h * xi) * xi.abs().powf(spec.beta - 3.0))
}

/// `∫_{x0}^∞ η^p cos(kη) dη` for `p < -1`.
pub(crate) fn power_cos_tail(p: f64, k: f64, x0: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    debug_assert!(p < -1.0 && x0 > 0.0);
    let k = k.abs();
    if k == 0.0 {
        return Ok(Estimate {
            value: x0.powf(p + 1.0) / (-p - 1.0),
            abs_err: 0.0,
            evals: 0,
        });
    }
    // Push the start of the asymptotic expansion to kX ≥ 60, integrating
    // the slowly oscillating stretch numerically.
    let mut acc = Estimate::zero();
    let mut x = x0;
    if k * x0 < 60.0 {
        let x1 = x0 + 60.0 / k;
        let mut breaks = Vec::new();
        let mut b = x0;
        while b < (1.0 / k).min(x1) {
            b *= 2.0;
            breaks.push(b);
        }
        let start = breaks.last().copied().unwrap_or(x0).max(x0);
        let step = PI / k;
        let mut b = start + step;
        while b < x1 {
            breaks.push(b);
            b += step;
        }
        acc = integrate_points(|e: f64| e.powf(p) * (k * e).cos(), x0, x1, &breaks, cfg)?;
        x = x1;
    }
    // ∫_X^∞ η^p e^{ikη} = -e^{ikX} Σ_j (-1)^j (p)_j X^{p-j} / (ik)^{j+1}
    let (s, c) = (k * x).sin_cos();
    let mut re = 0.0;
    let mut coef = 1.0; // (-1)^j (p)_j X^{p-j} / k^{j+1}, without the i-powers
    let mut last = f64::INFINITY;
    let mut tail_err = 0.0;
    for j in 0..16 {
        let term_mag = coef * x.powf(p - j as f64) / k.powi(j as i32 + 1);
        if term_mag.abs() > last {
            break;
        }
        last = term_mag.abs();
        tail_err = last;
        // 1/(ik)^{j+1} = (-i)^{j+1}/k^{j+1}; multiply by -e^{ikX} and keep the real part.
        let (ar, ai) = match (j + 1) % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, 1.0),
        };
        // Re[-(c + i s)(ar + i ai)] = -(c ar - s ai)
        re += -(c * ar - s * ai) * coef * x.powf(p - j as f64) / k.powi(j as i32 + 1);
        coef *= -(p - j as f64);
        if last < 1e-18 * re.abs().max(1e-300) {
            break;
        }
    }
    Ok(acc.add(Estimate {
        value: re,
        abs_err: tail_err,
        evals: 0,
    }))
}

/// Fourier-side `G(u) = ∫_0^∞ cos(uη) ψ(η) η^{β-3} dη`, so that
/// `g_h(x) = 2 (2π)^{-1/2} h^{-1/2} G(x/h)`.
fn fourier_shape(beta: f64, u: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let u = u.abs();
    let p = beta - 3.0;
    let f = |e: f64| (u * e).cos() * psi(e) * e.powf(p);
    let x0 = cfg.tail_cutoff.max(60.0);
    let first = (0.5 * PI / u.max(1.0)).min(1.0);
    let near = |e: f64| (u * e).cos() * psi_over_sq(e);
    let mut acc = integrate_algebraic(near, 0.0, first, 1.0 - beta, cfg)?;
    let seg = (8.0 * PI / (u + 1.0)).min(2.0 * PI);
    let mut a = first;
    while a < x0 {
        let b = (a + seg).min(x0);
        acc = acc.add(integrate(f, a, b, cfg)?);
        a = b;
    }
    // cos(uη) ψ(η) = ½cos(uη) - ¼cos((u+1)η) - ¼cos((u-1)η)
    let t0 = power_cos_tail(p, u, x0, cfg)?;
    let t1 = power_cos_tail(p, u + 1.0, x0, cfg)?;
    let t2 = power_cos_tail(p, u - 1.0, x0, cfg)?;
    Ok(acc
        .add(t0.scale(0.5))
        .add(t1.scale(-0.25))
        .add(t2.scale(-0.25)))
}

/// `g_h(x)` as the inverse Fourier transform of `f_h`, computed by
/// oscillatory quadrature. This is the reference the spatial closed form is
/// calibrated against.
pub fn g_h_fourier(spec: &RieszSpec, x: f64, q: &QuadratureConfig) -> Result<Estimate> {
    spec.validate()?;
    q.validate()?;
    let g = fourier_shape(spec.beta, x / spec.h, q)
        .map_err(|e| e.context("Fourier transform of f_h"))?;
    Ok(g.scale(2.0 / (2.0 * PI).sqrt() / spec.h.sqrt()))
}

/// `T(u) = ∫_{u-1}^{u+1} (1 - |u-v|) |v|^{-β} dv`, the spatial shape with
/// `h = 1`; for `β = 1` the triangle `(1 - |u|)_+`.
fn spatial_shape(beta: f64, u: f64) -> f64 {
    if beta == 1.0 {
        return (1.0 - u.abs()).max(0.0);
    }
    // On each piece the weight is linear in v and v keeps one sign, so the
    // piece integrates in closed form.
    let mut pts = vec![u - 1.0, u, u + 1.0];
    if u - 1.0 < 0.0 && 0.0 < u + 1.0 && u != 0.0 {
        pts.push(0.0);
    }
    pts.sort_by(f64::total_cmp);
    let (s1, s2) = (1.0 - beta, 2.0 - beta);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // weight c0 + c1 v on [a, b]
        let (c0, c1) = if b <= u { (1.0 - u, 1.0) } else { (1.0 + u, -1.0) };
        acc += if a >= 0.0 {
            c0 * power_moment(a, b, s1) + c1 * power_moment(a, b, s2)
        } else {
            c0 * power_moment(-b, -a, s1) - c1 * power_moment(-b, -a, s2)
        };
    }
    acc
}

/// `∫_a^b v^{s-1} dv` for `0 ≤ a ≤ b`, without cancellation when `s` is small.
fn power_moment(a: f64, b: f64, s: f64) -> f64 {
    if a == 0.0 {
        b.powf(s) / s
    } else {
        a.powf(s) * (s * (b / a).ln()).exp_m1() / s
    }
}

/// Least-squares constant matching the spatial closed form to the Fourier
/// definition of `g_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub beta: f64,
    pub constant: f64,
    /// Closed-form value `Γ(β) cos(πβ/2) / (2√(2π))` (`√(2π)/4` at `β = 1`).
    pub analytic_constant: f64,
    pub max_rel_residual: f64,
}

const CALIBRATION_POINTS: [f64; 8] = [0.05, 0.3, 0.55, 0.8, 0.95, 1.5, 2.5, 4.0];

pub fn analytic_g_constant(beta: f64) -> f64 {
    if beta == 1.0 {
        (2.0 * PI).sqrt() / 4.0
    } else {
        gamma(beta) * (0.5 * PI * beta).cos() / (2.0 * (2.0 * PI).sqrt())
    }
}

fn calibration_cache() -> &'static Mutex<HashMap<u64, Calibration>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Calibration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Calibrated constant for the given `β`, computed once and cached.
pub fn calibration(beta: f64) -> Result<Calibration> {
    RieszSpec::new(beta, 1.0)?;
    let key = beta.to_bits();
    if let Some(c) = calibration_cache().lock().unwrap().get(&key) {
        return Ok(*c);
    }
    let cfg = QuadratureConfig::with_tolerances(1e-14, 1e-11);
    let mut fs = Vec::new();
    let mut ts = Vec::new();
    for &u in &CALIBRATION_POINTS {
        // h = 1: g(u) = 2 (2π)^{-1/2} G(u); spatial form is c · T(u).
        let g = fourier_shape(beta, u, &cfg)?.value * 2.0 / (2.0 * PI).sqrt();
        let t = spatial_shape(beta, u);
        fs.push(g);
        ts.push(t);
    }
    let num: f64 = fs.iter().zip(&ts).map(|(f, t)| f * t).sum();
    let den: f64 = ts.iter().map(|t| t * t).sum();
    let constant = num / den;
    let max_rel_residual = fs
        .iter()
        .zip(&ts)
        .filter(|(f, _)| f.abs() > 1e-12)
        .map(|(f, t)| ((constant * t - f) / f).abs())
        .fold(0.0, f64::max);
    let cal = Calibration {
        beta,
        constant,
        analytic_constant: analytic_g_constant(beta),
        max_rel_residual,
    };
    calibration_cache().lock().unwrap().insert(key, cal);
    Ok(cal)
}

/// `g_h(x) = c h^{-(5/2-β)} ∫_{x-h}^{x+h} (h - |x-y|) |y|^{-β} dy` with the
/// calibrated constant `c`.
pub fn g_h_eval(spec: &RieszSpec, x: f64, q: &QuadratureConfig) -> Result<Estimate> {
    spec.validate()?;
    q.validate()?;
    let cal = calibration(spec.beta)?;
    Ok(Estimate {
        value: spatial_shape(spec.beta, x / spec.h) * cal.constant / spec.h.sqrt(),
        abs_err: 0.0,
        evals: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Norm {
    /// `∫ f_h(ξ)² dξ`, evaluated in the variable `ξ` at the given `h`.
    pub fourier: Estimate,
    /// `∫ g_h(x)² dx` from the calibrated spatial form plus an analytic tail.
    pub spatial: Estimate,
}

/// `‖g_h‖²` by the Fourier and the spatial route.
pub fn g_h_l2_norm(spec: &RieszSpec, q: &QuadratureConfig) -> Result<L2Norm> {
    spec.validate()?;
    q.validate()?;
    let fourier = l2_fourier(spec, q).map_err(|e| e.context("Fourier L2 norm"))?;
    let spatial = l2_spatial(spec, q).map_err(|e| e.context("spatial L2 norm"))?;
    Ok(L2Norm { fourier, spatial })
}

fn l2_fourier(spec: &RieszSpec, q: &QuadratureConfig) -> Result<Estimate> {
    let (b, h) = (spec.beta, spec.h);
    let p = 2.0 * b - 6.0;
    let s2 = spec.scale() * spec.scale();
    let f = |xi: f64| {
        let v = psi(h * xi);
        v * v * xi.powf(p)
    };
    let period = 2.0 * PI / h;
    let near = |xi: f64| h.powi(4) * psi_over_sq(h * xi).powi(2);
    let mut acc = integrate_algebraic(near, 0.0, 0.5 * period, 2.0 - 2.0 * b, q)?;
    let x0 = q.tail_cutoff.max(60.0) / h;
    let mut a = 0.5 * period;
    while a < x0 {
        let e = (a + period).min(x0);
        acc = acc.add(integrate(f, a, e, q)?);
        a = e;
    }
    // ψ(z)² = 3/8 - ½cos z + ⅛cos 2z
    let t0 = power_cos_tail(p, 0.0, x0, q)?;
    let t1 = power_cos_tail(p, h, x0, q)?;
    let t2 = power_cos_tail(p, 2.0 * h, x0, q)?;
    let total = acc
        .add(t0.scale(3.0 / 8.0))
        .add(t1.scale(-0.5))
        .add(t2.scale(0.125));
    Ok(total.scale(2.0 * s2))
}

fn l2_spatial(spec: &RieszSpec, q: &QuadratureConfig) -> Result<Estimate> {
    let b = spec.beta;
    let c = calibration(b)?.constant;
    // In u = x/h: ∫ g² dx = c² h^{-1} · h ∫ T(u)² du = c² ∫ T(u)² du.
    let sq = |u: f64| spatial_shape(b, u).powi(2);
    if b == 1.0 {
        return Ok(integrate(sq, 0.0, 1.0, q)?.scale(2.0 * c * c));
    }
    let big_x = 20.0;
    let est = integrate_points(sq, 0.0, big_x, &[1.0, 2.0, 4.0], q)?;
    // T(u) ≈ u^{-β} [1 + β(β+1)/(12u²)] for u ≫ 1.
    let tail = big_x.powf(1.0 - 2.0 * b) / (2.0 * b - 1.0)
        + b * (b + 1.0) * big_x.powf(-1.0 - 2.0 * b) / (6.0 * (2.0 * b + 1.0));
    let tail_err = big_x.powf(-3.0 - 2.0 * b);
    Ok(Estimate {
        value: 2.0 * c * c * (est.value + tail),
        abs_err: 2.0 * c * c * (est.abs_err + tail_err),
        evals: est.evals,
    })
}

/// `∫ g_h(x) p_t(x) dx = (2π)^{-1/2} h^{-(5/2-β)} ∫ ψ(hξ) |ξ|^{β-3} e^{-tξ²/2} dξ`.
pub fn g_h_heat_pairing(spec: &RieszSpec, t: f64, q: &QuadratureConfig) -> Result<Estimate> {
    spec.validate()?;
    q.validate()?;
    ensure(t > 0.0 && t.is_finite(), || format!("t must be positive, got {t}"))?;
    let (b, h) = (spec.beta, spec.h);
    let f = |xi: f64| psi(h * xi) * xi.powf(b - 3.0) * (-0.5 * t * xi * xi).exp();
    let xmax = (80.0 / t).sqrt();
    let first = (PI / h).min(xmax);
    let near = |xi: f64| h * h * psi_over_sq(h * xi) * (-0.5 * t * xi * xi).exp();
    let mut acc = integrate_algebraic(near, 0.0, first, 1.0 - b, q)?;
    if first < xmax {
        let period = 2.0 * PI / h;
        let mut breaks = Vec::new();
        let mut a = first + period;
        while a < xmax && breaks.len() < 2000 {
            breaks.push(a);
            a += period;
        }
        acc = acc.add(integrate_points(f, first, xmax, &breaks, q)?);
    }
    Ok(acc.scale(2.0 * spec.scale() / (2.0 * PI).sqrt()))
}

/// Shape of the pairing bound, `h^{β-1/2} t^{-β/2}`.
pub fn heat_pairing_bound_shape(beta: f64, h: f64, t: f64) -> f64 {
    h.powf(beta - 0.5) * t.powf(-0.5 * beta)
}

/// Fourier constant of `|y|^{-β}`: `∫ |y|^{-β} e^{-iξy} dy = C_β |ξ|^{β-1}`.
pub fn riesz_fourier_constant(beta: f64) -> f64 {
    2.0 * gamma(1.0 - beta) * (0.5 * PI * beta).sin()
}

/// `K^β_t(x) = (f_β ∗ p_t')(x) = -(C_β/π) ∫_0^∞ sin(ξx) ξ^β e^{-tξ²/2} dξ`.
pub fn riesz_k(beta: f64, t: f64, x: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(beta > 0.0 && beta < 1.0, || {
        format!("K^beta needs 0 < beta < 1, got {beta}")
    })?;
    ensure(t > 0.0 && t.is_finite(), || format!("t must be positive, got {t}"))?;
    q.validate()?;
    if x == 0.0 {
        return Ok(Estimate::zero());
    }
    let f = |xi: f64| (xi * x).sin() * xi.powf(beta) * (-0.5 * t * xi * xi).exp();
    let xmax = (80.0 / t).sqrt();
    let step = PI / x.abs();
    let mut breaks = Vec::new();
    let mut a = step;
    while a < xmax && breaks.len() < 2000 {
        breaks.push(a);
        a += step;
    }
    let est = integrate_points(f, 0.0, xmax, &breaks, q)?;
    Ok(est.scale(-riesz_fourier_constant(beta) / PI))
}

/// Direct convolution `∫ |y|^{-β} p_t'(x-y) dy`, with the singularity at
/// `y = 0` removed by substitution on both sides.
pub fn riesz_k_convolution(beta: f64, t: f64, x: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(beta > 0.0 && beta < 1.0, || {
        format!("K^beta needs 0 < beta < 1, got {beta}")
    })?;
    ensure(t > 0.0 && t.is_finite(), || format!("t must be positive, got {t}"))?;
    let dp = |z: f64| -z / t * heat_kernel_unchecked(t, z);
    let w = 12.0 * t.sqrt();
    let lo = (x - w).min(-1e-3);
    let hi = (x + w).max(1e-3);
    let left = integrate_algebraic(|y| dp(x - y), 0.0, lo, beta, q)?.scale(-1.0);
    let right = integrate_algebraic(|y| dp(x - y), 0.0, hi, beta, q)?;
    Ok(left.add(right))
}

/// `c_γ = ∫ |y|^{-γ} |1-y|^{-γ} dy` by quadrature.
pub fn riesz_constant_c_gamma(gamma_: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(gamma_ > 0.75 && gamma_ < 1.0, || {
        format!("gamma must lie in (3/4, 1), got {gamma_}")
    })?;
    q.validate()?;
    let g = gamma_;
    // [0, 1], split at the midpoint; the second half by symmetry.
    let half = integrate_algebraic(|y: f64| (1.0 - y).powf(-g), 0.0, 0.5, g, q)?.scale(2.0);
    // (-∞, 0] and [1, ∞) are equal; ∫_0^∞ y^{-γ}(1+y)^{-γ} split at 1,
    // with y = 1/w on the outer part.
    let near = integrate_algebraic(|y: f64| (1.0 + y).powf(-g), 0.0, 1.0, g, q)?;
    let far = integrate_algebraic(
        |w: f64| (1.0 + w).powf(-g),
        0.0,
        1.0,
        2.0 - 2.0 * g,
        q,
    )?;
    Ok(half.add(near.add(far).scale(2.0)))
}

/// `B(1-γ, 1-γ) + 2 B(1-γ, 2γ-1)`.
pub fn c_gamma_closed_form(gamma_: f64) -> f64 {
    beta_fn(1.0 - gamma_, 1.0 - gamma_) + 2.0 * beta_fn(1.0 - gamma_, 2.0 * gamma_ - 1.0)
}

/// `(f_γ ∗ f_γ)(x) = ∫ |y|^{-γ} |x-y|^{-γ} dy` by quadrature, for `x ≠ 0`.
pub fn riesz_self_convolution(gamma_: f64, x: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(x != 0.0, || "self-convolution is singular at x = 0".to_string())?;
    ensure(gamma_ > 0.75 && gamma_ < 1.0, || {
        format!("gamma must lie in (3/4, 1), got {gamma_}")
    })?;
    let s = x.abs();
    // Evaluated on the unscaled domain, as an independent check of homogeneity.
    let g = gamma_;
    let half = integrate_algebraic(|y: f64| (s - y).powf(-g), 0.0, 0.5 * s, g, q)?.scale(2.0);
    let near = integrate_algebraic(|y: f64| (s + y).powf(-g), 0.0, s, g, q)?;
    let far = integrate_algebraic(
        |w: f64| (1.0 + s * w).powf(-g),
        0.0,
        1.0 / s,
        2.0 - 2.0 * g,
        q,
    )?;
    Ok(half.add(near.add(far).scale(2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn f_h_arithmetic() {
        let s = RieszSpec::new(0.75, 1.0).unwrap();
        assert_relative_eq!(
            f_h_fourier(&s, PI).unwrap(),
            PI.powf(-2.25),
            max_relative = 1e-14
        );
        assert!(f_h_fourier(&s, 0.0).is_err());
        let a = f_h_fourier(&RieszSpec::new(0.75, 0.1).unwrap(), 10.0).unwrap();
        let b = f_h_fourier(&s, 1.0).unwrap();
        assert_relative_eq!(a / b, 0.1f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(RieszSpec::new(0.5, 1.0).is_err());
        assert!(RieszSpec::new(1.0, 1.0).is_ok());
        assert!(RieszSpec::new(0.7, 0.0).is_err());
        assert!(RieszSpec::from_gamma(0.75, 1.0).is_err());
        assert_relative_eq!(RieszSpec::from_gamma(0.8, 1.0).unwrap().beta, 0.6);
    }

    #[test]
    fn power_cos_tail_matches_quadrature() {
        let q = cfg();
        for &(p, k, x0) in &[(-2.25, 3.0, 5.0), (-2.0, 0.01, 2.0), (-2.4, 40.0, 1.0)] {
            let t = power_cos_tail(p, k, x0, &q).unwrap().value;
            // Reference: finite range plus a crude far tail bound.
            let far = 4000.0 / k.min(1.0);
            let mut breaks = vec![];
            let mut b = x0 + PI / k;
            while b < far && breaks.len() < 3900 {
                breaks.push(b);
                b += PI / k;
            }
            let mut cf = QuadratureConfig::default();
            cf.max_subdivisions = 20000;
            let r = integrate_points(|e: f64| e.powf(p) * (k * e).cos(), x0, far, &breaks, &cf)
                .unwrap()
                .value;
            // The reference is truncated at `far`; its neglected tail is ~ far^p / k.
            let tol = 1e-8 * t.abs() + 2.0 * far.powf(p) / k;
            assert!((t - r).abs() < tol, "p={p} k={k}: {t} vs {r}");
        }
    }

    #[test]
    fn calibrated_constant_is_analytic() {
        for &b in &[0.6, 0.75, 0.9, 1.0] {
            let c = calibration(b).unwrap();
            assert_relative_eq!(c.constant, c.analytic_constant, max_relative = 1e-6);
            assert!(c.max_rel_residual < 1e-6, "beta {b}: {c:?}");
        }
    }

    #[test]
    fn c_gamma_matches_beta_functions() {
        for &g in &[0.76, 0.8, 0.9, 0.97] {
            let v = riesz_constant_c_gamma(g, &cfg()).unwrap().value;
            assert_relative_eq!(v, c_gamma_closed_form(g), max_relative = 1e-8);
        }
    }

    #[test]
    fn k_is_odd_and_zero_at_origin() {
        let q = cfg();
        assert_eq!(riesz_k(0.75, 1.0, 0.0, &q).unwrap().value, 0.0);
        let a = riesz_k(0.75, 1.0, 1.0, &q).unwrap().value;
        let b = riesz_k(0.75, 1.0, -1.0, &q).unwrap().value;
        assert_relative_eq!(a, -b, max_relative = 1e-12);
        assert!(riesz_k(1.0, 1.0, 1.0, &q).is_err());
        assert!(riesz_k(0.75, 0.0, 1.0, &q).is_err());
    }
}
