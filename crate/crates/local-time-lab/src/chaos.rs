//! Chaos-projection kernels.
//!
//! `Φ_{h,2m}(t₁,t₂) = ∫₀^h p^{(2m-2)}_{t₂-t₁}(y) (h-y) dy` and the symmetric
//! kernels built from it, which depend on their `2m` time arguments only
//! through `(min, max)`. Also the 2-d Fourier kernels `Φ_𝐢` and the
//! contraction norm `‖f_h ⊗_r f_h‖²`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::error::{ensure, Error, Result};
use crate::gaussian::{factorial, heat_kernel_deriv_unchecked, heat_kernel_unchecked};
use crate::quad::{integrate_points, periodic_grid, Estimate, GaussLegendre, QuadratureConfig};
use crate::rng::substream;

/// Parameters of the 1-d chaos kernels of order `2m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosSpec {
    pub m: usize,
    pub h: f64,
    /// Time horizon.
    pub t: f64,
}

impl ChaosSpec {
    pub fn new(m: usize, h: f64, t: f64) -> Result<Self> {
        ensure(m >= 1, || "chaos order m must be at least 1".into())?;
        ensure(h != 0.0 && h.is_finite(), || format!("h must be non-zero, got {h}"))?;
        ensure(t > 0.0 && t <= 1.0, || format!("t must lie in (0, 1], got {t}"))?;
        Ok(Self { m, h, t })
    }
}

/// `Φ_{h,2m}(t₁,t₂)` by adaptive quadrature of its defining integral.
pub fn phi_1d(m: usize, h: f64, t1: f64, t2: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(m >= 1, || "chaos order m must be at least 1".into())?;
    ensure(t2 > t1 && t1 >= 0.0, || {
        format!("need 0 <= t1 < t2, got t1={t1}, t2={t2}")
    })?;
    ensure(h > 0.0 && h.is_finite(), || format!("h must be positive, got {h}"))?;
    let tau = t2 - t1;
    let k = 2 * m - 2;
    let s = tau.sqrt();
    let mut breaks = Vec::new();
    let mut b = s;
    while b < h && breaks.len() < 60 {
        breaks.push(b);
        b *= 2.0;
    }
    // Absolute tolerance scaled to the size of the answer, ~h² τ^{-m+1/2}.
    let scale = h * h * tau.powf(0.5 - m as f64) / (2.0 * PI).sqrt();
    // Roundoff floor: for tiny τ the integrand is huge near 0 and cancels.
    let floor = 64.0 * f64::EPSILON * h * s * heat_kernel_deriv_unchecked(k, tau, 0.0).abs();
    let cfg = QuadratureConfig {
        abs_tol: (q.abs_tol.min(1.0) * scale.min(h / 2.0)).max(floor),
        ..*q
    };
    integrate_points(
        |y| heat_kernel_deriv_unchecked(k, tau, y) * (h - y),
        0.0,
        h,
        &breaks,
        &cfg,
    )
}

/// Fast evaluation of `τ ↦ Φ_{h,2m}` used inside cubatures.
///
/// Integration by parts gives `Φ = p_τ^{(k-2)}(h) - p_τ^{(k-2)}(0)` for
/// `k = 2m-2 ≥ 2`, and `½h erf(h/√(2τ)) - τ(p_τ(0) - p_τ(h))` for `k = 0`.
/// Where `h/√τ` is small the difference cancels, so a Gauss-Legendre rule on
/// `[0, h]` is used instead.
#[derive(Debug, Clone)]
pub struct PhiKernel {
    pub m: usize,
    pub h: f64,
    gl: GaussLegendre,
}

impl PhiKernel {
    pub fn new(m: usize, h: f64) -> Result<Self> {
        ensure(m >= 1, || "chaos order m must be at least 1".into())?;
        ensure(h > 0.0 && h.is_finite(), || format!("h must be positive, got {h}"))?;
        Ok(Self {
            m,
            h,
            gl: GaussLegendre::new(12),
        })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        debug_assert!(tau > 0.0);
        let h = self.h;
        let k = 2 * self.m - 2;
        let ratio = h / tau.sqrt();
        if ratio < 0.05 {
            return self
                .gl
                .integrate(|y| heat_kernel_deriv_unchecked(k, tau, y) * (h - y), 0.0, h);
        }
        if k == 0 {
            let p0 = heat_kernel_unchecked(tau, 0.0);
            let ph = heat_kernel_unchecked(tau, h);
            0.5 * h * erf(ratio / std::f64::consts::SQRT_2) - tau * (p0 - ph)
        } else {
            heat_kernel_deriv_unchecked(k - 2, tau, h) - heat_kernel_deriv_unchecked(k - 2, tau, 0.0)
        }
    }

    pub fn eval_pair(&self, t1: f64, t2: f64) -> f64 {
        self.eval(t2 - t1)
    }
}

fn check_times(spec: &ChaosSpec, times: &[f64]) -> Result<(f64, f64)> {
    ensure(times.len() == 2 * spec.m, || {
        format!("expected {} time arguments, got {}", 2 * spec.m, times.len())
    })?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in times {
        ensure((0.0..=spec.t).contains(&x), || {
            format!("time {x} outside [0, {}]", spec.t)
        })?;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Ok((lo, hi))
}

fn phi_checked(m: usize, h: f64, t1: f64, t2: f64) -> Result<f64> {
    ensure(t2 > t1, || {
        format!("coincident or reversed times ({t1}, {t2}): Φ_h is undefined at zero lag")
    })?;
    Ok(PhiKernel::new(m, h.abs())?.eval(t2 - t1))
}

/// `f_h(t₁…t_{2m}) = Φ_{h,2m}(min, max)`.
pub fn kernel_f_h(spec: &ChaosSpec, times: &[f64]) -> Result<f64> {
    let (lo, hi) = check_times(spec, times)?;
    phi_checked(spec.m, spec.h, lo, hi)
}

/// `g_{h,t}(t₁…t_{2m}) = -Φ_h(min, t) + Φ_h(0, t) - Φ_h(0, max)`.
pub fn kernel_g_h_t(spec: &ChaosSpec, times: &[f64]) -> Result<f64> {
    let (lo, hi) = check_times(spec, times)?;
    let (m, h, t) = (spec.m, spec.h, spec.t);
    Ok(-phi_checked(m, h, lo, t)? + phi_checked(m, h, 0.0, t)? - phi_checked(m, h, 0.0, hi)?)
}

/// A symmetric kernel on `[0,1]^{2m}` that depends only on `(min, max)`.
pub trait MinMaxKernel: Sync {
    fn eval(&self, tmin: f64, tmax: f64) -> f64;

    /// `eval(tmin, tmin + lag)` without forming the difference again, which
    /// underflows to zero for lags far below the rounding error of `tmin`.
    fn eval_lag(&self, tmin: f64, lag: f64) -> f64 {
        self.eval(tmin, tmin + lag)
    }

    /// Points in `t_min` or `t_max` where the kernel varies sharply.
    fn hints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Characteristic lag scale for breakpoints in `t_max - t_min`.
    fn lag_scale(&self) -> f64 {
        1e-3
    }
}

/// `f_h` as a min/max kernel.
#[derive(Debug, Clone)]
pub struct FhKernel(pub PhiKernel);

impl MinMaxKernel for FhKernel {
    fn eval(&self, tmin: f64, tmax: f64) -> f64 {
        self.0.eval(tmax - tmin)
    }

    fn eval_lag(&self, _tmin: f64, lag: f64) -> f64 {
        self.0.eval(lag)
    }

    fn lag_scale(&self) -> f64 {
        self.0.h * self.0.h
    }
}

/// `g_{h,t}` as a min/max kernel.
#[derive(Debug, Clone)]
pub struct GhtKernel {
    pub phi: PhiKernel,
    pub t: f64,
}

impl MinMaxKernel for GhtKernel {
    fn eval(&self, tmin: f64, tmax: f64) -> f64 {
        let p = &self.phi;
        let a = if self.t > tmin { p.eval(self.t - tmin) } else { 0.0 };
        let b = if tmax > 0.0 { p.eval(tmax) } else { 0.0 };
        -a + p.eval(self.t) - b
    }

    fn hints(&self) -> Vec<f64> {
        vec![0.0, self.t]
    }

    fn lag_scale(&self) -> f64 {
        self.phi.h * self.phi.h
    }
}

/// `f_h + g_{h,t}`.
#[derive(Debug, Clone)]
pub struct SumKernel {
    pub f: FhKernel,
    pub g: GhtKernel,
}

impl MinMaxKernel for SumKernel {
    fn eval(&self, tmin: f64, tmax: f64) -> f64 {
        self.f.eval(tmin, tmax) + self.g.eval(tmin, tmax)
    }

    fn eval_lag(&self, tmin: f64, lag: f64) -> f64 {
        self.f.eval_lag(tmin, lag) + self.g.eval_lag(tmin, lag)
    }

    fn hints(&self) -> Vec<f64> {
        self.g.hints()
    }

    fn lag_scale(&self) -> f64 {
        self.f.lag_scale()
    }
}

/// Any closure `(t_min, t_max) -> value`.
pub struct FnKernel<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> MinMaxKernel for FnKernel<F> {
    fn eval(&self, tmin: f64, tmax: f64) -> f64 {
        (self.0)(tmin, tmax)
    }
}

/// `⟨k₁ 1_{[0,t]^{2m}}, k₂ 1_{[0,s]^{2m}}⟩`, reduced to
/// `(2m)! ∫∫_{0<t₁<t₂<s} k₁ k₂ (t₂-t₁)^{2m-2}/(2m-2)! dt₁ dt₂`.
pub fn minmax_inner_product(
    k1: &dyn MinMaxKernel,
    k2: &dyn MinMaxKernel,
    m: usize,
    s: f64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<Estimate> {
    ensure(m >= 1, || "chaos order m must be at least 1".into())?;
    ensure(s > 0.0 && s <= t && t <= 1.0, || {
        format!("need 0 < s <= t <= 1, got s={s}, t={t}")
    })?;
    q.validate()?;
    let pow = (2 * m - 2) as i32;
    let weight = factorial(2 * m) / factorial(2 * m - 2);
    let scale = k1.lag_scale().min(k2.lag_scale()).max(1e-300);
    let mut hints: Vec<f64> = k1.hints();
    hints.extend(k2.hints());

    let mut lag_breaks = Vec::new();
    let mut b = scale * 2f64.powi(-12);
    while b < s {
        lag_breaks.push(b);
        b *= 4.0;
    }

    let pass = |inner_abs: f64, rel_tol: f64| -> Result<Estimate> {
        let outer_cfg = QuadratureConfig {
            abs_tol: 1e-300,
            rel_tol,
            ..*q
        };
        let inner_cfg = QuadratureConfig {
            abs_tol: inner_abs,
            ..outer_cfg
        };
        let mut failure: Option<Error> = None;
        let outer = integrate_points(
            |tau: f64| {
                let len = s - tau;
                if len <= 0.0 {
                    return 0.0;
                }
                let inner_f = |t1: f64| k1.eval_lag(t1, tau) * k2.eval_lag(t1, tau);
                let mut ib = Vec::new();
                for &p in &hints {
                    // sharp features where t₁ or t₂ sits near a hint point
                    for j in 0..14 {
                        let d = scale * 4f64.powi(j);
                        ib.extend_from_slice(&[p - d, p + d, p - tau - d, p - tau + d]);
                    }
                }
                match integrate_points(inner_f, 0.0, len, &ib, &inner_cfg) {
                    Ok(e) => tau.powi(pow) * e.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            s,
            &lag_breaks,
            &outer_cfg,
        );
        if let Some(e) = failure {
            return Err(e.context("inner integral of min/max inner product"));
        }
        outer
    };

    // A coarse pass fixes the scale; inner errors are then held to a tenth
    // of the requested tolerance after the τ^{2m-2} weighting.
    let coarse = pass(1e-300, q.rel_tol.max(1e-4))?;
    let inner_abs = (0.1 * q.rel_tol * coarse.value.abs() * (pow + 1) as f64 / s.powi(pow + 1)).max(1e-300);
    Ok(pass(inner_abs, q.rel_tol)?.scale(weight))
}

/// Monte Carlo estimate of the contraction norm `‖f_h ⊗_r f_h‖²` on
/// `[0,t]^{2(n-r)}`, `n = 2m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionEstimate {
    pub m: usize,
    pub r: usize,
    pub h: f64,
    pub norm_sq: f64,
    pub norm_sq_se: f64,
    /// `norm_sq / (h⁸ ln²(1/h))`.
    pub ratio: f64,
    pub ratio_se: f64,
    /// `norm_sq / h⁸`.
    pub norm_over_h8: f64,
    pub n_mc: usize,
}

const MC_BLOCK: usize = 512;

/// Contraction ratio `‖f_h ⊗_r f_h‖² / (h⁸ ln²(1/h))`.
///
/// The norm equals `∫_{[0,t]^{2n}} ∏_{i,j∈{1,2}} Φ_h(range(sⁱ ∪ tʲ))` where
/// `s¹, s²` are groups of `r` points and `t¹, t²` groups of `n-r` points.
/// Writing the `2n` points as `a + R·Y` with `R` their range, the integral
/// over `R` is done by quadrature for every sampled shape `Y`; only the
/// shape is Monte Carlo.
pub fn contraction_ratio(
    m: usize,
    r: usize,
    h: f64,
    t: f64,
    n_mc: usize,
    seed: u64,
) -> Result<ContractionEstimate> {
    let n = 2 * m;
    ensure(m >= 1, || "chaos order m must be at least 1".into())?;
    ensure(r >= 1 && r < n, || format!("r must lie in 1..={}, got {r}", n - 1))?;
    ensure(n_mc > 0, || "n_mc must be positive".into())?;
    ensure(h > 0.0 && h < 1.0, || format!("h must lie in (0, 1), got {h}"))?;
    ensure(t > 0.0 && t <= 1.0, || format!("t must lie in (0, 1], got {t}"))?;
    let phi = PhiKernel::new(m, h)?;
    let npts = 2 * n;
    let gl = GaussLegendre::new(8);
    // log-radius panels
    let lo = (t * 1e-14).ln();
    let hi = t.ln();
    let panels = ((hi - lo) / 0.4).ceil() as usize;
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * gl.len());
    for p in 0..panels {
        let a = lo + p as f64 * width;
        for (v, w) in gl.mapped(a, a + width) {
            let rr = v.exp();
            let nf = npts as f64;
            let dens = nf * (nf - 1.0) * rr.powi(npts as i32 - 2) * (t - rr) * rr;
            nodes.push((rr, w * dens));
        }
    }
    let groups = |y: &[f64]| -> [f64; 4] {
        let range = |idx: &mut dyn Iterator<Item = usize>| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in idx {
                lo = lo.min(y[i]);
                hi = hi.max(y[i]);
            }
            hi - lo
        };
        let s1 = 0..r;
        let s2 = r..2 * r;
        let t1 = 2 * r..2 * r + (n - r);
        let t2 = 2 * r + (n - r)..npts;
        [
            range(&mut s1.clone().chain(t1.clone())),
            range(&mut s1.chain(t2.clone())),
            range(&mut s2.clone().chain(t1)),
            range(&mut s2.chain(t2)),
        ]
    };

    let blocks = n_mc.div_ceil(MC_BLOCK);
    let sums: Vec<(f64, f64, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let count = MC_BLOCK.min(n_mc - b * MC_BLOCK);
            let mut y = vec![0.0; npts];
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..count {
                for v in y.iter_mut() {
                    *v = rng.random::<f64>();
                }
                let i0 = rng.random_range(0..npts);
                let mut i1 = rng.random_range(0..npts - 1);
                if i1 >= i0 {
                    i1 += 1;
                }
                y[i0] = 0.0;
                y[i1] = 1.0;
                let ells = groups(&y);
                let mut g = 0.0;
                for &(rr, w) in &nodes {
                    let mut prod = w;
                    for &l in &ells {
                        prod *= phi.eval(rr * l);
                    }
                    g += prod;
                }
                s += g;
                s2 += g * g;
            }
            (s, s2, count)
        })
        .collect();
    let (mut s, mut s2, mut cnt) = (0.0, 0.0, 0usize);
    for (a, b, c) in sums {
        s += a;
        s2 += b;
        cnt += c;
    }
    let nf = cnt as f64;
    let mean = s / nf;
    let var = if cnt > 1 {
        ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let se = (var / nf).sqrt();
    let h8 = h.powi(8);
    let l2 = (1.0 / h).ln().powi(2);
    Ok(ContractionEstimate {
        m,
        r,
        h,
        norm_sq: mean,
        norm_sq_se: se,
        ratio: mean / (h8 * l2),
        ratio_se: se / (h8 * l2),
        norm_over_h8: mean / h8,
        n_mc: cnt,
    })
}

/// A coordinate multi-index `𝐢 ∈ {1,2}^n` with `n` even.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexVector(Vec<u8>);

impl IndexVector {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        ensure(!entries.is_empty() && entries.len() % 2 == 0, || {
            format!("index vector length must be even and positive, got {}", entries.len())
        })?;
        ensure(entries.iter().all(|&e| e == 1 || e == 2), || {
            "index entries must be 1 or 2".into()
        })?;
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of entries equal to 1 and to 2.
    pub fn counts(&self) -> (usize, usize) {
        let a = self.0.iter().filter(|&&e| e == 1).count();
        (a, self.0.len() - a)
    }
}

/// `Φ_{𝐢,h}(t,s) = ∫_{ℝ²} (∏ ξ_{i_k}) (1 - cos⟨h,ξ⟩) |ξ|^{-4} e^{-(t-s)|ξ|²/2} dξ`
/// in polar coordinates: trapezoid rule in the angle (the integrand is
/// smooth and periodic), adaptive quadrature in the radius.
pub fn phi_2d(i: &IndexVector, h: [f64; 2], t: f64, s: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(s < t, || format!("need s < t, got s={s}, t={t}"))?;
    ensure(h[0] != 0.0 || h[1] != 0.0, || "h must be non-zero".into())?;
    q.validate()?;
    let tau = t - s;
    let n = i.len();
    let (a, b) = i.counts();
    if a % 2 == 1 && h[0] == 0.0 || b % 2 == 1 && h[1] == 0.0 {
        // odd in the coordinate that does not enter ⟨h,ξ⟩
        return Ok(Estimate::zero());
    }
    let rmax = (80.0 / tau).sqrt();
    let radial = |c: f64| -> Result<Estimate> {
        let f = |rho: f64| {
            let osc = 1.0 - (rho * c).cos();
            rho.powi(n as i32 - 3) * osc * (-0.5 * tau * rho * rho).exp()
        };
        let mut breaks = Vec::new();
        if c != 0.0 {
            let step = 2.0 * PI / c.abs();
            let mut x = step;
            while x < rmax && breaks.len() < 2000 {
                breaks.push(x);
                x += step;
            }
        }
        integrate_points(f, 0.0, rmax, &breaks, q)
    };
    let trap = |nth: usize| -> Result<Estimate> {
        let mut acc = Estimate::zero();
        let w = 2.0 * PI / nth as f64;
        for th in periodic_grid(nth) {
            let (sn, cs) = th.sin_cos();
            let ang = cs.powi(a as i32) * sn.powi(b as i32);
            if ang == 0.0 {
                continue;
            }
            let r = radial(h[0] * cs + h[1] * sn)?;
            acc = acc.add(r.scale(ang * w));
        }
        Ok(acc)
    };
    let coarse = trap(64)?;
    let fine = trap(128)?;
    Ok(Estimate {
        value: fine.value,
        abs_err: fine.abs_err + (fine.value - coarse.value).abs(),
        evals: coarse.evals + fine.evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phi_reference_value() {
        let q = QuadratureConfig::default();
        let v = phi_1d(1, 0.1, 0.0, 1.0, &q).unwrap().value;
        // ∫₀^h (h-y) e^{-y²/2} dy / √(2π) from the Taylor series of e^{-y²/2}
        let h: f64 = 0.1;
        let mut series = 0.0;
        let mut c = 1.0;
        for j in 0..10 {
            let p = 2 * j as i32;
            series += c * h.powi(p + 2) / ((p + 1) * (p + 2)) as f64;
            c *= -0.5 / (j + 1) as f64;
        }
        series /= (2.0 * PI).sqrt();
        assert_relative_eq!(v, series, max_relative = 1e-12);
    }

    #[test]
    fn fast_kernel_matches_quadrature() {
        let q = QuadratureConfig::default();
        for m in 1..=4 {
            for &h in &[0.3, 0.05, 1e-3] {
                let k = PhiKernel::new(m, h).unwrap();
                for &tau in &[1e-8, 1e-5, 1e-3, 0.02, 0.5, 1.0] {
                    let a = k.eval(tau);
                    let b = phi_1d(m, h, 0.0, tau, &q).unwrap().value;
                    assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-300);
                }
            }
        }
    }

    #[test]
    fn kernels_reject_degenerate_times() {
        let spec = ChaosSpec::new(1, 0.1, 1.0).unwrap();
        assert!(kernel_f_h(&spec, &[0.3, 0.3]).is_err());
        assert!(kernel_f_h(&spec, &[0.3]).is_err());
        assert!(kernel_f_h(&spec, &[0.3, 1.2]).is_err());
        assert!(phi_1d(1, 0.1, 0.5, 0.5, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn g_collapses_at_extremes() {
        let spec = ChaosSpec::new(1, 0.1, 1.0).unwrap();
        let g = kernel_g_h_t(&spec, &[0.0, 1.0]).unwrap();
        let p = kernel_f_h(&spec, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(g, -p, max_relative = 1e-14);
    }

    #[test]
    fn index_vector_validation() {
        assert!(IndexVector::new(vec![1, 2, 1]).is_err());
        assert!(IndexVector::new(vec![1, 3]).is_err());
        assert_eq!(IndexVector::new(vec![1, 2, 2, 2]).unwrap().counts(), (1, 3));
    }

    #[test]
    fn contraction_rejects_bad_arguments() {
        assert!(contraction_ratio(2, 0, 0.1, 1.0, 10, 1).is_err());
        assert!(contraction_ratio(2, 4, 0.1, 1.0, 10, 1).is_err());
        assert!(contraction_ratio(2, 2, 0.1, 1.0, 0, 1).is_err());
    }
}
