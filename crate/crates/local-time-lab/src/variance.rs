//! Limit variances of the chaos components.
//!
//! In one dimension the variance of the `2m`-th chaos term behaves like
//! `σ_m² s h⁴ ln(1/h)`; the log comes from the function `a(h)` below. In two
//! dimensions it behaves like `σ_m² |h|²` with `σ_m²` given by the
//! functional `L^φ_{2m}`.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::erf::erf;
use statrs::function::gamma::gamma_ur;

use crate::chaos::{minmax_inner_product, FhKernel, GhtKernel, PhiKernel, SumKernel};
use crate::error::{ensure, Error, Result};
use crate::gaussian::{factorial, hermite_all, hermite_at_zero};
use crate::quad::{integrate_points, Estimate, GaussLegendre, QuadratureConfig};
use crate::riesz::power_cos_tail;

/// How a limit variance is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// Variance divided by `s h⁴ ln(1/h)` (one dimension).
    H4LogInvH,
    /// Variance divided by `s |h|²` (two dimensions).
    HSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceLimit {
    pub m: usize,
    pub sigma_sq: f64,
    pub abs_err: f64,
    pub normalization: Normalization,
    /// The un-normalised limit the constant multiplies.
    pub raw_limit: f64,
    /// Constant chained onto `raw_limit` to produce `sigma_sq`.
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitVector2 {
    pub e: [f64; 2],
}

impl UnitVector2 {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let n = x.hypot(y);
        ensure((n - 1.0).abs() <= 1e-12, || {
            format!("({x}, {y}) is not a unit vector (norm {n})")
        })?;
        Ok(Self { e: [x, y] })
    }

    pub fn from_angle(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self { e: [c, s] }
    }

    pub fn angle(&self) -> f64 {
        self.e[1].atan2(self.e[0])
    }
}

/// `∫₀^u H_k(z) e^{-z²/2} dz` for `k ≥ 0`.
fn hermite_gauss_integral(k: usize, u: f64, hs_u: &[f64], hs_0: &[f64]) -> f64 {
    if k == 0 {
        (PI / 2.0).sqrt() * erf(u / std::f64::consts::SQRT_2)
    } else {
        -(hs_u[k - 1] * (-0.5 * u * u).exp() - hs_0[k - 1]) / k as f64
    }
}

/// Inner function `F(u) = ∫₀^u e^{-z²/2} H_n(z) (1 - z/u) dz`.
struct InnerF {
    n: usize,
    gl: GaussLegendre,
    hs_0: Vec<f64>,
}

impl InnerF {
    fn new(n: usize) -> Self {
        Self {
            n,
            gl: GaussLegendre::new(24),
            hs_0: (0..=n + 1).map(hermite_at_zero).collect(),
        }
    }

    fn eval(&self, u: f64) -> f64 {
        let n = self.n;
        if u < 1.0 {
            // the closed form below loses digits to cancellation for small u
            return self.gl.integrate(
                |z| {
                    let hs = hermite_all(n, z);
                    (-0.5 * z * z).exp() * hs[n] * (1.0 - z / u)
                },
                0.0,
                u,
            );
        }
        let hs_u = hermite_all(n + 1, u);
        let j = |k: usize| hermite_gauss_integral(k, u, &hs_u, &self.hs_0);
        // z H_n = (n+1) H_{n+1} + H_{n-1}
        let mut first = (n + 1) as f64 * j(n + 1);
        if n >= 1 {
            first += j(n - 1);
        }
        j(n) - first / u
    }
}

/// `a(h) = ∫_{h/√s}^∞ u^{-3} (s - h²/u²) F(u)² du` with
/// `F(u) = ∫₀^u e^{-z²/2} H_{2m-2}(z)(1 - z/u) dz`.
///
/// The inner integral is evaluated in closed form (or by a fixed rule for
/// small `u`); the outer one adaptively in `v = ln u`.
pub fn a_of_h(m: usize, h: f64, s: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(m >= 1, || "chaos order m must be at least 1".into())?;
    ensure(s > 0.0 && s <= 1.0, || format!("s must lie in (0, 1], got {s}"))?;
    ensure(h > 0.0 && h < s.sqrt(), || {
        format!("need 0 < h < √s, got h={h}, s={s}")
    })?;
    q.validate()?;
    let inner = InnerF::new(2 * m - 2);
    let v0 = (h / s.sqrt()).ln();
    let v1 = 1e6f64.ln();
    let mut breaks = Vec::new();
    let mut b = v0.ceil();
    while b < v1 {
        if b > v0 {
            breaks.push(b);
        }
        b += 1.0;
    }
    let h2 = h * h;
    let body = integrate_points(
        |v: f64| {
            let u = v.exp();
            let f = inner.eval(u);
            (s - h2 / (u * u)) * f * f / (u * u)
        },
        v0,
        v1,
        &breaks,
        q,
    )?;
    // Beyond u = 1e6, F(u) → F(∞) and the integrand is ~ s F(∞)² u^{-3}.
    let f_inf = inner.eval(1e6);
    let tail = s * f_inf * f_inf / (2.0 * 1e12);
    Ok(Estimate {
        value: body.value + tail,
        abs_err: body.abs_err + tail * 1e-6,
        evals: body.evals,
    })
}

/// Limiting slope of `a(h)` against `ln(1/h)`: `(s/4) H_{2m-2}(0)²`.
pub fn a_of_h_slope(m: usize, s: f64) -> f64 {
    let h0 = hermite_at_zero(2 * m - 2);
    0.25 * s * h0 * h0
}

/// `A_h(s,s) = ‖f_h 1_{[0,s]^{2m}}‖²` through `a(h)`:
/// `(2m)!(2m-2)! h⁴ a(h) / π`.
pub fn a_h_from_a(m: usize, h: f64, s: f64, q: &QuadratureConfig) -> Result<Estimate> {
    let a = a_of_h(m, h, s, q)?;
    Ok(a.scale(factorial(2 * m) * factorial(2 * m - 2) * h.powi(4) / PI))
}

/// Factor turning an L² pairing of kernels into the covariance of the
/// corresponding chaos components: `256/(2m)!`.
pub fn chaos_covariance_factor(m: usize) -> f64 {
    256.0 / factorial(2 * m)
}

/// `σ_m² = (256/π) (2m-2)! / (2^{2m} ((m-1)!)²)`.
///
/// Computed through `σ_1² = 64/π` and `σ_{m+1}²/σ_m² = (2m-1)/(2m)` so that
/// large `m` does not overflow.
pub fn sigma_sq_1d(m: usize) -> Result<VarianceLimit> {
    ensure(m >= 1, || "chaos order m must be at least 1".into())?;
    let mut v = 64.0 / PI;
    for k in 1..m {
        v *= (2 * k - 1) as f64 / (2 * k) as f64;
    }
    Ok(VarianceLimit {
        m,
        sigma_sq: v,
        abs_err: 0.0,
        normalization: Normalization::H4LogInvH,
        // lim A_h(s,s) / ((2m)! s h⁴ ln(1/h)) = (2m-2)! H_{2m-2}(0)² / (4π)
        raw_limit: v / 256.0,
        constant: 256.0,
    })
}

/// Partial sums `S(M) = Σ_{m≤M} σ_m²` for `M = 1..=m_max`.
pub fn partial_sums(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `x² ln|x|`, zero at the origin.
fn x2logx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x * x.abs().ln()
    }
}

/// `φ(x,y)` in closed form:
/// `-½[x² ln|x| + y² ln|y| - ½(x+y)² ln|x+y| - ½(x-y)² ln|x-y|]`.
pub fn varphi_closed_form(x: f64, y: f64) -> f64 {
    -0.5 * (x2logx(x) + x2logx(y) - 0.5 * x2logx(x + y) - 0.5 * x2logx(x - y))
}

/// `φ(x,y) = ∫₀^∞ u^{-3}(1 - cos ux)(1 - cos uy) du` by quadrature.
pub fn varphi_2d(x: f64, y: f64, q: &QuadratureConfig) -> Result<Estimate> {
    ensure(x.is_finite() && y.is_finite(), || "φ arguments must be finite".into())?;
    q.validate()?;
    let (ax, ay) = (x.abs(), y.abs());
    if ax == 0.0 || ay == 0.0 {
        return Ok(Estimate::zero());
    }
    let lo = ax.min(ay);
    let hi = ax.max(ay);
    let cut = 60.0 / lo;
    let mut breaks = Vec::new();
    let step = 2.0 * PI / hi;
    if cut / step < 2000.0 {
        let mut b = step;
        while b < cut {
            breaks.push(b);
            b += step;
        }
    }
    let half = |t: f64| {
        let s = (0.5 * t).sin();
        2.0 * s * s
    };
    let body = integrate_points(
        |u: f64| half(u * x) * half(u * y) / (u * u * u),
        0.0,
        cut,
        &breaks,
        q,
    )?;
    // (1-cos a)(1-cos b) = 1 - cos a - cos b + ½cos(a+b) + ½cos(a-b)
    let mut tail = power_cos_tail(-3.0, 0.0, cut, q)?;
    for (c, k) in [(-1.0, x), (-1.0, y), (0.5, x + y), (0.5, x - y)] {
        tail = tail.add(power_cos_tail(-3.0, k, cut, q)?.scale(c));
    }
    Ok(body.add(tail))
}

/// Resolution of the angular rule used for `L^φ_{2m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AngularRule {
    /// Gauss-Legendre nodes in the polar angle of `(|ξ|, |η|)`.
    pub psi: usize,
    /// Trapezoid nodes for each of the directions of `ξ` and `η`.
    pub theta: usize,
}

impl AngularRule {
    pub const fn new(psi: usize, theta: usize) -> Self {
        Self { psi, theta }
    }

    fn halved(self) -> Self {
        Self {
            psi: (self.psi / 2).max(4),
            theta: (self.theta / 2).max(8),
        }
    }
}

/// Rules tried in turn by [`l_2m_phi`].
pub const ANGULAR_LADDER: [AngularRule; 4] = [
    AngularRule::new(16, 64),
    AngularRule::new(32, 128),
    AngularRule::new(64, 256),
    AngularRule::new(128, 512),
];

/// Radial weights `∫₀^∞ r^{4m-3} e^{-r²/2} (…) dr` when φ is cut off at `c`:
/// `φ_c(x,y) = φ(x,y) - ∫₀^c u^{-3}(1-cos ux)(1-cos uy) du`, and the radial
/// integral of the removed piece is `2^{2m-2} (2m-2)! ∫ k(v) Q(2m-1, v²/2c²) dv`
/// with `k(v) = v^{-3}(1-cos vx)(1-cos vy)`.
struct Cutoff {
    nodes: Vec<(f64, f64)>,
}

impl Cutoff {
    fn new(m: usize, c: f64) -> Self {
        let a = (2 * m - 1) as f64;
        let vmax = c * (2.0 * (a + 12.0 + 6.0 * a.sqrt())).sqrt();
        let gl = GaussLegendre::new(24);
        let panels = 4;
        let w = vmax / panels as f64;
        let mut nodes = Vec::new();
        for p in 0..panels {
            for (v, wt) in gl.mapped(p as f64 * w, (p + 1) as f64 * w) {
                nodes.push((v, wt * gamma_ur(a, v * v / (2.0 * c * c)) / (v * v * v)));
            }
        }
        Self { nodes }
    }

    fn removed(&self, x: f64, y: f64) -> f64 {
        let mut s = 0.0;
        for &(v, w) in &self.nodes {
            let a = (0.5 * v * x).sin();
            let b = (0.5 * v * y).sin();
            s += w * 4.0 * a * a * b * b;
        }
        s
    }
}

/// `L^φ_{2m,e}` on a fixed angular rule.
///
/// With `ξ = ρ(cos θ, sin θ)`, `η = σ(cos ω, sin ω)`, `ρ = r cos ψ`,
/// `σ = r sin ψ` and the 2-homogeneity of φ, the radial integral is
/// `2^{2m-2}(2m-2)!` and what remains is
/// `∫₀^{π/2} (cos ψ sin ψ)^{2m-3} ∫∫ cos^{2m}(θ-ω) φ(cos ψ cos(θ-a), sin ψ cos(ω-a)) dθ dω dψ`.
pub fn l_2m_phi_rule(m: usize, e: UnitVector2, phi_cutoff: Option<f64>, rule: AngularRule) -> Result<f64> {
    ensure(m >= 1, || "chaos order m must be at least 1".into())?;
    ensure(rule.psi >= 2 && rule.theta >= 4, || "angular rule too coarse".into())?;
    if let Some(c) = phi_cutoff {
        ensure(c > 0.0 && c.is_finite(), || format!("φ cutoff must be positive, got {c}"))?;
    }
    let cut = phi_cutoff.map(|c| Cutoff::new(m, c));
    let a = e.angle();
    let n = rule.theta;
    let dth = 2.0 * PI / n as f64;
    let grid: Vec<f64> = (0..n).map(|k| (k as f64 * dth - a).cos()).collect();
    let cd: Vec<f64> = (0..n)
        .map(|k| (k as f64 * dth).cos().powi(2 * m as i32))
        .collect();
    let gl = GaussLegendre::new(rule.psi);
    let mut total = 0.0;
    for (t, w) in gl.mapped(0.0, 1.0) {
        // ψ = (π/2)(3t² - 2t³) clusters nodes at both ends
        let psi = 0.5 * PI * (3.0 * t * t - 2.0 * t * t * t);
        let dpsi = 0.5 * PI * 6.0 * t * (1.0 - t) * w;
        let (sp, cp) = psi.sin_cos();
        let weight = (cp * sp).powi(2 * m as i32 - 3) * dpsi;
        let xs: Vec<f64> = grid.iter().map(|g| cp * g).collect();
        let ys: Vec<f64> = grid.iter().map(|g| sp * g).collect();
        let xl: Vec<f64> = xs.iter().map(|&v| x2logx(v)).collect();
        let yl: Vec<f64> = ys.iter().map(|&v| x2logx(v)).collect();
        let mut acc = 0.0;
        for i in 0..n {
            let (x, xli) = (xs[i], xl[i]);
            for j in 0..n {
                let y = ys[j];
                let mut phi = -0.5 * (xli + yl[j] - 0.5 * x2logx(x + y) - 0.5 * x2logx(x - y));
                if let Some(c) = &cut {
                    phi -= c.removed(x, y);
                }
                acc += cd[(i + n - j) % n] * phi;
            }
        }
        total += weight * acc * dth * dth;
    }
    Ok(total * 4f64.powi(m as i32 - 1) * factorial(2 * m - 2))
}

/// `L^φ_{2m,e} = ∫∫ ⟨ξ,η⟩^{2m} |ξ|^{-4}|η|^{-4} φ(⟨ξ,e⟩,⟨η,e⟩) e^{-(|ξ|²+|η|²)/2} dξ dη`.
///
/// Refines along [`ANGULAR_LADDER`] until two successive rules agree to the
/// requested tolerance; the error bar is their difference.
pub fn l_2m_phi(m: usize, e: UnitVector2, phi_cutoff: Option<f64>, q: &QuadratureConfig) -> Result<Estimate> {
    q.validate()?;
    let mut prev = l_2m_phi_rule(m, e, phi_cutoff, ANGULAR_LADDER[0].halved())?;
    let mut evals = 0;
    for rule in ANGULAR_LADDER {
        let v = l_2m_phi_rule(m, e, phi_cutoff, rule)?;
        evals += rule.psi * rule.theta * rule.theta;
        let err = (v - prev).abs();
        if err <= q.abs_tol.max(q.rel_tol * v.abs()) {
            return Ok(Estimate { value: v, abs_err: err, evals });
        }
        prev = v;
    }
    let last = ANGULAR_LADDER[ANGULAR_LADDER.len() - 1];
    let coarse = l_2m_phi_rule(m, e, phi_cutoff, last.halved())?;
    Err(Error::NoConvergence {
        context: format!("L^φ_{{{}}} angular cubature", 2 * m),
        value: prev,
        error: (prev - coarse).abs(),
    })
}

/// `σ_m² = 2 L^φ_{2m} / (2m-2)!` for the two-dimensional problem. The
/// overall constant is only fixed up to a universal factor.
pub fn sigma_sq_2d(m: usize, q: &QuadratureConfig) -> Result<VarianceLimit> {
    let l = l_2m_phi(m, UnitVector2::from_angle(0.0), None, q)?;
    let c = 2.0 / factorial(2 * m - 2);
    Ok(VarianceLimit {
        m,
        sigma_sq: c * l.value,
        abs_err: c * l.abs_err,
        normalization: Normalization::HSquared,
        raw_limit: l.value,
        constant: c,
    })
}

/// `E|X_t - X_s|² / (h⁴ ln(1/h))` for the `2m`-th chaos term, from the
/// pairings `⟨(f_h + g_{h,t})1_{[0,t]}, (f_h + g_{h,s})1_{[0,s]}⟩`.
pub fn increment_variance_bound(m: usize, h: f64, s: f64, t: f64, q: &QuadratureConfig) -> Result<f64> {
    ensure((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t), || {
        format!("times must lie in [0, 1], got s={s}, t={t}")
    })?;
    ensure(s <= t, || format!("need s <= t, got s={s}, t={t}"))?;
    ensure(h > 0.0 && h < 1.0, || format!("h must lie in (0, 1), got {h}"))?;
    if s == t {
        return Ok(0.0);
    }
    let phi = PhiKernel::new(m, h)?;
    let kernel = |u: f64| SumKernel {
        f: FhKernel(phi.clone()),
        g: GhtKernel { phi: phi.clone(), t: u },
    };
    let kt = kernel(t);
    let tt = minmax_inner_product(&kt, &kt, m, t, t, q)?.value;
    let (ss, ts) = if s > 0.0 {
        let ks = kernel(s);
        (
            minmax_inner_product(&ks, &ks, m, s, s, q)?.value,
            minmax_inner_product(&kt, &ks, m, s, t, q)?.value,
        )
    } else {
        (0.0, 0.0)
    };
    let norm = h.powi(4) * (1.0 / h).ln();
    Ok(chaos_covariance_factor(m) * (tt + ss - 2.0 * ts) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inner_function_branches_agree() {
        let q = QuadratureConfig::default();
        for n in [0usize, 2, 4, 6] {
            let f = InnerF::new(n);
            for &u in &[0.5, 0.99, 1.0, 2.0, 7.0] {
                let direct = integrate_points(
                    |z| (-0.5 * z * z).exp() * hermite_all(n, z)[n] * (1.0 - z / u),
                    0.0,
                    u,
                    &[],
                    &q,
                )
                .unwrap()
                .value;
                assert_relative_eq!(f.eval(u), direct, max_relative = 1e-9, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sigma_ratio_identity() {
        for m in 1..=10 {
            let a = sigma_sq_1d(m).unwrap().sigma_sq;
            let b = sigma_sq_1d(m + 1).unwrap().sigma_sq;
            assert_relative_eq!(b / a, (2 * m - 1) as f64 / (2 * m) as f64, max_relative = 1e-15);
        }
        assert_relative_eq!(sigma_sq_1d(1).unwrap().sigma_sq, 64.0 / PI);
    }

    #[test]
    fn closed_form_sigma_matches_factorials() {
        for m in 1..=8 {
            let fm = factorial(m - 1);
            let closed = 256.0 / PI * factorial(2 * m - 2) / (4f64.powi(m as i32) * fm * fm);
            assert_relative_eq!(sigma_sq_1d(m).unwrap().sigma_sq, closed, max_relative = 1e-13);
        }
    }

    #[test]
    fn varphi_special_values() {
        let q = QuadratureConfig::default();
        assert_relative_eq!(varphi_2d(1.0, 1.0, &q).unwrap().value, 2f64.ln(), max_relative = 1e-8);
        assert_eq!(varphi_2d(0.7, 0.0, &q).unwrap().value, 0.0);
        assert_relative_eq!(varphi_closed_form(1.0, 1.0), 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn unit_vector_validation() {
        assert!(UnitVector2::new(1.0, 0.1).is_err());
        assert!(UnitVector2::new(0.6, 0.8).is_ok());
    }

    #[test]
    fn a_of_h_rejects_large_h() {
        let q = QuadratureConfig::default();
        assert!(a_of_h(1, 1.0, 1.0, &q).is_err());
        assert!(a_of_h(1, 0.8, 0.5, &q).is_err());
    }

    #[test]
    fn increment_at_equal_times_is_zero() {
        let q = QuadratureConfig::default();
        assert_eq!(increment_variance_bound(1, 0.01, 0.4, 0.4, &q).unwrap(), 0.0);
        assert!(increment_variance_bound(1, 0.01, 0.6, 0.4, &q).is_err());
    }
}
