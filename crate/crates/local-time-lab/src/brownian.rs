//! Brownian paths and path functionals.
//!
//! Double time integrals `∫∫ F(B_v - B_u) du dv` are evaluated from the
//! self-correlation of the occupation measure: path positions are deposited
//! on a fine grid with cloud-in-cell weights, the grid is autocorrelated by
//! FFT, and the kernel is summed against the resulting pair histogram. An
//! exact `O(N²)` evaluation is kept for testing.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{ensure, Result};
use crate::gaussian::heat_kernel_unchecked;
use crate::riesz::c_gamma_closed_form;
use crate::rng::substream;

/// A sampled path `B_{k dt}`, `k = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub dim: usize,
    pub dt: f64,
    /// Row-major positions, `dim` coordinates per time point.
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl Path {
    pub fn n_steps(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Position at step `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Every `factor`-th point of the same path.
    pub fn coarsen(&self, factor: usize) -> Result<Path> {
        ensure(factor >= 1 && self.n_steps() % factor == 0, || {
            format!("cannot coarsen {} steps by {factor}", self.n_steps())
        })?;
        let values = (0..=self.n_steps() / factor)
            .flat_map(|k| self.at(k * factor).to_vec())
            .collect();
        Ok(Path {
            dim: self.dim,
            dt: self.dt * factor as f64,
            values,
            seed: self.seed,
            stream: self.stream,
        })
    }

    fn require_1d(&self) -> Result<()> {
        ensure(self.dim == 1, || "this functional is defined for one-dimensional paths only".into())
    }
}

/// A path with i.i.d. `Normal(0, dt)` increments drawn from stream `stream`
/// of `seed`.
pub fn sample_path_stream(dim: usize, n_steps: usize, horizon: f64, seed: u64, stream: u64) -> Result<Path> {
    ensure(dim == 1 || dim == 2, || format!("dimension must be 1 or 2, got {dim}"))?;
    ensure(n_steps >= 1, || "n_steps must be at least 1".into())?;
    ensure(horizon > 0.0 && horizon <= 1.0, || format!("horizon must lie in (0, 1], got {horizon}"))?;
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut rng = substream(seed, stream);
    let mut values = vec![0.0; (n_steps + 1) * dim];
    for k in 1..=n_steps {
        for c in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            values[k * dim + c] = values[(k - 1) * dim + c] + sd * z;
        }
    }
    Ok(Path { dim, dt, values, seed, stream })
}

pub fn sample_path(dim: usize, n_steps: usize, horizon: f64, seed: u64) -> Result<Path> {
    sample_path_stream(dim, n_steps, horizon, seed, 0)
}

/// Runs `f` on paths `0..n_paths` of `seed` in parallel; results keep the
/// path order.
pub fn map_paths<R, F>(dim: usize, n_paths: usize, n_steps: usize, horizon: f64, seed: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&Path) -> Result<R> + Sync,
{
    ensure(n_paths >= 1, || "n_paths must be at least 1".into())?;
    (0..n_paths)
        .into_par_iter()
        .map(|i| sample_path_stream(dim, n_steps, horizon, seed, i as u64).and_then(|p| f(&p)))
        .collect()
}

/// Occupation density histogram. Bin `j` covers `[(j - ½)w, (j + ½)w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTimeField {
    /// Index of the first bin.
    pub first_bin: i64,
    pub bin_width: f64,
    pub mass: Vec<f64>,
    pub horizon: f64,
}

impl LocalTimeField {
    pub fn grid_min(&self) -> f64 {
        (self.first_bin as f64 - 0.5) * self.bin_width
    }

    pub fn grid_max(&self) -> f64 {
        self.grid_min() + self.mass.len() as f64 * self.bin_width
    }

    /// Estimated local time at level `x`.
    pub fn at(&self, x: f64) -> f64 {
        let j = (x / self.bin_width).round() as i64 - self.first_bin;
        if j < 0 || j as usize >= self.mass.len() {
            0.0
        } else {
            self.mass[j as usize]
        }
    }

    /// `Σ mass · bin_width`, which equals the horizon.
    pub fn total_time(&self) -> f64 {
        self.mass.iter().sum::<f64>() * self.bin_width
    }

    /// `∫ L(x) f(x) dx` with `f` sampled at bin centres.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(j, m)| m * f((self.first_bin + j as i64) as f64 * self.bin_width))
            .sum::<f64>()
            * self.bin_width
    }
}

/// Local time histogram of a 1-d path; within each step the path is taken
/// linear, so time is shared among the bins it crosses in proportion to
/// the length covered.
pub fn local_time_field(path: &Path, bin_width: f64) -> Result<LocalTimeField> {
    path.require_1d()?;
    ensure(bin_width > 0.0 && bin_width.is_finite(), || format!("bin width must be positive, got {bin_width}"))?;
    let w = bin_width;
    let idx = |x: f64| (x / w).round() as i64;
    let (lo, hi) = path
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let first = idx(lo);
    let mut time = vec![0.0; (idx(hi) - first + 1) as usize];
    let dt = path.dt;
    for k in 0..path.n_steps() {
        let (a, b) = (path.values[k], path.values[k + 1]);
        let (x0, x1) = if a <= b { (a, b) } else { (b, a) };
        let (j0, j1) = (idx(x0), idx(x1));
        if j0 == j1 || x1 == x0 {
            time[(j0 - first) as usize] += dt;
            continue;
        }
        let rate = dt / (x1 - x0);
        let mut left = x0;
        let mut spent = 0.0;
        for j in j0..j1 {
            let edge = (j as f64 + 0.5) * w;
            let t = (edge - left) * rate;
            time[(j - first) as usize] += t;
            spent += t;
            left = edge;
        }
        // the remainder goes to the last bin so each step deposits exactly dt
        time[(j1 - first) as usize] += dt - spent;
    }
    Ok(LocalTimeField {
        first_bin: first,
        bin_width: w,
        mass: time.into_iter().map(|t| t / w).collect(),
        horizon: path.horizon(),
    })
}

/// How a functional was discretised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discretization {
    pub dt: f64,
    pub bin_width: f64,
    /// Mollifier variance (or clip level for the Riesz kernel); zero if unused.
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathFunctionalResult {
    pub value: f64,
    pub discretization: Discretization,
    pub path_seed: u64,
    pub path_stream: u64,
}

fn result(path: &Path, value: f64, bin_width: f64, eps: f64) -> PathFunctionalResult {
    PathFunctionalResult {
        value,
        discretization: Discretization { dt: path.dt, bin_width, eps },
        path_seed: path.seed,
        path_stream: path.stream,
    }
}

/// `∫ (L_t(x+h) - L_t(x))² dx` from the local time histogram; shifts that
/// are not whole bins are interpolated linearly.
#[allow(non_snake_case)]
pub fn l2_modulus_H(path: &Path, h: f64, bin_width: f64) -> Result<PathFunctionalResult> {
    path.require_1d()?;
    if h == 0.0 {
        return Ok(result(path, 0.0, bin_width, 0.0));
    }
    ensure(h.abs() >= bin_width, || {
        format!("shift {h} is below the bin width {bin_width}")
    })?;
    let field = local_time_field(path, bin_width)?;
    let s = h / bin_width;
    let k = s.floor() as i64;
    let frac = s - k as f64;
    let m = &field.mass;
    let get = |j: i64| {
        if j < 0 || j as usize >= m.len() {
            0.0
        } else {
            m[j as usize]
        }
    };
    let n = m.len() as i64;
    let mut acc = 0.0;
    for j in (-k.abs() - 2)..(n + k.abs() + 2) {
        let shifted = (1.0 - frac) * get(j + k) + frac * get(j + k + 1);
        let d = shifted - get(j);
        acc += d * d;
    }
    Ok(result(path, acc * bin_width, bin_width, 0.0))
}

/// Histogram of the pairwise differences `B_v - B_u` weighted by `dt²`,
/// over all ordered pairs of left endpoints `u, v ∈ {0, dt, …, (N-1)dt}`.
#[derive(Debug, Clone)]
pub struct PairHistogram {
    pub delta: f64,
    /// `weights[i]` belongs to lag `(i - center) δ`.
    weights: Vec<f64>,
    center: usize,
    /// Contribution of the pairs `u = v` to each lag in `-1..=1`.
    diagonal: [f64; 3],
}

impl PairHistogram {
    /// Cloud-in-cell deposit at spacing `delta` and FFT autocorrelation.
    pub fn new(path: &Path, delta: f64) -> Result<Self> {
        path.require_1d()?;
        ensure(delta > 0.0, || format!("delta must be positive, got {delta}"))?;
        let n = path.n_steps();
        let pts = &path.values[..n];
        let lo = pts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let base = (lo / delta).floor();
        let cells = ((hi / delta).floor() - base) as usize + 2;
        let size = (2 * cells).next_power_of_two();
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        let w = path.dt;
        let mut diagonal = [0.0; 3];
        for &x in pts {
            let s = x / delta - base;
            let j = s.floor();
            let f = s - j;
            let j = j as usize;
            buf[j].re += w * (1.0 - f);
            buf[j + 1].re += w * f;
            let self_pair = w * w * f * (1.0 - f);
            diagonal[0] += self_pair;
            diagonal[1] += w * w * ((1.0 - f).powi(2) + f * f);
            diagonal[2] += self_pair;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(size).process(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.norm_sqr(), 0.0);
        }
        planner.plan_fft_inverse(size).process(&mut buf);
        let scale = 1.0 / size as f64;
        // lags -(cells-1)..=(cells-1); negative lags wrap to the end
        let center = cells - 1;
        let mut weights = vec![0.0; 2 * cells - 1];
        for (i, wt) in weights.iter_mut().enumerate() {
            let lag = i as i64 - center as i64;
            let idx = if lag >= 0 { lag as usize } else { size - (-lag) as usize };
            *wt = buf[idx].re * scale;
        }
        Ok(Self { delta, weights, center, diagonal })
    }

    /// `Σ_{u,v} F(B_v - B_u) dt²` over all ordered pairs.
    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * f((i as f64 - self.center as f64) * self.delta))
            .sum()
    }

    /// `Σ_{u<v} F(B_v - B_u) dt²` for even `F`.
    pub fn sum_distinct_even<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let diag = self.diagonal[1] * f(0.0) + (self.diagonal[0] + self.diagonal[2]) * f(self.delta);
        0.5 * (self.sum(&f) - diag)
    }
}

/// `Σ_{u,v} F(B_v - B_u) dt²` by direct summation over all ordered pairs.
pub fn pair_sum_exact<F: Fn(f64) -> f64>(path: &Path, f: F) -> Result<f64> {
    path.require_1d()?;
    let n = path.n_steps();
    let pts = &path.values[..n];
    let mut acc = 0.0;
    for &a in pts {
        for &b in pts {
            acc += f(b - a);
        }
    }
    Ok(acc * path.dt * path.dt)
}

/// Default spacing of the pair histogram, `√dt / 32`. Coarser grids bias
/// the Riesz bracket at small shifts by several percent.
pub fn default_pair_delta(dt: f64) -> f64 {
    dt.sqrt() / 32.0
}

/// `L²` modulus from the mollified representation
/// `∫∫ [2p_ε - p_ε(·+h) - p_ε(·-h)](B_v - B_u) du dv`.
pub fn l2_modulus_h_mollified(path: &Path, h: f64, eps: f64) -> Result<PathFunctionalResult> {
    path.require_1d()?;
    ensure(eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    let ph = PairHistogram::new(path, default_pair_delta(path.dt))?;
    let v = ph.sum(|z| {
        2.0 * heat_kernel_unchecked(eps, z) - heat_kernel_unchecked(eps, z + h) - heat_kernel_unchecked(eps, z - h)
    });
    Ok(result(path, v, ph.delta, eps))
}

/// `f_β(z) = max(|z|, clip)^{-β}`.
fn clipped_riesz(beta: f64, clip: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| z.abs().max(clip).powf(-beta)
}

fn riesz_bracket(gamma: f64, h: f64, clip: f64) -> impl Fn(f64) -> f64 {
    let f = clipped_riesz(2.0 * gamma - 1.0, clip);
    move |z| 2.0 * f(z) - f(z + h) - f(z - h)
}

fn check_gamma(gamma: f64, clip: f64) -> Result<()> {
    ensure(gamma > 0.75 && gamma < 1.0, || format!("gamma must lie in (3/4, 1), got {gamma}"))?;
    ensure(clip > 0.0, || format!("clip must be positive, got {clip}"))
}

/// `c_γ Σ_{u,v} [2f_β - f_β(·+h) - f_β(·-h)](B_v - B_u) dt²` with
/// `β = 2γ - 1` and `f_β` clipped at `clip`.
pub fn riesz_hamiltonian(path: &Path, h: f64, gamma: f64, clip: f64) -> Result<PathFunctionalResult> {
    path.require_1d()?;
    check_gamma(gamma, clip)?;
    let ph = PairHistogram::new(path, default_pair_delta(path.dt))?;
    Ok(riesz_hamiltonian_from_pairs(path, &ph, &[h], gamma, clip)?[0])
}

/// Riesz Hamiltonian at several shifts sharing one pair histogram.
pub fn riesz_hamiltonian_from_pairs(
    path: &Path,
    pairs: &PairHistogram,
    hs: &[f64],
    gamma: f64,
    clip: f64,
) -> Result<Vec<PathFunctionalResult>> {
    check_gamma(gamma, clip)?;
    let c = c_gamma_closed_form(gamma);
    Ok(hs
        .iter()
        .map(|&h| {
            let v = if h == 0.0 { 0.0 } else { c * pairs.sum(riesz_bracket(gamma, h, clip)) };
            result(path, v, pairs.delta, clip)
        })
        .collect())
}

/// The same functional by direct `O(N²)` summation.
pub fn riesz_hamiltonian_exact(path: &Path, h: f64, gamma: f64, clip: f64) -> Result<f64> {
    check_gamma(gamma, clip)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    Ok(c_gamma_closed_form(gamma) * pair_sum_exact(path, riesz_bracket(gamma, h, clip))?)
}

/// `Σ_{u<v} p_ε(B_v - B_u) dt²`.
pub fn self_intersection_lt(path: &Path, eps: f64) -> Result<PathFunctionalResult> {
    path.require_1d()?;
    ensure(eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    let ph = PairHistogram::new(path, default_pair_delta(path.dt))?;
    let v = ph.sum_distinct_even(|z| heat_kernel_unchecked(eps, z));
    Ok(result(path, v, ph.delta, eps))
}

/// `Σ_{u<v} p_ε(B_v - B_u) dt²` by direct summation.
pub fn self_intersection_lt_exact(path: &Path, eps: f64) -> Result<f64> {
    path.require_1d()?;
    ensure(eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    let n = path.n_steps();
    let pts = &path.values[..n];
    let mut acc = 0.0;
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            acc += heat_kernel_unchecked(eps, b - a);
        }
    }
    Ok(acc * path.dt * path.dt)
}

/// `∫₀^r e^{iξ(B_r - B_u)} du` by a left Riemann sum, with a partial last
/// cell when `r` is off the grid.
pub fn oscillatory_time_integral(path: &Path, r: f64, xi: f64) -> Result<Complex64> {
    path.require_1d()?;
    let horizon = path.horizon();
    ensure(r > 0.0 && r <= horizon * (1.0 + 1e-12), || {
        format!("r must lie in (0, {horizon}], got {r}")
    })?;
    let dt = path.dt;
    let n = path.n_steps();
    let full = ((r / dt).floor() as usize).min(n);
    let rest = (r - full as f64 * dt).max(0.0);
    let b_r = if full < n && rest > 0.0 {
        let a = path.values[full];
        a + (path.values[full + 1] - a) * rest / dt
    } else {
        path.values[full]
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..full {
        acc += Complex64::from_polar(dt, xi * (b_r - path.values[k]));
    }
    if rest > 0.0 {
        acc += Complex64::from_polar(rest, xi * (b_r - path.values[full]));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_basics() {
        let p = sample_path(1, 64, 1.0, 3).unwrap();
        assert_eq!(p.at(0), &[0.0]);
        assert_eq!(p, sample_path(1, 64, 1.0, 3).unwrap());
        assert!(sample_path(3, 64, 1.0, 3).is_err());
        assert!(sample_path(1, 0, 1.0, 3).is_err());
        assert!(sample_path(1, 8, 1.5, 3).is_err());
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.n_steps(), 16);
        assert_eq!(c.at(3), p.at(12));
    }

    #[test]
    fn ramp_occupation() {
        let n = 1000;
        let path = Path {
            dim: 1,
            dt: 1.0 / n as f64,
            values: (0..=n).map(|k| k as f64 / n as f64).collect(),
            seed: 0,
            stream: 0,
        };
        let f = local_time_field(&path, 0.01).unwrap();
        assert_relative_eq!(f.total_time(), 1.0, epsilon = 1e-12);
        for x in [0.1, 0.5, 0.9] {
            assert!((f.at(x) - 1.0).abs() < 1e-9);
        }
        assert_eq!(f.at(1.5), 0.0);
    }

    #[test]
    fn binned_pairs_match_exact() {
        let p = sample_path(1, 1024, 1.0, 9).unwrap();
        let eps = 4.0 * p.dt;
        let a = self_intersection_lt(&p, eps).unwrap().value;
        let b = self_intersection_lt_exact(&p, eps).unwrap();
        assert_relative_eq!(a, b, max_relative = 2e-3);
        let a = riesz_hamiltonian(&p, 0.1, 0.8, p.dt.sqrt()).unwrap().value;
        let b = riesz_hamiltonian_exact(&p, 0.1, 0.8, p.dt.sqrt()).unwrap();
        assert_relative_eq!(a, b, max_relative = 3e-3);
    }

    #[test]
    fn two_dimensional_paths_rejected_where_undefined() {
        let p = sample_path(2, 16, 1.0, 1).unwrap();
        assert!(self_intersection_lt(&p, 0.1).is_err());
        assert!(local_time_field(&p, 0.1).is_err());
    }

    #[test]
    fn oscillatory_integral_at_zero_frequency() {
        let p = sample_path(1, 100, 1.0, 2).unwrap();
        let v = oscillatory_time_integral(&p, 0.3456, 0.0).unwrap();
        assert_relative_eq!(v.re, 0.3456, epsilon = 1e-12);
        assert!(oscillatory_time_integral(&p, 1.2, 1.0).is_err());
    }
}
