//! Singular integrals over products of simplexes.
//!
//! Three integrals of products of inverse powers of ranges are finite iff
//! `δ < 1/4`. This module checks that numerically from ε-regularised values
//! and reproduces the block decomposition of the eight-point integral
//!
//! `I_α = ∫_D ∏_{k=1}^4 |J_k|^{-α} dx`, `D = {x ∈ [0,1]^8 : x_i < x_{i+4}}`,
//!
//! with `J₁ = [x₃∧x₁, x₇∨x₅]`, `J₂ = [x₄∧x₁, x₈∨x₅]`, `J₃ = [x₃∧x₂, x₇∨x₆]`,
//! `J₄ = [x₄∧x₂, x₈∨x₆]`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::rng::substream;
use crate::stats::Moments;

const MC_BLOCK: usize = 4096;

/// Four rank intervals `[m_i, n_i]` with `1 ≤ m_i < n_i ≤ 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockFamily {
    blocks: [(u8, u8); 4],
}

impl BlockFamily {
    pub fn new(blocks: [(u8, u8); 4]) -> Result<Self> {
        for &(m, n) in &blocks {
            ensure(1 <= m && m < n && n <= 8, || {
                format!("block [{m}, {n}] is not an interval inside 1..=8")
            })?;
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> [(u8, u8); 4] {
        self.blocks
    }

    /// Same family with the blocks sorted, used as a key.
    pub fn canonical(&self) -> Self {
        let mut b = self.blocks;
        b.sort();
        Self { blocks: b }
    }

    /// Image under the rank reflection `i ↦ 9 - i` (the change of variables
    /// `x ↦ 1 - x` leaves the integral unchanged).
    pub fn reflected(&self) -> Self {
        let mut b = self.blocks;
        for blk in &mut b {
            *blk = (9 - blk.1, 9 - blk.0);
        }
        Self { blocks: b }
    }

    fn card(b: (u8, u8)) -> usize {
        (b.1 - b.0 + 1) as usize
    }

    fn union_card(a: (u8, u8), b: (u8, u8)) -> usize {
        (1..=8u8)
            .filter(|&i| (a.0..=a.1).contains(&i) || (b.0..=b.1).contains(&i))
            .count()
    }

    /// Structural constraints every family coming from the integral obeys:
    /// each block has at least four points, any two blocks cover at least
    /// six, and rank 1 (rank 8) is the left (right) end of exactly two blocks.
    pub fn check_invariants(&self) -> Result<()> {
        let b = &self.blocks;
        for &blk in b {
            ensure(Self::card(blk) >= 4, || {
                format!("block [{}, {}] has fewer than 4 points", blk.0, blk.1)
            })?;
        }
        for i in 0..4 {
            for j in i + 1..4 {
                ensure(Self::union_card(b[i], b[j]) >= 6, || {
                    format!("blocks {i} and {j} cover fewer than 6 points")
                })?;
            }
        }
        let lefts = b.iter().filter(|x| x.0 == 1).count();
        let rights = b.iter().filter(|x| x.1 == 8).count();
        ensure(lefts == 2 && rights == 2, || {
            format!("ranks 1 and 8 must each end exactly two blocks, got {lefts} and {rights}")
        })
    }

    /// `true` when every block of `self` contains a distinct block of
    /// `other`, so that `I_{α,self} ≤ I_{α,other}` for all `α ≥ 0`.
    pub fn dominated_by(&self, other: &BlockFamily) -> bool {
        let perms = permutations4();
        perms.iter().any(|p| {
            (0..4).all(|i| {
                let e = other.blocks[p[i]];
                let f = self.blocks[i];
                e.0 >= f.0 && e.1 <= f.1
            })
        })
    }

    /// Number of blocks equal to the full range `[1, 8]`.
    pub fn full_blocks(&self) -> usize {
        self.blocks.iter().filter(|&&b| b == (1, 8)).count()
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Block family of the simplex `x_{σ(1)} < … < x_{σ(8)}`.
///
/// `sigma[r]` is the (1-based) index of the variable of rank `r + 1`.
/// Returns `Ok(None)` when that simplex is not inside `D`.
pub fn blocks_from_permutation(sigma: &[usize]) -> Result<Option<BlockFamily>> {
    ensure(sigma.len() == 8, || format!("expected 8 entries, got {}", sigma.len()))?;
    let mut rank = [0u8; 9];
    for (r, &v) in sigma.iter().enumerate() {
        ensure((1..=8).contains(&v) && rank[v] == 0, || {
            format!("{sigma:?} is not a permutation of 1..=8")
        })?;
        rank[v] = r as u8 + 1;
    }
    if (1..=4).any(|i| rank[i] > rank[i + 4]) {
        return Ok(None);
    }
    let j = |a: usize, b: usize, c: usize, d: usize| (rank[a].min(rank[b]), rank[c].max(rank[d]));
    BlockFamily::new([j(3, 1, 7, 5), j(4, 1, 8, 5), j(3, 2, 7, 6), j(4, 2, 8, 6)]).map(Some)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Summary of the enumeration over all orderings of eight points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    pub accepted: usize,
    /// Distinct block families (canonical form) with the number of orderings
    /// producing each.
    pub families: Vec<(BlockFamily, usize)>,
}

pub fn enumerate_blocks() -> Enumeration {
    let mut sigma: Vec<usize> = (1..=8).collect();
    let mut families: BTreeMap<BlockFamily, usize> = BTreeMap::new();
    let mut accepted = 0;
    loop {
        if let Ok(Some(f)) = blocks_from_permutation(&sigma) {
            accepted += 1;
            *families.entry(f.canonical()).or_default() += 1;
        }
        if !next_permutation(&mut sigma) {
            break;
        }
    }
    Enumeration {
        accepted,
        families: families.into_iter().collect(),
    }
}

/// The five extremal families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Extremal {
    B0,
    B1,
    B2,
    B3,
    B4,
}

impl Extremal {
    pub const ALL: [Extremal; 5] = [Extremal::B0, Extremal::B1, Extremal::B2, Extremal::B3, Extremal::B4];

    pub fn family(self) -> BlockFamily {
        let b = match self {
            Extremal::B0 => [(1, 4), (1, 6), (5, 8), (3, 8)],
            Extremal::B1 => [(1, 8), (1, 4), (5, 8), (2, 5)],
            Extremal::B2 => [(1, 8), (1, 4), (5, 8), (3, 6)],
            Extremal::B3 => [(1, 8), (1, 8), (2, 5), (4, 7)],
            Extremal::B4 => [(1, 8), (1, 8), (2, 7), (3, 6)],
        };
        BlockFamily { blocks: b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalMatch {
    /// 1, 2 or 3: ranks 1 and 8 share no block, one block, or two blocks.
    pub case: u8,
    pub extremal: Extremal,
    /// Whether domination holds only after the reflection `i ↦ 9 - i`.
    pub reflected: bool,
}

impl ExtremalMatch {
    /// The dominating family in the orientation that contains the input.
    pub fn dominating_family(&self) -> BlockFamily {
        let f = self.extremal.family();
        if self.reflected {
            f.reflected()
        } else {
            f
        }
    }
}

/// Extremal family dominating `fam`, preferring the ones named for its case.
pub fn extremal_bound(fam: &BlockFamily) -> Result<ExtremalMatch> {
    fam.check_invariants()?;
    let case = fam.full_blocks() as u8 + 1;
    let preferred: &[Extremal] = match case {
        1 => &[Extremal::B0],
        2 => &[Extremal::B1, Extremal::B2],
        _ => &[Extremal::B3, Extremal::B4],
    };
    for list in [preferred, &Extremal::ALL[..]] {
        for &e in list {
            for reflected in [false, true] {
                let m = ExtremalMatch { case, extremal: e, reflected };
                if fam.dominated_by(&m.dominating_family()) {
                    return Ok(m);
                }
            }
        }
    }
    Err(Error::invalid(format!("no extremal family dominates {:?}", fam.blocks)))
}

/// Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

fn mc_blocks<F>(n_mc: usize, seed: u64, f: F) -> Moments
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let blocks = n_mc.div_ceil(MC_BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let count = MC_BLOCK.min(n_mc - b * MC_BLOCK);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(f(&mut rng));
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

const FACT8: f64 = 40320.0;

/// `I_{α,B}` over the ordered simplex with each factor clamped at `eps`:
/// `∫_{0<x₁<…<x₈<1} ∏ max(x_{n_i} - x_{m_i}, ε)^{-α} dx`.
pub fn block_integral(alpha: f64, fam: &BlockFamily, eps: f64, n_mc: usize, seed: u64) -> Result<McEstimate> {
    ensure(alpha >= 0.0 && alpha.is_finite(), || format!("alpha must be non-negative, got {alpha}"))?;
    ensure(eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    ensure(n_mc > 0, || "n_mc must be positive".into())?;
    let b = fam.blocks;
    let m = mc_blocks(n_mc, seed, |rng| {
        let mut x = [0.0f64; 8];
        for v in &mut x {
            *v = rng.random();
        }
        x.sort_by(f64::total_cmp);
        b.iter()
            .map(|&(lo, hi)| (x[hi as usize - 1] - x[lo as usize - 1]).max(eps).powf(-alpha))
            .product()
    });
    Ok(McEstimate {
        value: m.mean / FACT8,
        se: m.std_error() / FACT8,
        n: m.n,
    })
}

/// The regularised `I_α` sampled directly on `D`.
pub fn direct_regularized_integral(alpha: f64, eps: f64, n_mc: usize, seed: u64) -> Result<McEstimate> {
    ensure(alpha >= 0.0 && alpha.is_finite(), || format!("alpha must be non-negative, got {alpha}"))?;
    ensure(eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    ensure(n_mc > 0, || "n_mc must be positive".into())?;
    let m = mc_blocks(n_mc, seed, |rng| {
        let mut x = [0.0f64; 9];
        for v in &mut x[1..] {
            *v = rng.random();
        }
        if (1..=4).any(|i| x[i] > x[i + 4]) {
            return 0.0;
        }
        let len = |a: usize, b: usize, c: usize, d: usize| {
            (x[c].max(x[d]) - x[a].min(x[b])).max(eps).powf(-alpha)
        };
        len(3, 1, 7, 5) * len(4, 1, 8, 5) * len(3, 2, 7, 6) * len(4, 2, 8, 6)
    });
    Ok(McEstimate {
        value: m.mean,
        se: m.std_error(),
        n: m.n,
    })
}

/// `Σ_σ I_{α,B^σ}` over all accepted orderings, one Monte Carlo run per
/// distinct family weighted by its multiplicity.
pub fn enumerated_regularized_integral(alpha: f64, eps: f64, n_mc: usize, seed: u64) -> Result<McEstimate> {
    let en = enumerate_blocks();
    let mut value = 0.0;
    let mut var = 0.0;
    let mut n = 0;
    for (k, (fam, count)) in en.families.iter().enumerate() {
        let e = block_integral(alpha, fam, eps, n_mc, seed.wrapping_add(1 + k as u64))?;
        let c = *count as f64;
        value += c * e.value;
        var += (c * e.se).powi(2);
        n += e.n;
    }
    Ok(McEstimate { value, se: var.sqrt(), n })
}

/// The three singular integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularIntegral {
    /// Four free points, exponent `3δ`.
    Sing1,
    /// Two free points and two ordered pairs, exponent `5δ`.
    Sing2,
    /// Four ordered pairs, exponent `7δ`.
    Sing3,
}

impl SingularIntegral {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sing1" => Ok(Self::Sing1),
            "sing2" => Ok(Self::Sing2),
            "sing3" => Ok(Self::Sing3),
            _ => Err(Error::invalid(format!("unknown integral '{s}' (sing1|sing2|sing3)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sing1 => "sing1",
            Self::Sing2 => "sing2",
            Self::Sing3 => "sing3",
        }
    }

    fn points(self) -> usize {
        match self {
            Self::Sing1 => 4,
            Self::Sing2 => 6,
            Self::Sing3 => 8,
        }
    }

    /// Point groups whose ranges enter the product: `(σⁱ, τʲ)` for `i, j ∈ {1,2}`.
    fn groups(self) -> &'static [&'static [usize]; 4] {
        match self {
            Self::Sing1 => &[&[0, 2], &[0, 3], &[1, 2], &[1, 3]],
            Self::Sing2 => &[&[0, 2, 3], &[0, 4, 5], &[1, 2, 3], &[1, 4, 5]],
            Self::Sing3 => &[&[0, 1, 4, 5], &[0, 1, 6, 7], &[2, 3, 4, 5], &[2, 3, 6, 7]],
        }
    }

    pub fn exponent_multiplier(self) -> f64 {
        match self {
            Self::Sing1 => 3.0,
            Self::Sing2 => 5.0,
            Self::Sing3 => 7.0,
        }
    }

    /// The ordered pairs are sampled unordered; each halves the volume.
    fn ordering_factor(self) -> f64 {
        match self {
            Self::Sing1 => 1.0,
            Self::Sing2 => 0.25,
            Self::Sing3 => 1.0 / 16.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    Converges,
    Diverges,
    Inconclusive,
}

impl VerdictStatus {
    pub fn letter(self) -> char {
        match self {
            Self::Converges => 'C',
            Self::Diverges => 'D',
            Self::Inconclusive => '?',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictConfig {
    pub n_mc: usize,
    pub seed: u64,
    /// Decades of ε examined before any decision.
    pub min_decades: usize,
    /// Decades after which an undecided run is reported as inconclusive.
    pub max_decades: usize,
    /// Relative size of the extrapolated remaining growth accepted as converged.
    pub cauchy_tol: f64,
    /// Per-decade decay of the increments below which they count as not decaying.
    pub min_decay: f64,
    /// Largest change (and error) of the log increment ratio between
    /// successive decades for the ratio to count as settled.
    pub stability_tol: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            n_mc: 20_000,
            seed: 1,
            min_decades: 6,
            max_decades: 30,
            cauchy_tol: 0.01,
            min_decay: 0.02,
            stability_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidencePoint {
    pub eps: f64,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub integral: SingularIntegral,
    pub delta: f64,
    pub status: VerdictStatus,
    /// Slope of the regularised value against `ln(1/ε)` over the last decade.
    pub fitted_growth: f64,
    pub fitted_growth_se: f64,
    /// Geometric mean ratio of successive per-decade increments.
    pub increment_ratio: f64,
    pub increment_ratio_se: f64,
    /// Extrapolated remaining growth relative to the last value.
    pub remaining_fraction: f64,
    pub evidence: Vec<EvidencePoint>,
}

/// `∫_lo^hi e^{lnc} r^p dr` for `0 ≤ lo ≤ hi`, in a form that neither
/// overflows nor cancels.
fn power_piece(lo: f64, hi: f64, p: f64, lnc: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let a = p + 1.0;
    if lo == 0.0 {
        debug_assert!(a > 0.0);
        return (lnc + a * hi.ln()).exp() / a;
    }
    let l = (hi / lo).ln();
    if a == 0.0 {
        lnc.exp() * l
    } else if a > 0.0 {
        (lnc + a * hi.ln()).exp() * (-(-a * l).exp_m1()) / a
    } else {
        (lnc + a * lo.ln()).exp() * (-(a * l).exp_m1()) / (-a)
    }
}

/// `∫₀¹ k(k-1) r^{k-2}(1-r) ∏ᵢ max(r ℓᵢ, ε)^{-α} dr`: the regularised
/// integrand integrated over the overall scale of a point cloud whose shape
/// has group ranges `ℓ`.
fn scale_integral(ells: &[f64; 4], eps: f64, alpha: f64, k: usize) -> f64 {
    let mut ls = *ells;
    ls.sort_by(|a, b| b.total_cmp(a));
    // factor i is unclamped for r > ε/ℓᵢ; largest ℓ first
    let mut edges = [0.0f64; 6];
    for i in 0..4 {
        edges[i + 1] = (eps / ls[i]).min(1.0);
    }
    edges[5] = 1.0;
    let kf = k as f64;
    let mut total = 0.0;
    let mut ln_unclamped = 0.0;
    for j in 0..5 {
        if j > 0 {
            ln_unclamped += -alpha * ls[j - 1].ln();
        }
        let (lo, hi) = (edges[j], edges[j + 1]);
        if hi <= lo {
            continue;
        }
        let lnc = -alpha * (4 - j) as f64 * eps.ln() + ln_unclamped;
        let q = kf - 2.0 - j as f64 * alpha;
        total += power_piece(lo, hi, q, lnc) - power_piece(lo, hi, q + 1.0, lnc);
    }
    kf * (kf - 1.0) * total
}

/// Sampled shapes: the group ranges of `k` uniform points conditioned to
/// have minimum 0 and maximum 1.
fn sample_shapes(which: SingularIntegral, n_mc: usize, seed: u64) -> Vec<[f64; 4]> {
    let k = which.points();
    let groups = which.groups();
    let blocks = n_mc.div_ceil(MC_BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, b as u64);
            let count = MC_BLOCK.min(n_mc - b * MC_BLOCK);
            let mut idx: Vec<usize> = (0..k).collect();
            (0..count)
                .map(|_| {
                    let mut y = [0.0f64; 8];
                    for v in y.iter_mut().take(k) {
                        *v = rng.random();
                    }
                    let (picked, _) = idx.partial_shuffle(&mut rng, 2);
                    y[picked[0]] = 0.0;
                    y[picked[1]] = 1.0;
                    let mut ells = [0.0; 4];
                    for (g, e) in groups.iter().zip(ells.iter_mut()) {
                        let lo = g.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
                        let hi = g.iter().map(|&i| y[i]).fold(f64::NEG_INFINITY, f64::max);
                        *e = hi - lo;
                    }
                    ells
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Regularised value of one of the singular integrals at each `ε` in `eps`,
/// with common random numbers across `ε`. Returns per-sample values
/// (row-major, one row per sample).
fn regularized_samples(which: SingularIntegral, alpha: f64, shapes: &[[f64; 4]], eps: &[f64]) -> Vec<Vec<f64>> {
    let k = which.points();
    let f = which.ordering_factor();
    shapes
        .par_iter()
        .map(|ells| eps.iter().map(|&e| f * scale_integral(ells, e, alpha, k)).collect())
        .collect()
}

/// Mean of `f(row)` over rows with its standard error.
fn row_stat(rows: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let mut m = Moments::default();
    for r in rows {
        m.push(f(r));
    }
    (m.mean, m.std_error())
}

/// Regularised value of a singular integral at a single `ε`.
pub fn regularized_value(which: SingularIntegral, delta: f64, eps: f64, n_mc: usize, seed: u64) -> Result<McEstimate> {
    ensure(delta > 0.0, || format!("delta must be positive, got {delta}"))?;
    ensure(eps > 0.0, || format!("eps must be positive, got {eps}"))?;
    ensure(n_mc > 1, || "n_mc must be at least 2".into())?;
    let shapes = sample_shapes(which, n_mc, seed);
    let rows = regularized_samples(which, which.exponent_multiplier() * delta, &shapes, &[eps]);
    let (value, se) = row_stat(&rows, |r| r[0]);
    Ok(McEstimate { value, se, n: rows.len() as u64 })
}

/// Converges / diverges classification of a singular integral at `δ`.
///
/// The ε-regularised value `V(ε)` is computed on `ε = 10^{-1}, 10^{-2}, …`.
/// Its per-decade increments decay geometrically with ratio `ρ < 1` when the
/// integral is finite and stay bounded away from zero (`ρ ≥ 1`) otherwise.
/// Early decades are pre-asymptotic, so no decision is taken until the
/// single-decade ratio has settled. The run then converges when `ρ` is
/// significantly below `1 - min_decay` and the geometric tail of the
/// remaining increments is below `cauchy_tol` of the value (or the increments
/// have vanished to rounding), and diverges when the increments are
/// significantly positive and `ρ` is significantly above `1 - min_decay`.
/// Otherwise decades are added up to `max_decades`.
pub fn convergence_verdict(which: SingularIntegral, delta: f64, cfg: &VerdictConfig) -> Result<Verdict> {
    ensure(delta > 0.0 && delta.is_finite(), || format!("delta must be positive, got {delta}"))?;
    ensure(cfg.n_mc > 1, || "n_mc must be at least 2".into())?;
    ensure(cfg.min_decades >= 4 && cfg.max_decades >= cfg.min_decades, || {
        "need 4 <= min_decades <= max_decades".into()
    })?;
    let alpha = which.exponent_multiplier() * delta;
    let shapes = sample_shapes(which, cfg.n_mc, cfg.seed);
    let eps_of = |d: usize| 10f64.powi(-(d as i32));
    let mut eps: Vec<f64> = (1..=cfg.min_decades).map(eps_of).collect();
    let mut rows = regularized_samples(which, alpha, &shapes, &eps);
    let ln10 = std::f64::consts::LN_10;
    loop {
        let d = eps.len();
        let (v_last, _) = row_stat(&rows, |r| r[d - 1]);
        let (inc_last, inc_last_se) = row_stat(&rows, |r| r[d - 1] - r[d - 2]);
        // single-decade log ratios, delta-method errors (common random numbers)
        let log_ratio = |j: usize| {
            let (a, _) = row_stat(&rows, |r| r[j] - r[j - 1]);
            let (b, _) = row_stat(&rows, |r| r[j - 1] - r[j - 2]);
            let (_, se) = row_stat(&rows, |r| (r[j] - r[j - 1]) / a - (r[j - 1] - r[j - 2]) / b);
            ((a / b).ln(), se)
        };
        let (ln_rho, ln_rho_se) = log_ratio(d - 1);
        let (prev, prev_se) = log_ratio(d - 2);
        let stable = ln_rho.is_finite()
            && prev.is_finite()
            && (ln_rho - prev).abs() <= cfg.stability_tol
            && ln_rho_se.max(prev_se) <= cfg.stability_tol;
        let rho = ln_rho.exp();
        let remaining = if rho < 1.0 {
            inc_last * rho / (1.0 - rho) / v_last
        } else {
            f64::INFINITY
        };
        let saturated = inc_last <= 1e-12 * v_last;
        let decaying = (1.0 - cfg.min_decay).ln();
        let converges = saturated
            || (stable
                && ln_rho + 3.0 * ln_rho_se < decaying
                && remaining < cfg.cauchy_tol
                && inc_last / v_last < cfg.cauchy_tol);
        let diverges = stable && inc_last > 3.0 * inc_last_se && ln_rho - 3.0 * ln_rho_se > decaying;
        let status = if converges {
            Some(VerdictStatus::Converges)
        } else if diverges {
            Some(VerdictStatus::Diverges)
        } else if d >= cfg.max_decades {
            Some(VerdictStatus::Inconclusive)
        } else {
            None
        };
        if let Some(status) = status {
            let evidence = (0..d)
                .map(|j| {
                    let (value, se) = row_stat(&rows, |r| r[j]);
                    EvidencePoint { eps: eps[j], value, se }
                })
                .collect();
            return Ok(Verdict {
                integral: which,
                delta,
                status,
                fitted_growth: inc_last / ln10,
                fitted_growth_se: inc_last_se / ln10,
                increment_ratio: rho,
                increment_ratio_se: rho * ln_rho_se,
                remaining_fraction: remaining,
                evidence,
            });
        }
        let e = eps_of(d + 1);
        eps.push(e);
        let extra = regularized_samples(which, alpha, &shapes, &[e]);
        for (r, x) in rows.iter_mut().zip(extra) {
            r.push(x[0]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_ordering() {
        let f = blocks_from_permutation(&[1, 2, 3, 4, 5, 6, 7, 8]).unwrap().unwrap();
        assert_eq!(f.blocks(), [(1, 7), (1, 8), (2, 7), (2, 8)]);
        assert!(blocks_from_permutation(&[5, 1, 2, 3, 4, 6, 7, 8]).unwrap().is_none());
        assert!(blocks_from_permutation(&[1, 1, 3, 4, 5, 6, 7, 8]).is_err());
    }

    #[test]
    fn extremal_families_map_to_themselves() {
        assert_eq!(extremal_bound(&Extremal::B0.family()).unwrap().extremal, Extremal::B0);
        for e in Extremal::ALL {
            assert!(e.family().dominated_by(&e.family()));
        }
    }

    #[test]
    fn power_piece_matches_closed_forms() {
        assert_relative_eq!(power_piece(0.0, 0.5, 2.0, 0.0), 0.125 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(power_piece(0.1, 1.0, -1.0, 0.0), 10f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(power_piece(0.1, 1.0, -2.5, 1.0), 1f64.exp() * (0.1f64.powf(-1.5) - 1.0) / 1.5, max_relative = 1e-13);
    }

    #[test]
    fn scale_integral_without_clamping() {
        // ε → 0 with α = 0 leaves ∫ k(k-1) r^{k-2}(1-r) dr = 1
        let v = scale_integral(&[0.3, 0.5, 0.7, 1.0], 1e-30, 0.0, 6);
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        // fully clamped: ε^{-4α}
        let v = scale_integral(&[0.3, 0.5, 0.7, 1.0], 2.0, 0.5, 6);
        assert_relative_eq!(v, 2f64.powf(-2.0), max_relative = 1e-12);
    }
}
