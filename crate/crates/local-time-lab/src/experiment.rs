//! Experiment runner: configuration, scaling fits and report files.
//!
//! A config is a flat `key = value` text file; `#` starts a comment. Every
//! experiment reads `experiment`, an optional `output` base path and its
//! own keys (see [`ExperimentKind::keys`]); unknown keys are rejected.
//! Lists are comma separated.
//!
//! With `output = dir/name` a run writes `dir/name.csv` (data, header cells
//! `column[unit]@module`), `dir/name.json` (config echo, seeds, build
//! description, summary) and `dir/name.timing.json` (wall time). The first
//! two are byte-identical across repeated runs of the same build.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::brownian::{
    default_pair_delta, l2_modulus_H, map_paths, riesz_hamiltonian_from_pairs, PairHistogram,
};
use crate::chaos::{minmax_inner_product, FhKernel, GhtKernel, PhiKernel, SumKernel};
use crate::error::{ensure, Error, Result};
use crate::gaussian::factorial;
use crate::quad::QuadratureConfig;
use crate::rng::substream;
use crate::simplex::{convergence_verdict, SingularIntegral, VerdictConfig};
use crate::stats::{fit_line, fit_loglog, skew_kurtosis, variance_with_se, LineFit};
use crate::variance::{a_of_h, a_of_h_slope, chaos_covariance_factor, partial_sums, sigma_sq_1d, sigma_sq_2d};

/// Build description recorded in reports.
pub const BUILD_DESCRIBE: &str = env!("LTL_GIT_DESCRIBE");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RieszScaling,
    ModulusScaling,
    VarianceTable1d,
    VarianceTable2d,
    AppendixSweep,
    MixtureDiagnostic,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "riesz-scaling" => Self::RieszScaling,
            "modulus-scaling" => Self::ModulusScaling,
            "variance-table-1d" => Self::VarianceTable1d,
            "variance-table-2d" => Self::VarianceTable2d,
            "appendix-sweep" => Self::AppendixSweep,
            "mixture-diagnostic" => Self::MixtureDiagnostic,
            _ => return Err(Error::Config(format!("unknown experiment '{s}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RieszScaling => "riesz-scaling",
            Self::ModulusScaling => "modulus-scaling",
            Self::VarianceTable1d => "variance-table-1d",
            Self::VarianceTable2d => "variance-table-2d",
            Self::AppendixSweep => "appendix-sweep",
            Self::MixtureDiagnostic => "mixture-diagnostic",
        }
    }

    /// Accepted keys with their defaults.
    pub fn keys(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::RieszScaling => &[
                ("gamma", "0.8"),
                ("paths", "2000"),
                ("steps", "16384"),
                ("h", "0.4,0.2,0.1,0.05"),
                ("seed", "1"),
                ("tolerance", "0.3"),
            ],
            Self::ModulusScaling => &[
                ("paths", "2000"),
                ("steps", "16384"),
                ("h", "0.4,0.2,0.1,0.05"),
                ("seed", "1"),
                ("tolerance", "0.3"),
            ],
            Self::VarianceTable1d => &[
                ("m", "1,2"),
                ("h", "1e-3,1e-4,1e-5,1e-6"),
                ("s", "1"),
                ("rel_tol", "1e-9"),
            ],
            Self::VarianceTable2d => &[("m", "1,2,3,4,5,6,7,8,9,10,11,12"), ("rel_tol", "1e-5")],
            Self::AppendixSweep => &[
                ("integrals", "sing1,sing2,sing3"),
                ("delta", "0.15,0.2,0.24,0.26,0.3,0.5"),
                ("samples", "20000"),
                ("seed", "1"),
                ("max_decades", "30"),
            ],
            Self::MixtureDiagnostic => &[
                ("gamma", "0.8"),
                ("paths", "2000"),
                ("steps", "16384"),
                ("h", "0.1"),
                ("seed", "1"),
                ("null", "false"),
            ],
        }
    }

    /// Whether the experiment fits a slope and so needs a decreasing h-grid.
    fn is_scaling(self) -> bool {
        matches!(self, Self::RieszScaling | Self::ModulusScaling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Values for the experiment's keys, defaults filled in.
    pub params: BTreeMap<String, String>,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Config with every key at its default.
    pub fn new(experiment: ExperimentKind) -> Self {
        let params = experiment
            .keys()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self {
            experiment,
            params,
            output_path: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Result<Self> {
        ensure(self.params.contains_key(key), || {
            format!("experiment {} has no key '{key}'", self.experiment.name())
        })
        .map_err(|e| Error::Config(e.to_string()))?;
        self.params.insert(key.to_string(), value.to_string());
        Ok(self)
    }

    pub fn with_output(mut self, path: impl Into<PathBuf>) -> Self {
        self.output_path = Some(path.into());
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut output = None;
        let mut entries = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "experiment" => kind = Some(ExperimentKind::parse(v)?),
                "output" => output = Some(PathBuf::from(v)),
                _ => entries.push((no + 1, k.to_string(), v.to_string())),
            }
        }
        let kind = kind.ok_or_else(|| Error::Config("missing 'experiment' key".into()))?;
        let mut cfg = Self::new(kind);
        cfg.output_path = output;
        for (no, k, v) in entries {
            if !cfg.params.contains_key(&k) {
                return Err(Error::Config(format!(
                    "line {no}: unknown key '{k}' for experiment {}",
                    kind.name()
                )));
            }
            cfg.params.insert(k, v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("cannot parse {key} = '{v}'")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.raw(key)?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Config(format!("cannot parse entry '{s}' of {key}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.params.contains_key("h") {
            let hs: Vec<f64> = self.list("h")?;
            if hs.iter().any(|&h| !(h > 0.0)) {
                return bad("h values must be positive".into());
            }
            if hs.windows(2).any(|w| w[1] >= w[0]) {
                return bad("h-grid must be strictly decreasing".into());
            }
            if self.experiment.is_scaling() && hs.len() < 4 {
                return bad(format!("a slope fit needs at least 4 h values, got {}", hs.len()));
            }
        }
        for key in ["paths", "steps", "samples"] {
            if self.params.contains_key(key) && self.value::<usize>(key)? == 0 {
                return bad(format!("{key} must be positive"));
            }
        }
        if self.params.contains_key("gamma") {
            let g: f64 = self.value("gamma")?;
            if !(g > 0.75 && g < 1.0) {
                return bad(format!("gamma must lie in (3/4, 1), got {g}"));
            }
        }
        Ok(())
    }

    fn seeds(&self) -> Vec<u64> {
        self.params
            .get("seed")
            .and_then(|s| s.parse().ok())
            .into_iter()
            .collect()
    }
}

/// A CSV column: name, unit and the module that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub module: String,
}

fn col(name: &str, unit: &str, module: &str) -> Column {
    Column {
        name: name.into(),
        unit: unit.into(),
        module: module.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: Vec<Column>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn header(&self) -> String {
        self.columns
            .iter()
            .map(|c| format!("{}[{}]@{}", c.name, c.unit, c.module))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Writes the rows of a table as they are produced, so a failing run
/// leaves what it finished on disk.
struct TableSink {
    table: Table,
    file: Option<fs::File>,
}

impl TableSink {
    fn new(columns: Vec<Column>, cfg: &ExperimentConfig) -> Result<Self> {
        let table = Table::new(columns);
        let file = match &cfg.output_path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                let mut f = fs::File::create(with_ext(p, "csv"))?;
                writeln!(f, "{}", table.header())?;
                Some(f)
            }
            None => None,
        };
        Ok(Self { table, file })
    }

    fn push(&mut self, row: Vec<String>) -> Result<()> {
        if let Some(f) = &mut self.file {
            writeln!(f, "{}", row.join(","))?;
            f.flush()?;
        }
        self.table.rows.push(row);
        Ok(())
    }
}

fn with_ext(base: &FsPath, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub h: f64,
    pub statistic: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub target_slope: f64,
    pub tolerance: f64,
    pub verdict: SlopeVerdict,
    pub fit: LineFit,
}

impl ScalingReport {
    /// Pass iff the target lies in the slope interval widened by `tolerance`.
    pub fn from_points(points: Vec<ScalingPoint>, target_slope: f64, tolerance: f64) -> Result<Self> {
        let fit = fit_loglog(&points.iter().map(|p| (p.h, p.statistic)).collect::<Vec<_>>())?;
        let (lo, hi) = fit.slope_ci;
        let verdict = if target_slope >= lo - tolerance && target_slope <= hi + tolerance {
            SlopeVerdict::Pass
        } else {
            SlopeVerdict::Fail
        };
        Ok(Self {
            points,
            slope: fit.slope,
            slope_ci: fit.slope_ci,
            target_slope,
            tolerance,
            verdict,
            fit,
        })
    }

    /// `|slope - target| ≤ tolerance` on the point estimate.
    pub fn point_estimate_within(&self, tolerance: f64) -> bool {
        (self.slope - self.target_slope).abs() <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExperimentOutput {
    Scaling(ScalingReport),
    Table { table: Table, summary: Value },
}

impl ExperimentOutput {
    pub fn table(&self) -> Table {
        match self {
            Self::Scaling(r) => scaling_table(r),
            Self::Table { table, .. } => table.clone(),
        }
    }

    pub fn summary(&self) -> Value {
        match self {
            Self::Scaling(r) => serde_json::to_value(r).unwrap_or(Value::Null),
            Self::Table { summary, .. } => summary.clone(),
        }
    }
}

fn scaling_table(r: &ScalingReport) -> Table {
    let mut t = Table::new(vec![
        col("h", "space", "experiment-runner"),
        col("variance", "1", "brownian-lab"),
        col("std_error", "1", "brownian-lab"),
    ]);
    for p in &r.points {
        t.rows.push(vec![num(p.h), num(p.statistic), num(p.std_error)]);
    }
    t
}

/// Runs an experiment and, when `output_path` is set, writes its files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let name = cfg.experiment.name();
    let out = match cfg.experiment {
        ExperimentKind::RieszScaling => riesz_scaling(cfg).map(ExperimentOutput::Scaling),
        ExperimentKind::ModulusScaling => modulus_scaling(cfg).map(ExperimentOutput::Scaling),
        ExperimentKind::VarianceTable1d => variance_table_1d(cfg),
        ExperimentKind::VarianceTable2d => variance_table_2d(cfg),
        ExperimentKind::AppendixSweep => appendix_sweep(cfg),
        ExperimentKind::MixtureDiagnostic => mixture_diagnostic(cfg),
    }
    .map_err(|e| e.context(format!("experiment {name}")))?;
    if let Some(base) = &cfg.output_path {
        write_outputs(cfg, &out, base, start.elapsed().as_secs_f64())?;
    }
    Ok(out)
}

fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, base: &FsPath, wall: f64) -> Result<()> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    if let ExperimentOutput::Scaling(r) = out {
        fs::write(with_ext(base, "csv"), scaling_table(r).to_csv())?;
    }
    let report = json!({
        "experiment": cfg.experiment.name(),
        "config": cfg.params,
        "seeds": cfg.seeds(),
        "build": BUILD_DESCRIBE,
        "summary": out.summary(),
    });
    fs::write(with_ext(base, "json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let timing = json!({ "wall_time_seconds": wall });
    fs::write(with_ext(base, "timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    Ok(())
}

/// Variances of the Riesz Hamiltonian over the h-grid, all shifts from the
/// same paths.
fn riesz_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let gamma: f64 = cfg.value("gamma")?;
    let hs: Vec<f64> = cfg.list("h")?;
    let values = map_paths(1, cfg.value("paths")?, cfg.value("steps")?, 1.0, cfg.value("seed")?, |p| {
        let pairs = PairHistogram::new(p, default_pair_delta(p.dt))?;
        let r = riesz_hamiltonian_from_pairs(p, &pairs, &hs, gamma, p.dt.sqrt())?;
        Ok(r.into_iter().map(|x| x.value).collect::<Vec<_>>())
    })?;
    let points = variance_points(&hs, &values);
    ScalingReport::from_points(points, 7.0 - 4.0 * gamma, cfg.value("tolerance")?)
}

/// Variances of the L² modulus of local time; `Var H^h ∝ h³`.
fn modulus_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let hs: Vec<f64> = cfg.list("h")?;
    let values = map_paths(1, cfg.value("paths")?, cfg.value("steps")?, 1.0, cfg.value("seed")?, |p| {
        let w = p.dt.sqrt();
        hs.iter()
            .map(|&h| l2_modulus_H(p, h, w).map(|r| r.value))
            .collect::<Result<Vec<_>>>()
    })?;
    let points = variance_points(&hs, &values);
    ScalingReport::from_points(points, 3.0, cfg.value("tolerance")?)
}

fn variance_points(hs: &[f64], values: &[Vec<f64>]) -> Vec<ScalingPoint> {
    hs.iter()
        .enumerate()
        .map(|(j, &h)| {
            let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
            let (var, se) = variance_with_se(&col);
            ScalingPoint { h, statistic: var, std_error: se }
        })
        .collect()
}

/// Normalised variance of the `2m`-th chaos term over an h-grid, against
/// the limit `σ_m² s`.
fn variance_table_1d(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ms: Vec<usize> = cfg.list("m")?;
    let hs: Vec<f64> = cfg.list("h")?;
    let s: f64 = cfg.value("s")?;
    let q = QuadratureConfig::with_tolerances(1e-300, cfg.value("rel_tol")?);
    let mut sink = TableSink::new(
        vec![
            col("m", "1", "variance-asymptotics"),
            col("h", "space", "variance-asymptotics"),
            col("raw_limit_estimate", "1", "chaos-kernels"),
            col("normalized", "1", "variance-asymptotics"),
            col("sigma_sq_target", "1", "variance-asymptotics"),
            col("rel_dev", "1", "variance-asymptotics"),
        ],
        cfg,
    )?;
    let mut fits = Vec::new();
    for &m in &ms {
        let target = sigma_sq_1d(m)?.sigma_sq * s;
        let mut ln_inv = Vec::new();
        let mut a_vals = Vec::new();
        for &h in &hs {
            let phi = PhiKernel::new(m, h)?;
            let k = SumKernel {
                f: FhKernel(phi.clone()),
                g: GhtKernel { phi, t: s },
            };
            let raw = minmax_inner_product(&k, &k, m, s, s, &q)?.value;
            let l = (1.0 / h).ln();
            let normalized = chaos_covariance_factor(m) * raw / (h.powi(4) * l);
            sink.push(vec![
                m.to_string(),
                num(h),
                num(raw),
                num(normalized),
                num(target),
                num(normalized / target - 1.0),
            ])?;
            ln_inv.push(l);
            a_vals.push(a_of_h(m, h, s, &q)?.value);
        }
        let fit = if hs.len() >= 3 { Some(fit_line(&ln_inv, &a_vals)?) } else { None };
        fits.push(json!({
            "m": m,
            "a_of_h_slope": fit.map(|f| f.slope),
            "a_of_h_r_squared": fit.map(|f| f.r_squared),
            "a_of_h_slope_target": a_of_h_slope(m, s),
            "sigma_sq": sigma_sq_1d(m)?.sigma_sq,
            "sigma_sq_from_fit": fit.map(|f| chaos_covariance_factor(m) * f.slope * factorial(2 * m) * factorial(2 * m - 2) / std::f64::consts::PI / s),
        }));
    }
    Ok(ExperimentOutput::Table {
        table: sink.table,
        summary: json!({ "s": s, "fits": fits }),
    })
}

fn variance_table_2d(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ms: Vec<usize> = cfg.list("m")?;
    let q = QuadratureConfig::with_tolerances(1e-300, cfg.value("rel_tol")?);
    let mut sink = TableSink::new(
        vec![
            col("m", "1", "variance-asymptotics"),
            col("L_phi", "1", "variance-asymptotics"),
            col("sigma_sq", "1", "variance-asymptotics"),
            col("abs_err", "1", "variance-asymptotics"),
            col("partial_sum", "1", "variance-asymptotics"),
        ],
        cfg,
    )?;
    let mut sigmas = Vec::new();
    for &m in &ms {
        let v = sigma_sq_2d(m, &q)?;
        sigmas.push(v.sigma_sq);
        let s = partial_sums(&sigmas);
        sink.push(vec![
            m.to_string(),
            num(v.raw_limit),
            num(v.sigma_sq),
            num(v.abs_err),
            num(*s.last().unwrap()),
        ])?;
    }
    Ok(ExperimentOutput::Table {
        table: sink.table,
        summary: json!({ "note": "sigma_sq is fixed only up to a universal constant" }),
    })
}

fn appendix_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let names: Vec<String> = cfg.list("integrals")?;
    let deltas: Vec<f64> = cfg.list("delta")?;
    let vcfg = VerdictConfig {
        n_mc: cfg.value("samples")?,
        seed: cfg.value("seed")?,
        max_decades: cfg.value("max_decades")?,
        ..VerdictConfig::default()
    };
    let mut sink = TableSink::new(
        vec![
            col("integral", "name", "simplex-singular"),
            col("delta", "1", "simplex-singular"),
            col("status", "C|D|?", "simplex-singular"),
            col("increment_ratio", "per-decade", "simplex-singular"),
            col("increment_ratio_se", "per-decade", "simplex-singular"),
            col("fitted_growth", "per-ln(1/eps)", "simplex-singular"),
            col("decades", "1", "simplex-singular"),
            col("last_value", "1", "simplex-singular"),
        ],
        cfg,
    )?;
    let mut vectors = BTreeMap::new();
    for n in &names {
        let which = SingularIntegral::parse(n)?;
        let mut letters = String::new();
        for &d in &deltas {
            let v = convergence_verdict(which, d, &vcfg)?;
            letters.push(v.status.letter());
            sink.push(vec![
                which.name().to_string(),
                num(d),
                v.status.letter().to_string(),
                num(v.increment_ratio),
                num(v.increment_ratio_se),
                num(v.fitted_growth),
                v.evidence.len().to_string(),
                num(v.evidence.last().map(|e| e.value).unwrap_or(f64::NAN)),
            ])?;
        }
        vectors.insert(which.name().to_string(), letters);
    }
    Ok(ExperimentOutput::Table {
        table: sink.table,
        summary: json!({ "verdicts": vectors }),
    })
}

/// Per path `(α̂₁, (H - mean H)/h^{(7-4γ)/2})`, the regression of the squared
/// fluctuation on `α̂₁`, and the shape of `fluctuation/√α̂₁`.
pub fn mixture_diagnostic(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ensure(cfg.experiment == ExperimentKind::MixtureDiagnostic, || {
        "mixture_diagnostic needs a mixture-diagnostic config".into()
    })?;
    let gamma: f64 = cfg.value("gamma")?;
    let paths: usize = cfg.value("paths")?;
    let hs: Vec<f64> = cfg.list("h")?;
    ensure(hs.len() == 1, || "mixture-diagnostic takes a single h".into())
        .map_err(|e| Error::Config(e.to_string()))?;
    let h = hs[0];
    let seed: u64 = cfg.value("seed")?;
    let synthetic_null: bool = cfg.value("null")?;
    let per_path = map_paths(1, paths, cfg.value("steps")?, 1.0, seed, |p| {
        let pairs = PairHistogram::new(p, default_pair_delta(p.dt))?;
        let a = pairs.sum_distinct_even(|z| crate::gaussian::heat_kernel_unchecked(4.0 * p.dt, z));
        let hv = riesz_hamiltonian_from_pairs(p, &pairs, &[h], gamma, p.dt.sqrt())?[0].value;
        Ok((a, hv))
    })?;
    let alpha: Vec<f64> = per_path.iter().map(|x| x.0).collect();
    let fluct: Vec<f64> = if synthetic_null {
        let mut rng = substream(seed, u64::MAX);
        alpha
            .iter()
            .map(|a| a.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    } else {
        let mean = per_path.iter().map(|x| x.1).sum::<f64>() / paths as f64;
        let scale = h.powf(0.5 * (7.0 - 4.0 * gamma));
        per_path.iter().map(|x| (x.1 - mean) / scale).collect()
    };
    let mut sink = TableSink::new(
        vec![
            col("path", "index", "brownian-lab"),
            col("alpha_hat", "1", "brownian-lab"),
            col("fluctuation", "1", "brownian-lab"),
        ],
        cfg,
    )?;
    for (i, (a, f)) in alpha.iter().zip(&fluct).enumerate() {
        sink.push(vec![i.to_string(), num(*a), num(*f)])?;
    }
    let sq: Vec<f64> = fluct.iter().map(|f| f * f).collect();
    let reg = fit_line(&alpha, &sq)?;
    let z: Vec<f64> = fluct.iter().zip(&alpha).map(|(f, a)| f / a.sqrt()).collect();
    let (skew, kurt) = skew_kurtosis(&z);
    Ok(ExperimentOutput::Table {
        table: sink.table,
        summary: json!({
            "h": h,
            "gamma": gamma,
            "null": synthetic_null,
            "regression_slope": reg.slope,
            "regression_t": reg.t_stat(),
            "studentized_skewness": skew,
            "studentized_excess_kurtosis": kurt,
        }),
    })
}

/// Applies `LTL_THREADS` to the global worker pool, if set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LTL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("LTL_THREADS must be a positive integer, got '{v}'")))?;
        ensure(n >= 1, || "LTL_THREADS must be at least 1".into())?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Renders rows as CSV text with the standard header.
pub fn render_csv(columns: &[(&str, &str, &str)], rows: &[Vec<String>]) -> String {
    let mut t = Table::new(columns.iter().map(|(a, b, c)| col(a, b, c)).collect());
    t.rows = rows.to_vec();
    t.to_csv()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let cfg = ExperimentConfig::parse("experiment = riesz-scaling # c\npaths = 10\nh = 0.4, 0.2, 0.1, 0.05\n").unwrap();
        assert_eq!(cfg.params["paths"], "10");
        assert!(ExperimentConfig::parse("paths = 10").is_err());
        assert!(ExperimentConfig::parse("experiment = riesz-scaling\nfoo = 1").is_err());
        assert!(ExperimentConfig::parse("experiment = riesz-scaling\nh = 0.1, 0.2, 0.05, 0.01").is_err());
        assert!(ExperimentConfig::parse("experiment = riesz-scaling\nh = 0.4, 0.2, 0.1").is_err());
        assert!(ExperimentConfig::parse("experiment = riesz-scaling\ngamma = 0.6").is_err());
    }

    #[test]
    fn header_format() {
        let t = Table::new(vec![col("h", "space", "experiment-runner")]);
        assert_eq!(t.header(), "h[space]@experiment-runner");
    }
}
