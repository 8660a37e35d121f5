use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use local_time_lab::brownian::{
    default_pair_delta, l2_modulus_H, map_paths, riesz_hamiltonian_from_pairs, self_intersection_lt, PairHistogram,
};
use local_time_lab::chaos::{contraction_ratio, phi_1d, phi_2d, IndexVector};
use local_time_lab::error::Result;
use local_time_lab::experiment::{configure_threads, render_csv, run_experiment, ExperimentConfig, ExperimentKind};
use local_time_lab::quad::QuadratureConfig;
use local_time_lab::simplex::{convergence_verdict, SingularIntegral, VerdictConfig};

#[derive(Parser)]
#[command(name = "local-time-lab", version, about = "Local time, Riesz and chaos-kernel computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate one kernel value.
    KernelEval {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        /// Second shift component (phi2d).
        #[arg(long, default_value_t = 0.0)]
        h2: f64,
        #[arg(long, default_value_t = 0.3)]
        t1: f64,
        #[arg(long, default_value_t = 0.7)]
        t2: f64,
        /// Comma-separated index vector in {1,2} (phi2d).
        #[arg(long, default_value = "1,1")]
        indices: String,
        /// Contraction order (contraction).
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
    },
    /// Normalised chaos variances.
    VarianceTable {
        #[arg(long, default_value_t = 1)]
        dim: u8,
        #[arg(long, default_value = "1,2")]
        m_list: String,
        #[arg(long, default_value = "1e-3,1e-4,1e-5,1e-6")]
        h_list: String,
    },
    /// Monte Carlo path functionals, one CSV row per path.
    Simulate {
        #[arg(long, value_enum)]
        functional: Functional,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 0.8)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Convergence verdict for a singular simplex integral.
    AppendixCheck {
        #[arg(long)]
        integral: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Phi1d,
    Phi2d,
    Contraction,
}

#[derive(Clone, Copy, ValueEnum)]
enum Functional {
    #[value(name = "H")]
    H,
    Riesz,
    Alpha,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn e(x: f64) -> String {
    format!("{x:e}")
}

fn dispatch(cmd: Command) -> Result<String> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            Ok(run_experiment(&cfg)?.table().to_csv())
        }
        Command::KernelEval {
            family,
            m,
            h,
            h2,
            t1,
            t2,
            indices,
            r,
            samples,
            seed,
            rel_tol,
        } => {
            let q = QuadratureConfig::with_tolerances(1e-300, rel_tol);
            match family {
                Family::Phi1d => {
                    let v = phi_1d(m, h, t1, t2, &q)?;
                    Ok(render_csv(
                        &[("m", "1", "chaos-kernels"), ("h", "space", "chaos-kernels"), ("phi", "1", "chaos-kernels"), ("abs_err", "1", "chaos-kernels")],
                        &[vec![m.to_string(), e(h), e(v.value), e(v.abs_err)]],
                    ))
                }
                Family::Phi2d => {
                    let idx = indices
                        .split(',')
                        .map(|s| s.trim().parse::<u8>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| local_time_lab::error::Error::invalid(format!("bad index vector '{indices}'")))?;
                    let v = phi_2d(&IndexVector::new(idx)?, [h, h2], t2, t1, &q)?;
                    Ok(render_csv(
                        &[("indices", "list", "chaos-kernels"), ("phi", "1", "chaos-kernels"), ("abs_err", "1", "chaos-kernels")],
                        &[vec![indices.replace(',', " "), e(v.value), e(v.abs_err)]],
                    ))
                }
                Family::Contraction => {
                    let c = contraction_ratio(m, r, h, t2, samples, seed)?;
                    Ok(render_csv(
                        &[
                            ("m", "1", "chaos-kernels"),
                            ("r", "1", "chaos-kernels"),
                            ("h", "space", "chaos-kernels"),
                            ("ratio", "1", "chaos-kernels"),
                            ("ratio_se", "1", "chaos-kernels"),
                        ],
                        &[vec![m.to_string(), r.to_string(), e(h), e(c.ratio), e(c.ratio_se)]],
                    ))
                }
            }
        }
        Command::VarianceTable { dim, m_list, h_list } => {
            let cfg = match dim {
                1 => ExperimentConfig::new(ExperimentKind::VarianceTable1d)
                    .with("m", &m_list)?
                    .with("h", &h_list)?,
                2 => ExperimentConfig::new(ExperimentKind::VarianceTable2d).with("m", &m_list)?,
                _ => return Err(local_time_lab::error::Error::invalid(format!("dim must be 1 or 2, got {dim}"))),
            };
            Ok(run_experiment(&cfg)?.table().to_csv())
        }
        Command::Simulate {
            functional,
            paths,
            steps,
            h,
            gamma,
            seed,
        } => {
            let vals = map_paths(1, paths, steps, 1.0, seed, |p| match functional {
                Functional::H => Ok(l2_modulus_H(p, h, p.dt.sqrt())?.value),
                Functional::Riesz => {
                    let ph = PairHistogram::new(p, default_pair_delta(p.dt))?;
                    Ok(riesz_hamiltonian_from_pairs(p, &ph, &[h], gamma, p.dt.sqrt())?[0].value)
                }
                Functional::Alpha => Ok(self_intersection_lt(p, 4.0 * p.dt)?.value),
            })?;
            let rows: Vec<Vec<String>> = vals.iter().enumerate().map(|(i, v)| vec![i.to_string(), e(*v)]).collect();
            Ok(render_csv(&[("path", "index", "brownian-lab"), ("value", "1", "brownian-lab")], &rows))
        }
        Command::AppendixCheck {
            integral,
            delta,
            samples,
            seed,
        } => {
            let which = SingularIntegral::parse(&integral)?;
            let cfg = VerdictConfig {
                n_mc: samples,
                seed,
                ..VerdictConfig::default()
            };
            let v = convergence_verdict(which, delta, &cfg)?;
            Ok(render_csv(
                &[
                    ("integral", "name", "simplex-singular"),
                    ("delta", "1", "simplex-singular"),
                    ("status", "C|D|?", "simplex-singular"),
                    ("increment_ratio", "per-decade", "simplex-singular"),
                    ("increment_ratio_se", "per-decade", "simplex-singular"),
                ],
                &[vec![
                    which.name().to_string(),
                    e(delta),
                    v.status.letter().to_string(),
                    e(v.increment_ratio),
                    e(v.increment_ratio_se),
                ]],
            ))
        }
    }
}
