//! Running a configured experiment and writing its CSV and JSON files.

use local_time_lab::experiment::{run_experiment, ExperimentConfig, ExperimentOutput};

const CONFIG: &str = "
experiment = riesz-scaling
output = target/experiments/riesz
gamma = 0.8
paths = 200
steps = 4096
h = 0.4, 0.2, 0.1, 0.05
seed = 3
";

fn main() -> local_time_lab::error::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    match run_experiment(&cfg)? {
        ExperimentOutput::Scaling(r) => {
            for p in &r.points {
                println!("h {:<5} Var {:.4e} ± {:.1e}", p.h, p.statistic, p.std_error);
            }
            println!(
                "slope {:.3} ({:.3}, {:.3}), target {:.2}: {:?}",
                r.slope, r.slope_ci.0, r.slope_ci.1, r.target_slope, r.verdict
            );
        }
        ExperimentOutput::Table { table, .. } => print!("{}", table.to_csv()),
    }
    Ok(())
}
