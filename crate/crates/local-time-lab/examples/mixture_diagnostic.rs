//! Dependence of the Riesz fluctuation on self-intersection local time,
//! against a synthetic mixture with the same `α̂`.

use local_time_lab::experiment::{mixture_diagnostic, ExperimentConfig, ExperimentKind};

fn main() -> local_time_lab::error::Result<()> {
    for null in [false, true] {
        let cfg = ExperimentConfig::new(ExperimentKind::MixtureDiagnostic)
            .with("paths", 400)?
            .with("steps", 4096)?
            .with("null", null)?;
        let out = mixture_diagnostic(&cfg)?;
        println!("null={null}: {}", serde_json::to_string_pretty(&out.summary())?);
    }
    Ok(())
}
