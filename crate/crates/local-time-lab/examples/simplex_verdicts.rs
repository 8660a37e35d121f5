//! Block families of the ordered simplex and convergence verdicts for the
//! singular integrals.

use local_time_lab::simplex::{
    convergence_verdict, direct_regularized_integral, enumerate_blocks, enumerated_regularized_integral,
    SingularIntegral, VerdictConfig,
};

fn main() -> local_time_lab::error::Result<()> {
    let e = enumerate_blocks();
    println!("{} accepted orderings, {} block families", e.accepted, e.families.len());

    let d = direct_regularized_integral(1.2, 1e-2, 4_000_000, 3)?;
    let s = enumerated_regularized_integral(1.2, 1e-2, 20_000, 4)?;
    println!("direct {:.4} ± {:.4}, by families {:.4} ± {:.4}", d.value, d.se, s.value, s.se);

    let cfg = VerdictConfig::default();
    for which in [SingularIntegral::Sing1, SingularIntegral::Sing2, SingularIntegral::Sing3] {
        let mut line = String::new();
        for delta in [0.15, 0.2, 0.24, 0.26, 0.3, 0.5] {
            line.push(convergence_verdict(which, delta, &cfg)?.status.letter());
        }
        println!("{}: {line}", which.name());
    }
    Ok(())
}
