//! Heat kernel derivatives and Hermite values at the origin.

use local_time_lab::gaussian::{expected_heat_deriv, heat_kernel_deriv, hermite_at_zero, HeatKernelPoint};

fn main() -> local_time_lab::error::Result<()> {
    println!("n,d^n p_t(y) at t=0.5 y=0.3");
    for n in 0..=6 {
        let v = heat_kernel_deriv(HeatKernelPoint::new(n, 0.5, 0.3)?)?;
        println!("{n},{v:.12e}");
    }
    println!();
    for m in 0..=5 {
        println!("H_{}(0) = {:.12e}", 2 * m, hermite_at_zero(2 * m));
    }
    // E[p_t''(N(mean, var))] through the semigroup.
    let e = expected_heat_deriv(2, 0.2, 0.1, 0.3)?;
    println!("\nE p_0.2''(N(0.1, 0.3)) = {e:.12e}");
    Ok(())
}
