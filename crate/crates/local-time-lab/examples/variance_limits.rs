//! Limiting variances of the chaos terms in one and two dimensions.

use local_time_lab::quad::QuadratureConfig;
use local_time_lab::variance::{
    a_of_h, a_of_h_slope, l_2m_phi, partial_sums, sigma_sq_1d, sigma_sq_2d, UnitVector2,
};

fn main() -> local_time_lab::error::Result<()> {
    let q = QuadratureConfig::with_tolerances(1e-300, 1e-9);
    for m in [1, 2] {
        println!("m = {m}, slope of a(h) against ln(1/h): {:.6}", a_of_h_slope(m, 1.0));
        for h in [1e-2, 1e-3, 1e-4, 1e-5] {
            let a = a_of_h(m, h, 1.0, &q)?;
            println!("  h {h:e}: a(h) = {:.8}", a.value);
        }
    }

    let one_d: Vec<f64> = (1..=100).map(|m| sigma_sq_1d(m).map(|v| v.sigma_sq)).collect::<Result<_, _>>()?;
    let s = partial_sums(&one_d);
    println!("1-d partial sums: S(25) = {:.4}, S(100) = {:.4}", s[24], s[99]);

    let q2 = QuadratureConfig::with_tolerances(1e-300, 1e-5);
    for m in 1..=4 {
        let v = sigma_sq_2d(m, &q2)?;
        println!("2-d m={m}: L = {:.6}, sigma^2 = {:.6}", v.raw_limit, v.sigma_sq);
    }
    let e = UnitVector2::from_angle(0.7);
    println!("L_2(e at 0.7 rad) = {:.6}", l_2m_phi(1, e, None, &q2)?.value);
    Ok(())
}
