//! Chaos kernels of the `L²` modulus: `φ`, min-max inner products and
//! contraction norms.

use local_time_lab::chaos::{
    contraction_ratio, minmax_inner_product, phi_1d, phi_2d, FhKernel, IndexVector, PhiKernel,
};
use local_time_lab::quad::QuadratureConfig;

fn main() -> local_time_lab::error::Result<()> {
    let q = QuadratureConfig::with_tolerances(1e-300, 1e-10);
    for m in 1..=3 {
        let v = phi_1d(m, 0.01, 0.2, 0.5, &q)?;
        println!("phi_{m}(h=0.01; 0.2, 0.5) = {:.10e} ± {:.1e}", v.value, v.abs_err);
    }

    let idx = IndexVector::new(vec![1, 2, 2, 1])?;
    let v = phi_2d(&idx, [0.05, 0.02], 0.6, 0.3, &q)?;
    println!("2-d phi with indices (1,2,2,1): {:.8e}", v.value);

    for h in [1e-2, 1e-3, 1e-4] {
        let f = FhKernel(PhiKernel::new(1, h)?);
        let a = minmax_inner_product(&f, &f, 1, 1.0, 1.0, &q)?;
        println!("|f_h 1_[0,1]|^2 / h^4 at h={h:e}: {:.6}", a.value / h.powi(4));
    }

    for h in [0.2, 0.1, 0.05] {
        let c = contraction_ratio(2, 2, h, 1.0, 20_000, 7)?;
        println!(
            "m=2 r=2 h={h}: ratio {:.4} ± {:.4}, |f⊗f|^2/h^8 {:.4}",
            c.ratio, c.ratio_se, c.norm_over_h8
        );
    }
    Ok(())
}
