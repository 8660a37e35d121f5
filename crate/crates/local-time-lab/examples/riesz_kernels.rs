//! Riesz-type kernels: the `L²` norm of `g_h`, heat pairings and `c_γ`.

use local_time_lab::quad::QuadratureConfig;
use local_time_lab::riesz::{
    c_gamma_closed_form, calibration, g_h_heat_pairing, g_h_l2_norm, heat_pairing_bound_shape, riesz_constant_c_gamma,
    riesz_k, RieszSpec,
};

fn main() -> local_time_lab::error::Result<()> {
    let q = QuadratureConfig::with_tolerances(1e-13, 1e-9);
    for beta in [0.6, 0.75, 0.9] {
        let cal = calibration(beta)?;
        println!(
            "beta {beta}: constant {:.8} (analytic {:.8}), residual {:.1e}",
            cal.constant, cal.analytic_constant, cal.max_rel_residual
        );
        for h in [1e-1, 1e-2, 1e-3] {
            let n = g_h_l2_norm(&RieszSpec::new(beta, h)?, &q)?;
            println!("  h {h:e}: |g_h|^2 fourier {:.8} spatial {:.8}", n.fourier.value, n.spatial.value);
        }
    }

    let spec = RieszSpec::new(0.75, 0.01)?;
    for t in [0.01, 0.1, 1.0] {
        let p = g_h_heat_pairing(&spec, t, &q)?;
        let shape = heat_pairing_bound_shape(spec.beta, spec.h, t);
        println!("<g_h, p_{t}> = {:.6e}, ratio to h^(b-1/2) t^(-b/2): {:.4}", p.value, p.value / shape);
    }

    println!("K^0.75_0.5(0.4) = {:.10e}", riesz_k(0.75, 0.5, 0.4, &q)?.value);
    let g = 0.8;
    println!(
        "c_gamma(0.8): quadrature {:.10}, closed form {:.10}",
        riesz_constant_c_gamma(g, &q)?.value,
        c_gamma_closed_form(g)
    );
    Ok(())
}
