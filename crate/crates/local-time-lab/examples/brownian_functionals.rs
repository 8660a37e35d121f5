//! Local time, the `L²` modulus, the Riesz Hamiltonian and self-intersection
//! local time on simulated paths.

use local_time_lab::brownian::{
    l2_modulus_H, local_time_field, map_paths, riesz_hamiltonian, sample_path, self_intersection_lt,
};
use local_time_lab::stats::Moments;

fn main() -> local_time_lab::error::Result<()> {
    let path = sample_path(1, 1 << 14, 1.0, 11)?;
    let lt = local_time_field(&path, path.dt.sqrt())?;
    println!("L_1(0) = {:.4}, total time {:.6}", lt.at(0.0), lt.total_time());
    for h in [0.2, 0.1, 0.05] {
        println!(
            "h {h}: H = {:.6e}, Riesz = {:.6e}",
            l2_modulus_H(&path, h, path.dt.sqrt())?.value,
            riesz_hamiltonian(&path, h, 0.8, path.dt.sqrt())?.value
        );
    }

    let r = map_paths(1, 500, 1 << 12, 1.0, 12, |p| {
        Ok((local_time_field(p, p.dt.sqrt())?.at(0.0), self_intersection_lt(p, 4.0 * p.dt)?.value))
    })?;
    let l = Moments::from_slice(&r.iter().map(|x| x.0).collect::<Vec<_>>());
    let a = Moments::from_slice(&r.iter().map(|x| x.1).collect::<Vec<_>>());
    println!("E L_1(0) ≈ {:.4} ± {:.4} (exact {:.4})", l.mean, l.std_error(), (2.0 / std::f64::consts::PI).sqrt());
    println!("E alpha_1 ≈ {:.4} ± {:.4}", a.mean, a.std_error());
    Ok(())
}
