//! Full-power check over a power grid and the best timing mismatch per
//! frame length.

use anoma::design::{optimal_tau, verify_full_power, DEFAULT_TAU_RESOLUTION};
use anoma::model::{FrameConfig, LinkConfig};
use num_complex::Complex64;

fn main() -> anoma::Result<()> {
    let link = LinkConfig::with_limits(1.0, Complex64::new(1.0, 0.0), 1.0, 1.0, Complex64::new(0.5_f64.sqrt(), 0.0), 1.0)?;
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let report = verify_full_power(&link, &grid, &grid, &FrameConfig::new(10, 0.5)?)?;
    println!(
        "power grid {}x{}: {} violations, argmax {:?}",
        grid.len(),
        grid.len(),
        report.violations.len(),
        report.argmax
    );

    let link = LinkConfig::from_snr(1.0, 0.5)?;
    for n in [1, 2, 5, 10, 50, 200, 1000] {
        let r = optimal_tau(&link, n, DEFAULT_TAU_RESOLUTION)?;
        println!("N = {n:>4}: tau* = {:.4}, throughput {:.6}", r.tau_star, r.achieved_throughput);
    }
    Ok(())
}
