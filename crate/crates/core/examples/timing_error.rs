//! Exact and first-order throughput loss under timing errors.

use anoma::model::{FrameConfig, LinkConfig, Sign, TimingError};
use anoma::timing::{loss_breakdown, sensitivity_coord, sensitivity_sync};

fn main() -> anoma::Result<()> {
    let link = LinkConfig::from_snr(1.0, 0.5)?;
    let frame = FrameConfig::new(10, 0.5)?;
    let c1 = sensitivity_sync(&link, &frame, Sign::Positive)?;
    let c2 = sensitivity_coord(&link, &frame, Sign::Positive)?;
    println!("c1 = {c1:.6}, c2 = {c2:.6}, c1/c2 = {:.6}", c1 / c2);

    println!("{:>7} {:>7} {:>12} {:>12} {:>10}", "eps1", "eps2", "delta", "linear", "gamma");
    for (e1, e2) in [(0.01, 0.0), (-0.01, 0.0), (0.0, 0.01), (0.0, -0.01), (0.05, 0.0), (0.0, 0.05), (0.03, -0.02)] {
        let b = loss_breakdown(&link, &frame, &TimingError::new(e1, e2))?;
        let linear = if e2 == 0.0 { b.delta_lin_sync } else { b.delta_lin_coord };
        println!("{e1:>7} {e2:>7} {:>12.6} {:>12.6} {:>10.5}", b.delta, linear, b.gamma);
    }
    Ok(())
}
