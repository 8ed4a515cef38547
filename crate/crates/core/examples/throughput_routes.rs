//! Three ways to compute the ANOMA sum throughput, side by side.

use anoma::model::{FrameConfig, LinkConfig};
use anoma::throughput::{throughput_report, roots};

fn main() -> anoma::Result<()> {
    let link = LinkConfig::from_snr(1.0, 0.5)?;
    println!("{:>6} {:>6} {:>14} {:>14} {:>14} {:>10}", "tau", "N", "log-det", "closed", "recursion", "noma");
    for tau in [0.0, 0.1, 0.5] {
        for n in [1, 10, 100, 2000] {
            let frame = FrameConfig::new(n, tau)?;
            let r = throughput_report(&link, &frame)?;
            println!(
                "{tau:>6} {n:>6} {:>14.10} {:>14.10} {:>14.10} {:>10.6}",
                r.anoma_matrix, r.anoma_closed, r.anoma_recursion, r.noma
            );
        }
    }
    let r = roots(1.0, 0.5, 0.5)?;
    println!("roots at tau = 0.5: r1 = {:.6}, r2 = {:.6}", r.r1, r.r2);
    Ok(())
}
