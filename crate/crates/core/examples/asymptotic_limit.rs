//! Convergence of the finite-frame throughput to its large-N limit, and
//! the gain of that limit over synchronous NOMA.

use anoma::model::{FrameConfig, LinkConfig};
use anoma::throughput::{throughput_asymptotic, throughput_closed, throughput_noma};

fn main() -> anoma::Result<()> {
    let (mu1, mu2) = (1.0, 0.5);
    let link = LinkConfig::from_snr(mu1, mu2)?;
    for tau in [0.1, 0.5] {
        let limit = throughput_asymptotic(mu1, mu2, tau)?;
        println!("tau = {tau}: limit {limit:.6} bits, NOMA {:.6} bits", throughput_noma(mu1, mu2));
        for n in [1, 10, 100, 1000, 10_000, 1_000_000] {
            let r = throughput_closed(&link, &FrameConfig::new(n, tau)?)?;
            println!("  N = {n:>7}: {r:.6}  gap {:.2e}", limit - r);
        }
    }
    Ok(())
}
