//! Continuous-time matched filtering against the algebraic sample model,
//! and the colored-noise covariance from simulated white noise.

use anoma::model::{FrameConfig, LinkConfig, TimingError};
use anoma::waveform::{algebraic_outputs, generate_symbols, matched_filter_outputs, noise_covariance_mc_with, Constellation, McOptions};

fn main() -> anoma::Result<()> {
    let link = LinkConfig::from_snr(1.0, 0.5)?;
    let frame = FrameConfig::new(6, 0.5)?;
    let err = TimingError::new(0.03, -0.02);
    let symbols = generate_symbols(frame.n, Constellation::Qpsk, 42)?;
    let y = matched_filter_outputs(&symbols, &link, &frame, &err, true)?.interleaved();
    let model = algebraic_outputs(&symbols, &link, &frame, &err)?;
    let worst = y.iter().zip(&model).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("waveform vs R H X: max deviation {worst:.2e}");

    let opts = McOptions { trials: 100_000, seed: 1, ..McOptions::default() };
    for eps2 in [0.0, 0.05] {
        let r = noise_covariance_mc_with(&FrameConfig::new(3, 0.5)?, eps2, &opts)?;
        println!(
            "eps2 = {eps2}: adjacency {:.4} (expected {:.4}), max deviation {:.4}",
            r.empirical[(0, 1)].re,
            r.expected.get(0, 1),
            r.max_abs_deviation
        );
        if let Some(w) = r.warning {
            println!("  note: {w}");
        }
    }
    Ok(())
}
