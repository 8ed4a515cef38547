//! Runs a figure sweep in-process and prints its CSV.
//!
//! `cargo run --example figure_sweep -- scheme_comparison eps.step=0.05`

use anoma::cli::{run_sweep, FigureId, SweepSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let figure: FigureId = args.next().as_deref().unwrap_or("rate_vs_n").parse().unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let overrides: Vec<String> = args.collect();
    let result = SweepSpec::resolve(figure, None, &overrides).and_then(|spec| run_sweep(&spec, &mut std::io::stdout()));
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
