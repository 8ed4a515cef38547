//! Self-check suites. Each check reports a measured value against a
//! tolerance; the report prints one tab-separated line per check.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::CliError;
use crate::design::{optimal_tau, verify_full_power, DEFAULT_TAU_RESOLUTION};
use crate::model::{FrameConfig, LinkConfig, Sign, TimingError};
use crate::throughput::{
    throughput_asymptotic, throughput_closed, throughput_matrix, throughput_noma, throughput_oma,
    throughput_recursion,
};
use crate::timing::{
    loss_linear_coord, loss_linear_sync, loss_ratio, sensitivity_coord, sensitivity_sync, throughput_loss_routes,
    throughput_with_error,
};
use crate::waveform::{
    algebraic_outputs, generate_symbols, matched_filter_outputs, noise_covariance_mc_with, Constellation, McOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Routes,
    Theorems,
    Timing,
    Waveform,
    All,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "routes" => Ok(Suite::Routes),
            "theorems" => Ok(Suite::Theorems),
            "timing" => Ok(Suite::Timing),
            "waveform" => Ok(Suite::Waveform),
            "all" => Ok(Suite::All),
            _ => Err(CliError::usage(format!(
                "unknown suite `{s}`; expected routes, theorems, timing, waveform or all"
            ))),
        }
    }
}

/// How `measured` is compared against `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compare {
    AtMost,
    AtLeast,
    /// Strictly above the tolerance.
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub compare: Compare,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, tolerance, Compare::AtMost)
    }

    fn new(name: &str, measured: f64, tolerance: f64, compare: Compare) -> Self {
        Self {
            name: name.to_string(),
            measured,
            tolerance,
            compare,
        }
    }

    pub fn passed(&self) -> bool {
        match self.compare {
            Compare::AtMost => self.measured <= self.tolerance,
            Compare::AtLeast => self.measured >= self.tolerance,
            Compare::Above => self.measured > self.tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.compare {
            Compare::AtMost => "<=",
            Compare::AtLeast => ">=",
            Compare::Above => ">",
        };
        write!(
            f,
            "{}\t{:.6e}\t{op}{:.3e}\t{}",
            self.name,
            self.measured,
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn link(mu1: f64, mu2: f64) -> crate::Result<LinkConfig> {
    LinkConfig::from_snr(mu1, mu2)
}

const MU_GRID: [f64; 3] = [0.1, 1.0, 10.0];

fn routes() -> crate::Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut worst_large = 0.0_f64;
    let mut collapse = 0.0_f64;
    for mu1 in MU_GRID {
        for mu2 in MU_GRID {
            let l = link(mu1, mu2)?;
            for tau in [0.0, 0.1, 0.5, 0.9] {
                for n in [1, 2, 5, 10, 50] {
                    let f = FrameConfig::new(n, tau)?;
                    let closed = throughput_closed(&l, &f)?;
                    worst = worst
                        .max(rel(throughput_matrix(&l, &f)?, closed))
                        .max(rel(throughput_recursion(&l, &f)?, closed));
                }
                let f = FrameConfig::new(2000, tau)?;
                let closed = throughput_closed(&l, &f)?;
                worst_large = worst_large
                    .max(rel(throughput_matrix(&l, &f)?, closed))
                    .max(rel(throughput_recursion(&l, &f)?, closed));
            }
            let f = FrameConfig::new(10, 0.0)?;
            collapse = collapse.max((throughput_closed(&l, &f)? - throughput_noma(mu1, mu2)).abs());
        }
    }

    let (l, f) = (link(1.0, 0.5)?, FrameConfig::new(10, 0.5)?);
    let mut loss_routes = 0.0_f64;
    for e1 in [-0.1, -0.03, 0.0, 0.02, 0.1] {
        for e2 in [-0.1, -0.04, 0.0, 0.05, 0.1] {
            if e1 == 0.0 && e2 == 0.0 {
                continue;
            }
            let r = throughput_loss_routes(&l, &f, &TimingError::new(e1, e2))?;
            loss_routes = loss_routes.max(rel(r.rearranged, r.definition));
        }
    }
    Ok(vec![
        Check::at_most("routes.three_way_small_n", worst, 1e-9),
        Check::at_most("routes.three_way_n2000", worst_large, 1e-6),
        Check::at_most("routes.noma_collapse", collapse, 0.0),
        Check::at_most("routes.loss_definition_vs_rearranged", loss_routes, 1e-9),
    ])
}

fn theorems() -> crate::Result<Vec<Check>> {
    let (mu1, mu2) = (1.0, 0.5);
    let l = link(mu1, mu2)?;
    let converge = (throughput_closed(&l, &FrameConfig::new(2000, 0.5)?)? - throughput_asymptotic(mu1, mu2, 0.5)?).abs();

    let mut gap = f64::INFINITY;
    let mut tau_zero = 0.0_f64;
    for a in MU_GRID {
        for b in MU_GRID {
            for k in 1..=9 {
                let tau = k as f64 / 10.0;
                gap = gap.min(throughput_asymptotic(a, b, tau)? - throughput_noma(a, b));
            }
            tau_zero = tau_zero.max((throughput_asymptotic(a, b, 0.0)? - throughput_noma(a, b)).abs());
        }
    }

    let power_link = LinkConfig::with_limits(
        1.0,
        Complex64::new(1.0, 0.0),
        1.0,
        1.0,
        Complex64::new(0.5_f64.sqrt(), 0.0),
        1.0,
    )?;
    let grid: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let power = verify_full_power(&power_link, &grid, &grid, &FrameConfig::new(10, 0.5)?)?;

    let mut tau_far = 0.0_f64;
    for a in [0.5, 1.0, 2.0] {
        for b in [0.5, 1.0, 2.0] {
            let r = optimal_tau(&link(a, b)?, 1000, DEFAULT_TAU_RESOLUTION)?;
            tau_far = tau_far.max((r.tau_star - 0.5).abs());
        }
    }
    let path = [1, 2, 5, 10, 50, 200, 1000]
        .iter()
        .map(|&n| optimal_tau(&l, n, DEFAULT_TAU_RESOLUTION).map(|r| r.tau_star))
        .collect::<crate::Result<Vec<_>>>()?;
    let worst_drop = path.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);

    let f = FrameConfig::new(10, 0.5)?;
    let ordering = (throughput_closed(&l, &f)? - throughput_noma(mu1, mu2)).min(throughput_noma(mu1, mu2) - throughput_oma(mu1, mu2));

    Ok(vec![
        Check::at_most("theorems.asymptote_convergence_n2000", converge, 1e-3),
        Check::new("theorems.asymptote_minus_noma", gap, 0.0, Compare::Above),
        Check::at_most("theorems.asymptote_tau0_equals_noma", tau_zero, 1e-15),
        Check::at_most("theorems.full_power_violations", power.violations.len() as f64, 0.0),
        Check::at_most(
            "theorems.full_power_argmax_off_ceiling",
            f64::from(u8::from(!power.max_at_ceiling)),
            0.0,
        ),
        Check::at_most("theorems.tau_star_n1000_offset", tau_far, 0.01),
        Check::at_most("theorems.tau_star_n1", path[0], 0.1),
        Check::at_most("theorems.tau_star_worst_decrease", worst_drop, DEFAULT_TAU_RESOLUTION),
        Check::new("theorems.scheme_ordering_margin", ordering, 0.0, Compare::Above),
    ])
}

fn timing() -> crate::Result<Vec<Check>> {
    let (l, f) = (link(1.0, 0.5)?, FrameConfig::new(10, 0.5)?);
    let base = throughput_matrix(&l, &f)?;
    let zero = (throughput_with_error(&l, &f, &TimingError::ZERO)? - base).abs();
    let zero_loss = throughput_loss_routes(&l, &f, &TimingError::ZERO)?;

    let mut lin = 0.0_f64;
    for e in [-0.02, -0.01, -0.005, 0.005, 0.01, 0.02] {
        let exact = throughput_loss_routes(&l, &f, &TimingError::new(e, 0.0))?.definition;
        lin = lin.max(rel(loss_linear_sync(&l, &f, e)?.delta, exact));
        let exact = throughput_loss_routes(&l, &f, &TimingError::new(0.0, e))?.definition;
        lin = lin.max(rel(loss_linear_coord(&l, &f, e)?.delta, exact));
    }
    let ratio = sensitivity_sync(&l, &f, Sign::Positive)? / sensitivity_coord(&l, &f, Sign::Positive)?;

    let axis: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.005).collect();
    let mut min_off_origin = f64::INFINITY;
    let mut gamma = vec![vec![0.0; axis.len()]; axis.len()];
    for (i, &e1) in axis.iter().enumerate() {
        for (j, &e2) in axis.iter().enumerate() {
            let g = loss_ratio(&l, &f, &TimingError::new(e1, e2))?;
            gamma[i][j] = g;
            if !(e1 == 0.0 && e2 == 0.0) {
                min_off_origin = min_off_origin.min(g);
            }
        }
    }
    let origin = gamma[20][20];

    Ok(vec![
        Check::at_most("timing.zero_error_rate_gap", zero, 1e-14),
        Check::at_most("timing.zero_error_loss", zero_loss.definition.abs().max(zero_loss.rearranged.abs()), 1e-14),
        Check::at_most("timing.linear_loss_relative_error", lin, 0.1),
        Check::new("timing.c1_over_c2_low", ratio, 1.5, Compare::AtLeast),
        Check::at_most("timing.c1_over_c2_high", ratio, 2.5 + 1e-12),
        Check::new("timing.gamma_margin_over_origin", min_off_origin - origin, 0.0, Compare::Above),
    ])
}

fn waveform() -> crate::Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut seed = 0;
    for tau in [0.1, 0.3, 0.5, 0.7] {
        for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let f = FrameConfig::new(8, tau)?;
            let err = TimingError::new(0.04 * s1, 0.03 * s2);
            let l = LinkConfig::new(1.2, Complex64::new(0.8, 0.3), 0.6, Complex64::new(-0.4, 0.7))?;
            for _ in 0..3 {
                seed += 1;
                let symbols = generate_symbols(f.n, Constellation::Gaussian, seed)?;
                let y = matched_filter_outputs(&symbols, &l, &f, &err, true)?.interleaved();
                let model = algebraic_outputs(&symbols, &l, &f, &err)?;
                worst = y.iter().zip(&model).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
            }
        }
    }

    let opts = McOptions {
        trials: 200_000,
        seed: 7,
        subsamples_per_symbol: 32,
        tolerance: 0.02,
    };
    let f = FrameConfig::new(3, 0.5)?;
    let plain = noise_covariance_mc_with(&f, 0.0, &opts)?;
    let shifted = noise_covariance_mc_with(&f, 0.05, &opts)?;
    let band = 5.0 * plain.standard_error;
    Ok(vec![
        Check::at_most("waveform.algebraic_equivalence", worst, 1e-12),
        Check::at_most("waveform.noise_covariance_eps2_0", plain.max_abs_deviation, band),
        Check::at_most("waveform.noise_covariance_eps2_0.05", shifted.max_abs_deviation, band),
    ])
}

pub fn run_validate(suite: Suite) -> Result<Vec<Check>, CliError> {
    let lib = |e: crate::Error| CliError::Validation(format!("validation could not run: {e}"));
    let mut checks = Vec::new();
    if matches!(suite, Suite::Routes | Suite::All) {
        checks.extend(routes().map_err(lib)?);
    }
    if matches!(suite, Suite::Theorems | Suite::All) {
        checks.extend(theorems().map_err(lib)?);
    }
    if matches!(suite, Suite::Timing | Suite::All) {
        checks.extend(timing().map_err(lib)?);
    }
    if matches!(suite, Suite::Waveform | Suite::All) {
        checks.extend(waveform().map_err(lib)?);
    }
    Ok(checks)
}
