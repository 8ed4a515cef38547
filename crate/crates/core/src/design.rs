//! Design searches: the throughput-maximizing timing mismatch and the
//! full-power check over a transmit-power grid.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::model::{FrameConfig, LinkConfig};
use crate::throughput::{throughput_asymptotic, throughput_closed};

/// Grid step used when the caller has no preference.
pub const DEFAULT_TAU_RESOLUTION: f64 = 1e-3;

/// Width at which the local refinement stops.
pub const REFINE_TOLERANCE: f64 = 1e-6;

/// Outcome of a `tau` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSearchResult {
    pub tau_star: f64,
    pub achieved_throughput: f64,
    pub grid_resolution: f64,
    /// Whether the local refinement beat the best grid point.
    pub refined: bool,
}

/// What the `tau` search maximizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauObjective {
    /// Throughput for a fixed frame length.
    Finite(usize),
    /// The `N → ∞` limit.
    Asymptotic,
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Exhaustive grid over `tau ∈ [0, 1)` followed by golden-section refinement
/// inside the neighbouring grid cells. Ties on the grid go to the smallest
/// `tau`; the refined point is kept only if it strictly improves on the grid.
pub fn search_tau(f: impl Fn(f64) -> Result<f64> + Sync, grid_resolution: f64) -> Result<TauSearchResult> {
    if !(grid_resolution > 0.0 && grid_resolution <= 0.01) {
        return Err(domain(format!(
            "grid resolution must lie in (0, 0.01], got {grid_resolution}"
        )));
    }
    let steps = (1.0 / grid_resolution).ceil() as usize;
    let grid: Vec<f64> = (0..steps)
        .map(|k| k as f64 * grid_resolution)
        .filter(|t| *t < 1.0)
        .collect();
    let values = grid.par_iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>()?;

    let (mut best_tau, mut best) = (grid[0], values[0]);
    for (&t, &v) in grid.iter().zip(&values) {
        if v > best {
            best = v;
            best_tau = t;
        }
    }

    let lo = (best_tau - grid_resolution).max(0.0);
    let hi = (best_tau + grid_resolution).min(1.0 - f64::EPSILON);
    let (t_ref, v_ref) = golden_max(&f, lo, hi, REFINE_TOLERANCE)?;
    let refined = v_ref > best;
    Ok(TauSearchResult {
        tau_star: if refined { t_ref } else { best_tau },
        achieved_throughput: if refined { v_ref } else { best },
        grid_resolution,
        refined,
    })
}

/// Throughput-maximizing timing mismatch for frame length `n`.
pub fn optimal_tau(link: &LinkConfig, n: usize, grid_resolution: f64) -> Result<TauSearchResult> {
    optimal_tau_for(link, TauObjective::Finite(n), grid_resolution)
}

pub fn optimal_tau_for(link: &LinkConfig, objective: TauObjective, grid_resolution: f64) -> Result<TauSearchResult> {
    let (mu1, mu2) = link.require_positive_snr()?;
    match objective {
        TauObjective::Finite(n) => {
            FrameConfig::new(n, 0.0)?;
            search_tau(|tau| throughput_closed(link, &FrameConfig { n, tau }), grid_resolution)
        }
        TauObjective::Asymptotic => search_tau(|tau| throughput_asymptotic(mu1, mu2, tau), grid_resolution),
    }
}

/// A finite-difference step along one power axis that failed to increase
/// the throughput.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    /// 1 for a step in `P1`, 2 for a step in `P2`.
    pub axis: u8,
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullPowerReport {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// `throughput[i][j]` at `(p1[i], p2[j])`.
    pub throughput: Vec<Vec<f64>>,
    pub violations: Vec<MonotonicityViolation>,
    pub argmax: (f64, f64),
    /// The grid maximum sits at `(p1_max, p2_max)`.
    pub max_at_ceiling: bool,
}

impl FullPowerReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.max_at_ceiling
    }
}

fn check_axis(name: &str, values: &[f64], ceiling: f64) -> Result<()> {
    if values.is_empty() {
        return Err(domain(format!("{name} grid is empty")));
    }
    if values.iter().any(|p| !(*p > 0.0 && *p <= ceiling)) {
        return Err(domain(format!("{name} grid values must lie in (0, {ceiling}]")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

/// Evaluates the throughput over a `(P1, P2)` grid at the channels of `link`
/// and reports every non-increasing step along either axis.
pub fn verify_full_power(link: &LinkConfig, p1: &[f64], p2: &[f64], frame: &FrameConfig) -> Result<FullPowerReport> {
    link.validate()?;
    frame.validate()?;
    check_axis("p1", p1, link.p1_max)?;
    check_axis("p2", p2, link.p2_max)?;

    let throughput = p1
        .par_iter()
        .map(|&a| {
            p2.iter()
                .map(|&b| {
                    let point = LinkConfig { p1: a, p2: b, ..*link };
                    throughput_closed(&point, frame)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    let mut best = (0, 0);
    for i in 0..p1.len() {
        for j in 0..p2.len() {
            let v = throughput[i][j];
            if v > throughput[best.0][best.1] {
                best = (i, j);
            }
            if i + 1 < p1.len() {
                let change = throughput[i + 1][j] - v;
                if !(change > 0.0) {
                    violations.push(MonotonicityViolation {
                        axis: 1,
                        from: (p1[i], p2[j]),
                        to: (p1[i + 1], p2[j]),
                        change,
                    });
                }
            }
            if j + 1 < p2.len() {
                let change = throughput[i][j + 1] - v;
                if !(change > 0.0) {
                    violations.push(MonotonicityViolation {
                        axis: 2,
                        from: (p1[i], p2[j]),
                        to: (p1[i], p2[j + 1]),
                        change,
                    });
                }
            }
        }
    }
    let argmax = (p1[best.0], p2[best.1]);
    Ok(FullPowerReport {
        p1: p1.to_vec(),
        p2: p2.to_vec(),
        throughput,
        violations,
        argmax,
        max_at_ceiling: argmax == (link.p1_max, link.p2_max),
    })
}
