//! Single-point report: every throughput and timing-loss figure on one line.

use serde::{Deserialize, Serialize};

use super::config::layered;
use super::CliError;
use crate::model::{FrameConfig, LinkConfig, TimingError};
use crate::throughput::throughput_report;
use crate::timing::{loss_breakdown, LossBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryPoint {
    pub mu1: f64,
    pub mu2: f64,
    pub tau: f64,
    pub n: usize,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for QueryPoint {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 0.5,
            tau: 0.5,
            n: 10,
            eps1: 0.0,
            eps2: 0.0,
        }
    }
}

impl QueryPoint {
    pub fn resolve(overrides: &[String]) -> Result<Self, CliError> {
        layered(&Self::default(), None, overrides)
    }
}

/// `key=value` pairs in a fixed order.
pub fn query(point: &QueryPoint) -> Result<Vec<(&'static str, f64)>, CliError> {
    let usage = |e: crate::Error| CliError::usage(format!("invalid point: {e}"));
    let link = LinkConfig::from_snr(point.mu1, point.mu2).map_err(usage)?;
    let frame = FrameConfig::new(point.n, point.tau).map_err(usage)?;
    let err = TimingError::new(point.eps1, point.eps2);
    err.validate(&frame).map_err(usage)?;
    let t = throughput_report(&link, &frame).map_err(usage)?;
    // at tau = 0 both sample streams coincide and R is singular, so the
    // timing-error analysis has no defined value there
    let b = if frame.tau > 0.0 {
        loss_breakdown(&link, &frame, &err).map_err(usage)?
    } else {
        if !err.is_zero() {
            return Err(CliError::usage("timing errors need tau > 0"));
        }
        LossBreakdown {
            exact_throughput_with_error: t.anoma_matrix,
            delta: f64::NAN,
            delta_lin_sync: f64::NAN,
            delta_lin_coord: f64::NAN,
            c1: f64::NAN,
            c2: f64::NAN,
            gamma: f64::NAN,
        }
    };
    Ok(vec![
        ("mu1", point.mu1),
        ("mu2", point.mu2),
        ("tau", point.tau),
        ("n", point.n as f64),
        ("eps1", point.eps1),
        ("eps2", point.eps2),
        ("anoma_matrix", t.anoma_matrix),
        ("anoma_closed", t.anoma_closed),
        ("anoma_recursion", t.anoma_recursion),
        ("anoma_n_plus_1", t.anoma_n_plus_1),
        ("anoma_existing", t.anoma_existing),
        ("noma", t.noma),
        ("oma", t.oma),
        ("asymptotic", t.asymptotic),
        ("exact_throughput_with_error", b.exact_throughput_with_error),
        ("delta", b.delta),
        ("delta_lin_sync", b.delta_lin_sync),
        ("delta_lin_coord", b.delta_lin_coord),
        ("c1", b.c1),
        ("c2", b.c2),
        ("gamma", b.gamma),
    ])
}

pub fn format_line(fields: &[(&str, f64)]) -> String {
    fields
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}
