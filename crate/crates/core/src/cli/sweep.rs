//! Figure sweeps: each figure id has its own parameter block with defaults
//! giving the standard operating point, and produces one CSV table.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{layered, snap, Range};
use super::CliError;
use crate::design::{optimal_tau, verify_full_power};
use crate::model::{FrameConfig, LinkConfig, TimingError};
use crate::throughput::{throughput_asymptotic, throughput_closed, throughput_matrix, throughput_noma, throughput_oma};
use crate::timing::{loss_breakdown, loss_linear_coord, loss_linear_sync, throughput_with_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    RateVsGain,
    RateVsN,
    PowerSurface,
    TauStarVsN,
    LossHeatmap,
    LossSlices,
    SchemeComparison,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::RateVsGain,
        FigureId::RateVsN,
        FigureId::PowerSurface,
        FigureId::TauStarVsN,
        FigureId::LossHeatmap,
        FigureId::LossSlices,
        FigureId::SchemeComparison,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::RateVsGain => "rate_vs_gain",
            FigureId::RateVsN => "rate_vs_n",
            FigureId::PowerSurface => "power_surface",
            FigureId::TauStarVsN => "tau_star_vs_n",
            FigureId::LossHeatmap => "loss_heatmap",
            FigureId::LossSlices => "loss_slices",
            FigureId::SchemeComparison => "scheme_comparison",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(FigureId::name).collect();
            CliError::usage(format!("unknown figure_id `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// Sum rate against channel gains at fixed powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateVsGain {
    pub p1: f64,
    pub p2: f64,
    pub tau: f64,
    pub n: usize,
    /// `|h1|²` axis.
    pub gain1: Range,
    /// `|h2|²` axis.
    pub gain2: Range,
}

impl Default for RateVsGain {
    fn default() -> Self {
        Self {
            p1: 1.0,
            p2: 1.0,
            tau: 0.5,
            n: 10,
            gain1: Range::new(0.1, 2.0, 0.1),
            gain2: Range::new(0.5, 2.0, 0.5),
        }
    }
}

/// Sum rate against frame length for two mismatches, with limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateVsN {
    pub mu1: f64,
    pub mu2: f64,
    pub taus: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    /// Number of log-spaced points before rounding and de-duplication.
    pub n_points: usize,
}

impl Default for RateVsN {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 0.5,
            taus: vec![0.5, 0.1],
            n_min: 1,
            n_max: 200,
            n_points: 40,
        }
    }
}

/// Sum rate over the transmit-power box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSurface {
    pub gain1: f64,
    pub gain2: f64,
    pub p1_max: f64,
    pub p2_max: f64,
    pub tau: f64,
    pub n: usize,
    pub p1: Range,
    pub p2: Range,
}

impl Default for PowerSurface {
    fn default() -> Self {
        Self {
            gain1: 1.0,
            gain2: 0.5,
            p1_max: 1.0,
            p2_max: 1.0,
            tau: 0.5,
            n: 10,
            p1: Range::new(0.05, 1.0, 0.05),
            p2: Range::new(0.05, 1.0, 0.05),
        }
    }
}

/// Optimal mismatch against frame length for several channel conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauStarVsN {
    /// `[mu1, mu2]` pairs.
    pub conditions: Vec<[f64; 2]>,
    pub n_values: Vec<usize>,
    pub resolution: f64,
}

impl Default for TauStarVsN {
    fn default() -> Self {
        Self {
            conditions: vec![[1.0, 0.5], [0.5, 0.5], [1.0, 1.0], [2.0, 2.0], [2.0, 0.5]],
            n_values: vec![1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000],
            resolution: 1e-3,
        }
    }
}

/// Fixed point shared by the timing-error figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorPoint {
    pub mu1: f64,
    pub mu2: f64,
    pub tau: f64,
    pub n: usize,
}

impl Default for ErrorPoint {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 0.5,
            tau: 0.5,
            n: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossHeatmap {
    pub point: ErrorPoint,
    pub eps1: Range,
    pub eps2: Range,
}

impl Default for LossHeatmap {
    fn default() -> Self {
        Self {
            point: ErrorPoint::default(),
            eps1: Range::new(-0.1, 0.1, 0.005),
            eps2: Range::new(-0.1, 0.1, 0.005),
        }
    }
}

/// Single-axis slices, also used by the scheme comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSlices {
    pub point: ErrorPoint,
    pub eps: Range,
}

impl ErrorSlices {
    fn with_eps(eps: Range) -> Self {
        Self {
            point: ErrorPoint::default(),
            eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FigureParams {
    RateVsGain(RateVsGain),
    RateVsN(RateVsN),
    PowerSurface(PowerSurface),
    TauStarVsN(TauStarVsN),
    LossHeatmap(LossHeatmap),
    LossSlices(ErrorSlices),
    SchemeComparison(ErrorSlices),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub figure: FigureId,
    /// CSV destination; standard output when absent.
    pub output: Option<PathBuf>,
    /// Recorded for reproducibility; every current sweep is deterministic.
    pub seed: u64,
    pub params: FigureParams,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    figure_id: String,
    output: Option<PathBuf>,
    seed: u64,
}

fn split_common(value: &mut Value) -> Value {
    let obj = value.as_object_mut().expect("defaults serialize to objects");
    let mut common = serde_json::Map::new();
    for key in ["figure_id", "output", "seed"] {
        if let Some(v) = obj.remove(key) {
            common.insert(key.to_string(), v);
        }
    }
    Value::Object(common)
}

fn build<P: Serialize + serde::de::DeserializeOwned>(
    figure: FigureId,
    defaults: P,
    file: Option<&Value>,
    overrides: &[String],
) -> Result<(Common, P), CliError> {
    let mut base = serde_json::to_value(&defaults).map_err(|e| CliError::usage(e.to_string()))?;
    let obj = base.as_object_mut().expect("parameter blocks are objects");
    obj.insert("figure_id".into(), Value::String(figure.name().into()));
    obj.insert("output".into(), Value::Null);
    obj.insert("seed".into(), Value::from(0u64));
    let mut merged = layered(&base, file, overrides)?;
    let common: Common = serde_json::from_value(split_common(&mut merged))
        .map_err(|e| CliError::usage(format!("invalid configuration: {e}")))?;
    if common.figure_id != figure.name() {
        return Err(CliError::usage(format!(
            "figure_id: config names `{}` but the command asks for `{figure}`",
            common.figure_id
        )));
    }
    let params = serde_json::from_value(merged).map_err(|e| CliError::usage(format!("invalid configuration: {e}")))?;
    Ok((common, params))
}

impl SweepSpec {
    /// Defaults for `figure`, then the config file, then `--set` overrides.
    pub fn resolve(figure: FigureId, file: Option<&Value>, overrides: &[String]) -> Result<Self, CliError> {
        macro_rules! pack {
            ($variant:ident, $defaults:expr) => {{
                let (common, p) = build(figure, $defaults, file, overrides)?;
                (common, FigureParams::$variant(p))
            }};
        }
        let (common, params) = match figure {
            FigureId::RateVsGain => pack!(RateVsGain, RateVsGain::default()),
            FigureId::RateVsN => pack!(RateVsN, RateVsN::default()),
            FigureId::PowerSurface => pack!(PowerSurface, PowerSurface::default()),
            FigureId::TauStarVsN => pack!(TauStarVsN, TauStarVsN::default()),
            FigureId::LossHeatmap => pack!(LossHeatmap, LossHeatmap::default()),
            FigureId::LossSlices => pack!(LossSlices, ErrorSlices::with_eps(Range::new(-0.1, 0.1, 0.005))),
            FigureId::SchemeComparison => {
                pack!(SchemeComparison, ErrorSlices::with_eps(Range::new(-0.45, 0.45, 0.01)))
            }
        };
        let spec = Self {
            figure,
            output: common.output,
            seed: common.seed,
            params,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn defaults(figure: FigureId) -> Self {
        Self::resolve(figure, None, &[]).expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match &self.params {
            FigureParams::RateVsGain(p) => {
                positive("p1", p.p1)?;
                positive("p2", p.p2)?;
                frame_ok(p.n, p.tau, "")?;
                p.gain1.validate("gain1")?;
                p.gain2.validate("gain2")?;
                positive("gain1.min", p.gain1.min)?;
                positive("gain2.min", p.gain2.min)
            }
            FigureParams::RateVsN(p) => {
                positive("mu1", p.mu1)?;
                positive("mu2", p.mu2)?;
                if p.taus.is_empty() {
                    return Err(CliError::usage("taus: must not be empty"));
                }
                for (k, t) in p.taus.iter().enumerate() {
                    if !(0.0..1.0).contains(t) {
                        return Err(CliError::usage(format!("taus[{k}]: must lie in [0, 1), got {t}")));
                    }
                }
                if p.n_min == 0 || p.n_max < p.n_min {
                    return Err(CliError::usage("n_min/n_max: need 1 <= n_min <= n_max"));
                }
                if p.n_points == 0 {
                    return Err(CliError::usage("n_points: must be >= 1"));
                }
                Ok(())
            }
            FigureParams::PowerSurface(p) => {
                positive("gain1", p.gain1)?;
                positive("gain2", p.gain2)?;
                positive("p1_max", p.p1_max)?;
                positive("p2_max", p.p2_max)?;
                frame_ok(p.n, p.tau, "")?;
                p.p1.validate("p1")?;
                p.p2.validate("p2")?;
                if !(p.p1.min > 0.0 && p.p1.points().last() <= Some(&p.p1_max)) {
                    return Err(CliError::usage("p1: values must lie in (0, p1_max]"));
                }
                if !(p.p2.min > 0.0 && p.p2.points().last() <= Some(&p.p2_max)) {
                    return Err(CliError::usage("p2: values must lie in (0, p2_max]"));
                }
                Ok(())
            }
            FigureParams::TauStarVsN(p) => {
                if p.conditions.is_empty() || p.n_values.is_empty() {
                    return Err(CliError::usage("conditions/n_values: must not be empty"));
                }
                for (k, [a, b]) in p.conditions.iter().enumerate() {
                    positive(&format!("conditions[{k}][0]"), *a)?;
                    positive(&format!("conditions[{k}][1]"), *b)?;
                }
                if let Some(k) = p.n_values.iter().position(|n| *n == 0) {
                    return Err(CliError::usage(format!("n_values[{k}]: must be >= 1")));
                }
                if !(p.resolution > 0.0 && p.resolution <= 0.01) {
                    return Err(CliError::usage("resolution: must lie in (0, 0.01]"));
                }
                Ok(())
            }
            FigureParams::LossHeatmap(p) => {
                point_ok(&p.point)?;
                p.eps1.validate("eps1")?;
                p.eps2.validate("eps2")
            }
            FigureParams::LossSlices(p) | FigureParams::SchemeComparison(p) => {
                point_ok(&p.point)?;
                p.eps.validate("eps")
            }
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{field}: must be finite and > 0, got {v}")))
    }
}

fn frame_ok(n: usize, tau: f64, prefix: &str) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::usage(format!("{prefix}n: must be >= 1")));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(CliError::usage(format!("{prefix}tau: must lie in [0, 1), got {tau}")));
    }
    Ok(())
}

fn point_ok(p: &ErrorPoint) -> Result<(), CliError> {
    positive("point.mu1", p.mu1)?;
    positive("point.mu2", p.mu2)?;
    frame_ok(p.n, p.tau, "point.")
}

/// Header plus numeric rows, in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(io_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v}"))).map_err(io_error)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn lib(e: crate::Error) -> CliError {
    CliError::usage(format!("sweep point rejected: {e}"))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn grid2(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect()
}

fn par_rows<T: Sync>(
    points: &[T],
    f: impl Fn(&T) -> crate::Result<Vec<f64>> + Sync + Send,
) -> Result<Vec<Vec<f64>>, CliError> {
    points.par_iter().map(f).collect::<crate::Result<Vec<_>>>().map_err(lib)
}

/// Log-spaced integers in `[lo, hi]`, rounded and de-duplicated.
pub fn log_spaced(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    if points == 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp().round() as usize)
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

fn tau_label(t: f64) -> String {
    format!("{}", snap(t))
}

pub fn evaluate(spec: &SweepSpec) -> Result<Table, CliError> {
    spec.validate()?;
    match &spec.params {
        FigureParams::RateVsGain(p) => {
            let points = grid2(&p.gain1.points(), &p.gain2.points());
            let frame = FrameConfig { n: p.n, tau: p.tau };
            let rows = par_rows(&points, |&(g1, g2)| {
                let link = LinkConfig::new(
                    p.p1,
                    Complex64::new(g1.sqrt(), 0.0),
                    p.p2,
                    Complex64::new(g2.sqrt(), 0.0),
                )?;
                Ok(vec![
                    g1,
                    g2,
                    throughput_matrix(&link, &frame)?,
                    throughput_closed(&link, &frame)?,
                    throughput_noma(link.mu1(), link.mu2()),
                ])
            })?;
            Ok(Table {
                header: header(&["gain1", "gain2", "anoma_definition", "anoma_closed", "noma"]),
                rows,
            })
        }
        FigureParams::RateVsN(p) => {
            let ns = log_spaced(p.n_min, p.n_max, p.n_points);
            let link = LinkConfig::from_snr(p.mu1, p.mu2).map_err(lib)?;
            let limits = p
                .taus
                .iter()
                .map(|&t| throughput_asymptotic(p.mu1, p.mu2, t))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(lib)?;
            let rows = par_rows(&ns, |&n| {
                let mut row = vec![n as f64];
                for &tau in &p.taus {
                    row.push(throughput_closed(&link, &FrameConfig { n, tau })?);
                }
                row.push(throughput_noma(p.mu1, p.mu2));
                row.extend(&limits);
                Ok(row)
            })?;
            let mut names = vec!["N".to_string()];
            names.extend(p.taus.iter().map(|t| format!("anoma_tau{}", tau_label(*t))));
            names.push("noma".into());
            names.extend(p.taus.iter().map(|t| format!("asymptote_{}", tau_label(*t))));
            Ok(Table { header: names, rows })
        }
        FigureParams::PowerSurface(p) => {
            let link = LinkConfig::with_limits(
                p.p1_max,
                Complex64::new(p.gain1.sqrt(), 0.0),
                p.p1_max,
                p.p2_max,
                Complex64::new(p.gain2.sqrt(), 0.0),
                p.p2_max,
            )
            .map_err(lib)?;
            let frame = FrameConfig { n: p.n, tau: p.tau };
            let (p1, p2) = (p.p1.points(), p.p2.points());
            let report = verify_full_power(&link, &p1, &p2, &frame).map_err(lib)?;
            let rows = grid2(&p1, &p2)
                .into_iter()
                .enumerate()
                .map(|(k, (a, b))| vec![a, b, report.throughput[k / p2.len()][k % p2.len()]])
                .collect();
            Ok(Table {
                header: header(&["p1", "p2", "throughput"]),
                rows,
            })
        }
        FigureParams::TauStarVsN(p) => {
            let points: Vec<([f64; 2], usize)> = p
                .conditions
                .iter()
                .flat_map(|c| p.n_values.iter().map(move |n| (*c, *n)))
                .collect();
            // the grid search inside is already parallel
            let rows = points
                .iter()
                .map(|&([mu1, mu2], n)| {
                    let link = LinkConfig::from_snr(mu1, mu2)?;
                    let r = optimal_tau(&link, n, p.resolution)?;
                    Ok(vec![mu1, mu2, n as f64, r.tau_star, r.achieved_throughput])
                })
                .collect::<crate::Result<Vec<_>>>()
                .map_err(lib)?;
            Ok(Table {
                header: header(&["mu1", "mu2", "N", "tau_star", "throughput"]),
                rows,
            })
        }
        FigureParams::LossHeatmap(p) => {
            let (link, frame) = resolve_point(&p.point)?;
            let points = grid2(&p.eps1.points(), &p.eps2.points());
            let rows = par_rows(&points, |&(e1, e2)| {
                let b = loss_breakdown(&link, &frame, &TimingError::new(e1, e2))?;
                Ok(vec![e1, e2, b.exact_throughput_with_error, b.delta, b.gamma])
            })?;
            Ok(Table {
                header: header(&["eps1", "eps2", "throughput_with_error", "delta", "gamma"]),
                rows,
            })
        }
        FigureParams::LossSlices(p) => {
            let (link, frame) = resolve_point(&p.point)?;
            let rows = par_rows(&p.eps.points(), |&e| {
                let sync = loss_breakdown(&link, &frame, &TimingError::new(e, 0.0))?;
                let coord = loss_breakdown(&link, &frame, &TimingError::new(0.0, e))?;
                Ok(vec![
                    e,
                    sync.gamma,
                    coord.gamma,
                    sync.delta,
                    coord.delta,
                    loss_linear_sync(&link, &frame, e)?.delta,
                    loss_linear_coord(&link, &frame, e)?.delta,
                ])
            })?;
            Ok(Table {
                header: header(&[
                    "eps",
                    "gamma_eps1",
                    "gamma_eps2",
                    "delta_eps1",
                    "delta_eps2",
                    "delta_lin_eps1",
                    "delta_lin_eps2",
                ]),
                rows,
            })
        }
        FigureParams::SchemeComparison(p) => {
            let (link, frame) = resolve_point(&p.point)?;
            let (mu1, mu2) = (p.point.mu1, p.point.mu2);
            let clean = throughput_closed(&link, &frame).map_err(lib)?;
            let rows = par_rows(&p.eps.points(), |&e| {
                Ok(vec![
                    e,
                    throughput_with_error(&link, &frame, &TimingError::new(e, 0.0))?,
                    throughput_with_error(&link, &frame, &TimingError::new(0.0, e))?,
                    clean,
                    throughput_noma(mu1, mu2),
                    throughput_oma(mu1, mu2),
                ])
            })?;
            Ok(Table {
                header: header(&[
                    "eps",
                    "anoma_sync_error",
                    "anoma_coord_error",
                    "anoma_no_error",
                    "noma",
                    "oma",
                ]),
                rows,
            })
        }
    }
}

fn resolve_point(p: &ErrorPoint) -> Result<(LinkConfig, FrameConfig), CliError> {
    let link = LinkConfig::from_snr(p.mu1, p.mu2).map_err(lib)?;
    let frame = FrameConfig::new(p.n, p.tau).map_err(lib)?;
    Ok((link, frame))
}

/// Evaluates `spec` and writes the CSV to its output (or `stdout`).
pub fn run_sweep(spec: &SweepSpec, stdout: &mut dyn Write) -> Result<Table, CliError> {
    let table = evaluate(spec)?;
    match &spec.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            table.write_csv(std::io::BufWriter::new(file))?;
        }
        None => table.write_csv(stdout)?,
    }
    Ok(table)
}
