//! Continuous-time simulator of the oversampled two-user receiver.
//!
//! Both users send unit-energy rectangular pulses of length `T`; User 1's
//! `i`-th symbol (0-based) occupies `[iT, (i+1)T]` and User 2's is delayed by
//! `tau T`. The first matched-filter bank integrates over
//! `[(i + eps1)T, (i + 1 + eps1)T]`, the second over
//! `[(i + tau + eps1 + eps2)T, (i + 1 + tau + eps1 + eps2)T]`. Every
//! noiseless output is an exact sum of interval overlaps, so no quadrature is
//! involved. Symbols outside the frame are zero.
//!
//! Noise is simulated two ways: white noise integrated over a fine sub-grid
//! through both filter banks ([`noise_covariance_mc`]), and a direct draw
//! from the banded covariance factor ([`noise_covariance_direct`]).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::band::{BandCholesky, BandMatrix};
use crate::error::{domain, Result};
use crate::model::{build_error_matrices, build_gain, FrameConfig, LinkConfig, TimingError};

/// Symbol alphabet for generated frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    /// Circularly-symmetric complex Gaussian, unit variance.
    Gaussian,
    /// `(±1 ± j)/√2`.
    Qpsk,
}

/// Symbols of both users for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub s1: Vec<Complex64>,
    pub s2: Vec<Complex64>,
    pub seed: u64,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.s1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s1.is_empty()
    }

    /// `[s1[0], s2[0], s1[1], s2[1], ...]`.
    pub fn interleaved(&self) -> Vec<Complex64> {
        interleave(&self.s1, &self.s2)
    }
}

/// Outputs of the two matched-filter banks.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVectors {
    pub y1: Vec<Complex64>,
    pub y2: Vec<Complex64>,
}

impl SampleVectors {
    /// `[y1[0], y2[0], y1[1], y2[1], ...]`.
    pub fn interleaved(&self) -> Vec<Complex64> {
        interleave(&self.y1, &self.y2)
    }
}

fn interleave(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect()
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn generate_symbols(n: usize, constellation: Constellation, seed: u64) -> Result<SymbolFrame> {
    if n == 0 {
        return Err(domain("frame length n must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| match constellation {
        Constellation::Gaussian => complex_normal(rng),
        Constellation::Qpsk => {
            let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    };
    let s1 = (0..n).map(|_| draw(&mut rng)).collect();
    let s2 = (0..n).map(|_| draw(&mut rng)).collect();
    Ok(SymbolFrame { s1, s2, seed })
}

/// Closed interval `[start, end]` on the time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }
}

/// Rectangular pulse of duration `period` and amplitude `1/√period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectPulse {
    pub period: f64,
}

impl Default for RectPulse {
    fn default() -> Self {
        Self { period: 1.0 }
    }
}

impl RectPulse {
    pub fn amplitude(&self) -> f64 {
        self.period.sqrt().recip()
    }

    /// `∫ p(t - a) p(t - b) dt` for pulses starting at `a` and `b`.
    pub fn correlation(&self, a: f64, b: f64) -> f64 {
        let x = Interval::new(a, a + self.period);
        let y = Interval::new(b, b + self.period);
        x.overlap(&y) / self.period
    }
}

/// Start times of every pulse and sampling window, in seconds.
#[derive(Debug, Clone)]
struct Timeline {
    pulse: RectPulse,
    user1: Vec<f64>,
    user2: Vec<f64>,
    bank1: Vec<f64>,
    bank2: Vec<f64>,
}

impl Timeline {
    fn new(pulse: RectPulse, frame: &FrameConfig, err: &TimingError) -> Self {
        let t = pulse.period;
        let n = frame.n;
        let at = |offset: f64| (0..n).map(|i| (i as f64 + offset) * t).collect::<Vec<_>>();
        Self {
            pulse,
            user1: at(0.0),
            user2: at(frame.tau),
            bank1: at(err.eps1),
            bank2: at(frame.tau + err.total()),
        }
    }

    /// Matched-filter response of window starting at `w` to both users'
    /// neighbouring symbols.
    fn response(&self, w: f64, center: usize, a1: &[Complex64], a2: &[Complex64]) -> Complex64 {
        let n = self.user1.len();
        let lo = center.saturating_sub(2);
        let hi = (center + 3).min(n);
        (lo..hi).fold(Complex64::default(), |acc, j| {
            acc + a1[j] * self.pulse.correlation(w, self.user1[j]) + a2[j] * self.pulse.correlation(w, self.user2[j])
        })
    }
}

fn check_frame_symbols(symbols: &SymbolFrame, frame: &FrameConfig) -> Result<()> {
    if symbols.s1.len() != frame.n || symbols.s2.len() != frame.n {
        return Err(domain(format!(
            "symbol frame has lengths ({}, {}), expected {}",
            symbols.s1.len(),
            symbols.s2.len(),
            frame.n
        )));
    }
    Ok(())
}

/// Matched-filter outputs with unit-period pulses.
pub fn matched_filter_outputs(
    symbols: &SymbolFrame,
    link: &LinkConfig,
    frame: &FrameConfig,
    err: &TimingError,
    noiseless: bool,
) -> Result<SampleVectors> {
    matched_filter_outputs_with(RectPulse::default(), symbols, link, frame, err, noiseless)
}

/// Matched-filter outputs for an arbitrary pulse period. When `noiseless` is
/// false, colored noise with covariance `R̂_N` is added, drawn from a stream
/// derived from `symbols.seed`.
pub fn matched_filter_outputs_with(
    pulse: RectPulse,
    symbols: &SymbolFrame,
    link: &LinkConfig,
    frame: &FrameConfig,
    err: &TimingError,
    noiseless: bool,
) -> Result<SampleVectors> {
    frame.validate()?;
    err.validate(frame)?;
    check_frame_symbols(symbols, frame)?;
    if !(pulse.period > 0.0 && pulse.period.is_finite()) {
        return Err(domain(format!("pulse period must be > 0, got {}", pulse.period)));
    }
    let g1 = link.h1 * link.p1.sqrt();
    let g2 = link.h2 * link.p2.sqrt();
    let a1: Vec<Complex64> = symbols.s1.iter().map(|s| g1 * s).collect();
    let a2: Vec<Complex64> = symbols.s2.iter().map(|s| g2 * s).collect();

    let tl = Timeline::new(pulse, frame, err);
    let mut y1: Vec<Complex64> = (0..frame.n).map(|i| tl.response(tl.bank1[i], i, &a1, &a2)).collect();
    let mut y2: Vec<Complex64> = (0..frame.n).map(|i| tl.response(tl.bank2[i], i, &a1, &a2)).collect();

    if !noiseless {
        let cov = build_error_matrices(frame, err)?.rhat_n.into_band();
        let chol = cov.cholesky("R_N")?;
        let mut rng = ChaCha8Rng::seed_from_u64(symbols.seed);
        rng.set_stream(1);
        let noise = draw_colored(&chol, &mut rng);
        for i in 0..frame.n {
            y1[i] += noise[2 * i];
            y2[i] += noise[2 * i + 1];
        }
    }
    Ok(SampleVectors { y1, y2 })
}

/// `R̂ H X` for the same frame, assembled from the model matrices.
pub fn algebraic_outputs(
    symbols: &SymbolFrame,
    link: &LinkConfig,
    frame: &FrameConfig,
    err: &TimingError,
) -> Result<Vec<Complex64>> {
    check_frame_symbols(symbols, frame)?;
    let rhat = build_error_matrices(frame, err)?.rhat.into_band();
    let hx = build_gain(link, frame.n)?.apply(&symbols.interleaved());
    Ok(rhat.mul_vec(&hx))
}

fn draw_colored(chol: &BandCholesky, rng: &mut impl Rng) -> Vec<Complex64> {
    let w: Vec<Complex64> = (0..chol.factor().dim()).map(|_| complex_normal(rng)).collect();
    chol.factor().mul_vec(&w)
}

/// Monte Carlo settings for the noise-covariance estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub trials: usize,
    pub seed: u64,
    /// Uniform sub-samples per symbol interval for the white-noise path.
    pub subsamples_per_symbol: usize,
    /// Target elementwise accuracy; a warning is raised when three standard
    /// errors exceed it.
    pub tolerance: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            seed: 0,
            subsamples_per_symbol: 64,
            tolerance: 0.01,
        }
    }
}

/// Empirical covariance of the interleaved noise vector against `R̂_N`.
#[derive(Debug, Clone)]
pub struct CovarianceReport {
    pub empirical: DMatrix<Complex64>,
    pub expected: BandMatrix,
    /// `max |empirical - R̂_N|` over all entries.
    pub max_abs_deviation: f64,
    pub trials: usize,
    /// Standard error of a unit-variance entry, `1/√trials`.
    pub standard_error: f64,
    pub warning: Option<String>,
}

impl CovarianceReport {
    fn new(empirical: DMatrix<Complex64>, expected: BandMatrix, opts: &McOptions) -> Self {
        let mut worst = 0.0_f64;
        for i in 0..expected.dim() {
            for j in 0..expected.dim() {
                worst = worst.max((empirical[(i, j)] - expected.get(i, j)).norm());
            }
        }
        let standard_error = (opts.trials as f64).sqrt().recip();
        let warning = (3.0 * standard_error > opts.tolerance).then(|| {
            format!(
                "{} trials give standard error {standard_error:.2e}; tolerance {} needs at least {}",
                opts.trials,
                opts.tolerance,
                (9.0 / (opts.tolerance * opts.tolerance)).ceil()
            )
        });
        Self {
            empirical,
            expected,
            max_abs_deviation: worst,
            trials: opts.trials,
            standard_error,
            warning,
        }
    }
}

const MC_CHUNKS: usize = 64;

/// Runs `trials` independent draws split over fixed chunks, each with its own
/// stream of `seed`, and reduces the outer products in chunk order.
fn accumulate_covariance(
    dim: usize,
    opts: &McOptions,
    draw: impl Fn(&mut ChaCha8Rng, &mut [Complex64]) + Sync,
) -> DMatrix<Complex64> {
    let per_chunk = opts.trials / MC_CHUNKS;
    let extra = opts.trials % MC_CHUNKS;
    let partials: Vec<Vec<Complex64>> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c as u64);
            let count = per_chunk + usize::from(c < extra);
            let mut acc = vec![Complex64::default(); dim * dim];
            let mut sample = vec![Complex64::default(); dim];
            for _ in 0..count {
                sample.iter_mut().for_each(|v| *v = Complex64::default());
                draw(&mut rng, &mut sample);
                for i in 0..dim {
                    let si = sample[i];
                    for j in i..dim {
                        acc[i * dim + j] += si * sample[j].conj();
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::default(); dim * dim];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let scale = (opts.trials as f64).recip();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i <= j {
            total[i * dim + j] * scale
        } else {
            (total[j * dim + i] * scale).conj()
        }
    })
}

/// One cell of the integration sub-grid: its noise amplitude scale and the
/// window of each bank it falls in.
#[derive(Debug, Clone, Copy)]
struct Cell {
    scale: f64,
    bank1: Option<usize>,
    bank2: Option<usize>,
}

fn window_index(starts: &[f64], period: f64, t: f64) -> Option<usize> {
    let first = *starts.first()?;
    let k = ((t - first) / period).floor();
    if k < 0.0 || k as usize >= starts.len() {
        return None;
    }
    let k = k as usize;
    (t >= starts[k] && t < starts[k] + period).then_some(k)
}

fn integration_cells(tl: &Timeline, subsamples: usize) -> Vec<Cell> {
    let t = tl.pulse.period;
    let n = tl.bank1.len();
    let lo = tl.bank1[0].min(tl.bank2[0]);
    let hi = (tl.bank1[n - 1] + t).max(tl.bank2[n - 1] + t);
    let dt = t / subsamples as f64;

    let mut points: Vec<f64> = (0..)
        .map(|k| lo + k as f64 * dt)
        .take_while(|p| *p < hi)
        .collect();
    for s in tl.bank1.iter().chain(&tl.bank2) {
        points.push(*s);
        points.push(*s + t);
    }
    points.push(hi);
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t);

    points
        .windows(2)
        .map(|w| {
            let len = w[1] - w[0];
            let mid = 0.5 * (w[0] + w[1]);
            // cell integral of unit white noise has variance len; the pulse
            // amplitude is 1/√T
            Cell {
                scale: (len / t).sqrt(),
                bank1: window_index(&tl.bank1, t, mid),
                bank2: window_index(&tl.bank2, t, mid),
            }
        })
        .collect()
}

fn check_trials(opts: &McOptions) -> Result<()> {
    if opts.trials == 0 {
        return Err(domain("trials must be >= 1"));
    }
    if opts.subsamples_per_symbol == 0 {
        return Err(domain("subsamples_per_symbol must be >= 1"));
    }
    Ok(())
}

/// White-noise Monte Carlo with default options apart from `trials`/`seed`.
pub fn noise_covariance_mc(frame: &FrameConfig, eps2: f64, trials: usize, seed: u64) -> Result<CovarianceReport> {
    noise_covariance_mc_with(
        frame,
        eps2,
        &McOptions {
            trials,
            seed,
            ..McOptions::default()
        },
    )
}

/// Integrates simulated white noise through both filter banks and compares
/// the empirical covariance of the interleaved outputs with `R̂_N`.
///
/// Noise on each sub-grid cell of width `Δt` has variance `1/Δt` (`M/T` on
/// the uniform grid); cell edges include every window edge so each window is
/// an exact union of cells. `eps1` only shifts the whole grid and is set to 0.
pub fn noise_covariance_mc_with(frame: &FrameConfig, eps2: f64, opts: &McOptions) -> Result<CovarianceReport> {
    check_trials(opts)?;
    let err = TimingError::new(0.0, eps2);
    let expected = build_error_matrices(frame, &err)?.rhat_n.into_band();
    let tl = Timeline::new(RectPulse::default(), frame, &err);
    let cells = integration_cells(&tl, opts.subsamples_per_symbol);
    let amplitude = tl.pulse.amplitude() * tl.pulse.period.sqrt();

    let empirical = accumulate_covariance(frame.dim(), opts, |rng, out| {
        for cell in &cells {
            let w = complex_normal(rng) * (cell.scale * amplitude);
            if let Some(k) = cell.bank1 {
                out[2 * k] += w;
            }
            if let Some(k) = cell.bank2 {
                out[2 * k + 1] += w;
            }
        }
    });
    Ok(CovarianceReport::new(empirical, expected, opts))
}

/// Draws the interleaved noise directly as `L w` with `R̂_N = L Lᵀ`.
pub fn noise_covariance_direct(frame: &FrameConfig, eps2: f64, opts: &McOptions) -> Result<CovarianceReport> {
    check_trials(opts)?;
    let err = TimingError::new(0.0, eps2);
    let expected = build_error_matrices(frame, &err)?.rhat_n.into_band();
    let chol = expected.cholesky("R_N")?;
    let empirical = accumulate_covariance(frame.dim(), opts, |rng, out| {
        out.copy_from_slice(&draw_colored(&chol, rng));
    });
    Ok(CovarianceReport::new(empirical, expected, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn single_symbol_outputs() {
        let symbols = SymbolFrame {
            s1: vec![one()],
            s2: vec![one()],
            seed: 0,
        };
        let link = LinkConfig::from_snr(1.0, 1.0).unwrap();
        let frame = FrameConfig::new(1, 0.5).unwrap();
        let y = matched_filter_outputs(&symbols, &link, &frame, &TimingError::ZERO, true).unwrap();
        assert_eq!(y.y1, vec![Complex64::new(1.5, 0.0)]);
        assert_eq!(y.y2, vec![Complex64::new(1.5, 0.0)]);
    }

    #[test]
    fn synchronous_users_give_noma_samples() {
        let symbols = generate_symbols(6, Constellation::Qpsk, 3).unwrap();
        let link = LinkConfig::from_snr(2.0, 0.5).unwrap();
        let frame = FrameConfig::new(6, 0.0).unwrap();
        let y = matched_filter_outputs(&symbols, &link, &frame, &TimingError::ZERO, true).unwrap();
        for i in 0..6 {
            let noma = symbols.s1[i] * 2.0_f64.sqrt() + symbols.s2[i] * 0.5_f64.sqrt();
            assert!((y.y1[i] - noma).norm() < 1e-15);
            assert!((y.y2[i] - noma).norm() < 1e-15);
        }
    }

    #[test]
    fn noiseless_outputs_match_algebraic_model() {
        let symbols = generate_symbols(8, Constellation::Gaussian, 11).unwrap();
        let link = LinkConfig::new(1.3, Complex64::new(0.6, -0.2), 0.7, Complex64::new(-0.1, 0.9)).unwrap();
        let frame = FrameConfig::new(8, 0.3).unwrap();
        let err = TimingError::new(0.04, -0.02);
        let y = matched_filter_outputs(&symbols, &link, &frame, &err, true).unwrap();
        let model = algebraic_outputs(&symbols, &link, &frame, &err).unwrap();
        let worst = y
            .interleaved()
            .iter()
            .zip(&model)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn pulse_has_unit_energy() {
        for period in [1.0, 2.0, 0.5, 1e-3, 37.0] {
            let p = RectPulse { period };
            assert!((p.correlation(3.0 * period, 3.0 * period) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn outputs_do_not_depend_on_period() {
        let symbols = generate_symbols(5, Constellation::Qpsk, 2).unwrap();
        let link = LinkConfig::from_snr(1.0, 0.5).unwrap();
        let frame = FrameConfig::new(5, 0.25).unwrap();
        let err = TimingError::new(-0.125, 0.0625);
        let a = matched_filter_outputs(&symbols, &link, &frame, &err, true).unwrap();
        let b = matched_filter_outputs_with(RectPulse { period: 4.0 }, &symbols, &link, &frame, &err, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symbols_are_reproducible() {
        let a = generate_symbols(4, Constellation::Qpsk, 7).unwrap();
        assert!(a.s1.iter().chain(&a.s2).all(|s| (s.norm() - 1.0).abs() < 1e-15));
        assert_eq!(a, generate_symbols(4, Constellation::Qpsk, 7).unwrap());
        assert_ne!(a, generate_symbols(4, Constellation::Qpsk, 8).unwrap());

        let g = generate_symbols(1000, Constellation::Gaussian, 1).unwrap();
        let var = g.s1.iter().chain(&g.s2).map(|s| s.norm_sqr()).sum::<f64>() / 2000.0;
        assert!((0.9..=1.1).contains(&var), "{var}");
        assert!(generate_symbols(0, Constellation::Gaussian, 1).is_err());
    }

    #[test]
    fn noisy_outputs_are_seeded() {
        let symbols = generate_symbols(4, Constellation::Qpsk, 5).unwrap();
        let link = LinkConfig::from_snr(1.0, 0.5).unwrap();
        let frame = FrameConfig::new(4, 0.5).unwrap();
        let a = matched_filter_outputs(&symbols, &link, &frame, &TimingError::ZERO, false).unwrap();
        let b = matched_filter_outputs(&symbols, &link, &frame, &TimingError::ZERO, false).unwrap();
        let clean = matched_filter_outputs(&symbols, &link, &frame, &TimingError::ZERO, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, clean);
    }

    #[test]
    fn sub_grid_cells_cover_every_window() {
        let frame = FrameConfig::new(3, 0.3).unwrap();
        let err = TimingError::new(0.0, 0.05);
        let tl = Timeline::new(RectPulse::default(), &frame, &err);
        let cells = integration_cells(&tl, 64);
        for k in 0..3 {
            let w1: f64 = cells.iter().filter(|c| c.bank1 == Some(k)).map(|c| c.scale * c.scale).sum();
            let w2: f64 = cells.iter().filter(|c| c.bank2 == Some(k)).map(|c| c.scale * c.scale).sum();
            assert!((w1 - 1.0).abs() < 1e-12 && (w2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_trial_counts_warn() {
        let frame = FrameConfig::new(2, 0.5).unwrap();
        let r = noise_covariance_mc(&frame, 0.0, 1000, 1).unwrap();
        assert!(r.warning.is_some());
        assert!(noise_covariance_mc(&frame, 0.0, 0, 1).is_err());
    }

    #[test]
    fn covariance_estimators_agree_roughly() {
        let frame = FrameConfig::new(2, 0.3).unwrap();
        let opts = McOptions {
            trials: 40_000,
            seed: 9,
            subsamples_per_symbol: 16,
            tolerance: 0.05,
        };
        let mc = noise_covariance_mc_with(&frame, 0.05, &opts).unwrap();
        let direct = noise_covariance_direct(&frame, 0.05, &opts).unwrap();
        assert!(mc.max_abs_deviation < 6.0 * mc.standard_error, "{}", mc.max_abs_deviation);
        assert!(direct.max_abs_deviation < 6.0 * direct.standard_error);
        assert!((mc.empirical[(0, 1)].re - 0.65).abs() < 0.03);
    }
}
