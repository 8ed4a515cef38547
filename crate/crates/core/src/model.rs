//! Link, frame and timing-error parameters, plus the structured matrices of the
//! oversampled two-user receiver.
//!
//! Samples are interleaved as `[y1[1], y2[1], y1[2], y2[2], ...]` and symbols
//! as `[s1[1], s2[1], ...]`, so every matrix here is `2N x 2N`. Even (0-based)
//! rows/columns belong to User 1, odd ones to User 2.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::band::BandMatrix;
use crate::error::{domain, Result};

/// Transmit powers, channel coefficients and power ceilings of both users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub p1: f64,
    pub p2: f64,
    pub h1: Complex64,
    pub h2: Complex64,
    pub p1_max: f64,
    pub p2_max: f64,
}

impl LinkConfig {
    /// Full-power link: `p_max = p`.
    pub fn new(p1: f64, h1: Complex64, p2: f64, h2: Complex64) -> Result<Self> {
        Self::with_limits(p1, h1, p1, p2, h2, p2)
    }

    pub fn with_limits(p1: f64, h1: Complex64, p1_max: f64, p2: f64, h2: Complex64, p2_max: f64) -> Result<Self> {
        let link = Self {
            p1,
            p2,
            h1,
            h2,
            p1_max,
            p2_max,
        };
        link.validate()?;
        Ok(link)
    }

    /// Unit channels at powers `mu1`, `mu2`, so the transmit SNRs are `mu1`, `mu2`.
    pub fn from_snr(mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(mu1, Complex64::new(1.0, 0.0), mu2, Complex64::new(1.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p1_max", self.p1_max),
            ("p2_max", self.p2_max),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, h) in [("h1", self.h1), ("h2", self.h2)] {
            if !h.re.is_finite() || !h.im.is_finite() {
                return Err(domain(format!("{name} must be finite, got {h}")));
            }
        }
        if self.p1 > self.p1_max {
            return Err(domain(format!("p1 = {} exceeds p1_max = {}", self.p1, self.p1_max)));
        }
        if self.p2 > self.p2_max {
            return Err(domain(format!("p2 = {} exceeds p2_max = {}", self.p2, self.p2_max)));
        }
        Ok(())
    }

    /// Transmit SNR of User 1, `P1 |h1|²`.
    pub fn mu1(&self) -> f64 {
        self.p1 * self.h1.norm_sqr()
    }

    /// Transmit SNR of User 2, `P2 |h2|²`.
    pub fn mu2(&self) -> f64 {
        self.p2 * self.h2.norm_sqr()
    }

    /// Errors unless both SNRs are finite and strictly positive.
    pub fn require_positive_snr(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let (mu1, mu2) = (self.mu1(), self.mu2());
        if !(mu1 > 0.0 && mu1.is_finite() && mu2 > 0.0 && mu2.is_finite()) {
            return Err(domain(format!("SNRs must be finite and > 0, got mu1 = {mu1}, mu2 = {mu2}")));
        }
        Ok((mu1, mu2))
    }
}

/// Frame length `n` (symbols per user) and normalized timing mismatch `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub n: usize,
    pub tau: f64,
}

impl FrameConfig {
    pub fn new(n: usize, tau: f64) -> Result<Self> {
        let frame = Self { n, tau };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("frame length n must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(domain(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        Ok(())
    }

    /// Number of interleaved samples, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Symbol intervals occupied by the frame, `N + tau`.
    pub fn duration(&self) -> f64 {
        self.n as f64 + self.tau
    }
}

/// Normalized synchronization error `eps1` and coordination error `eps2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimingError {
    pub eps1: f64,
    pub eps2: f64,
}

impl TimingError {
    pub const ZERO: Self = Self { eps1: 0.0, eps2: 0.0 };

    pub fn new(eps1: f64, eps2: f64) -> Self {
        Self { eps1, eps2 }
    }

    /// Total shift of the second sampling bank, `eps1 + eps2`.
    pub fn total(&self) -> f64 {
        self.eps1 + self.eps2
    }

    pub fn is_zero(&self) -> bool {
        self.eps1 == 0.0 && self.eps2 == 0.0
    }

    /// Checks that every sampling window overlaps at most its immediate
    /// neighbours, which is what the banded error model describes.
    ///
    /// Requires `eps1 ∈ (tau - 1, tau)`, `eps1 + eps2 ∈ (-tau, 1 - tau)` and
    /// `tau + eps2 ∈ [0, 1]` (relative offset of the two sampling banks).
    /// Zero error is always accepted, including at `tau = 0`.
    pub fn validate(&self, frame: &FrameConfig) -> Result<()> {
        let tau = frame.tau;
        let (e1, e2) = (self.eps1, self.eps2);
        if !e1.is_finite() || !e2.is_finite() {
            return Err(domain(format!("timing errors must be finite, got ({e1}, {e2})")));
        }
        if self.is_zero() {
            return Ok(());
        }
        if !(e1 > tau - 1.0 && e1 < tau) {
            return Err(domain(format!("eps1 = {e1} outside ({}, {tau})", tau - 1.0)));
        }
        let total = self.total();
        if !(total > -tau && total < 1.0 - tau) {
            return Err(domain(format!(
                "eps1 + eps2 = {total} outside ({}, {})",
                -tau,
                1.0 - tau
            )));
        }
        let offset = tau + e2;
        if !(0.0..=1.0).contains(&offset) {
            return Err(domain(format!("tau + eps2 = {offset} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Characteristic roots of the two-step determinant recursion, `r1 >= r2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    pub r1: f64,
    pub r2: f64,
}

impl RootPair {
    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn product(&self) -> f64 {
        self.r1 * self.r2
    }
}

/// What a banded matrix represents in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Pulse cross-correlation (`R`, `R̂`) or noise covariance (`R̂_N`).
    Correlation,
    /// Timing-error perturbation (`E1`, `E2`).
    Perturbation,
    /// `{-1, 0, 1}` sign pattern (`Z1`, `Z2`, `Z3`).
    Pattern,
}

/// A tagged banded real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMatrix {
    kind: MatrixKind,
    band: BandMatrix,
}

impl StructuredMatrix {
    pub fn new(kind: MatrixKind, band: BandMatrix) -> Self {
        Self { kind, band }
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn band(&self) -> &BandMatrix {
        &self.band
    }

    pub fn into_band(self) -> BandMatrix {
        self.band
    }

    pub fn dim(&self) -> usize {
        self.band.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.band.get(i, j)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.band.to_dense()
    }
}

/// Diagonal channel-gain matrix `H` with entries `h1√P1, h2√P2, h1√P1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    diag: Vec<Complex64>,
}

impl GainMatrix {
    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Diagonal of `H Hᴴ`: alternating `mu1, mu2`.
    pub fn gram_diagonal(&self) -> Vec<f64> {
        self.diag.iter().map(|h| h.norm_sqr()).collect()
    }

    /// `H x` for an interleaved symbol vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.diag.len(), "dimension mismatch");
        self.diag.iter().zip(x).map(|(h, s)| h * s).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag))
    }
}

/// Correlation matrix `R` of the oversampled matched filters; also the noise
/// covariance `R_N` without timing error.
pub fn build_correlation(frame: &FrameConfig) -> Result<StructuredMatrix> {
    frame.validate()?;
    let tau = frame.tau;
    let band = BandMatrix::from_fn(frame.dim(), 1, 1, |i, j| {
        if i == j {
            1.0
        } else if i.min(j) % 2 == 0 {
            1.0 - tau
        } else {
            tau
        }
    });
    Ok(StructuredMatrix::new(MatrixKind::Correlation, band))
}

pub fn build_gain(link: &LinkConfig, n: usize) -> Result<GainMatrix> {
    link.validate()?;
    if n == 0 {
        return Err(domain("frame length n must be >= 1"));
    }
    let g1 = link.h1 * link.p1.sqrt();
    let g2 = link.h2 * link.p2.sqrt();
    let diag = (0..2 * n).map(|k| if k % 2 == 0 { g1 } else { g2 }).collect();
    Ok(GainMatrix { diag })
}

/// Side of zero an error component falls on; zero counts as positive (the
/// affected entries vanish there either way).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// Sign quadrant of `(eps1, eps1 + eps2)`. Inside one quadrant `E1` is linear:
/// `E1 = eps1 Z1 + eps2 Z2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub sync: Sign,
    pub total: Sign,
}

impl Branch {
    pub const POSITIVE: Self = Self {
        sync: Sign::Positive,
        total: Sign::Positive,
    };

    pub fn of(err: &TimingError) -> Self {
        Self {
            sync: Sign::of(err.eps1),
            total: Sign::of(err.total()),
        }
    }
}

/// Per-row coefficients `[c(i-1 same user), c(other user, earlier), c(self),
/// c(other user, later), c(i+1 same user)]` of the `E1` row for a shift of
/// sign `s`, as multiples of the shift.
fn shift_row(s: Sign) -> [f64; 5] {
    let (before, after) = match s {
        Sign::Positive => (0.0, 1.0),
        Sign::Negative => (-1.0, 0.0),
    };
    [before, -1.0, -s.value(), 1.0, after]
}

/// Writes `coef[k]` into row `row`, columns `row - 2 ..= row + 2`.
fn put_row(m: &mut BandMatrix, row: usize, coef: [f64; 5], scale: f64) {
    let n = m.dim();
    for (k, c) in coef.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let col = row as isize + k as isize - 2;
        if col >= 0 && (col as usize) < n {
            let col = col as usize;
            let v = m.get(row, col) + scale * c;
            m.set(row, col, v);
        }
    }
}

/// Sign patterns `(Z1, Z2)` with `E1 = eps1 Z1 + eps2 Z2` on `branch`, and the
/// noise pattern `Z3` with `E2 = eps2 Z3`.
pub fn build_patterns(n: usize, branch: Branch) -> Result<(StructuredMatrix, StructuredMatrix, StructuredMatrix)> {
    if n == 0 {
        return Err(domain("frame length n must be >= 1"));
    }
    let dim = 2 * n;
    let mut z1 = BandMatrix::zeros(dim, 2, 2);
    let mut z2 = BandMatrix::zeros(dim, 2, 2);
    let sync = shift_row(branch.sync);
    let total = shift_row(branch.total);
    for i in 0..n {
        put_row(&mut z1, 2 * i, sync, 1.0);
        put_row(&mut z1, 2 * i + 1, total, 1.0);
        put_row(&mut z2, 2 * i + 1, total, 1.0);
    }
    let z3 = BandMatrix::from_fn(dim, 1, 1, |i, j| {
        if i == j {
            0.0
        } else if i.min(j) % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    });
    Ok((
        StructuredMatrix::new(MatrixKind::Pattern, z1),
        StructuredMatrix::new(MatrixKind::Pattern, z2),
        StructuredMatrix::new(MatrixKind::Pattern, z3),
    ))
}

/// Matrices of the mistimed receiver.
#[derive(Debug, Clone)]
pub struct ErrorMatrices {
    /// Signal perturbation, `R̂ = R + E1`.
    pub e1: StructuredMatrix,
    /// Noise perturbation, `R̂_N = R + E2`.
    pub e2: StructuredMatrix,
    pub rhat: StructuredMatrix,
    pub rhat_n: StructuredMatrix,
}

/// Builds `E1` from the unit-step form valid for every sign of `eps1` and
/// `eps1 + eps2`, plus `E2 = eps2 Z3`, `R̂` and `R̂_N`.
pub fn build_error_matrices(frame: &FrameConfig, err: &TimingError) -> Result<ErrorMatrices> {
    frame.validate()?;
    err.validate(frame)?;
    let r = build_correlation(frame)?.into_band();
    let dim = frame.dim();
    let branch = Branch::of(err);

    let mut e1 = BandMatrix::zeros(dim, 2, 2);
    let total = err.total();
    for i in 0..frame.n {
        put_row(&mut e1, 2 * i, shift_row(branch.sync), err.eps1);
        put_row(&mut e1, 2 * i + 1, shift_row(branch.total), total);
    }
    let (_, _, z3) = build_patterns(frame.n, branch)?;
    let e2 = z3.band().scale(err.eps2);
    let rhat = r.add(&e1);
    let rhat_n = r.add(&e2);
    Ok(ErrorMatrices {
        e1: StructuredMatrix::new(MatrixKind::Perturbation, e1),
        e2: StructuredMatrix::new(MatrixKind::Perturbation, e2),
        rhat: StructuredMatrix::new(MatrixKind::Correlation, rhat),
        rhat_n: StructuredMatrix::new(MatrixKind::Correlation, rhat_n),
    })
}
