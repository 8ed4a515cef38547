//! Sum throughput of the two-user uplink, in bits per symbol interval.
//!
//! Three independent routes compute the asynchronous (ANOMA) rate:
//!
//! * [`throughput_matrix`]: log-det of `I + H Hᴴ R` through a banded
//!   Cholesky factor of the similar symmetric matrix `I + D½ R D½`;
//! * [`throughput_closed`]: the characteristic-root closed form, evaluated in
//!   the log domain so large `N` never overflows;
//! * [`throughput_recursion`]: the literal three-term continuant recursion for
//!   `det((H Hᴴ)⁻¹ + R)` with exponent tracking.
//!
//! They agree to ~1e-12 relative for moderate `N`.

use crate::band::BandMatrix;
use crate::error::{domain, Error, Result};
use crate::model::{build_correlation, FrameConfig, LinkConfig, RootPair};

/// Converts natural-log quantities to bits.
pub(crate) fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

fn check_snr(mu1: f64, mu2: f64) -> Result<()> {
    if !(mu1 > 0.0 && mu1.is_finite() && mu2 > 0.0 && mu2.is_finite()) {
        return Err(domain(format!("SNRs must be finite and > 0, got mu1 = {mu1}, mu2 = {mu2}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..1.0).contains(&tau) {
        return Err(domain(format!("tau must lie in [0, 1), got {tau}")));
    }
    Ok(())
}

/// `mu1⁻¹ + mu2⁻¹ + mu1⁻¹ mu2⁻¹`.
fn inverse_snr_sum(mu1: f64, mu2: f64) -> f64 {
    let (i1, i2) = (mu1.recip(), mu2.recip());
    i1 + i2 + i1 * i2
}

/// Roots of `x² - (a + 2τ(1-τ)) x + τ²(1-τ)² = 0`, `a = mu1⁻¹ + mu2⁻¹ + mu1⁻¹mu2⁻¹`.
///
/// The discriminant is taken in the factored form `(a + 4τ(1-τ)) a`, and `r2`
/// comes from the product `r1 r2 = τ²(1-τ)²`, so neither root suffers
/// cancellation.
pub fn roots(mu1: f64, mu2: f64, tau: f64) -> Result<RootPair> {
    check_snr(mu1, mu2)?;
    check_tau(tau)?;
    let a = inverse_snr_sum(mu1, mu2);
    let t = tau * (1.0 - tau);
    let disc = (a + 4.0 * t) * a;
    let r1 = 0.5 * (a + 2.0 * t + disc.sqrt());
    let r2 = t * t / r1;
    Ok(RootPair { r1, r2 })
}

/// `ln det(I + H Hᴴ R)`, the shared numerator of every throughput scaling.
pub fn ln_det_link(link: &LinkConfig, frame: &FrameConfig) -> Result<f64> {
    link.validate()?;
    let r = build_correlation(frame)?;
    let (mu1, mu2) = (link.mu1(), link.mu2());
    if !(mu1.is_finite() && mu2.is_finite()) {
        return Err(domain("SNRs must be finite"));
    }
    let half: Vec<f64> = (0..frame.dim())
        .map(|k| if k % 2 == 0 { mu1.sqrt() } else { mu2.sqrt() })
        .collect();
    // I + D½ R D½ is similar to I + D R and symmetric positive definite.
    let sym = BandMatrix::identity(frame.dim()).add(&r.band().scale_rows(&half).scale_cols(&half));
    Ok(sym.cholesky("I + D^1/2 R D^1/2")?.ln_det())
}

/// `(1/(N+τ)) log₂ det(I + H Hᴴ R)`.
pub fn throughput_matrix(link: &LinkConfig, frame: &FrameConfig) -> Result<f64> {
    Ok(bits(ln_det_link(link, frame)?) / frame.duration())
}

/// Same numerator scaled by `1/N`.
pub fn throughput_existing_definition(link: &LinkConfig, frame: &FrameConfig) -> Result<f64> {
    Ok(bits(ln_det_link(link, frame)?) / frame.n as f64)
}

/// Same numerator scaled by `1/(N+1)`.
pub fn throughput_n_plus_1(link: &LinkConfig, frame: &FrameConfig) -> Result<f64> {
    Ok(bits(ln_det_link(link, frame)?) / (frame.n as f64 + 1.0))
}

/// `ln d_{2N}` from the closed form, with `d_{2N} = det((H Hᴴ)⁻¹ + R)`.
pub fn ln_det_closed(mu1: f64, mu2: f64, tau: f64, n: usize) -> Result<f64> {
    let RootPair { r1, r2 } = roots(mu1, mu2, tau)?;
    let a = inverse_snr_sum(mu1, mu2);
    let gap = ((a + 4.0 * tau * (1.0 - tau)) * a).sqrt();
    if !(gap > 0.0) {
        return Err(Error::DegenerateRoots(r1));
    }
    let t2 = tau * tau;
    let ratio = r2 / r1;
    let power = match i32::try_from(n) {
        Ok(k) => ratio.powi(k),
        Err(_) => ratio.powf(n as f64),
    };
    // d = [r1^N (r1 + τ²) - r2^N (r2 + τ²)] / (r1 - r2)
    let tail = power * (r2 + t2) / (r1 + t2);
    Ok(n as f64 * r1.ln() + (r1 + t2).ln() + (-tail).ln_1p() - gap.ln())
}

/// Closed-form sum throughput in terms of `mu1`, `mu2`, `tau` and `N`.
///
/// At `tau = 0` this returns `log₂(1 + mu1 + mu2)` directly.
pub fn throughput_closed(link: &LinkConfig, frame: &FrameConfig) -> Result<f64> {
    frame.validate()?;
    let (mu1, mu2) = link.require_positive_snr()?;
    if frame.tau == 0.0 {
        return Ok(throughput_noma(mu1, mu2));
    }
    let n = frame.n as f64;
    let ln_d = ln_det_closed(mu1, mu2, frame.tau, frame.n)?;
    Ok(bits(n * (mu1 * mu2).ln() + ln_d) / frame.duration())
}

/// A positive real stored as `mantissa · e^ln_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub mantissa: f64,
    pub ln_scale: f64,
}

impl ScaledValue {
    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.ln_scale
    }

    /// Plain value; overflows to infinity for very large determinants.
    pub fn value(&self) -> f64 {
        self.mantissa * self.ln_scale.exp()
    }
}

/// `d_{2N} = det((H Hᴴ)⁻¹ + R)` through the leading-minor recursions
/// `d_{2k} = (1 + mu2⁻¹) d_{2k-1} - (1-τ)² d_{2k-2}` and
/// `d_{2k-1} = (1 + mu1⁻¹) d_{2k-2} - τ² d_{2k-3}`, with `d_0 = 1`.
pub fn determinant_recursion(link: &LinkConfig, frame: &FrameConfig) -> Result<ScaledValue> {
    frame.validate()?;
    let (mu1, mu2) = link.require_positive_snr()?;
    let tau = frame.tau;
    let diag1 = 1.0 + mu1.recip();
    let diag2 = 1.0 + mu2.recip();
    let c_in = (1.0 - tau) * (1.0 - tau);
    let c_across = tau * tau;

    const BIG: f64 = 1e150;
    const SMALL: f64 = 1e-150;
    let ln_big = BIG.ln();

    // (d_{k-2}, d_{k-1}) sharing one scale.
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut ln_scale = 0.0;
    for k in 1..=frame.dim() {
        let (diag, coupling) = if k % 2 == 1 { (diag1, c_across) } else { (diag2, c_in) };
        let next = diag * cur - coupling * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur *= SMALL;
            prev *= SMALL;
            ln_scale += ln_big;
        } else if cur.abs() < SMALL {
            cur *= BIG;
            prev *= BIG;
            ln_scale -= ln_big;
        }
    }
    if !(cur > 0.0) {
        return Err(Error::Singular(format!("recursion produced d_2N = {cur}")));
    }
    Ok(ScaledValue { mantissa: cur, ln_scale })
}

/// Throughput from the recursion route: `(N log₂(mu1 mu2) + log₂ d_{2N}) / (N+τ)`.
pub fn throughput_recursion(link: &LinkConfig, frame: &FrameConfig) -> Result<f64> {
    let d = determinant_recursion(link, frame)?;
    let n = frame.n as f64;
    Ok(bits(n * (link.mu1() * link.mu2()).ln() + d.ln()) / frame.duration())
}

/// Limit of the ANOMA throughput as `N → ∞`, `log₂(mu1 mu2 r1)`, written
/// without the `mu⁻¹` terms:
/// `½[1 + mu1 + mu2 + c] + ½√[(1 + mu1 + mu2)² + 2(1 + mu1 + mu2) c]`,
/// `c = mu1 mu2 (2τ - 2τ²)`.
pub fn throughput_asymptotic(mu1: f64, mu2: f64, tau: f64) -> Result<f64> {
    check_snr(mu1, mu2)?;
    check_tau(tau)?;
    let b = 1.0 + mu1 + mu2;
    let c = mu1 * mu2 * 2.0 * tau * (1.0 - tau);
    Ok((0.5 * (b + c) + 0.5 * (b * b + 2.0 * b * c).sqrt()).log2())
}

/// Synchronous NOMA with perfect SIC, `log₂(1 + mu1 + mu2)`.
pub fn throughput_noma(mu1: f64, mu2: f64) -> f64 {
    (1.0 + mu1 + mu2).log2()
}

/// Equal time-split TDMA at full power, `½log₂(1 + mu1) + ½log₂(1 + mu2)`.
pub fn throughput_oma(mu1: f64, mu2: f64) -> f64 {
    0.5 * (1.0 + mu1).log2() + 0.5 * (1.0 + mu2).log2()
}

/// Every throughput figure for one `(link, frame)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    pub anoma_matrix: f64,
    pub anoma_closed: f64,
    pub anoma_recursion: f64,
    pub anoma_n_plus_1: f64,
    pub anoma_existing: f64,
    pub noma: f64,
    pub oma: f64,
    pub asymptotic: f64,
}

pub fn throughput_report(link: &LinkConfig, frame: &FrameConfig) -> Result<ThroughputReport> {
    let (mu1, mu2) = link.require_positive_snr()?;
    let numerator = bits(ln_det_link(link, frame)?);
    Ok(ThroughputReport {
        anoma_matrix: numerator / frame.duration(),
        anoma_closed: throughput_closed(link, frame)?,
        anoma_recursion: throughput_recursion(link, frame)?,
        anoma_n_plus_1: numerator / (frame.n as f64 + 1.0),
        anoma_existing: numerator / frame.n as f64,
        noma: throughput_noma(mu1, mu2),
        oma: throughput_oma(mu1, mu2),
        asymptotic: throughput_asymptotic(mu1, mu2, frame.tau)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(mu1: f64, mu2: f64) -> LinkConfig {
        LinkConfig::from_snr(mu1, mu2).unwrap()
    }

    fn frame(n: usize, tau: f64) -> FrameConfig {
        FrameConfig::new(n, tau).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn matrix_route_tau_zero_is_noma() {
        let r = throughput_matrix(&link(1.0, 0.5), &frame(1, 0.0)).unwrap();
        assert!((r - 2.5_f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn matrix_route_two_by_two() {
        // det(I + diag(1, .5) [[1, .5], [.5, 1]]) = 2 * 1.5 - 1 * .5 * .25 = 2.875
        let r = throughput_matrix(&link(1.0, 0.5), &frame(1, 0.5)).unwrap();
        assert!(rel(r, 2.875_f64.log2() / 1.5) < 1e-14);
        assert!((r - 1.01571).abs() < 1e-5);
    }

    #[test]
    fn matrix_route_vanishing_user() {
        let f = frame(4, 0.5);
        let single = throughput_matrix(&link(0.0, 0.5), &f).unwrap();
        let tiny = throughput_matrix(&link(1e-12, 0.5), &f).unwrap();
        assert!((single - tiny).abs() < 1e-11);
        assert!((single - 4.0 * 1.5_f64.log2() / 4.5).abs() < 1e-14);
    }

    #[test]
    fn closed_form_special_points() {
        let noma = 2.5_f64.log2();
        assert_eq!(throughput_closed(&link(1.0, 0.5), &frame(10, 0.0)).unwrap(), noma);
        let c1 = throughput_closed(&link(1.0, 0.5), &frame(1, 0.5)).unwrap();
        assert!(rel(c1, 2.875_f64.log2() / 1.5) < 1e-13);
        let c10 = throughput_closed(&link(1.0, 0.5), &frame(10, 0.5)).unwrap();
        let m10 = throughput_matrix(&link(1.0, 0.5), &frame(10, 0.5)).unwrap();
        assert!(rel(c10, m10) < 1e-9);
    }

    #[test]
    fn roots_examples() {
        let p = roots(1.0, 0.5, 0.0).unwrap();
        assert_eq!((p.r1, p.r2), (5.0, 0.0));

        let p = roots(1.0, 1.0, 0.5).unwrap();
        // x² - 3.5x + 0.0625 = 0
        let q = (3.5_f64 * 3.5 - 4.0 * 0.0625).sqrt();
        assert!(rel(p.r1, (3.5 + q) / 2.0) < 1e-15);
        assert!(rel(p.r2, 0.0625 / ((3.5 + q) / 2.0)) < 1e-15);
        assert!((p.r1 - 3.48205).abs() < 1e-5 && (p.r2 - 0.01795).abs() < 1e-5);
        assert!(rel(p.sum(), 3.5) < 1e-15);
        assert!(rel(p.product(), 0.0625) < 1e-15);
    }

    #[test]
    fn roots_reject_bad_input() {
        assert!(roots(0.0, 1.0, 0.5).is_err());
        assert!(roots(1.0, f64::INFINITY, 0.5).is_err());
        assert!(roots(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn recursion_small_cases() {
        let d = determinant_recursion(&link(1.0, 0.5), &frame(1, 0.5)).unwrap();
        assert!((d.value() - 5.75).abs() < 1e-14);
        let d = determinant_recursion(&link(1.0, 1.0), &frame(1, 0.5)).unwrap();
        let p = roots(1.0, 1.0, 0.5).unwrap();
        assert!((d.value() - 3.75).abs() < 1e-14);
        assert!((p.sum() + 0.25 - 3.75).abs() < 1e-14);
    }

    #[test]
    fn recursion_survives_huge_frames() {
        let l = link(100.0, 100.0);
        let f = frame(20_000, 0.5);
        let d = determinant_recursion(&l, &f).unwrap();
        assert!(d.ln_scale < 0.0);
        let closed = ln_det_closed(100.0, 100.0, 0.5, 20_000).unwrap();
        assert!(rel(d.ln(), closed) < 1e-9);
    }

    #[test]
    fn asymptotic_examples() {
        assert_eq!(throughput_asymptotic(1.0, 0.5, 0.0).unwrap(), 2.5_f64.log2());
        let want = ((2.75 + 7.5_f64.sqrt()) / 2.0).log2();
        assert!(rel(throughput_asymptotic(1.0, 0.5, 0.5).unwrap(), want) < 1e-15);
        assert!((want - 1.4565).abs() < 1e-4);
        let a = throughput_asymptotic(1.0, 0.5, 0.3).unwrap();
        let b = throughput_asymptotic(1.0, 0.5, 0.7).unwrap();
        assert!(rel(a, b) < 1e-15);
    }

    #[test]
    fn baselines() {
        assert!((throughput_noma(1.0, 0.5) - 1.3219).abs() < 1e-4);
        assert_eq!(throughput_noma(0.0, 0.0), 0.0);
        assert!((throughput_noma(10.0, 10.0) - 21_f64.log2()).abs() < 1e-15);
        assert!((throughput_oma(1.0, 0.5) - (0.5 + 0.5 * 1.5_f64.log2())).abs() < 1e-15);
        assert!((throughput_oma(1.0, 0.5) - 0.7925).abs() < 1e-4);
        assert_eq!(throughput_oma(0.0, 0.0), 0.0);
        assert!((throughput_oma(3.0, 3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn alternative_scalings() {
        let l = link(1.0, 0.5);
        let f = frame(10, 0.5);
        let m = throughput_matrix(&l, &f).unwrap();
        let e = throughput_existing_definition(&l, &f).unwrap();
        let p = throughput_n_plus_1(&l, &f).unwrap();
        assert!(rel(e * 10.0, m * 10.5) < 1e-15);
        assert!(rel(p, 10.5 / 11.0 * m) < 1e-15);

        let f0 = frame(10, 0.0);
        let m0 = throughput_matrix(&l, &f0).unwrap();
        assert_eq!(m0, throughput_existing_definition(&l, &f0).unwrap());
        assert!(rel(throughput_n_plus_1(&l, &f0).unwrap(), m0 * 10.0 / 11.0) < 1e-15);
    }

    #[test]
    fn report_collects_all_routes() {
        let r = throughput_report(&link(1.0, 0.5), &frame(10, 0.5)).unwrap();
        assert!(rel(r.anoma_matrix, r.anoma_closed) < 1e-9);
        assert!(rel(r.anoma_matrix, r.anoma_recursion) < 1e-9);
        assert!(r.anoma_matrix > r.noma && r.noma > r.oma);
        assert!(r.asymptotic > r.anoma_matrix);
    }
}
