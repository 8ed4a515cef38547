//! Throughput loss caused by synchronization (`eps1`) and coordination
//! (`eps2`) timing errors.
//!
//! With timing error the sampled model becomes `Ŷ = R̂ H X + N̂`, with
//! `R̂ = R + E1` and `Cov(N̂) = R̂_N = R + E2`. The exact rate
//! `(1/(N+τ)) log₂ det(I + R̂_N⁻¹ R̂ H Hᴴ R̂ᵀ)` is evaluated on banded factors.
//! The loss is also available through the rearranged form
//! `-(1/(N+τ)) log₂ det(I + (I + H Hᴴ R)⁻¹ M)`,
//! `M = H Hᴴ E1ᵀ + (R + E2)⁻¹ (E1 - E2) H Hᴴ (R + E1ᵀ)`,
//! which serves as an independent check on the matrix assembly.
//!
//! The first-order models `Δ ≈ eps1 c1` and `Δ ≈ eps2 c2` use the trace
//! coefficients of the sign pattern active on the side of zero the error lies.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::model::{
    build_correlation, build_error_matrices, build_gain, build_patterns, Branch, FrameConfig, LinkConfig, Sign,
    TimingError,
};
use crate::throughput::{bits, throughput_matrix};

fn gram(link: &LinkConfig, frame: &FrameConfig) -> Result<Vec<f64>> {
    Ok(build_gain(link, frame.n)?.gram_diagonal())
}

fn singular_noise(frame: &FrameConfig, err: &TimingError) -> Error {
    Error::Singular(format!(
        "noise covariance R_N not positive definite at tau = {}, eps2 = {}",
        frame.tau, err.eps2
    ))
}

/// Exact sum throughput (bits per symbol interval) with timing error.
pub fn throughput_with_error(link: &LinkConfig, frame: &FrameConfig, err: &TimingError) -> Result<f64> {
    link.require_positive_snr()?;
    let m = build_error_matrices(frame, err)?;
    let d = gram(link, frame)?;
    let rhat = m.rhat.band();
    let rhat_n = m.rhat_n.band();
    // det(I + R̂_N⁻¹ R̂ D R̂ᵀ) = det(R̂_N + R̂ D R̂ᵀ) / det(R̂_N)
    let noise = rhat_n.cholesky("R_N").map_err(|_| singular_noise(frame, err))?;
    let total = rhat_n.add(&rhat.scale_cols(&d).matmul(&rhat.transpose()));
    let total = total.cholesky("R_N + R D R^T")?;
    Ok(bits(total.ln_det() - noise.ln_det()) / frame.duration())
}

/// `Δ = R - R_e` by definition.
pub fn throughput_loss(link: &LinkConfig, frame: &FrameConfig, err: &TimingError) -> Result<f64> {
    Ok(throughput_matrix(link, frame)? - throughput_with_error(link, frame, err)?)
}

/// The loss computed both ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRoutes {
    /// `R - R_e`.
    pub definition: f64,
    /// Rearranged single log-det form.
    pub rearranged: f64,
}

fn ln_abs_det_positive(m: DMatrix<f64>, context: &str) -> Result<f64> {
    let lu = m.lu();
    let u = lu.u();
    let mut sign = lu.p().determinant::<f64>();
    let mut ln = 0.0;
    for v in u.diagonal().iter() {
        if *v == 0.0 || !v.is_finite() {
            return Err(Error::Singular(context.to_string()));
        }
        sign *= v.signum();
        ln += v.abs().ln();
    }
    if sign < 0.0 {
        return Err(domain(format!("{context}: determinant is negative")));
    }
    Ok(ln)
}

/// Loss from the rearranged log-det form, built on dense matrices.
pub fn throughput_loss_rearranged(link: &LinkConfig, frame: &FrameConfig, err: &TimingError) -> Result<f64> {
    link.require_positive_snr()?;
    let m = build_error_matrices(frame, err)?;
    let dim = frame.dim();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gram(link, frame)?));
    let r = build_correlation(frame)?.to_dense();
    let e1 = m.e1.to_dense();
    let e2 = m.e2.to_dense();
    let eye = DMatrix::<f64>::identity(dim, dim);

    let a = &eye + &d * &r;
    let noise = (&r + &e2).cholesky().ok_or_else(|| singular_noise(frame, err))?;
    let whitened = noise.solve(&((&e1 - &e2) * &d * (&r + e1.transpose())));
    let mix = &d * e1.transpose() + whitened;
    let x = a
        .lu()
        .solve(&mix)
        .ok_or_else(|| Error::Singular("I + H H^H R".into()))?;
    let ln = ln_abs_det_positive(eye + x, "I + (I + H H^H R)^-1 M")?;
    Ok(-bits(ln) / frame.duration())
}

pub fn throughput_loss_routes(link: &LinkConfig, frame: &FrameConfig, err: &TimingError) -> Result<LossRoutes> {
    Ok(LossRoutes {
        definition: throughput_loss(link, frame, err)?,
        rearranged: throughput_loss_rearranged(link, frame, err)?,
    })
}

/// `-Tr[(I + D R)⁻¹ (D Zᵀ + R⁻¹ (Z - Zs) D R)] / ((N+τ) ln 2)`.
fn trace_coefficient(
    link: &LinkConfig,
    frame: &FrameConfig,
    z: &DMatrix<f64>,
    subtract: Option<&DMatrix<f64>>,
) -> Result<f64> {
    link.require_positive_snr()?;
    let dim = frame.dim();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gram(link, frame)?));
    let r = build_correlation(frame)?.to_dense();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let inner = match subtract {
        Some(zs) => z - zs,
        None => z.clone(),
    };
    let r_chol = r.clone().cholesky().ok_or_else(|| Error::Singular("R".into()))?;
    let term = &d * z.transpose() + r_chol.solve(&(inner * &d * &r));
    let f = (&eye + &d * &r)
        .lu()
        .solve(&term)
        .ok_or_else(|| Error::Singular("I + H H^H R".into()))?;
    Ok(-bits(f.trace()) / frame.duration())
}

/// Sensitivity `c1` of the loss to a synchronization error of sign `side`.
pub fn sensitivity_sync(link: &LinkConfig, frame: &FrameConfig, side: Sign) -> Result<f64> {
    let (z1, _, _) = build_patterns(frame.n, Branch { sync: side, total: side })?;
    trace_coefficient(link, frame, &z1.to_dense(), None)
}

/// Sensitivity `c2` of the loss to a coordination error of sign `side`.
pub fn sensitivity_coord(link: &LinkConfig, frame: &FrameConfig, side: Sign) -> Result<f64> {
    let (_, z2, z3) = build_patterns(frame.n, Branch { sync: Sign::Positive, total: side })?;
    trace_coefficient(link, frame, &z2.to_dense(), Some(&z3.to_dense()))
}

/// First-order loss and the coefficient it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLoss {
    pub delta: f64,
    pub coefficient: f64,
}

/// `Δ ≈ eps1 c1` with `eps2 = 0`.
pub fn loss_linear_sync(link: &LinkConfig, frame: &FrameConfig, eps1: f64) -> Result<LinearLoss> {
    TimingError::new(eps1, 0.0).validate(frame)?;
    let c1 = sensitivity_sync(link, frame, Sign::of(eps1))?;
    Ok(LinearLoss {
        delta: eps1 * c1,
        coefficient: c1,
    })
}

/// `Δ ≈ eps2 c2` with `eps1 = 0`.
pub fn loss_linear_coord(link: &LinkConfig, frame: &FrameConfig, eps2: f64) -> Result<LinearLoss> {
    TimingError::new(0.0, eps2).validate(frame)?;
    let c2 = sensitivity_coord(link, frame, Sign::of(eps2))?;
    Ok(LinearLoss {
        delta: eps2 * c2,
        coefficient: c2,
    })
}

/// Relative loss `γ = Δ / R`.
pub fn loss_ratio(link: &LinkConfig, frame: &FrameConfig, err: &TimingError) -> Result<f64> {
    let base = throughput_matrix(link, frame)?;
    if !(base > 0.0) {
        return Err(domain(format!("loss ratio undefined for error-free throughput {base}")));
    }
    Ok((base - throughput_with_error(link, frame, err)?) / base)
}

/// Everything the timing analysis reports for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub exact_throughput_with_error: f64,
    pub delta: f64,
    pub delta_lin_sync: f64,
    pub delta_lin_coord: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
}

pub fn loss_breakdown(link: &LinkConfig, frame: &FrameConfig, err: &TimingError) -> Result<LossBreakdown> {
    let base = throughput_matrix(link, frame)?;
    let with_error = throughput_with_error(link, frame, err)?;
    let delta = base - with_error;
    if !(base > 0.0) {
        return Err(domain(format!("loss ratio undefined for error-free throughput {base}")));
    }
    let c1 = sensitivity_sync(link, frame, Sign::of(err.eps1))?;
    let c2 = sensitivity_coord(link, frame, Sign::of(err.eps2))?;
    Ok(LossBreakdown {
        exact_throughput_with_error: with_error,
        delta,
        delta_lin_sync: err.eps1 * c1,
        delta_lin_coord: err.eps2 * c2,
        c1,
        c2,
        gamma: delta / base,
    })
}
