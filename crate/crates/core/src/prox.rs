//! Closed-form proximal maps used by the per-slice subproblems.
//!
//! [`svt`] is the prox of `τ‖·‖_*` on complex matrices; [`complex_soft_threshold`]
//! is the prox of `τ(|Re z| + |Im z|)` applied one entry at a time.

use faer::{c64, Mat};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ComplexMatrix;

/// Thin SVD factors `U diag(σ) V*` with `σ` sorted in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdFactors {
    /// Rank-0 factors for an `rows x cols` matrix.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            u: DMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        }
    }

    /// Full thin SVD of `m`. Fails on non-finite input or if the iteration stalls.
    pub fn decompose(m: &ComplexMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        check_finite(m)?;
        if rows == 0 || cols == 0 {
            return Ok(Self::empty(rows, cols));
        }
        let svd = to_faer(m).thin_svd().map_err(|e| Error::SvdFailure {
            slice: 0,
            reason: format!("{e:?}"),
        })?;
        let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
        let mut order: Vec<usize> = (0..s.nrows()).collect();
        order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
        let sigma = order.iter().map(|&k| s[k].re.max(0.0)).collect();
        let u = DMatrix::from_fn(rows, order.len(), |i, c| u[(i, order[c])]);
        let v = DMatrix::from_fn(cols, order.len(), |j, c| v[(j, order[c])]);
        Ok(Self { u, sigma, v })
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// Soft-threshold the spectrum at `tau`, dropping every factor with `σ ≤ τ`.
    pub fn shrink(&self, tau: f64) -> SvdFactors {
        let keep = self.sigma.iter().take_while(|&&s| s > tau).count();
        SvdFactors {
            u: self.u.columns(0, keep).into_owned(),
            sigma: self.sigma[..keep].iter().map(|s| s - tau).collect(),
            v: self.v.columns(0, keep).into_owned(),
        }
    }

    /// Dense `U diag(σ) V*`.
    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut scaled = self.u.clone();
        for (c, &s) in self.sigma.iter().enumerate() {
            scaled.column_mut(c).scale_mut(s);
        }
        scaled * self.v.adjoint()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }
}

/// Shrunken SVD factors of `m`, i.e. the factored form of [`svt`].
pub fn svt_factors(m: &ComplexMatrix, tau: f64) -> Result<SvdFactors> {
    check_tau(tau)?;
    Ok(SvdFactors::decompose(m)?.shrink(tau))
}

/// Singular value soft-thresholding `D_τ(M) = U diag((σ_i - τ)_+) V*`.
///
/// Returns the minimizer of `½‖X - M‖²_F + τ‖X‖_*` together with its rank,
/// `#{i : σ_i > τ}`.
pub fn svt(m: &ComplexMatrix, tau: f64) -> Result<(ComplexMatrix, usize)> {
    let factors = svt_factors(m, tau)?;
    let rank = factors.rank();
    Ok((factors.to_matrix(), rank))
}

/// Componentwise soft-threshold `sign(x)(|x| - τ)_+` on the real and imaginary parts.
#[inline]
pub fn complex_soft_threshold(z: Complex64, tau: f64) -> Complex64 {
    Complex64::new(soft(z.re, tau), soft(z.im, tau))
}

#[inline]
fn soft(x: f64, tau: f64) -> f64 {
    let mag = x.abs() - tau;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// [`complex_soft_threshold`] on every entry of every slice.
pub fn threshold_stack(slices: &[ComplexMatrix], tau: f64) -> Vec<ComplexMatrix> {
    slices
        .iter()
        .map(|s| s.map(|z| complex_soft_threshold(z, tau)))
        .collect()
}

/// Singular values of `m` in nonincreasing order.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut sv = to_faer(m)
        .singular_values()
        .map_err(|e| Error::SvdFailure {
            slice: 0,
            reason: format!("{e:?}"),
        })?;
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn to_faer(m: &ComplexMatrix) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    match m
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        Some(pos) => Err(Error::NonFinite(pos)),
        None => Ok(()),
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "threshold {tau} must be finite and nonnegative"
        )))
    }
}
