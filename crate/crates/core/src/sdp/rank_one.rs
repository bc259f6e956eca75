//! Rank-one extraction from a PSD solution matrix.

use num_complex::Complex64;

use super::SdpError;
use crate::linalg::{hermitian_eigen, CMat, CVec};

/// Negative eigenvalues down to this fraction of `λ₁` count as round-off.
const PSD_SLACK: f64 = 1e-7;

#[derive(Debug, Clone)]
pub enum RankOne {
    /// `x ≈ vector · vectorᴴ`, with `ratio = λ₂/λ₁` at or below the threshold.
    Exact { vector: CVec, ratio: f64 },
    /// Rank deficiency report: the top eigenpair is still returned so the
    /// caller can fall back to randomization with a warm candidate.
    Deficient {
        principal: CVec,
        lambda1: f64,
        lambda2: f64,
        ratio: f64,
    },
}

impl RankOne {
    pub fn ratio(&self) -> f64 {
        match self {
            RankOne::Exact { ratio, .. } | RankOne::Deficient { ratio, .. } => *ratio,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, RankOne::Exact { .. })
    }

    /// `√λ₁ ν₁` in either case.
    pub fn principal(&self) -> &CVec {
        match self {
            RankOne::Exact { vector, .. } => vector,
            RankOne::Deficient { principal, .. } => principal,
        }
    }
}

/// Return `√λ₁ ν₁` when `λ₂/λ₁ ≤ ratio_tol`, a deficiency report otherwise.
/// The zero matrix is rank one (with the zero vector). The eigenvector's
/// global phase is fixed so its largest entry is real and positive.
pub fn extract_rank_one(x: &CMat, ratio_tol: f64) -> Result<RankOne, SdpError> {
    let n = x.nrows();
    if n == 0 {
        return Ok(RankOne::Exact {
            vector: CVec::zeros(0),
            ratio: 0.0,
        });
    }
    let (vals, vecs) = hermitian_eigen(x);
    let l1 = vals[0];
    let lmin = *vals.last().unwrap();
    if l1 <= 0.0 {
        if lmin < -PSD_SLACK * x.norm().max(f64::MIN_POSITIVE) && x.norm() > 0.0 {
            return Err(SdpError::NotPsd {
                lambda_min: lmin,
                lambda_max: l1,
            });
        }
        return Ok(RankOne::Exact {
            vector: CVec::zeros(n),
            ratio: 0.0,
        });
    }
    if lmin < -PSD_SLACK * l1 {
        return Err(SdpError::NotPsd {
            lambda_min: lmin,
            lambda_max: l1,
        });
    }
    let l2 = if n > 1 { vals[1].max(0.0) } else { 0.0 };
    let ratio = l2 / l1;

    let mut v: CVec = vecs.column(0).into_owned();
    let (imax, _) = v.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
        if z.norm() > acc.1 {
            (i, z.norm())
        } else {
            acc
        }
    });
    let phase = v[imax].conj() / v[imax].norm();
    v *= phase * Complex64::new(l1.sqrt(), 0.0);

    if ratio <= ratio_tol {
        Ok(RankOne::Exact { vector: v, ratio })
    } else {
        Ok(RankOne::Deficient {
            principal: v,
            lambda1: l1,
            lambda2: l2,
            ratio,
        })
    }
}
