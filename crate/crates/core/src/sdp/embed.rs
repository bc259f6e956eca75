//! Real symmetric embedding of complex Hermitian SDPs.
//!
//! `X ↦ [[Re X, −Im X], [Im X, Re X]]` is a real-linear isometry (up to a
//! factor 2 in the trace inner product) that maps the Hermitian PSD cone into
//! the real PSD cone, doubling every eigenvalue's multiplicity.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{HermitianSdp, Relop, SdpError, Sense};
use crate::linalg::CMat;

#[derive(Debug, Clone)]
pub struct RealConstraint {
    pub terms: Vec<(usize, DMatrix<f64>)>,
    pub relop: Relop,
    pub rhs: f64,
}

/// `min/max Σ ⟨C_i, X_i⟩` subject to `Σ ⟨A_ci, X_i⟩ relop b_c`, `X_i ⪰ 0`.
#[derive(Debug, Clone)]
pub struct RealSdp {
    pub block_dims: Vec<usize>,
    pub sense: Sense,
    pub objective: Vec<(usize, DMatrix<f64>)>,
    pub constraints: Vec<RealConstraint>,
}

pub fn embed_matrix(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`embed_matrix`]; averages the two copies so slightly
/// inconsistent blocks project onto the nearest embedded matrix.
pub fn unembed_matrix(x: &DMatrix<f64>) -> CMat {
    let n = x.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        Complex64::new(re, im)
    })
}

/// Embed a complex problem. Fixed entries are emitted as equality
/// constraints after the regular ones. Traces double under the embedding,
/// so right-hand sides are doubled too and the objective value doubles.
pub fn embed_real(p: &HermitianSdp) -> Result<RealSdp, SdpError> {
    p.validate()?;
    let block_dims = p.variables.iter().map(|v| 2 * v.dim).collect();
    let objective = p
        .objective
        .iter()
        .map(|t| (t.var, embed_matrix(&t.matrix)))
        .collect();
    let constraints = p
        .all_constraints()
        .into_iter()
        .map(|c| RealConstraint {
            terms: c
                .terms
                .iter()
                .map(|t| (t.var, embed_matrix(&t.matrix)))
                .collect(),
            relop: c.relop,
            rhs: 2.0 * c.rhs,
        })
        .collect();
    Ok(RealSdp {
        block_dims,
        sense: p.sense,
        objective,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, hermitian_eigen, hermitian_part, trace_product};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        hermitian_part(&CMat::from_fn(n, n, |_, _| complex_gaussian(&mut rng)))
    }

    #[test]
    fn scalar_embeds_as_scaled_identity() {
        let a = CMat::from_element(1, 1, Complex64::new(2.5, 0.0));
        assert_eq!(
            embed_matrix(&a),
            DMatrix::from_row_slice(2, 2, &[2.5, 0.0, 0.0, 2.5])
        );
    }

    #[test]
    fn eigenvalues_doubled_in_multiplicity() {
        let x = random_hermitian(4, 1);
        let (vals, _) = hermitian_eigen(&x);
        let e = embed_matrix(&x);
        let mut real: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        real.sort_by(|a, b| b.total_cmp(a));
        for (i, v) in vals.iter().enumerate() {
            assert!((real[2 * i] - v).abs() < 1e-12);
            assert!((real[2 * i + 1] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_exact() {
        let x = random_hermitian(6, 2);
        let back = unembed_matrix(&embed_matrix(&x));
        assert!((back - &x).norm() <= 1e-13 * x.norm());
    }

    #[test]
    fn trace_inner_product_doubles() {
        let a = random_hermitian(3, 3);
        let b = random_hermitian(3, 4);
        let real = embed_matrix(&a).dot(&embed_matrix(&b));
        assert!((real - 2.0 * trace_product(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn embedded_problem_counts() {
        let mut p = HermitianSdp::new(Sense::Minimize);
        let v = p.add_variable("V", 3);
        p.pin_diagonal(v, 1.0);
        p.fix_entry(v, 0, 1, Complex64::new(0.1, 0.2));
        let r = embed_real(&p).unwrap();
        assert_eq!(r.block_dims, vec![6]);
        assert_eq!(r.constraints.len(), 5);
        assert!(r.constraints.iter().all(|c| c.relop == Relop::Eq));
        assert_eq!(r.constraints[0].rhs, 2.0);
    }
}
