//! KKT certification on the row-normalized complex problem.

use super::{constraint_value, HermitianSdp, KktResiduals, Relop};
use crate::linalg::{eig_extremes, trace_product, CMat};

fn dual_slacks(p: &HermitianSdp, y: &[f64]) -> Vec<CMat> {
    let mut z: Vec<CMat> = p
        .variables
        .iter()
        .map(|v| CMat::zeros(v.dim, v.dim))
        .collect();
    for t in &p.objective {
        z[t.var] += &t.matrix;
    }
    for (c, &yc) in p.constraints.iter().zip(y) {
        for t in &c.terms {
            z[t.var] -= &t.matrix * num_complex::Complex64::new(yc, 0.0);
        }
    }
    z
}

fn sign_violation(relop: Relop, y: f64) -> f64 {
    match relop {
        Relop::Ge => (-y).max(0.0),
        Relop::Le => y.max(0.0),
        Relop::Eq => 0.0,
    }
}

/// Relative residuals of a candidate primal/dual pair. The problem must be
/// in minimization form with fixed entries already expanded into
/// constraints, as produced by `normalize`.
pub(crate) fn kkt_residuals(p: &HermitianSdp, x: &[CMat], y: &[f64]) -> KktResiduals {
    let mut out = KktResiduals::default();
    if x.len() != p.variables.len() {
        return KktResiduals {
            primal_feasibility: f64::INFINITY,
            ..Default::default()
        };
    }

    let mut lhs = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let v = constraint_value(c, x);
        let viol = match c.relop {
            Relop::Ge => (c.rhs - v).max(0.0),
            Relop::Le => (v - c.rhs).max(0.0),
            Relop::Eq => (v - c.rhs).abs(),
        };
        out.primal_feasibility = out.primal_feasibility.max(viol / (1.0 + c.rhs.abs()));
        lhs.push(v);
    }

    for xi in x {
        let (hi, lo) = eig_extremes(xi);
        let scale = 1.0 + hi.abs().max(lo.abs());
        out.psd_violation = out.psd_violation.max((-lo).max(0.0) / scale);
    }

    if y.len() != p.constraints.len() {
        out.dual_feasibility = f64::INFINITY;
        out.complementarity = f64::INFINITY;
        return out;
    }

    let z = dual_slacks(p, y);
    let c_norm = p
        .objective
        .iter()
        .map(|t| t.matrix.norm())
        .fold(0.0_f64, f64::max);
    let y_norm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for zi in &z {
        let (_, lo) = eig_extremes(zi);
        out.dual_feasibility = out.dual_feasibility.max((-lo).max(0.0) / (1.0 + c_norm));
    }
    for (c, &yc) in p.constraints.iter().zip(y) {
        out.dual_feasibility = out
            .dual_feasibility
            .max(sign_violation(c.relop, yc) / (1.0 + y_norm));
    }

    let pobj = p.objective_value(x);
    let dobj: f64 = p.constraints.iter().zip(y).map(|(c, yc)| c.rhs * yc).sum();
    // pobj − dobj = Σ⟨X_i, Z_i⟩ + Σ y_c (lhs_c − b_c); both sums are ≥ 0 at a
    // feasible pair, so the gap itself measures complementarity.
    let xz: f64 = x.iter().zip(&z).map(|(a, b)| trace_product(a, b)).sum();
    let ys: f64 = p
        .constraints
        .iter()
        .zip(y)
        .zip(&lhs)
        .map(|((c, yc), v)| yc * (v - c.rhs))
        .sum();
    let denom = 1.0 + pobj.abs() + dobj.abs();
    out.complementarity = ((pobj - dobj).abs().max(xz.abs() + ys.abs())) / denom;
    out
}

/// Check a Farkas certificate: `y` respects the relop signs, `Σ y_c A_c ⪯ 0`
/// (up to `tol`), and `bᵀy > 0`.
pub(crate) fn verify_infeasibility(p: &HermitianSdp, y: &[f64], tol: f64) -> bool {
    if y.len() != p.constraints.len() {
        return false;
    }
    let by: f64 = p.constraints.iter().zip(y).map(|(c, yc)| c.rhs * yc).sum();
    if by <= 0.0 {
        return false;
    }
    let y_norm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (c, &yc) in p.constraints.iter().zip(y) {
        if sign_violation(c.relop, yc) > tol * (1.0 + y_norm) {
            return false;
        }
    }
    let mut agg: Vec<CMat> = p
        .variables
        .iter()
        .map(|v| CMat::zeros(v.dim, v.dim))
        .collect();
    for (c, &yc) in p.constraints.iter().zip(y) {
        for t in &c.terms {
            agg[t.var] += &t.matrix * num_complex::Complex64::new(yc, 0.0);
        }
    }
    // Relative to the size of the aggregate, as in the backend's own test.
    let scale = by + agg.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt();
    agg.iter().all(|a| {
        let (hi, _) = eig_extremes(a);
        hi <= tol * scale * 1e2
    })
}
