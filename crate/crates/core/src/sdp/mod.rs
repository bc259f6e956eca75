//! Complex Hermitian semidefinite programs with trace constraints.
//!
//! [`HermitianSdp`] is the solver-agnostic problem description. [`solve_sdp`]
//! row-normalizes it, embeds it into a real symmetric SDP
//! ([`embed::embed_real`]), hands that to an [`SdpBackend`] (the built-in
//! [`ipm::InteriorPoint`] by default), maps the answer back and then
//! certifies the KKT conditions on the complex problem without trusting the
//! backend's own convergence report.

pub mod dump;
pub mod embed;
pub mod ipm;
pub mod rank_one;

mod certify;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{hermitian_defect, hermitian_part, trace_product, CMat};

pub use embed::{embed_matrix, embed_real, unembed_matrix, RealSdp};
pub use rank_one::{extract_rank_one, RankOne};

/// Default feasibility / duality-gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default `λ₂/λ₁` bound for accepting a solution as rank one.
pub const DEFAULT_RATIO_TOL: f64 = 1e-4;

/// Data matrices within this relative Hermitian defect are symmetrized;
/// anything worse is rejected.
const HERMITIAN_REPAIR_LIMIT: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("{what} is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { what: String, defect: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error(
        "matrix is not PSD within tolerance (λ_min = {lambda_min:.3e}, λ_max = {lambda_max:.3e})"
    )]
    NotPsd { lambda_min: f64, lambda_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relop {
    Ge,
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpVariable {
    pub name: String,
    pub dim: usize,
}

/// `tr(matrix · X_var)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub var: usize,
    pub matrix: CMat,
}

/// `Σ tr(A_i X_i) relop rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub label: String,
    pub terms: Vec<Term>,
    pub relop: Relop,
    pub rhs: f64,
}

/// `X_var[row, col] = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedEntry {
    pub var: usize,
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSdp {
    pub variables: Vec<SdpVariable>,
    pub sense: Sense,
    pub objective: Vec<Term>,
    pub constraints: Vec<TraceConstraint>,
    pub fixed_entries: Vec<FixedEntry>,
}

impl HermitianSdp {
    pub fn new(sense: Sense) -> Self {
        Self {
            variables: Vec::new(),
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
            fixed_entries: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, dim: usize) -> usize {
        self.variables.push(SdpVariable {
            name: name.into(),
            dim,
        });
        self.variables.len() - 1
    }

    pub fn add_objective_term(&mut self, var: usize, matrix: CMat) {
        self.objective.push(Term { var, matrix });
    }

    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        terms: Vec<Term>,
        relop: Relop,
        rhs: f64,
    ) {
        self.constraints.push(TraceConstraint {
            label: label.into(),
            terms,
            relop,
            rhs,
        });
    }

    pub fn fix_entry(&mut self, var: usize, row: usize, col: usize, value: Complex64) {
        self.fixed_entries.push(FixedEntry {
            var,
            row,
            col,
            value,
        });
    }

    /// Pin every diagonal entry of `var` to `value`.
    pub fn pin_diagonal(&mut self, var: usize, value: f64) {
        for i in 0..self.variables[var].dim {
            self.fix_entry(var, i, i, Complex64::new(value, 0.0));
        }
    }

    pub fn num_pins(&self) -> usize {
        self.fixed_entries.len()
    }

    fn check_term(&self, t: &Term, what: &str) -> Result<(), SdpError> {
        let var = self.variables.get(t.var).ok_or_else(|| {
            SdpError::Dimension(format!("{what} references unknown variable {}", t.var))
        })?;
        if t.matrix.nrows() != var.dim || t.matrix.ncols() != var.dim {
            return Err(SdpError::Dimension(format!(
                "{what}: {}×{} matrix for {}-dimensional variable `{}`",
                t.matrix.nrows(),
                t.matrix.ncols(),
                var.dim,
                var.name
            )));
        }
        if t.matrix
            .iter()
            .any(|x| !x.re.is_finite() || !x.im.is_finite())
        {
            return Err(SdpError::NonFinite(what.to_string()));
        }
        let defect = hermitian_defect(&t.matrix);
        if defect > HERMITIAN_REPAIR_LIMIT {
            return Err(SdpError::NotHermitian {
                what: what.to_string(),
                defect,
            });
        }
        Ok(())
    }

    /// Check dimensions, finiteness and Hermitian structure.
    pub fn validate(&self) -> Result<(), SdpError> {
        for t in &self.objective {
            self.check_term(t, "objective")?;
        }
        for c in &self.constraints {
            for t in &c.terms {
                self.check_term(t, &format!("constraint `{}`", c.label))?;
            }
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFinite(format!("rhs of `{}`", c.label)));
            }
        }
        for f in &self.fixed_entries {
            let var = self.variables.get(f.var).ok_or_else(|| {
                SdpError::Dimension(format!("fixed entry on unknown variable {}", f.var))
            })?;
            if f.row >= var.dim || f.col >= var.dim {
                return Err(SdpError::Dimension(format!(
                    "fixed entry ({}, {}) outside `{}`",
                    f.row, f.col, var.name
                )));
            }
            if f.row == f.col && f.value.im != 0.0 {
                return Err(SdpError::NotHermitian {
                    what: "diagonal fixed entry".into(),
                    defect: f.value.im.abs(),
                });
            }
        }
        Ok(())
    }

    /// Copy with every data matrix replaced by its Hermitian part.
    pub fn symmetrized(&self) -> Result<HermitianSdp, SdpError> {
        self.validate()?;
        let mut out = self.clone();
        for t in out.objective.iter_mut() {
            t.matrix = hermitian_part(&t.matrix);
        }
        for c in out.constraints.iter_mut() {
            for t in c.terms.iter_mut() {
                t.matrix = hermitian_part(&t.matrix);
            }
        }
        Ok(out)
    }

    /// Fixed entries rewritten as equality trace constraints: one for a
    /// diagonal entry, two (real and imaginary part) for an off-diagonal one.
    pub fn fixed_entry_constraints(&self) -> Vec<TraceConstraint> {
        let mut out = Vec::new();
        for f in &self.fixed_entries {
            let n = self.variables[f.var].dim;
            if f.row == f.col {
                let mut a = CMat::zeros(n, n);
                a[(f.row, f.row)] = Complex64::new(1.0, 0.0);
                out.push(TraceConstraint {
                    label: format!("pin({},{},{})", f.var, f.row, f.col),
                    terms: vec![Term {
                        var: f.var,
                        matrix: a,
                    }],
                    relop: Relop::Eq,
                    rhs: f.value.re,
                });
            } else {
                // tr(A X) = Re X[r,c] for A = (E_rc + E_cr)/2,
                // tr(A X) = Im X[r,c] for A = (i/2)(E_rc − E_cr).
                let mut re = CMat::zeros(n, n);
                re[(f.row, f.col)] = Complex64::new(0.5, 0.0);
                re[(f.col, f.row)] = Complex64::new(0.5, 0.0);
                let mut im = CMat::zeros(n, n);
                im[(f.row, f.col)] = Complex64::new(0.0, 0.5);
                im[(f.col, f.row)] = Complex64::new(0.0, -0.5);
                out.push(TraceConstraint {
                    label: format!("pin_re({},{},{})", f.var, f.row, f.col),
                    terms: vec![Term {
                        var: f.var,
                        matrix: re,
                    }],
                    relop: Relop::Eq,
                    rhs: f.value.re,
                });
                out.push(TraceConstraint {
                    label: format!("pin_im({},{},{})", f.var, f.row, f.col),
                    terms: vec![Term {
                        var: f.var,
                        matrix: im,
                    }],
                    relop: Relop::Eq,
                    rhs: f.value.im,
                });
            }
        }
        out
    }

    /// Regular constraints followed by the fixed-entry equalities.
    pub fn all_constraints(&self) -> Vec<TraceConstraint> {
        let mut all = self.constraints.clone();
        all.extend(self.fixed_entry_constraints());
        all
    }

    pub fn objective_value(&self, x: &[CMat]) -> f64 {
        self.objective
            .iter()
            .map(|t| trace_product(&t.matrix, &x[t.var]))
            .sum()
    }
}

/// `Σ tr(A_i X_i)` for one constraint.
pub fn constraint_value(c: &TraceConstraint, x: &[CMat]) -> f64 {
    c.terms
        .iter()
        .map(|t| trace_product(&t.matrix, &x[t.var]))
        .sum()
}

/// Signed slack: positive when satisfied with room, zero when tight.
/// Equality constraints report `lhs − rhs`.
pub fn constraint_slack(c: &TraceConstraint, x: &[CMat]) -> f64 {
    let v = constraint_value(c, x);
    match c.relop {
        Relop::Ge | Relop::Eq => v - c.rhs,
        Relop::Le => c.rhs - v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Relative KKT residuals measured on the row-normalized problem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KktResiduals {
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub complementarity: f64,
    pub psd_violation: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal_feasibility
            .max(self.dual_feasibility)
            .max(self.complementarity)
            .max(self.psd_violation)
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal: Vec<CMat>,
    pub objective: f64,
    /// Dual objective in original units; a lower bound (upper for
    /// maximization) up to the dual residual.
    pub dual_objective: Option<f64>,
    /// Per regular constraint, see [`constraint_slack`].
    pub slacks: Vec<f64>,
    /// Per regular constraint, in original units. Lagrangian sign convention:
    /// `Z = C − Σ y_c A_c ⪰ 0` for minimization.
    pub duals: Option<Vec<f64>>,
    pub kkt: KktResiduals,
    pub iterations: usize,
    pub diagnostic: Option<String>,
    /// Normalized Farkas multipliers when the problem was found infeasible.
    pub infeasibility_certificate: Option<Vec<f64>>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Outcome reported by a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendStatus {
    Converged,
    Infeasible,
    Failed,
}

/// Solution of the embedded real problem.
#[derive(Debug, Clone)]
pub struct BackendResult {
    pub status: BackendStatus,
    pub x: Vec<DMatrix<f64>>,
    /// One multiplier per real constraint, `Z = C − Σ y_i A_i`.
    pub y: Vec<f64>,
    pub iterations: usize,
    pub message: String,
    /// Farkas vector `y` with `Σ y_i A_i ⪯ 0` and `bᵀy = 1` (relop signs
    /// respected) when the backend claims infeasibility.
    pub certificate: Option<Vec<f64>>,
}

/// Anything that can solve a real symmetric block SDP in minimization form.
pub trait SdpBackend: Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &RealSdp, tol: f64) -> BackendResult;
}

/// Row-normalized minimization form of a problem plus the scale factors
/// needed to map solutions and multipliers back. Variables are substituted
/// as `X = var_scale · X̂` so the optimum is of order one.
#[derive(Debug, Clone)]
pub(crate) struct Normalized {
    pub sdp: HermitianSdp,
    pub row_scale: Vec<f64>,
    pub obj_scale: f64,
    pub var_scale: f64,
    pub num_regular: usize,
}

fn max_term_norm(terms: &[Term]) -> f64 {
    terms
        .iter()
        .map(|t| t.matrix.norm())
        .fold(0.0_f64, f64::max)
}

/// Largest `|b| / ‖A‖`: the size of `X` needed to meet the most demanding row.
fn variable_scale(constraints: &[TraceConstraint]) -> f64 {
    let s = constraints
        .iter()
        .filter_map(|c| {
            let a = max_term_norm(&c.terms);
            (a > 0.0 && c.rhs != 0.0).then(|| c.rhs.abs() / a)
        })
        .fold(0.0_f64, f64::max);
    if s.is_finite() && s > 0.0 {
        s
    } else {
        1.0
    }
}

pub(crate) fn normalize(p: &HermitianSdp) -> Normalized {
    let mut sdp = HermitianSdp::new(Sense::Minimize);
    sdp.variables = p.variables.clone();
    let all = p.all_constraints();
    let var_scale = variable_scale(&all);
    let obj_norm = var_scale * max_term_norm(&p.objective);
    let obj_scale = if obj_norm > 0.0 { 1.0 / obj_norm } else { 1.0 };
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    sdp.objective = p
        .objective
        .iter()
        .map(|t| Term {
            var: t.var,
            matrix: &t.matrix * Complex64::new(sign * obj_scale * var_scale, 0.0),
        })
        .collect();
    let mut row_scale = Vec::with_capacity(all.len());
    for c in all {
        let a_norm = var_scale * max_term_norm(&c.terms);
        let s = c.rhs.abs().max(a_norm);
        let r = if s > 0.0 { 1.0 / s } else { 1.0 };
        row_scale.push(r);
        sdp.constraints.push(TraceConstraint {
            label: c.label,
            terms: c
                .terms
                .into_iter()
                .map(|t| Term {
                    var: t.var,
                    matrix: t.matrix * Complex64::new(r * var_scale, 0.0),
                })
                .collect(),
            relop: c.relop,
            rhs: c.rhs * r,
        });
    }
    Normalized {
        sdp,
        row_scale,
        obj_scale,
        var_scale,
        num_regular: p.constraints.len(),
    }
}

/// Solve with the built-in interior-point backend.
pub fn solve_sdp(p: &HermitianSdp, tol: f64) -> Result<SdpSolution, SdpError> {
    solve_sdp_with(&ipm::InteriorPoint::default(), p, tol)
}

/// Solve with an explicit backend. The KKT certificate is always computed
/// here, on the complex problem, regardless of what the backend reports.
pub fn solve_sdp_with(
    backend: &dyn SdpBackend,
    p: &HermitianSdp,
    tol: f64,
) -> Result<SdpSolution, SdpError> {
    let p = p.symmetrized()?;
    let norm = normalize(&p);
    let real = embed_real(&norm.sdp)?;
    let res = backend.solve(&real, tol * 0.25);

    let scaled: Vec<CMat> = res.x.iter().map(unembed_matrix).collect();
    let primal: Vec<CMat> = scaled
        .iter()
        .map(|x| x * Complex64::new(norm.var_scale, 0.0))
        .collect();
    let objective = p.objective_value(&primal);
    let slacks: Vec<f64> = p
        .constraints
        .iter()
        .map(|c| constraint_slack(c, &primal))
        .collect();

    if res.status == BackendStatus::Infeasible {
        if let Some(cert) = &res.certificate {
            if certify::verify_infeasibility(&norm.sdp, cert, tol) {
                return Ok(SdpSolution {
                    status: SolveStatus::Infeasible,
                    primal,
                    objective,
                    dual_objective: None,
                    slacks,
                    duals: None,
                    kkt: KktResiduals::default(),
                    iterations: res.iterations,
                    diagnostic: Some(res.message),
                    infeasibility_certificate: Some(cert.clone()),
                });
            }
        }
    }

    let kkt = certify::kkt_residuals(&norm.sdp, &scaled, &res.y);
    let status = if kkt.max() <= tol && res.y.len() == norm.sdp.constraints.len() {
        SolveStatus::Optimal
    } else {
        SolveStatus::NumericalFailure
    };
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let duals_all: Vec<f64> = res
        .y
        .iter()
        .zip(&norm.row_scale)
        .map(|(y, r)| y * r / (sign * norm.obj_scale))
        .collect();
    let all = p.all_constraints();
    let dual_objective = if duals_all.len() == all.len() {
        Some(all.iter().zip(&duals_all).map(|(c, y)| c.rhs * y).sum())
    } else {
        None
    };
    let diagnostic = match status {
        SolveStatus::Optimal => None,
        _ => Some(format!(
            "{} after {} iterations ({}); certified residuals: primal {:.2e}, dual {:.2e}, gap {:.2e}, psd {:.2e}",
            backend.name(),
            res.iterations,
            res.message,
            kkt.primal_feasibility,
            kkt.dual_feasibility,
            kkt.complementarity,
            kkt.psd_violation
        )),
    };
    Ok(SdpSolution {
        status,
        primal,
        objective,
        dual_objective,
        slacks,
        duals: Some(duals_all[..norm.num_regular.min(duals_all.len())].to_vec()),
        kkt,
        iterations: res.iterations,
        diagnostic,
        infeasibility_certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, eig_extremes, CVec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            vals.len(),
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    fn identity(n: usize) -> CMat {
        CMat::identity(n, n)
    }

    #[test]
    fn analytic_top_eigenvector_instance() {
        // min tr(W) s.t. tr(G W) ≥ 2, G = diag(2, 1): optimum c/λ_max(G) = 1 at diag(1, 0).
        let mut p = HermitianSdp::new(Sense::Minimize);
        let w = p.add_variable("W", 2);
        p.add_objective_term(w, identity(2));
        p.add_constraint(
            "se",
            vec![Term {
                var: w,
                matrix: diag(&[2.0, 1.0]),
            }],
            Relop::Ge,
            2.0,
        );
        let sol = solve_sdp(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{:?}", sol.diagnostic);
        assert!((sol.objective - 1.0).abs() < 1e-7, "{}", sol.objective);
        assert!((&sol.primal[0] - diag(&[1.0, 0.0])).norm() < 1e-6);
        assert!(sol.kkt.max() <= DEFAULT_TOL);
        assert!((sol.dual_objective.unwrap() - 1.0).abs() < 1e-7);
        assert!((sol.duals.as_ref().unwrap()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn negative_functional_is_infeasible() {
        let mut p = HermitianSdp::new(Sense::Minimize);
        let w = p.add_variable("W", 3);
        p.add_objective_term(w, identity(3));
        p.add_constraint(
            "neg",
            vec![Term {
                var: w,
                matrix: -identity(3),
            }],
            Relop::Ge,
            1.0,
        );
        let sol = solve_sdp(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible, "{:?}", sol.diagnostic);
        assert!(sol.infeasibility_certificate.is_some());
    }

    #[test]
    fn unit_diagonal_feasibility() {
        let mut p = HermitianSdp::new(Sense::Minimize);
        let v = p.add_variable("V", 2);
        p.pin_diagonal(v, 1.0);
        let sol = solve_sdp(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{:?}", sol.diagnostic);
        let x = &sol.primal[0];
        assert!((x[(0, 0)].re - 1.0).abs() < 1e-7 && (x[(1, 1)].re - 1.0).abs() < 1e-7);
        assert!(x[(0, 1)].norm() <= 1.0 + 1e-7);
        assert!(eig_extremes(x).1 >= -1e-9);
    }

    #[test]
    fn off_diagonal_pin_and_maximization() {
        // max Re(X01) with X00 = X11 = 1 and Im X01 fixed to 0.6: Re X01 = 0.8.
        let mut p = HermitianSdp::new(Sense::Maximize);
        let v = p.add_variable("V", 2);
        p.pin_diagonal(v, 1.0);
        let mut c = CMat::zeros(2, 2);
        c[(0, 1)] = Complex64::new(0.5, 0.0);
        c[(1, 0)] = Complex64::new(0.5, 0.0);
        p.add_objective_term(v, c);
        let mut im = CMat::zeros(2, 2);
        im[(0, 1)] = Complex64::new(0.0, 0.5);
        im[(1, 0)] = Complex64::new(0.0, -0.5);
        p.add_constraint("im", vec![Term { var: v, matrix: im }], Relop::Eq, 0.6);
        let sol = solve_sdp(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{:?}", sol.diagnostic);
        assert!((sol.objective - 0.8).abs() < 1e-6, "{}", sol.objective);
        assert!((sol.primal[0][(0, 1)] - Complex64::new(0.8, 0.6)).norm() < 1e-5);
    }

    #[test]
    fn le_constraints_and_two_variables() {
        // max tr(X) + tr(Y) s.t. tr(X) ≤ 2, tr(Y) + tr(X) ≤ 3.
        let mut p = HermitianSdp::new(Sense::Maximize);
        let x = p.add_variable("X", 2);
        let y = p.add_variable("Y", 3);
        p.add_objective_term(x, identity(2));
        p.add_objective_term(y, identity(3));
        p.add_constraint(
            "x",
            vec![Term {
                var: x,
                matrix: identity(2),
            }],
            Relop::Le,
            2.0,
        );
        p.add_constraint(
            "xy",
            vec![
                Term {
                    var: x,
                    matrix: identity(2),
                },
                Term {
                    var: y,
                    matrix: identity(3),
                },
            ],
            Relop::Le,
            3.0,
        );
        let sol = solve_sdp(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{:?}", sol.diagnostic);
        assert!((sol.objective - 3.0).abs() < 1e-7);
        assert!(sol.slacks[1].abs() < 1e-7);
    }

    #[test]
    fn non_hermitian_data_rejected() {
        let mut p = HermitianSdp::new(Sense::Minimize);
        let w = p.add_variable("W", 2);
        let mut a = identity(2);
        a[(0, 1)] = Complex64::new(0.3, 0.0);
        p.add_objective_term(w, a);
        assert!(matches!(
            solve_sdp(&p, DEFAULT_TOL),
            Err(SdpError::NotHermitian { .. })
        ));
    }

    #[test]
    fn certified_solution_invariants_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..5 {
            let n = 3 + trial % 3;
            let mut p = HermitianSdp::new(Sense::Minimize);
            let w = p.add_variable("W", n);
            p.add_objective_term(w, identity(n));
            for c in 0..3 {
                let g = CVec::from_fn(n, |_, _| complex_gaussian(&mut rng));
                let a = &g * g.adjoint();
                p.add_constraint(
                    format!("c{c}"),
                    vec![Term { var: w, matrix: a }],
                    Relop::Ge,
                    1.0 + c as f64,
                );
            }
            let sol = solve_sdp(&p, DEFAULT_TOL).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "{:?}", sol.diagnostic);
            for (c, s) in p.constraints.iter().zip(&sol.slacks) {
                assert!((constraint_slack(c, &sol.primal) - s).abs() < 1e-9);
                assert!(*s >= -DEFAULT_TOL * (1.0 + c.rhs));
            }
            assert!((p.objective_value(&sol.primal) - sol.objective).abs() < 1e-12);
            assert!(sol.objective >= sol.dual_objective.unwrap() - 1e-6);
            let (_, lo) = eig_extremes(&sol.primal[0]);
            assert!(lo >= -DEFAULT_TOL * sol.primal[0].norm());
        }
    }
}
