//! Primal-dual interior-point method for real block SDPs.
//!
//! Infeasible-start path following with the HKM search direction and a
//! Mehrotra predictor-corrector. Inequalities get a nonnegative slack in a
//! diagonal (LP) block, so internally every constraint is an equality:
//!
//! ```text
//! min  Σ⟨C_b, X_b⟩ + cᵀx      s.t.  Σ⟨A_ib, X_b⟩ + a_iᵀx = b_i,  X_b ⪰ 0, x ≥ 0
//! max  bᵀy                    s.t.  C_b − Σ y_i A_ib = Z_b ⪰ 0,  c − Σ y_i a_i = z ≥ 0
//! ```

use nalgebra::{DMatrix, DVector};

use super::embed::RealSdp;
use super::{BackendResult, BackendStatus, Relop, SdpBackend, Sense};

#[derive(Debug, Clone)]
pub struct InteriorPoint {
    pub max_iterations: usize,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        Self {
            max_iterations: 120,
        }
    }
}

impl SdpBackend for InteriorPoint {
    fn name(&self) -> &str {
        "interior-point"
    }

    fn solve(&self, problem: &RealSdp, tol: f64) -> BackendResult {
        let std = Standard::from_real(problem);
        let mut out = solve_standard(&std, tol, self.max_iterations);
        if problem.sense == Sense::Maximize {
            for y in out.y.iter_mut() {
                *y = -*y;
            }
        }
        out
    }
}

struct Row {
    blocks: Vec<(usize, DMatrix<f64>)>,
    lp: Option<(usize, f64)>,
}

struct Standard {
    dims: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    num_lp: usize,
    rows: Vec<Row>,
    b: DVector<f64>,
    /// Rows touching each block.
    block_rows: Vec<Vec<usize>>,
    /// Row and coefficient owning each LP slack.
    lp_owner: Vec<(usize, f64)>,
}

impl Standard {
    fn from_real(p: &RealSdp) -> Self {
        let dims = p.block_dims.clone();
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c: Vec<DMatrix<f64>> = dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (blk, m) in &p.objective {
            c[*blk] += m * sign;
        }
        let mut rows = Vec::with_capacity(p.constraints.len());
        let mut lp_owner = Vec::new();
        let mut block_rows = vec![Vec::new(); dims.len()];
        for (i, con) in p.constraints.iter().enumerate() {
            let mut blocks: Vec<(usize, DMatrix<f64>)> = Vec::new();
            for (blk, m) in &con.terms {
                if let Some(existing) = blocks.iter_mut().find(|(b, _)| b == blk) {
                    existing.1 += m;
                } else {
                    blocks.push((*blk, m.clone()));
                }
            }
            for (blk, _) in &blocks {
                block_rows[*blk].push(i);
            }
            let lp = match con.relop {
                Relop::Eq => None,
                Relop::Ge => Some(-1.0),
                Relop::Le => Some(1.0),
            }
            .map(|coef| {
                lp_owner.push((i, coef));
                (lp_owner.len() - 1, coef)
            });
            rows.push(Row { blocks, lp });
        }
        let b = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs));
        Self {
            dims,
            c,
            num_lp: lp_owner.len(),
            rows,
            b,
            block_rows,
            lp_owner,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn a_op(&self, x: &[DMatrix<f64>], xl: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|r| {
                let mut v: f64 = r.blocks.iter().map(|(b, a)| a.dot(&x[*b])).sum();
                if let Some((l, coef)) = r.lp {
                    v += coef * xl[l];
                }
                v
            }),
        )
    }

    fn at_op(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mut s: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut sl = DVector::zeros(self.num_lp);
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            for (b, a) in &r.blocks {
                s[*b] += a * yi;
            }
            if let Some((l, coef)) = r.lp {
                sl[l] += coef * yi;
            }
        }
        (s, sl)
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn frob2(ms: &[DMatrix<f64>], v: &DVector<f64>) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>() + v.norm_squared()
}

/// Largest `α` with `X + α ΔX ⪰ 0`, given the Cholesky factor of `X`.
fn psd_step(l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let Some(t) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(s) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lo = sym(&s).symmetric_eigenvalues().min();
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

fn lp_step(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

struct Factors {
    x_chol: Vec<DMatrix<f64>>,
    z_chol: Vec<DMatrix<f64>>,
    z_inv: Vec<DMatrix<f64>>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    dzl: DVector<f64>,
}

enum Solver {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Solver {
    fn solve(&self, h: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Solver::Chol(c) => Some(c.solve(h)),
            Solver::Lu(lu) => lu.solve(h),
        }
    }
}

struct State<'a> {
    p: &'a Standard,
    x: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
    zl: DVector<f64>,
}

impl<'a> State<'a> {
    fn initial(p: &'a Standard) -> Self {
        let mut x = Vec::new();
        let mut z = Vec::new();
        for (blk, &n) in p.dims.iter().enumerate() {
            let nf = n as f64;
            let mut xi = 10.0_f64.max(nf.sqrt());
            let mut eta = 10.0_f64.max(nf.sqrt()).max(p.c[blk].norm());
            for &i in &p.block_rows[blk] {
                for (b, a) in &p.rows[i].blocks {
                    if *b == blk {
                        let an = a.norm();
                        xi = xi.max(nf * (1.0 + p.b[i].abs()) / (1.0 + an));
                        eta = eta.max(an);
                    }
                }
            }
            x.push(DMatrix::identity(n, n) * xi);
            z.push(DMatrix::identity(n, n) * eta);
        }
        let mut xl = DVector::zeros(p.num_lp);
        let mut zl = DVector::zeros(p.num_lp);
        for (l, &(i, coef)) in p.lp_owner.iter().enumerate() {
            xl[l] = 10.0_f64.max((1.0 + p.b[i].abs()) / (1.0 + coef.abs()));
            zl[l] = 10.0;
        }
        Self {
            p,
            x,
            xl,
            y: DVector::zeros(p.m()),
            z,
            zl,
        }
    }

    fn nu(&self) -> f64 {
        (self.p.dims.iter().sum::<usize>() + self.p.num_lp) as f64
    }

    fn mu(&self) -> f64 {
        let xz: f64 = self
            .x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| a.dot(b))
            .sum::<f64>()
            + self.xl.dot(&self.zl);
        xz / self.nu().max(1.0)
    }

    fn pobj(&self) -> f64 {
        self.x.iter().zip(&self.p.c).map(|(x, c)| x.dot(c)).sum()
    }

    fn dobj(&self) -> f64 {
        self.p.b.dot(&self.y)
    }

    fn factor(&self) -> Option<Factors> {
        let mut x_chol = Vec::new();
        let mut z_chol = Vec::new();
        let mut z_inv = Vec::new();
        for (x, z) in self.x.iter().zip(&self.z) {
            let cx = sym(x).cholesky()?;
            let cz = sym(z).cholesky()?;
            z_inv.push(sym(&cz.inverse()));
            x_chol.push(cx.l());
            z_chol.push(cz.l());
        }
        Some(Factors {
            x_chol,
            z_chol,
            z_inv,
        })
    }

    fn schur(&self, f: &Factors) -> DMatrix<f64> {
        let m = self.p.m();
        let mut mm = DMatrix::zeros(m, m);
        for (blk, rows) in self.p.block_rows.iter().enumerate() {
            let x = &self.x[blk];
            let zi = &f.z_inv[blk];
            for &i in rows {
                let ai = &self.p.rows[i]
                    .blocks
                    .iter()
                    .find(|(b, _)| *b == blk)
                    .unwrap()
                    .1;
                let pmat = x * ai * zi;
                for &j in rows {
                    if j < i {
                        continue;
                    }
                    let aj = &self.p.rows[j]
                        .blocks
                        .iter()
                        .find(|(b, _)| *b == blk)
                        .unwrap()
                        .1;
                    let v = aj.dot(&pmat);
                    mm[(i, j)] += v;
                    if i != j {
                        mm[(j, i)] += v;
                    }
                }
            }
        }
        for (l, &(i, coef)) in self.p.lp_owner.iter().enumerate() {
            mm[(i, i)] += coef * coef * self.xl[l] / self.zl[l];
        }
        mm
    }

    fn residuals(&self) -> (DVector<f64>, Vec<DMatrix<f64>>, DVector<f64>) {
        let rp = &self.p.b - self.p.a_op(&self.x, &self.xl);
        let (aty, atyl) = self.p.at_op(&self.y);
        let rd: Vec<DMatrix<f64>> = self
            .p
            .c
            .iter()
            .zip(&aty)
            .zip(&self.z)
            .map(|((c, a), z)| c - a - z)
            .collect();
        let rdl = -atyl - &self.zl;
        (rp, rd, rdl)
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        f: &Factors,
        solver: &Solver,
        rp: &DVector<f64>,
        rd: &[DMatrix<f64>],
        rdl: &DVector<f64>,
        rcz: &[DMatrix<f64>],
        rczl: &DVector<f64>,
    ) -> Option<Direction> {
        // G = Rc Z⁻¹ − X Rd Z⁻¹; h = rp − A(G); M Δy = h.
        let g: Vec<DMatrix<f64>> = (0..self.x.len())
            .map(|b| &rcz[b] - &self.x[b] * &rd[b] * &f.z_inv[b])
            .collect();
        let gl = DVector::from_fn(self.p.num_lp, |l, _| {
            rczl[l] - self.xl[l] * rdl[l] / self.zl[l]
        });
        let h = rp - self.p.a_op(&g, &gl);
        let dy = solver.solve(&h)?;
        if dy.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let (atdy, atdyl) = self.p.at_op(&dy);
        let dz: Vec<DMatrix<f64>> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
        let dzl = rdl - atdyl;
        let dx: Vec<DMatrix<f64>> = (0..self.x.len())
            .map(|b| sym(&(&rcz[b] - &self.x[b] * &dz[b] * &f.z_inv[b])))
            .collect();
        let dxl = DVector::from_fn(self.p.num_lp, |l, _| {
            rczl[l] - self.xl[l] * dzl[l] / self.zl[l]
        });
        Some(Direction {
            dx,
            dxl,
            dy,
            dz,
            dzl,
        })
    }

    fn max_steps(&self, f: &Factors, d: &Direction) -> (f64, f64) {
        let mut ap = lp_step(&self.xl, &d.dxl);
        let mut ad = lp_step(&self.zl, &d.dzl);
        for b in 0..self.x.len() {
            ap = ap.min(psd_step(&f.x_chol[b], &d.dx[b]));
            ad = ad.min(psd_step(&f.z_chol[b], &d.dz[b]));
        }
        (ap, ad)
    }
}

struct Outcome {
    status: BackendStatus,
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    iterations: usize,
    message: String,
    certificate: Option<Vec<f64>>,
}

fn finish(
    st: &State,
    status: BackendStatus,
    iterations: usize,
    message: String,
    cert: Option<Vec<f64>>,
) -> Outcome {
    Outcome {
        status,
        x: st.x.clone(),
        y: st.y.clone(),
        iterations,
        message,
        certificate: cert,
    }
}

/// Farkas test on the current dual iterate: `Σ ŷ_i A_i ⪯ 0` with
/// `ŷ = y / bᵀy`, and signs compatible with the LP slacks.
fn infeasibility_certificate(st: &State, tol: f64) -> Option<Vec<f64>> {
    let by = st.dobj();
    if by <= 0.0 {
        return None;
    }
    let yh = &st.y / by;
    let (s, sl) = st.p.at_op(&yh);
    let scale = 1.0 + frob2(&s, &sl).sqrt();
    for m in &s {
        if m.nrows() > 0 && sym(m).symmetric_eigenvalues().max() > tol * scale {
            return None;
        }
    }
    if sl.iter().any(|&v| v > tol * scale) {
        return None;
    }
    Some(yh.iter().copied().collect())
}

fn solve_standard(p: &Standard, tol: f64, max_iter: usize) -> BackendResult {
    let out = run(p, tol, max_iter);
    BackendResult {
        status: out.status,
        x: out.x,
        y: out.y.iter().copied().collect(),
        iterations: out.iterations,
        message: out.message,
        certificate: out.certificate,
    }
}

fn run(p: &Standard, tol: f64, max_iter: usize) -> Outcome {
    let mut st = State::initial(p);
    let b_norm = p.b.norm();
    let c_norm = frob2(&p.c, &DVector::zeros(0)).sqrt();
    let mut stalls = 0;
    let mut last = String::new();

    for it in 0..max_iter {
        let (rp, rd, rdl) = st.residuals();
        let pobj = st.pobj();
        let dobj = st.dobj();
        let mu = st.mu();
        let relp = rp.norm() / (1.0 + b_norm);
        let reld = frob2(&rd, &rdl).sqrt() / (1.0 + c_norm);
        let gap = (pobj - dobj).abs().max(st.nu() * mu) / (1.0 + pobj.abs() + dobj.abs());
        last = format!("relp {relp:.2e}, reld {reld:.2e}, gap {gap:.2e}");
        if relp <= tol && reld <= tol && gap <= tol {
            return finish(&st, BackendStatus::Converged, it, last, None);
        }
        if dobj > 1e3 * (1.0 + c_norm)
            || (relp > 1e-3 && dobj > 1e2 * (1.0 + c_norm.max(pobj.abs())))
        {
            if let Some(cert) = infeasibility_certificate(&st, 1e-8) {
                return finish(
                    &st,
                    BackendStatus::Infeasible,
                    it,
                    "dual ray found".into(),
                    Some(cert),
                );
            }
        }
        if !pobj.is_finite() || !dobj.is_finite() || pobj < -1e14 * (1.0 + b_norm) {
            return finish(
                &st,
                BackendStatus::Failed,
                it,
                format!("diverged ({last})"),
                None,
            );
        }

        let Some(f) = st.factor() else {
            return finish(
                &st,
                BackendStatus::Failed,
                it,
                format!("lost positive definiteness ({last})"),
                None,
            );
        };
        let mm = st.schur(&f);
        let solver = match mm.clone().cholesky() {
            Some(c) => Solver::Chol(c),
            None => Solver::Lu(mm.lu()),
        };

        // Predictor: Rc = −XZ.
        let rcz: Vec<DMatrix<f64>> = st.x.iter().map(|x| -x).collect();
        let rczl = -&st.xl;
        let Some(pred) = st.direction(&f, &solver, &rp, &rd, &rdl, &rcz, &rczl) else {
            return finish(
                &st,
                BackendStatus::Failed,
                it,
                format!("singular Schur complement ({last})"),
                None,
            );
        };
        let (ap_max, ad_max) = st.max_steps(&f, &pred);
        let ap = ap_max.min(1.0);
        let ad = ad_max.min(1.0);
        let mut xz_aff = 0.0;
        for b in 0..st.x.len() {
            let xa = &st.x[b] + &pred.dx[b] * ap;
            let za = &st.z[b] + &pred.dz[b] * ad;
            xz_aff += xa.dot(&za);
        }
        xz_aff += (&st.xl + &pred.dxl * ap).dot(&(&st.zl + &pred.dzl * ad));
        let mu_aff = xz_aff / st.nu().max(1.0);
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let gamma = 0.9 + 0.09 * ap.min(ad);

        // Corrector: Rc Z⁻¹ = σμZ⁻¹ − X − ΔX_p ΔZ_p Z⁻¹.
        let rcz: Vec<DMatrix<f64>> = (0..st.x.len())
            .map(|b| {
                &f.z_inv[b] * (sigma * mu) - &st.x[b] - &pred.dx[b] * &pred.dz[b] * &f.z_inv[b]
            })
            .collect();
        let rczl = DVector::from_fn(p.num_lp, |l, _| {
            sigma * mu / st.zl[l] - st.xl[l] - pred.dxl[l] * pred.dzl[l] / st.zl[l]
        });
        let Some(dir) = st.direction(&f, &solver, &rp, &rd, &rdl, &rcz, &rczl) else {
            return finish(
                &st,
                BackendStatus::Failed,
                it,
                format!("singular Schur complement ({last})"),
                None,
            );
        };
        let (ap_max, ad_max) = st.max_steps(&f, &dir);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);

        for b in 0..st.x.len() {
            st.x[b] = sym(&(&st.x[b] + &dir.dx[b] * ap));
            st.z[b] = sym(&(&st.z[b] + &dir.dz[b] * ad));
        }
        st.xl += &dir.dxl * ap;
        st.zl += &dir.dzl * ad;
        st.y += &dir.dy * ad;

        if ap.max(ad) < 1e-8 {
            stalls += 1;
            if stalls >= 3 {
                return finish(
                    &st,
                    BackendStatus::Failed,
                    it + 1,
                    format!("stalled ({last})"),
                    None,
                );
            }
        } else {
            stalls = 0;
        }
    }
    finish(
        &st,
        BackendStatus::Failed,
        max_iter,
        format!("iteration limit ({last})"),
        None,
    )
}
