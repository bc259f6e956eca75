//! RIS phase-shift design for fixed beamformers.
//!
//! With `ṽ = [v; 1]`, every user gain and echo power is a quadratic form in
//! `ṽ`: `g_kᴴ w_i = ṽᴴ C_k w_i` where `C_k = [Ψ_k; h_kᴴ]` and
//! `Ψ_{j,k} = diag(h_{R,k}ᴴ) G_{R,j}`. Lifting to `V = ṽṽᴴ` with
//! `diag(V) = 1` gives a semidefinite relaxation over a single
//! `(M+1)×(M+1)` matrix.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::beamform::{BeamformerSet, Requirements};
use crate::channel::{ChannelError, ChannelSet, PhaseShifts};
use crate::linalg::{
    cis, complex_gaussian_vec, eig_extremes, outer, psd_sqrt, quad_form, CMat, CVec,
};
use crate::sdp::{self, extract_rank_one, HermitianSdp, Relop, SdpError, Sense, SolveStatus, Term};

/// Candidates whose last lifted entry is smaller than this are discarded.
const LAST_ENTRY_FLOOR: f64 = 1e-9;
/// Margin below which a candidate counts as violating a constraint.
const FEASIBLE_MARGIN: f64 = -1e-9;

#[derive(Debug, Error)]
pub enum RisError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("last lifted entry is zero; phases are undefined")]
    LastEntryZero,
    #[error("no phase configuration supports the current beamformers")]
    Infeasible,
    #[error("none of {0} phase candidates satisfies every constraint")]
    NoFeasibleCandidate(usize),
    #[error("SDP solve failed: {0}")]
    Numerical(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    /// Zero objective: any feasible `V`.
    Feasibility,
    /// Maximize the smallest relative constraint margin.
    #[default]
    MaxSlack,
}

/// Lifted constraint data. All matrices are `(M+1)×(M+1)` Hermitian PSD.
#[derive(Debug, Clone)]
pub struct PhaseProblemData {
    /// `f[k][i] = C_k w_i w_iᴴ C_kᴴ` for user `k` and stream `i = 0..K`.
    pub f: Vec<Vec<CMat>>,
    /// `U_l = B_l (Σ_k w_k w_kᴴ) B_lᴴ`.
    pub u: Vec<CMat>,
    /// `s_l = ‖h_{0,o_l}‖²`.
    pub s: Vec<f64>,
    pub req: Requirements,
}

impl PhaseProblemData {
    pub fn lifted_dim(&self) -> usize {
        self.f
            .first()
            .and_then(|r| r.first())
            .or_else(|| self.u.first())
            .map_or(0, |m| m.nrows())
    }

    /// `(A_c, b_c)` with constraint `tr(A_c V) ≥ b_c`, users first.
    pub fn constraints(&self) -> Vec<(CMat, f64)> {
        let s = self.req.se_threshold();
        let first = usize::from(!self.req.sensing_interference);
        let mut out = Vec::with_capacity(self.f.len() + self.u.len());
        for (k, fk) in self.f.iter().enumerate() {
            let user = k + 1;
            let mut a = fk[user].clone();
            for (i, fi) in fk.iter().enumerate().skip(first) {
                if i != user {
                    a -= fi * Complex64::new(s, 0.0);
                }
            }
            out.push((a, s * self.req.sigma2_users[k]));
        }
        for (u, &sl) in self.u.iter().zip(&self.s) {
            out.push((
                u * Complex64::new(sl, 0.0),
                self.req.sigma2_sensing * self.req.gamma_req_linear,
            ));
        }
        out
    }

    /// Relative margins `ṽᴴAṽ / b − 1` for phases `v`.
    pub fn margins(&self, v: &PhaseShifts) -> Vec<f64> {
        let lifted = lift(v);
        self.constraints()
            .iter()
            .map(|(a, b)| quad_form(a, &lifted) / b - 1.0)
            .collect()
    }

    pub fn min_margin(&self, v: &PhaseShifts) -> f64 {
        self.margins(v).into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// `ṽ = [v; 1]`.
pub fn lift(v: &PhaseShifts) -> CVec {
    let m = v.len();
    let mut out = CVec::zeros(m + 1);
    out.rows_mut(0, m).copy_from(v.vector());
    out[m] = Complex64::new(1.0, 0.0);
    out
}

/// `C = [Ψ; hᴴ]` with `Ψ = [diag(r̄) G_1, …, diag(r̄) G_J]`.
fn cascade_operator(set: &ChannelSet, direct: &[CVec], h_ris: &CVec) -> CMat {
    let n = set.num_bs_antennas();
    let m = set.num_ris_elements();
    let mut c = CMat::zeros(m + 1, n * set.num_tx());
    for (j, g) in set.g_bs_ris.iter().enumerate() {
        for row in 0..m {
            let r = h_ris[row].conj();
            for col in 0..n {
                c[(row, j * n + col)] = r * g[(row, col)];
            }
        }
        for col in 0..n {
            c[(m, j * n + col)] = direct[j][col].conj();
        }
    }
    c
}

/// Lifted data for fixed beamformers on a channel realization.
pub fn phase_problem_data(
    set: &ChannelSet,
    w: &BeamformerSet,
    req: &Requirements,
) -> Result<PhaseProblemData, RisError> {
    let dim = set.stacked_dim();
    if w.dim() != dim || w.num_users() != set.num_users() {
        return Err(RisError::Dimension(format!(
            "{} beamformers of length {} for {} users and stacked dimension {}",
            w.w.len(),
            w.dim(),
            set.num_users(),
            dim
        )));
    }
    let mut f = Vec::with_capacity(set.num_users());
    for k in 0..set.num_users() {
        let direct: Vec<CVec> = (0..set.num_tx())
            .map(|j| set.h_bs_user[j][k].clone())
            .collect();
        let c = cascade_operator(set, &direct, &set.h_ris_user[k]);
        f.push(
            w.w.iter()
                .map(|wi| {
                    let x = &c * wi;
                    outer(&x, &x)
                })
                .collect(),
        );
    }
    let mut u = Vec::with_capacity(set.num_grid_points());
    let mut s = Vec::with_capacity(set.num_grid_points());
    for l in 0..set.num_grid_points() {
        let t = set.target(l);
        let b = cascade_operator(set, &t.h_bs_target, &t.h_ris_target);
        let m1 = set.num_ris_elements() + 1;
        let mut acc = CMat::zeros(m1, m1);
        for wk in &w.w {
            let x = &b * wk;
            acc += outer(&x, &x);
        }
        u.push(acc);
        s.push(t.h_target_rx.norm_squared());
    }
    Ok(PhaseProblemData {
        f,
        u,
        s,
        req: req.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct PhaseProblem {
    pub sdp: HermitianSdp,
    pub data: PhaseProblemData,
    pub mode: PhaseMode,
    /// Offset of the slack variable in max-slack mode: `t = τ + t_lo`.
    pub slack_offset: f64,
}

/// Build the lifted phase problem. In max-slack mode every constraint is
/// normalized by its right-hand side and tightened by a common `t`; since
/// `t` must be a PSD variable here it is written as `τ + t_lo` with `τ ≥ 0`
/// and `t_lo` a bound that every unit-diagonal `V` already satisfies.
pub fn assemble_p31(data: PhaseProblemData, mode: PhaseMode) -> Result<PhaseProblem, RisError> {
    let n = data.lifted_dim();
    if n == 0 {
        return Err(RisError::Dimension("no constraints to build from".into()));
    }
    let constraints = data.constraints();
    for (i, (a, _)) in constraints.iter().enumerate() {
        if a.nrows() != n {
            return Err(RisError::Dimension(format!(
                "constraint {i} has size {}",
                a.nrows()
            )));
        }
    }
    let mut sdp = HermitianSdp::new(match mode {
        PhaseMode::Feasibility => Sense::Minimize,
        PhaseMode::MaxSlack => Sense::Maximize,
    });
    let v = sdp.add_variable("V", n);
    sdp.pin_diagonal(v, 1.0);
    let num_users = data.f.len();
    let label = |i: usize| {
        if i < num_users {
            format!("se{}", i + 1)
        } else {
            format!("snr{}", i - num_users)
        }
    };
    let mut slack_offset = 0.0;
    match mode {
        PhaseMode::Feasibility => {
            for (i, (a, b)) in constraints.into_iter().enumerate() {
                sdp.add_constraint(label(i), vec![Term { var: v, matrix: a }], Relop::Ge, b);
            }
        }
        PhaseMode::MaxSlack => {
            let tau = sdp.add_variable("tau", 1);
            sdp.add_objective_term(tau, CMat::identity(1, 1));
            slack_offset = constraints
                .iter()
                .map(|(a, b)| eig_extremes(a).1.min(0.0) * n as f64 / b - 1.0)
                .fold(0.0_f64, f64::min)
                - 1.0;
            for (i, (a, b)) in constraints.into_iter().enumerate() {
                sdp.add_constraint(
                    label(i),
                    vec![
                        Term {
                            var: v,
                            matrix: a * Complex64::new(1.0 / b, 0.0),
                        },
                        Term {
                            var: tau,
                            matrix: -CMat::identity(1, 1),
                        },
                    ],
                    Relop::Ge,
                    1.0 + slack_offset,
                );
            }
        }
    }
    Ok(PhaseProblem {
        sdp,
        data,
        mode,
        slack_offset,
    })
}

/// `v_m = e^{j(arg ṽ_m − arg ṽ_{M+1})}`.
pub fn recover_phases(lifted: &CVec) -> Result<PhaseShifts, RisError> {
    let m = lifted.len().checked_sub(1).ok_or(RisError::LastEntryZero)?;
    let last = lifted[m];
    if last.norm() < LAST_ENTRY_FLOOR {
        return Err(RisError::LastEntryZero);
    }
    let ref_arg = last.arg();
    let v = CVec::from_fn(m, |i, _| cis(lifted[i].arg() - ref_arg));
    Ok(PhaseShifts::new(v)?)
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseSolveOptions {
    pub tol: f64,
    pub ratio_tol: f64,
    pub randomization_count: usize,
}

impl Default for PhaseSolveOptions {
    fn default() -> Self {
        Self {
            tol: sdp::DEFAULT_TOL,
            ratio_tol: sdp::DEFAULT_RATIO_TOL,
            randomization_count: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagnostics {
    pub rank_ratio: f64,
    pub randomized: bool,
    pub candidates_evaluated: usize,
    pub candidates_feasible: usize,
    pub chosen_margin: f64,
    /// Optimal common slack `t` (max-slack mode only).
    pub sdp_slack: Option<f64>,
    pub sdp_iterations: usize,
}

/// Solve the relaxation and round it to unit-modulus phases, ranking
/// candidates by their smallest relative margin under the fixed beamformers.
pub fn solve_phases<R: Rng + ?Sized>(
    problem: &PhaseProblem,
    opts: &PhaseSolveOptions,
    rng: &mut R,
) -> Result<(PhaseShifts, PhaseDiagnostics), RisError> {
    let sol = sdp::solve_sdp(&problem.sdp, opts.tol)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(RisError::Infeasible),
        SolveStatus::NumericalFailure => {
            return Err(RisError::Numerical(sol.diagnostic.unwrap_or_default()))
        }
    }
    let v_mat = &sol.primal[0];
    let sdp_slack = match problem.mode {
        PhaseMode::MaxSlack => Some(sol.primal[1][(0, 0)].re + problem.slack_offset),
        PhaseMode::Feasibility => None,
    };
    let extraction = extract_rank_one(v_mat, opts.ratio_tol)?;

    let mut best: Option<(PhaseShifts, f64)> = None;
    let mut evaluated = 0;
    let mut feasible = 0;
    let mut consider = |lifted: &CVec, best: &mut Option<(PhaseShifts, f64)>| {
        let Ok(v) = recover_phases(lifted) else {
            return;
        };
        evaluated += 1;
        let margin = problem.data.min_margin(&v);
        if margin >= FEASIBLE_MARGIN {
            feasible += 1;
        }
        if best.as_ref().is_none_or(|(_, m)| margin > *m) {
            *best = Some((v, margin));
        }
    };
    consider(extraction.principal(), &mut best);
    let randomized = !extraction.is_exact();
    if randomized {
        let root = psd_sqrt(v_mat);
        for _ in 0..opts.randomization_count {
            let chi = complex_gaussian_vec(v_mat.nrows(), rng);
            consider(&(&root * chi), &mut best);
        }
    }
    let Some((v, margin)) = best else {
        return Err(RisError::NoFeasibleCandidate(evaluated));
    };
    if margin < FEASIBLE_MARGIN {
        return Err(RisError::NoFeasibleCandidate(evaluated));
    }
    let diag = PhaseDiagnostics {
        rank_ratio: extraction.ratio(),
        randomized,
        candidates_evaluated: evaluated,
        candidates_feasible: feasible,
        chosen_margin: margin,
        sdp_slack,
        sdp_iterations: sol.iterations,
    };
    Ok((v, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{
        assemble_from_channels, constraint_margins, solve_beamformers, BeamSolveOptions,
    };
    use crate::channel::{echo_matrix, realize_channels, stacked_user_channel};
    use crate::linalg::complex_gaussian;
    use crate::scenario::{preset, Preset};
    use crate::seeds::{rng_for, Stream};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn desk_setup(seed: u64) -> (crate::scenario::ScenarioConfig, ChannelSet) {
        let cfg = preset(Preset::Desk, seed);
        let set = realize_channels(
            &cfg,
            &cfg.grid_points(),
            &mut rng_for(seed, Stream::Channels),
        )
        .unwrap();
        (cfg, set)
    }

    fn random_beams(set: &ChannelSet, rng: &mut ChaCha8Rng) -> BeamformerSet {
        BeamformerSet::new(
            (0..=set.num_users())
                .map(|_| complex_gaussian_vec(set.stacked_dim(), rng))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lifted_forms_match_raw_channels() {
        let (cfg, set) = desk_setup(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_beams(&set, &mut rng);
        let v = PhaseShifts::random(set.num_ris_elements(), &mut rng);
        let data = phase_problem_data(&set, &w, &Requirements::from_config(&cfg)).unwrap();
        let lifted = lift(&v);
        let big_v = outer(&lifted, &lifted);
        for k in 0..set.num_users() {
            let g = stacked_user_channel(&set, &v, k);
            for (i, wi) in w.w.iter().enumerate() {
                let direct = g.dotc(wi).norm_sqr();
                let lifted_val = crate::linalg::trace_product(&data.f[k][i], &big_v);
                assert!(
                    (direct - lifted_val).abs() <= 1e-10 * direct,
                    "{direct} vs {lifted_val}"
                );
            }
        }
        for l in 0..set.num_grid_points() {
            let h = echo_matrix(&set, &v, l);
            let direct: f64 = w.w.iter().map(|x| (&h * x).norm_squared()).sum();
            let lifted_val = data.s[l] * crate::linalg::trace_product(&data.u[l], &big_v);
            assert!((direct - lifted_val).abs() <= 1e-10 * direct);
        }
        let g: Vec<CVec> = (0..set.num_users())
            .map(|k| stacked_user_channel(&set, &v, k))
            .collect();
        let echo: Vec<CMat> = (0..set.num_grid_points())
            .map(|l| echo_matrix(&set, &v, l))
            .collect();
        let raw = constraint_margins(&g, &echo, &w, &data.req);
        for (a, b) in raw.iter().zip(data.margins(&v)) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn data_matrices_are_psd() {
        let (cfg, set) = desk_setup(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_beams(&set, &mut rng);
        let data = phase_problem_data(&set, &w, &Requirements::from_config(&cfg)).unwrap();
        for m in data.f.iter().flatten().chain(data.u.iter()) {
            let (hi, lo) = eig_extremes(m);
            assert!(lo >= -1e-12 * hi.max(f64::MIN_POSITIVE));
            assert!(crate::linalg::hermitian_defect(m) < 1e-14);
        }
        assert!(data.s.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn desk_dimensions_and_pins() {
        let (cfg, set) = desk_setup(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_beams(&set, &mut rng);
        let data = phase_problem_data(&set, &w, &Requirements::from_config(&cfg)).unwrap();
        let p = assemble_p31(data, PhaseMode::Feasibility).unwrap();
        assert_eq!(p.sdp.variables[0].dim, 17);
        assert_eq!(p.sdp.num_pins(), 17);
        assert_eq!(p.sdp.constraints.len(), 3 + 4);
    }

    #[test]
    fn table1_lift_has_65_pins() {
        let cfg = preset(Preset::Table1, 0);
        let set =
            realize_channels(&cfg, &cfg.grid_points(), &mut rng_for(0, Stream::Channels)).unwrap();
        let w = BeamformerSet::zeros(set.num_users(), set.stacked_dim());
        let data = phase_problem_data(&set, &w, &Requirements::from_config(&cfg)).unwrap();
        let p = assemble_p31(data, PhaseMode::Feasibility).unwrap();
        assert_eq!(p.sdp.variables[0].dim, 65);
        assert_eq!(p.sdp.num_pins(), 65);
    }

    #[test]
    fn recover_phases_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = PhaseShifts::random(5, &mut rng);
        let lifted = lift(&v);
        let back = recover_phases(&lifted).unwrap();
        assert!((back.vector() - v.vector()).norm() < 1e-14);
        let rotated = &lifted * cis(1.234);
        let back2 = recover_phases(&rotated).unwrap();
        assert!((back2.vector() - v.vector()).norm() < 1e-12);
        let scaled = CVec::from_fn(6, |i, _| {
            lifted[i] * (0.3 + i as f64) * complex_gaussian(&mut rng).norm()
        });
        let back3 = recover_phases(&scaled).unwrap();
        assert!(back3
            .vector()
            .iter()
            .all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert!((back3.vector() - v.vector()).norm() < 1e-12);
        let mut zero_last = lifted.clone();
        zero_last[5] = Complex64::new(0.0, 0.0);
        assert!(matches!(
            recover_phases(&zero_last),
            Err(RisError::LastEntryZero)
        ));
    }

    #[test]
    fn rank_one_lift_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v0 = PhaseShifts::random(4, &mut rng);
        let lifted = lift(&v0) * cis(0.7);
        let big_v = outer(&lifted, &lifted);
        let r = extract_rank_one(&big_v, 1e-4).unwrap();
        assert!(r.is_exact());
        let back = recover_phases(r.principal()).unwrap();
        assert!((back.vector() - v0.vector()).norm() < 1e-10);
    }

    fn scalar_sensing_case(seed: u64) -> (ChannelSet, BeamformerSet, Requirements) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = ChannelSet {
            h_bs_user: vec![vec![]],
            g_bs_ris: vec![CMat::from_element(1, 1, complex_gaussian(&mut rng))],
            h_ris_user: vec![],
            h_bs_target: vec![vec![CVec::from_element(1, complex_gaussian(&mut rng))]],
            h_ris_target: vec![CVec::from_element(1, complex_gaussian(&mut rng))],
            h_target_rx: vec![CVec::from_element(1, complex_gaussian(&mut rng))],
        };
        let w =
            BeamformerSet::new(vec![CVec::from_element(1, complex_gaussian(&mut rng))]).unwrap();
        let req = Requirements {
            r_req_bps_hz: 1.0,
            gamma_req_linear: 0.2,
            sigma2_sensing: 1.0,
            sigma2_users: vec![],
            sensing_interference: false,
        };
        (set, w, req)
    }

    #[test]
    fn single_element_matches_exhaustive_sweep() {
        for seed in 0..5 {
            let (set, w, req) = scalar_sensing_case(seed);
            let data = phase_problem_data(&set, &w, &req).unwrap();
            let brute = (0..10_000)
                .map(|i| {
                    let phi = 2.0 * PI * i as f64 / 10_000.0;
                    data.min_margin(&PhaseShifts::from_phases(&[phi]))
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let p = assemble_p31(data.clone(), PhaseMode::MaxSlack).unwrap();
            let (v, d) = solve_phases(
                &p,
                &PhaseSolveOptions::default(),
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            let got = data.min_margin(&v);
            assert!(!d.randomized);
            assert!(
                (got - brute).abs() <= 1e-3 * brute.abs().max(1.0),
                "{got} vs {brute}"
            );
            assert!(got >= brute - 1e-9);
            assert!((d.sdp_slack.unwrap() - got).abs() < 1e-6 * got.abs().max(1.0));
        }
    }

    #[test]
    fn incumbent_feasibility_gives_nonnegative_slack() {
        let (cfg, set) = desk_setup(6);
        let req = Requirements::from_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v0 = PhaseShifts::random(set.num_ris_elements(), &mut rng);
        let bp = assemble_from_channels(&set, &v0, &req).unwrap();
        let (w, _) = solve_beamformers(&bp, &BeamSolveOptions::default(), &mut rng).unwrap();
        let data = phase_problem_data(&set, &w, &req).unwrap();
        let incumbent = data.min_margin(&v0);
        assert!(incumbent >= -1e-8, "{incumbent}");
        let p = assemble_p31(data.clone(), PhaseMode::MaxSlack).unwrap();
        let (v, d) = solve_phases(&p, &PhaseSolveOptions::default(), &mut rng).unwrap();
        assert!(d.sdp_slack.unwrap() >= -1e-7);
        assert!(d.sdp_slack.unwrap() >= incumbent - 1e-7);
        assert!(v.vector().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert!(data.min_margin(&v) >= FEASIBLE_MARGIN);
        let pf = assemble_p31(data, PhaseMode::Feasibility).unwrap();
        let (vf, _) = solve_phases(&pf, &PhaseSolveOptions::default(), &mut rng).unwrap();
        assert_eq!(vf.len(), set.num_ris_elements());
    }

    #[test]
    fn unreachable_thresholds_are_infeasible() {
        let (set, w, mut req) = scalar_sensing_case(7);
        req.gamma_req_linear = 1e12;
        let data = phase_problem_data(&set, &w, &req).unwrap();
        let p = assemble_p31(data, PhaseMode::Feasibility).unwrap();
        let r = solve_phases(
            &p,
            &PhaseSolveOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(7),
        );
        assert!(matches!(r, Err(RisError::Infeasible)), "{r:?}");
    }
}
