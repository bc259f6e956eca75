//! Transmit beamforming for fixed RIS phases.
//!
//! The lifted problem over `W_k = w_k w_kᴴ` (rank constraints dropped):
//!
//! ```text
//! min Σ_k tr(W_k)
//! s.t. tr(G_k W_k) − S Σ_{i≥1, i≠k} tr(G_k W_i) ≥ S σ_k²     k = 1..K
//!      tr(H_l (Σ_{k=0..K} W_k) H_lᴴ) ≥ σ² γ_req               l = 1..L
//! ```
//!
//! with `G_k = g_k g_kᴴ`. Beamformers are read off by eigen-decomposition,
//! with Gaussian randomization as a fallback when a `W_k` is not rank one.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{echo_matrix, stacked_user_channel, ChannelSet, PhaseShifts};
use crate::linalg::{complex_gaussian_vec, linear_to_db, outer, psd_sqrt, CMat, CVec};
use crate::scenario::{noise_power_watts, ScenarioConfig, SnrForm};
use crate::sdp::{
    self, extract_rank_one, HermitianSdp, RankOne, Relop, SdpError, SdpSolution, Sense,
    SolveStatus, Term,
};

/// A `W_k` whose trace is below this fraction of the total is read as a
/// zero beam rather than a rank-deficient one.
const ZERO_BEAM_FRACTION: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum BeamformError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("problem has neither users nor sensing grid points")]
    Empty,
    #[error("beamforming problem infeasible: {0}")]
    Infeasible(String),
    #[error("no feasible beamformer among {0} randomization candidates")]
    NoFeasibleCandidate(usize),
    #[error("SDP solve failed: {0}")]
    Numerical(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Stacked beamformers `w_0..w_K`, each in `C^{NJ}` ordered by BS;
/// `w_0` is the dedicated sensing beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CVec>,
}

impl BeamformerSet {
    pub fn new(w: Vec<CVec>) -> Result<Self, BeamformError> {
        if let Some(first) = w.first() {
            if w.iter().any(|x| x.len() != first.len()) {
                return Err(BeamformError::Dimension(
                    "beamformers differ in length".into(),
                ));
            }
        }
        if w.iter()
            .any(|x| x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
        {
            return Err(BeamformError::Dimension(
                "non-finite beamformer entry".into(),
            ));
        }
        Ok(Self { w })
    }

    pub fn zeros(num_users: usize, dim: usize) -> Self {
        Self {
            w: vec![CVec::zeros(dim); num_users + 1],
        }
    }

    pub fn num_users(&self) -> usize {
        self.w.len().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.w.first().map_or(0, |x| x.len())
    }

    pub fn total_power(&self) -> f64 {
        self.w.iter().map(|x| x.norm_squared()).sum()
    }

    /// Slice `w_{j,k}` of BS `j` (each BS owns `n` consecutive entries).
    pub fn per_bs(&self, k: usize, j: usize, n: usize) -> CVec {
        self.w[k].rows(j * n, n).into_owned()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w: self.w.iter().map(|x| x * Complex64::new(c, 0.0)).collect(),
        }
    }
}

/// Thresholds and noise powers shared by both subproblems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Requirements {
    pub r_req_bps_hz: f64,
    pub gamma_req_linear: f64,
    pub sigma2_sensing: f64,
    pub sigma2_users: Vec<f64>,
    /// Count the sensing beam as interference at the users.
    pub sensing_interference: bool,
}

impl Requirements {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let noise = noise_power_watts(cfg);
        Self {
            r_req_bps_hz: cfg.r_req_bps_hz,
            gamma_req_linear: cfg.gamma_req_linear(),
            sigma2_sensing: noise.sensing_w,
            sigma2_users: noise.user_w,
            sensing_interference: cfg.sensing_interference_in_sinr,
        }
    }

    /// `S = 2^{R_req} − 1`.
    pub fn se_threshold(&self) -> f64 {
        2f64.powf(self.r_req_bps_hz) - 1.0
    }

    fn first_interferer(&self) -> usize {
        if self.sensing_interference {
            0
        } else {
            1
        }
    }
}

/// Constraint functions in the form `a(w) ≥ b`, evaluated on actual
/// beamformers. Both sides are homogeneous quadratics, so `a(c·w) = c² a(w)`.
pub fn constraint_sides(
    g: &[CVec],
    echo: &[CMat],
    w: &BeamformerSet,
    req: &Requirements,
) -> Vec<(f64, f64)> {
    let s = req.se_threshold();
    let mut out = Vec::with_capacity(g.len() + echo.len());
    for (k, gk) in g.iter().enumerate() {
        let user = k + 1;
        let gain = |i: usize| gk.dotc(&w.w[i]).norm_sqr();
        let interference: f64 = (req.first_interferer()..w.w.len())
            .filter(|&i| i != user)
            .map(gain)
            .sum();
        out.push((gain(user) - s * interference, s * req.sigma2_users[k]));
    }
    for h in echo {
        let p: f64 = w.w.iter().map(|x| (h * x).norm_squared()).sum();
        out.push((p, req.sigma2_sensing * req.gamma_req_linear));
    }
    out
}

/// Relative margins `a/b − 1` (users first, then grid points).
pub fn constraint_margins(
    g: &[CVec],
    echo: &[CMat],
    w: &BeamformerSet,
    req: &Requirements,
) -> Vec<f64> {
    constraint_sides(g, echo, w, req)
        .into_iter()
        .map(|(a, b)| a / b - 1.0)
        .collect()
}

/// Smallest uniform amplitude factor that makes every constraint hold
/// (tight on the binding one), or `None` when some `a(w) ≤ 0`. With no
/// constraints the factor is 0.
pub fn feasibility_scale(sides: &[(f64, f64)]) -> Option<f64> {
    let mut c2: f64 = 0.0;
    for &(a, b) in sides {
        if a <= 0.0 || !a.is_finite() {
            return None;
        }
        c2 = c2.max(b / a);
    }
    Some(c2.sqrt())
}

#[derive(Debug, Clone)]
pub struct BeamProblem {
    pub sdp: HermitianSdp,
    pub g: Vec<CVec>,
    pub echo: Vec<CMat>,
    pub req: Requirements,
}

impl BeamProblem {
    pub fn num_users(&self) -> usize {
        self.g.len()
    }

    pub fn dim(&self) -> usize {
        self.sdp.variables.first().map_or(0, |v| v.dim)
    }
}

/// Build the lifted beamforming problem from stacked user channels `g_k`
/// and echo matrices `H_l`.
pub fn assemble_p21(
    g: &[CVec],
    echo: &[CMat],
    req: &Requirements,
) -> Result<BeamProblem, BeamformError> {
    if g.is_empty() && echo.is_empty() {
        return Err(BeamformError::Empty);
    }
    let dim = g
        .first()
        .map(|x| x.len())
        .or_else(|| echo.first().map(|h| h.ncols()))
        .unwrap();
    if g.iter().any(|x| x.len() != dim) || echo.iter().any(|h| h.ncols() != dim) {
        return Err(BeamformError::Dimension("channel lengths disagree".into()));
    }
    if req.sigma2_users.len() != g.len() {
        return Err(BeamformError::Dimension(format!(
            "{} user noise powers for {} users",
            req.sigma2_users.len(),
            g.len()
        )));
    }
    let k_users = g.len();
    let s = req.se_threshold();
    let mut sdp = HermitianSdp::new(Sense::Minimize);
    let vars: Vec<usize> = (0..=k_users)
        .map(|k| sdp.add_variable(format!("W{k}"), dim))
        .collect();
    for &v in &vars {
        sdp.add_objective_term(v, CMat::identity(dim, dim));
    }
    for (k, gk) in g.iter().enumerate() {
        let user = k + 1;
        let gram = outer(gk, gk);
        let mut terms = vec![Term {
            var: vars[user],
            matrix: gram.clone(),
        }];
        for i in req.first_interferer()..=k_users {
            if i != user {
                terms.push(Term {
                    var: vars[i],
                    matrix: &gram * Complex64::new(-s, 0.0),
                });
            }
        }
        sdp.add_constraint(
            format!("se{user}"),
            terms,
            Relop::Ge,
            s * req.sigma2_users[k],
        );
    }
    for (l, h) in echo.iter().enumerate() {
        let a = h.adjoint() * h;
        let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let terms = vars
            .iter()
            .map(|&v| Term {
                var: v,
                matrix: a.clone(),
            })
            .collect();
        sdp.add_constraint(
            format!("snr{l}"),
            terms,
            Relop::Ge,
            req.sigma2_sensing * req.gamma_req_linear,
        );
    }
    Ok(BeamProblem {
        sdp,
        g: g.to_vec(),
        echo: echo.to_vec(),
        req: req.clone(),
    })
}

/// Assemble directly from a channel realization and phases.
pub fn assemble_from_channels(
    channels: &ChannelSet,
    v: &PhaseShifts,
    req: &Requirements,
) -> Result<BeamProblem, BeamformError> {
    let g: Vec<CVec> = (0..channels.num_users())
        .map(|k| stacked_user_channel(channels, v, k))
        .collect();
    let echo: Vec<CMat> = (0..channels.num_grid_points())
        .map(|l| echo_matrix(channels, v, l))
        .collect();
    assemble_p21(&g, &echo, req)
}

#[derive(Debug, Clone, Copy)]
pub struct BeamSolveOptions {
    pub tol: f64,
    pub ratio_tol: f64,
    pub randomization_budget: usize,
}

impl Default for BeamSolveOptions {
    fn default() -> Self {
        Self {
            tol: sdp::DEFAULT_TOL,
            ratio_tol: sdp::DEFAULT_RATIO_TOL,
            randomization_budget: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BeamDiagnostics {
    pub sdp_objective: f64,
    /// Dual objective: a certified lower bound on the optimal power.
    pub sdp_lower_bound: f64,
    pub sdp_iterations: usize,
    pub kkt_max: f64,
    /// `λ₂/λ₁` per `W_k` (0 for zero beams).
    pub extraction_ratios: Vec<f64>,
    pub zero_beams: Vec<usize>,
    pub randomized: bool,
    pub candidates_feasible: usize,
    pub rescale_factor: f64,
    pub incumbent_kept: bool,
    pub final_power: f64,
}

impl BeamDiagnostics {
    pub fn all_rank_one(&self, ratio_tol: f64) -> bool {
        self.extraction_ratios.iter().all(|&r| r <= ratio_tol)
    }
}

fn solution_or_error(sol: SdpSolution) -> Result<SdpSolution, BeamformError> {
    match sol.status {
        SolveStatus::Optimal => Ok(sol),
        SolveStatus::Infeasible => Err(BeamformError::Infeasible(
            "SE / sensing thresholds cannot be met for this channel draw".into(),
        )),
        SolveStatus::NumericalFailure => {
            Err(BeamformError::Numerical(sol.diagnostic.unwrap_or_default()))
        }
    }
}

/// Solve the relaxation and recover beamformers.
pub fn solve_beamformers<R: Rng + ?Sized>(
    problem: &BeamProblem,
    opts: &BeamSolveOptions,
    rng: &mut R,
) -> Result<(BeamformerSet, BeamDiagnostics), BeamformError> {
    solve_beamformers_from(problem, opts, None, rng)
}

/// As [`solve_beamformers`], with an incumbent (e.g. the previous iterate)
/// entered as one more rescaled candidate. The result is never worse than
/// the incumbent whenever the incumbent can be made feasible.
pub fn solve_beamformers_from<R: Rng + ?Sized>(
    problem: &BeamProblem,
    opts: &BeamSolveOptions,
    incumbent: Option<&BeamformerSet>,
    rng: &mut R,
) -> Result<(BeamformerSet, BeamDiagnostics), BeamformError> {
    let sol = solution_or_error(sdp::solve_sdp(&problem.sdp, opts.tol)?)?;
    let total_trace: f64 = sol.primal.iter().map(|w| w.trace().re).sum();

    let mut ratios = Vec::with_capacity(sol.primal.len());
    let mut zero_beams = Vec::new();
    let mut evd = Vec::with_capacity(sol.primal.len());
    let mut deficient = Vec::new();
    for (k, wk) in sol.primal.iter().enumerate() {
        if wk.trace().re <= ZERO_BEAM_FRACTION * total_trace {
            zero_beams.push(k);
            ratios.push(0.0);
            evd.push(CVec::zeros(problem.dim()));
            continue;
        }
        let r = extract_rank_one(wk, opts.ratio_tol)?;
        ratios.push(r.ratio());
        if let RankOne::Deficient { .. } = r {
            deficient.push(k);
        }
        evd.push(r.principal().clone());
    }

    let evaluate = |cand: &BeamformerSet| -> Option<(BeamformerSet, f64)> {
        let sides = constraint_sides(&problem.g, &problem.echo, cand, &problem.req);
        let c = feasibility_scale(&sides)?;
        Some((cand.scaled(c), c))
    };

    let evd_set = BeamformerSet::new(evd)?;
    let mut best = evaluate(&evd_set);
    let mut feasible = usize::from(best.is_some());
    if !deficient.is_empty() {
        let roots: Vec<(usize, CMat)> = deficient
            .iter()
            .map(|&k| (k, psd_sqrt(&sol.primal[k])))
            .collect();
        for _ in 0..opts.randomization_budget {
            let mut cand = evd_set.clone();
            for (k, root) in &roots {
                cand.w[*k] = root * complex_gaussian_vec(problem.dim(), rng);
            }
            if let Some((scaled, c)) = evaluate(&cand) {
                feasible += 1;
                let better = best
                    .as_ref()
                    .is_none_or(|(b, _)| scaled.total_power() < b.total_power());
                if better {
                    best = Some((scaled, c));
                }
            }
        }
    }
    let mut incumbent_kept = false;
    if let Some(inc) =
        incumbent.filter(|inc| inc.w.len() == evd_set.w.len() && inc.dim() == evd_set.dim())
    {
        if let Some((scaled, c)) = evaluate(inc) {
            if best
                .as_ref()
                .is_none_or(|(b, _)| scaled.total_power() < b.total_power())
            {
                best = Some((scaled, c));
                incumbent_kept = true;
            }
        }
    }
    let Some((w, c)) = best else {
        return Err(BeamformError::NoFeasibleCandidate(
            opts.randomization_budget + 1,
        ));
    };
    let diag = BeamDiagnostics {
        sdp_objective: sol.objective,
        sdp_lower_bound: sol.dual_objective.unwrap_or(sol.objective),
        sdp_iterations: sol.iterations,
        kkt_max: sol.kkt.max(),
        extraction_ratios: ratios,
        zero_beams,
        randomized: !deficient.is_empty(),
        candidates_feasible: feasible,
        rescale_factor: c,
        incumbent_kept,
        final_power: w.total_power(),
    };
    Ok((w, diag))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub total_power_w: f64,
    pub per_user_se_bps_hz: Vec<f64>,
    pub sensing_snr_linear: Vec<f64>,
    /// `min_k R_k − R_req` (+∞ without users).
    pub min_se_margin: f64,
    /// `min_l 10 log10(γ_l / γ_req)` (+∞ without grid points).
    pub min_snr_margin_db: f64,
}

impl Metrics {
    /// SE within `se_tol` of the requirement and SNR within a relative
    /// `snr_rel_tol` of it.
    pub fn meets(&self, req: &Requirements, se_tol: f64, snr_rel_tol: f64) -> bool {
        self.per_user_se_bps_hz
            .iter()
            .all(|&r| r >= req.r_req_bps_hz - se_tol)
            && self
                .sensing_snr_linear
                .iter()
                .all(|&g| g >= req.gamma_req_linear * (1.0 - snr_rel_tol))
    }
}

/// Sensing SNR of one echo matrix.
pub fn sensing_snr(h: &CMat, w: &BeamformerSet, sigma2: f64, form: SnrForm) -> f64 {
    match form {
        SnrForm::Trace => w.w.iter().map(|x| (h * x).norm_squared()).sum::<f64>() / sigma2,
        SnrForm::Coherent => {
            let sum = w.w.iter().fold(CVec::zeros(h.ncols()), |acc, x| acc + x);
            (h * sum).norm_squared() / sigma2
        }
    }
}

/// Metrics from precomputed stacked channels.
pub fn metrics_from(
    g: &[CVec],
    echo: &[CMat],
    w: &BeamformerSet,
    req: &Requirements,
    form: SnrForm,
) -> Metrics {
    let se: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(k, gk)| {
            let user = k + 1;
            let gain = |i: usize| gk.dotc(&w.w[i]).norm_sqr();
            let interference: f64 = (req.first_interferer()..w.w.len())
                .filter(|&i| i != user)
                .map(gain)
                .sum();
            (1.0 + gain(user) / (interference + req.sigma2_users[k])).log2()
        })
        .collect();
    let snr: Vec<f64> = echo
        .iter()
        .map(|h| sensing_snr(h, w, req.sigma2_sensing, form))
        .collect();
    let min_se_margin = se
        .iter()
        .map(|r| r - req.r_req_bps_hz)
        .fold(f64::INFINITY, f64::min);
    let min_snr_margin_db = snr
        .iter()
        .map(|&x| linear_to_db(x / req.gamma_req_linear))
        .fold(f64::INFINITY, f64::min);
    Metrics {
        total_power_w: w.total_power(),
        per_user_se_bps_hz: se,
        sensing_snr_linear: snr,
        min_se_margin,
        min_snr_margin_db,
    }
}

/// Spectral efficiencies, sensing SNRs and power of `w` on a realization.
pub fn evaluate_metrics(
    w: &BeamformerSet,
    channels: &ChannelSet,
    v: &PhaseShifts,
    cfg: &ScenarioConfig,
) -> Metrics {
    let g: Vec<CVec> = (0..channels.num_users())
        .map(|k| stacked_user_channel(channels, v, k))
        .collect();
    let echo: Vec<CMat> = (0..channels.num_grid_points())
        .map(|l| echo_matrix(channels, v, l))
        .collect();
    metrics_from(&g, &echo, w, &Requirements::from_config(cfg), cfg.snr_form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_vec, eig_extremes, ONE};
    use crate::scenario::{preset, Preset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn req(r: f64, gamma: f64, k: usize) -> Requirements {
        Requirements {
            r_req_bps_hz: r,
            gamma_req_linear: gamma,
            sigma2_sensing: 1e-3,
            sigma2_users: vec![2e-3; k],
            sensing_interference: false,
        }
    }

    fn rank_one_echo(n_rx: usize, dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let h0 = complex_gaussian_vec(n_rx, rng);
        let c = complex_gaussian_vec(dim, rng);
        outer(&h0, &c)
    }

    #[test]
    fn se_threshold_of_ten() {
        assert_eq!(req(10.0, 1.0, 0).se_threshold(), 1023.0);
    }

    #[test]
    fn table1_problem_counts() {
        let cfg = preset(Preset::Table1, 0);
        let dim = cfg.num_tx() * cfg.num_bs_antennas();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g: Vec<CVec> = (0..cfg.num_users())
            .map(|_| complex_gaussian_vec(dim, &mut rng))
            .collect();
        let echo: Vec<CMat> = (0..cfg.num_grid_points())
            .map(|_| rank_one_echo(cfg.num_bs_antennas(), dim, &mut rng))
            .collect();
        let p = assemble_p21(&g, &echo, &Requirements::from_config(&cfg)).unwrap();
        assert_eq!(p.sdp.variables.len(), 11);
        assert!(p.sdp.variables.iter().all(|v| v.dim == 96));
        assert_eq!(
            p.sdp
                .constraints
                .iter()
                .filter(|c| c.label.starts_with("se"))
                .count(),
            10
        );
        assert_eq!(
            p.sdp
                .constraints
                .iter()
                .filter(|c| c.label.starts_with("snr"))
                .count(),
            16
        );
    }

    #[test]
    fn sensing_only_counts_and_empty_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = assemble_p21(&[], &[rank_one_echo(2, 3, &mut rng)], &req(1.0, 1.0, 0)).unwrap();
        assert_eq!(p.sdp.variables.len(), 1);
        assert_eq!(p.sdp.constraints.len(), 1);
        assert!(matches!(
            assemble_p21(&[], &[], &req(1.0, 1.0, 0)),
            Err(BeamformError::Empty)
        ));
    }

    #[test]
    fn matched_filter_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let g = complex_gaussian_vec(4, &mut rng) * Complex64::new(1e-4, 0.0);
            let r = req(3.0, 1.0, 1);
            let p = assemble_p21(std::slice::from_ref(&g), &[], &r).unwrap();
            let (w, d) = solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).unwrap();
            let expected = 7.0 * 2e-3 / g.norm_squared();
            assert!((w.total_power() - expected).abs() <= 1e-6 * expected);
            let cos = g.dotc(&w.w[1]).norm() / (g.norm() * w.w[1].norm());
            assert!((cos - 1.0).abs() < 1e-9);
            assert_eq!(w.w[0].norm(), 0.0);
            assert!(d.final_power >= d.sdp_lower_bound * (1.0 - 1e-7));
        }
    }

    #[test]
    fn rayleigh_quotient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let h = rank_one_echo(3, 5, &mut rng) * Complex64::new(1e-3, 0.0);
            let r = req(1.0, 10.0, 0);
            let p = assemble_p21(&[], std::slice::from_ref(&h), &r).unwrap();
            let (w, d) = solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).unwrap();
            let (lmax, _) = eig_extremes(&(h.adjoint() * &h));
            let expected = 1e-3 * 10.0 / lmax;
            assert!((w.total_power() - expected).abs() <= 1e-6 * expected);
            assert!(d.all_rank_one(1e-4));
        }
    }

    #[test]
    fn vanishing_sensing_requirement_reduces_to_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = complex_gaussian_vec(3, &mut rng);
        let h = rank_one_echo(2, 3, &mut rng);
        let r = req(2.0, 1e-12, 1);
        let p = assemble_p21(std::slice::from_ref(&g), &[h], &r).unwrap();
        let (w, _) = solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).unwrap();
        let expected = 3.0 * 2e-3 / g.norm_squared();
        assert!((w.total_power() - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn objective_scales_inversely_with_channel_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g: Vec<CVec> = (0..2).map(|_| complex_gaussian_vec(4, &mut rng)).collect();
        let h = vec![rank_one_echo(2, 4, &mut rng)];
        let r = req(1.5, 2.0, 2);
        let (w1, _) = solve_beamformers(
            &assemble_p21(&g, &h, &r).unwrap(),
            &BeamSolveOptions::default(),
            &mut rng,
        )
        .unwrap();
        let c = Complex64::new(0.0, 3.0);
        let g2: Vec<CVec> = g.iter().map(|x| x * c).collect();
        let h2: Vec<CMat> = h.iter().map(|x| x * c).collect();
        let (w2, _) = solve_beamformers(
            &assemble_p21(&g2, &h2, &r).unwrap(),
            &BeamSolveOptions::default(),
            &mut rng,
        )
        .unwrap();
        let ratio = w2.total_power() / w1.total_power();
        assert!((ratio - 1.0 / 9.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn solved_beams_meet_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g: Vec<CVec> = (0..3).map(|_| complex_gaussian_vec(6, &mut rng)).collect();
        let h: Vec<CMat> = (0..2).map(|_| rank_one_echo(3, 6, &mut rng)).collect();
        let r = req(2.0, 50.0, 3);
        let p = assemble_p21(&g, &h, &r).unwrap();
        let (w, d) = solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).unwrap();
        let m = metrics_from(&g, &h, &w, &r, SnrForm::Trace);
        assert!(m.meets(&r, 1e-4, 1e-4), "{m:?}");
        assert!(d.final_power >= d.sdp_lower_bound * (1.0 - 1e-7));
        if d.all_rank_one(1e-4) {
            assert!((d.final_power - d.sdp_objective).abs() <= 1e-6 * d.sdp_objective);
        }
    }

    #[test]
    fn zero_beams_give_zero_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g: Vec<CVec> = (0..2).map(|_| complex_gaussian_vec(3, &mut rng)).collect();
        let h = vec![rank_one_echo(2, 3, &mut rng)];
        let m = metrics_from(
            &g,
            &h,
            &BeamformerSet::zeros(2, 3),
            &req(1.0, 1.0, 2),
            SnrForm::Trace,
        );
        assert_eq!(m.total_power_w, 0.0);
        assert!(m.per_user_se_bps_hz.iter().all(|&r| r == 0.0));
        assert!(m.sensing_snr_linear.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn unit_sinr_gives_one_bit() {
        let g = CVec::from_vec(vec![Complex64::new(0.0, 2.0)]);
        let r = req(1.0, 1.0, 1);
        // |g w|² = 4|w|² = σ_k² = 2e-3.
        let amp = (2e-3_f64 / 4.0).sqrt();
        let w = BeamformerSet::new(vec![
            CVec::zeros(1),
            CVec::from_vec(vec![Complex64::new(amp, 0.0)]),
        ])
        .unwrap();
        let m = metrics_from(&[g], &[], &w, &r, SnrForm::Trace);
        assert!((m.per_user_se_bps_hz[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_metrics_by_hand() {
        let g = Complex64::new(0.3, -0.4);
        let h = Complex64::new(1.5, 0.5);
        let w0 = Complex64::new(0.2, 0.1);
        let w1 = Complex64::new(-0.7, 0.3);
        let r = req(1.0, 1.0, 1);
        let w =
            BeamformerSet::new(vec![CVec::from_vec(vec![w0]), CVec::from_vec(vec![w1])]).unwrap();
        let m = metrics_from(
            &[CVec::from_vec(vec![g])],
            &[CMat::from_element(1, 1, h)],
            &w,
            &r,
            SnrForm::Trace,
        );
        let se = (1.0 + (g.conj() * w1).norm_sqr() / 2e-3).log2();
        let snr = ((h * w0).norm_sqr() + (h * w1).norm_sqr()) / 1e-3;
        assert!((m.per_user_se_bps_hz[0] - se).abs() < 1e-12);
        assert!((m.sensing_snr_linear[0] - snr).abs() < 1e-9 * snr);
        let coherent = sensing_snr(&CMat::from_element(1, 1, h), &w, 1e-3, SnrForm::Coherent);
        assert!((coherent - (h * (w0 + w1)).norm_sqr() / 1e-3).abs() < 1e-9 * coherent);
        let with_interference = Requirements {
            sensing_interference: true,
            ..r
        };
        let m2 = metrics_from(
            &[CVec::from_vec(vec![g])],
            &[],
            &w,
            &with_interference,
            SnrForm::Trace,
        );
        let se2 = (1.0 + (g.conj() * w1).norm_sqr() / ((g.conj() * w0).norm_sqr() + 2e-3)).log2();
        assert!((m2.per_user_se_bps_hz[0] - se2).abs() < 1e-12);
    }

    #[test]
    fn per_bs_slices() {
        let w = BeamformerSet::new(vec![CVec::from_fn(6, |i, _| ONE * i as f64)]).unwrap();
        assert_eq!(w.per_bs(0, 1, 3)[0], ONE * 3.0);
        assert_eq!(w.num_users(), 0);
    }

    #[test]
    fn feasibility_scale_cases() {
        assert_eq!(feasibility_scale(&[]), Some(0.0));
        assert_eq!(feasibility_scale(&[(4.0, 1.0)]), Some(0.5));
        assert_eq!(feasibility_scale(&[(1.0, 4.0), (-1.0, 1.0)]), None);
    }
}
