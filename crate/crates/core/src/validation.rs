//! Oracle and invariant checks shared by the `validate` command and tests.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beamform::{assemble_p21, solve_beamformers, BeamSolveOptions, Requirements};
use crate::channel::{echo_matrix, stacked_user_channel, FadingMode, PhaseShifts};
use crate::driver::{
    alternating_optimize, baseline_phases, channels_for_seed, reevaluate, run_scheme, snr_heatmap,
    AoOptions, RunReport, Scheme, StopReason, SweepAxis,
};
use crate::linalg::{complex_gaussian, eig_extremes, CMat};
use crate::ris::{assemble_p31, phase_problem_data, solve_phases, PhaseMode, PhaseSolveOptions};
use crate::scenario::{preset, Preset, ScenarioConfig};
use crate::sdp::embed::{embed_matrix, unembed_matrix};
use crate::sdp::{solve_sdp, HermitianSdp, Relop, Sense, SolveStatus, Term, DEFAULT_TOL};

/// Per-iteration power may rise by at most this multiple of the solver
/// tolerance, relative to the previous power.
pub const MONOTONE_SLACK: f64 = 10.0 * DEFAULT_TOL;
pub const SE_TOL: f64 = 1e-4;
pub const SNR_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// One TX BS and one user, no RIS.
pub fn single_link_config(base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.tx_bs_positions.truncate(1);
    cfg.user_positions.truncate(1);
    cfg
}

/// No users and a single sensing grid point.
pub fn sensing_only_config(base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.user_positions.clear();
    cfg.region.grid = [1, 1];
    cfg
}

/// Sensing-only with a single RIS element.
pub fn single_element_config(base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = sensing_only_config(base);
    cfg.array_shape_ris = [1, 1];
    cfg
}

/// Solver power and closed form `(2^R − 1) σ² / ‖g‖²` for a single link
/// with sensing disabled.
pub fn matched_filter_case(cfg: &ScenarioConfig, seed: u64) -> Result<(f64, f64), String> {
    let set = channels_for_seed(cfg, seed)
        .map_err(|e| e.to_string())?
        .without_ris();
    let v = PhaseShifts::zero(set.num_ris_elements());
    let g = stacked_user_channel(&set, &v, 0);
    let req = Requirements::from_config(cfg);
    let p = assemble_p21(std::slice::from_ref(&g), &[], &req).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, _) =
        solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).map_err(|e| e.to_string())?;
    let oracle = req.se_threshold() * req.sigma2_users[0] / g.norm_squared();
    Ok((w.total_power(), oracle))
}

/// Solver power and closed form `σ² γ / λ_max(H₀ᴴH₀)` with no users.
pub fn sensing_only_case(cfg: &ScenarioConfig, seed: u64) -> Result<(f64, f64), String> {
    let set = channels_for_seed(cfg, seed).map_err(|e| e.to_string())?;
    let v = PhaseShifts::random(set.num_ris_elements(), &mut ChaCha8Rng::seed_from_u64(seed));
    let h = echo_matrix(&set, &v, 0);
    let req = Requirements::from_config(cfg);
    let p = assemble_p21(&[], std::slice::from_ref(&h), &req).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, _) =
        solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).map_err(|e| e.to_string())?;
    let (lmax, _) = eig_extremes(&(h.adjoint() * &h));
    Ok((
        w.total_power(),
        req.sigma2_sensing * req.gamma_req_linear / lmax,
    ))
}

/// Margin chosen by the RIS step and the best margin over `points`
/// uniformly spaced phases, for a single-element RIS.
pub fn single_element_case(
    cfg: &ScenarioConfig,
    seed: u64,
    points: usize,
) -> Result<(f64, f64), String> {
    let set = channels_for_seed(cfg, seed).map_err(|e| e.to_string())?;
    let req = Requirements::from_config(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v0 = PhaseShifts::random(1, &mut rng);
    let p = crate::beamform::assemble_from_channels(&set, &v0, &req).map_err(|e| e.to_string())?;
    let (w, _) =
        solve_beamformers(&p, &BeamSolveOptions::default(), &mut rng).map_err(|e| e.to_string())?;
    let data = phase_problem_data(&set, &w, &req).map_err(|e| e.to_string())?;
    let brute = (0..points)
        .map(|i| {
            data.min_margin(&PhaseShifts::from_phases(&[
                2.0 * PI * i as f64 / points as f64
            ]))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let problem = assemble_p31(data.clone(), PhaseMode::MaxSlack).map_err(|e| e.to_string())?;
    let (v, _) = solve_phases(&problem, &PhaseSolveOptions::default(), &mut rng)
        .map_err(|e| e.to_string())?;
    Ok((data.min_margin(&v), brute))
}

/// Largest relative rise between consecutive powers.
pub fn worst_rise(history: &[f64]) -> f64 {
    history
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                (w[1] - w[0]) / w[0]
            } else {
                w[1] - w[0]
            }
        })
        .fold(0.0, f64::max)
}

/// Converged (or otherwise feasible) runs meet both thresholds on
/// re-evaluation from the raw channels.
pub fn report_meets_thresholds(cfg: &ScenarioConfig, report: &RunReport) -> bool {
    let ch = match channels_for_seed(cfg, report.seed) {
        Ok(c) => c,
        Err(_) => return false,
    };
    reevaluate(cfg, &ch, report).meets(&Requirements::from_config(cfg), SE_TOL, SNR_REL_TOL)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn sdp_checks() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = CMat::from_fn(6, 6, |_, _| complex_gaussian(&mut rng));
    let x = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
    let err = (unembed_matrix(&embed_matrix(&x)) - &x).norm() / x.norm();

    let mut p = HermitianSdp::new(Sense::Minimize);
    let w = p.add_variable("W", 2);
    p.add_objective_term(w, CMat::identity(2, 2));
    let g = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(2.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]));
    p.add_constraint("c", vec![Term { var: w, matrix: g }], Relop::Ge, 2.0);
    let oracle = match solve_sdp(&p, DEFAULT_TOL) {
        Ok(s) => check(
            "sdp_analytic_oracle",
            s.status == SolveStatus::Optimal
                && (s.objective - 1.0).abs() < 1e-7
                && s.kkt.max() <= DEFAULT_TOL,
            format!("objective {:.3e}, kkt {:.2e}", s.objective, s.kkt.max()),
        ),
        Err(e) => check("sdp_analytic_oracle", false, e.to_string()),
    };
    vec![
        check(
            "sdp_embedding_round_trip",
            err <= 1e-13,
            format!("relative error {err:.2e}"),
        ),
        oracle,
    ]
}

fn oracle_checks(base: &ScenarioConfig, draws: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let cases: [(
        &str,
        ScenarioConfig,
        fn(&ScenarioConfig, u64) -> Result<(f64, f64), String>,
    ); 2] = [
        (
            "matched_filter_oracle",
            single_link_config(base),
            matched_filter_case,
        ),
        (
            "sensing_only_oracle",
            sensing_only_config(base),
            sensing_only_case,
        ),
    ];
    for (name, cfg, f) in cases {
        let mut worst = 0.0_f64;
        let mut failure = None;
        for s in 0..draws {
            match f(&cfg, s) {
                Ok((got, oracle)) => worst = worst.max(relative(got, oracle)),
                Err(e) => failure = Some(e),
            }
        }
        out.push(match failure {
            Some(e) => check(name, false, e),
            None => check(
                name,
                worst <= 1e-6,
                format!("worst relative error {worst:.2e} over {draws} draws"),
            ),
        });
    }
    let cfg = single_element_config(base);
    let mut worst = 0.0_f64;
    let mut failure = None;
    for s in 0..draws.min(3) {
        match single_element_case(&cfg, s, 10_000) {
            Ok((got, brute)) => worst = worst.max((got - brute).abs() / brute.abs().max(1.0)),
            Err(e) => failure = Some(e),
        }
    }
    out.push(match failure {
        Some(e) => check("ris_single_element_oracle", false, e),
        None => check(
            "ris_single_element_oracle",
            worst <= 1e-3,
            format!("worst gap {worst:.2e}"),
        ),
    });
    out
}

fn run_checks(base: &ScenarioConfig, seeds: u64, opts: &AoOptions) -> Vec<Check> {
    let mut out = Vec::new();
    let mut rise = 0.0_f64;
    let mut infeasible_converged = 0;
    let mut failures = Vec::new();
    let mut wins = 0;
    let mut compared = 0;
    let mut heat_ok = true;
    let mut deterministic = true;
    for s in 0..seeds {
        let ch = match channels_for_seed(base, s) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("seed {s}: {e}"));
                continue;
            }
        };
        let ao = match alternating_optimize(base, &ch, &baseline_phases(&ch, s), opts, s) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("seed {s}: {e}"));
                continue;
            }
        };
        rise = rise.max(worst_rise(&ao.power_history));
        if ao.stop_reason == StopReason::Converged && !report_meets_thresholds(base, &ao) {
            infeasible_converged += 1;
        }
        let mut powers = vec![ao.final_power()];
        for scheme in [Scheme::RandomPhase, Scheme::NoRis] {
            match run_scheme(base, &ch, scheme, opts, s) {
                Ok(r) => powers.push(r.final_power()),
                Err(e) => failures.push(format!("seed {s} {scheme}: {e}")),
            }
        }
        if powers.len() == 3 && powers.iter().all(|p| p.is_finite()) {
            compared += 1;
            if powers[0] <= powers[1] && powers[0] <= powers[2] {
                wins += 1;
            }
        }
        if s == 0 && ao.stop_reason.is_feasible() {
            let field = snr_heatmap(
                base,
                &ch,
                &ao.beamformers,
                &ao.phases,
                &base.grid_points(),
                FadingMode::LosOnly,
                s,
            );
            let g = base.gamma_req_linear();
            heat_ok = field.iter().all(|&x| x >= g * (1.0 - SNR_REL_TOL));
            let again = alternating_optimize(base, &ch, &baseline_phases(&ch, s), opts, s);
            deterministic = again.is_ok_and(|r| {
                r.power_history
                    .iter()
                    .map(|p| p.to_bits())
                    .eq(ao.power_history.iter().map(|p| p.to_bits()))
            });
        }
    }
    let failed = !failures.is_empty();
    out.push(check(
        "ao_monotonicity",
        !failed && rise <= MONOTONE_SLACK,
        if failed {
            failures.join("; ")
        } else {
            format!("worst relative rise {rise:.2e} over {seeds} seeds")
        },
    ));
    out.push(check(
        "converged_runs_feasible",
        !failed && infeasible_converged == 0,
        format!("{infeasible_converged} converged runs violate a threshold"),
    ));
    out.push(check(
        "baseline_ordering",
        compared > 0 && wins as f64 >= 0.9 * compared as f64,
        format!("proposed lowest on {wins}/{compared} seeds"),
    ));
    out.push(check(
        "heatmap_grid_points",
        heat_ok,
        "constraint grid points reach the SNR threshold",
    ));
    out.push(check(
        "determinism",
        deterministic,
        "repeated run reproduces powers bitwise",
    ));
    out
}

fn threshold_check(base: &ScenarioConfig, seeds: u64, opts: &AoOptions) -> Check {
    let values = [5.0, 10.0, 15.0];
    let mut bad = Vec::new();
    for s in 0..seeds {
        let Ok(ch) = channels_for_seed(base, s) else {
            bad.push(format!("seed {s}: channels"));
            continue;
        };
        for scheme in Scheme::ALL {
            let p: Vec<f64> = values
                .iter()
                .map(|&g| {
                    run_scheme(&SweepAxis::GammaReq.apply(base, g), &ch, scheme, opts, s)
                        .map(|r| {
                            if r.stop_reason.is_feasible() {
                                r.final_power()
                            } else {
                                f64::NAN
                            }
                        })
                        .unwrap_or(f64::NAN)
                })
                .collect();
            if !(p[0] < p[1] && p[1] < p[2]) {
                bad.push(format!("seed {s} {scheme}: {p:?}"));
            }
        }
    }
    check(
        "threshold_monotonicity",
        bad.is_empty(),
        if bad.is_empty() {
            format!("power strictly increasing in γ_req on {seeds} seeds")
        } else {
            bad.join("; ")
        },
    )
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub scenario: ScenarioConfig,
    /// Seeds for the run-level checks.
    pub seeds: u64,
    /// Random channel draws for the closed-form oracles.
    pub oracle_draws: u64,
    pub ao: AoOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            scenario: preset(Preset::Desk, 0),
            seeds: 5,
            oracle_draws: 10,
            ao: AoOptions::default(),
        }
    }
}

/// Run every check; never panics on solver failures.
pub fn run_suite(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = sdp_checks();
    out.extend(oracle_checks(&opts.scenario, opts.oracle_draws));
    out.extend(run_checks(&opts.scenario, opts.seeds, &opts.ao));
    out.push(threshold_check(&opts.scenario, opts.seeds.min(3), &opts.ao));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_configs_are_valid() {
        let base = preset(Preset::Desk, 0);
        for cfg in [
            single_link_config(&base),
            sensing_only_config(&base),
            single_element_config(&base),
        ] {
            cfg.validate().unwrap();
        }
        assert_eq!(single_element_config(&base).num_ris_elements(), 1);
        assert_eq!(sensing_only_config(&base).num_grid_points(), 1);
    }

    #[test]
    fn worst_rise_cases() {
        assert_eq!(worst_rise(&[3.0, 2.0, 1.0]), 0.0);
        assert!((worst_rise(&[1.0, 1.5]) - 0.5).abs() < 1e-15);
        assert_eq!(worst_rise(&[]), 0.0);
    }

    #[test]
    fn closed_form_cases_agree() {
        let base = preset(Preset::Desk, 0);
        let (got, oracle) = matched_filter_case(&single_link_config(&base), 0).unwrap();
        assert!(relative(got, oracle) <= 1e-6, "{got} vs {oracle}");
        let (got, oracle) = sensing_only_case(&sensing_only_config(&base), 0).unwrap();
        assert!(relative(got, oracle) <= 1e-6, "{got} vs {oracle}");
    }
}
