//! Alternating optimization, baselines, sweeps and SNR heatmaps.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::beamform::{
    assemble_from_channels, evaluate_metrics, metrics_from, sensing_snr, solve_beamformers_from,
    BeamDiagnostics, BeamSolveOptions, BeamformError, BeamformerSet, Metrics, Requirements,
};
use crate::channel::{
    echo_matrix_for, realize_channels, ChannelError, ChannelModel, ChannelSet, FadingMode,
    PhaseShifts,
};
use crate::linalg::linear_to_db;
use crate::ris::{
    assemble_p31, phase_problem_data, solve_phases, PhaseDiagnostics, PhaseMode, PhaseSolveOptions,
};
use crate::scenario::{Point3, ScenarioConfig};
use crate::seeds::{derive, rng_for, Stream};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("beamforming failed: {0}")]
    Beamform(#[from] BeamformError),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl DriverError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            DriverError::Beamform(BeamformError::Numerical(_))
                | DriverError::Beamform(BeamformError::Sdp(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Fractional power decrease fell to `ε` or below.
    Converged,
    MaxIterations,
    /// No beamformer meets the thresholds for the initial phases.
    #[serde(rename = "infeasible")]
    InfeasibleFirstStep,
    /// A later beamforming solve failed; the last consistent iterate is kept.
    SolverFailure,
    /// Baselines: one beamforming solve, no alternation.
    SingleSolve,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
            StopReason::InfeasibleFirstStep => "infeasible",
            StopReason::SolverFailure => "solver-failure",
            StopReason::SingleSolve => "single-solve",
        }
    }

    /// A usable, feasible solution was produced.
    pub fn is_feasible(self) -> bool {
        !matches!(self, StopReason::InfeasibleFirstStep)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Proposed,
    NoRis,
    RandomPhase,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::NoRis, Scheme::RandomPhase];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::NoRis => "no-ris",
            Scheme::RandomPhase => "random-phase",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AoOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    pub beam: BeamSolveOptions,
    pub phase: PhaseSolveOptions,
    pub phase_mode: PhaseMode,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iter: 20,
            beam: BeamSolveOptions::default(),
            phase: PhaseSolveOptions::default(),
            phase_mode: PhaseMode::MaxSlack,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RisStepRecord {
    pub accepted: bool,
    pub incumbent_margin: f64,
    pub candidate_margin: Option<f64>,
    pub diagnostics: Option<PhaseDiagnostics>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub power_w: f64,
    pub beam: Option<BeamDiagnostics>,
    pub ris: Option<RisStepRecord>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scheme: Scheme,
    /// Total power after each beamforming step.
    pub power_history: Vec<f64>,
    pub beamformers: BeamformerSet,
    pub phases: PhaseShifts,
    pub metrics: Metrics,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub log: Vec<IterationRecord>,
    pub seed: u64,
    pub config_digest: String,
    pub failure: Option<String>,
}

impl RunReport {
    pub fn final_power(&self) -> f64 {
        self.power_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn beam_diagnostics(&self) -> impl Iterator<Item = &BeamDiagnostics> {
        self.log.iter().filter_map(|r| r.beam.as_ref())
    }
}

fn infeasible_report(
    scheme: Scheme,
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    v: PhaseShifts,
    seed: u64,
    reason: String,
) -> RunReport {
    let w = BeamformerSet::zeros(channels.num_users(), channels.stacked_dim());
    let metrics = evaluate_metrics(&w, channels, &v, cfg);
    RunReport {
        scheme,
        power_history: Vec::new(),
        beamformers: w,
        phases: v,
        metrics,
        iterations: 0,
        stop_reason: StopReason::InfeasibleFirstStep,
        log: Vec::new(),
        seed,
        config_digest: cfg.digest(),
        failure: Some(format!(
            "{reason} (R_req = {} bps/Hz, γ_req = {} dB)",
            cfg.r_req_bps_hz, cfg.gamma_req_db
        )),
    }
}

/// Alternate beamforming and RIS steps from `initial` phases.
///
/// Each iteration solves the beamforming problem for the current phases,
/// records the power, stops if the fractional decrease is at most `ε`, and
/// otherwise runs the RIS step. A RIS result is accepted only if its
/// smallest margin under the current beamformers is no worse than the
/// incumbent phases' margin; otherwise the phases are kept and the loop
/// stops, since the next beamforming solve would repeat the last one.
pub fn alternating_optimize(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    initial: &PhaseShifts,
    opts: &AoOptions,
    seed: u64,
) -> Result<RunReport, DriverError> {
    channels.check_phases(initial)?;
    if opts.epsilon <= 0.0 || opts.max_iter == 0 {
        return Err(DriverError::Invalid(
            "ε must be positive and max_iter at least 1".into(),
        ));
    }
    let req = Requirements::from_config(cfg);
    let mut beam_rng = rng_for(seed, Stream::BeamRandomization);
    let mut phase_rng = rng_for(seed, Stream::PhaseRandomization);

    let mut v = initial.clone();
    let mut current: Option<BeamformerSet> = None;
    let mut history = Vec::new();
    let mut log: Vec<IterationRecord> = Vec::new();
    let mut stop = StopReason::MaxIterations;
    let mut failure = None;

    if channels.num_users() == 0 && channels.num_grid_points() == 0 {
        let w = BeamformerSet::zeros(0, channels.stacked_dim());
        let metrics = evaluate_metrics(&w, channels, &v, cfg);
        return Ok(RunReport {
            scheme: Scheme::Proposed,
            power_history: vec![0.0],
            beamformers: w,
            phases: v,
            metrics,
            iterations: 1,
            stop_reason: StopReason::Converged,
            log: vec![IterationRecord {
                iteration: 1,
                power_w: 0.0,
                beam: None,
                ris: None,
            }],
            seed,
            config_digest: cfg.digest(),
            failure: None,
        });
    }

    // Phases used for the most recent successful beamforming solve.
    let mut v_used = v.clone();
    for n in 1..=opts.max_iter {
        let problem = assemble_from_channels(channels, &v, &req)?;
        let solved = solve_beamformers_from(&problem, &opts.beam, current.as_ref(), &mut beam_rng);
        let (w, diag) = match solved {
            Ok(x) => x,
            Err(e) if n == 1 => {
                return match e {
                    BeamformError::Infeasible(_) | BeamformError::NoFeasibleCandidate(_) => Ok(
                        infeasible_report(Scheme::Proposed, cfg, channels, v, seed, e.to_string()),
                    ),
                    other => Err(other.into()),
                };
            }
            Err(e) => {
                stop = StopReason::SolverFailure;
                failure = Some(e.to_string());
                v = v_used.clone();
                break;
            }
        };
        let power = w.total_power();
        let prev = history.last().copied();
        history.push(power);
        log.push(IterationRecord {
            iteration: n,
            power_w: power,
            beam: Some(diag),
            ris: None,
        });
        current = Some(w);
        v_used = v.clone();

        if power == 0.0 {
            stop = StopReason::Converged;
            break;
        }
        if let Some(p) = prev {
            if (p - power) / p <= opts.epsilon {
                stop = StopReason::Converged;
                break;
            }
        }
        if n == opts.max_iter {
            stop = StopReason::MaxIterations;
            break;
        }

        let w = current.as_ref().unwrap();
        let data = phase_problem_data(channels, w, &req)
            .map_err(|e| DriverError::Invalid(e.to_string()))?;
        let incumbent_margin = data.min_margin(&v);
        let record = match assemble_p31(data.clone(), opts.phase_mode)
            .and_then(|p| solve_phases(&p, &opts.phase, &mut phase_rng))
        {
            Ok((candidate, d)) => {
                let margin = data.min_margin(&candidate);
                let accepted = margin >= incumbent_margin;
                if accepted {
                    v = candidate;
                }
                RisStepRecord {
                    accepted,
                    incumbent_margin,
                    candidate_margin: Some(margin),
                    diagnostics: Some(d),
                    failure: None,
                }
            }
            Err(e) => RisStepRecord {
                accepted: false,
                incumbent_margin,
                candidate_margin: None,
                diagnostics: None,
                failure: Some(e.to_string()),
            },
        };
        let accepted = record.accepted;
        log.last_mut().unwrap().ris = Some(record);
        if !accepted {
            stop = StopReason::Converged;
            break;
        }
    }

    let w = current.expect("first iteration either succeeds or returns");
    let metrics = evaluate_metrics(&w, channels, &v, cfg);
    Ok(RunReport {
        scheme: Scheme::Proposed,
        iterations: history.len(),
        power_history: history,
        beamformers: w,
        phases: v,
        metrics,
        stop_reason: stop,
        log,
        seed,
        config_digest: cfg.digest(),
        failure,
    })
}

/// Phases of the random-phase baseline; also the proposed scheme's default
/// starting point, so the proposed power never exceeds the baseline's.
pub fn baseline_phases(channels: &ChannelSet, seed: u64) -> PhaseShifts {
    PhaseShifts::random(
        channels.num_ris_elements(),
        &mut rng_for(seed, Stream::InitialPhases),
    )
}

/// An independent random draw for convergence studies.
pub fn alternative_phases(channels: &ChannelSet, seed: u64, index: u64) -> PhaseShifts {
    PhaseShifts::random(
        channels.num_ris_elements(),
        &mut rng_for(derive(seed, index), Stream::AltInitialPhases),
    )
}

/// One beamforming solve without RIS optimization.
pub fn run_baseline(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    kind: Scheme,
    opts: &AoOptions,
    seed: u64,
) -> Result<RunReport, DriverError> {
    let (set, v) = match kind {
        Scheme::NoRis => (
            channels.without_ris(),
            PhaseShifts::zero(channels.num_ris_elements()),
        ),
        Scheme::RandomPhase => (channels.clone(), baseline_phases(channels, seed)),
        Scheme::Proposed => {
            return Err(DriverError::Invalid(
                "the proposed scheme is not a baseline".into(),
            ));
        }
    };
    let req = Requirements::from_config(cfg);
    if set.num_users() == 0 && set.num_grid_points() == 0 {
        let w = BeamformerSet::zeros(0, set.stacked_dim());
        let metrics = evaluate_metrics(&w, &set, &v, cfg);
        return Ok(RunReport {
            scheme: kind,
            power_history: vec![0.0],
            beamformers: w,
            phases: v,
            metrics,
            iterations: 1,
            stop_reason: StopReason::SingleSolve,
            log: Vec::new(),
            seed,
            config_digest: cfg.digest(),
            failure: None,
        });
    }
    let problem = assemble_from_channels(&set, &v, &req)?;
    let mut rng = rng_for(seed, Stream::BeamRandomization);
    match solve_beamformers_from(&problem, &opts.beam, None, &mut rng) {
        Ok((w, diag)) => {
            let metrics = evaluate_metrics(&w, &set, &v, cfg);
            let power = w.total_power();
            Ok(RunReport {
                scheme: kind,
                power_history: vec![power],
                beamformers: w,
                phases: v,
                metrics,
                iterations: 1,
                stop_reason: StopReason::SingleSolve,
                log: vec![IterationRecord {
                    iteration: 1,
                    power_w: power,
                    beam: Some(diag),
                    ris: None,
                }],
                seed,
                config_digest: cfg.digest(),
                failure: None,
            })
        }
        Err(e @ (BeamformError::Infeasible(_) | BeamformError::NoFeasibleCandidate(_))) => {
            Ok(infeasible_report(kind, cfg, &set, v, seed, e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Run one scheme end to end on the given channels.
pub fn run_scheme(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    scheme: Scheme,
    opts: &AoOptions,
    seed: u64,
) -> Result<RunReport, DriverError> {
    match scheme {
        Scheme::Proposed => {
            alternating_optimize(cfg, channels, &baseline_phases(channels, seed), opts, seed)
        }
        other => run_baseline(cfg, channels, other, opts, seed),
    }
}

/// Channel realization for an experiment seed, independent of thresholds.
pub fn channels_for_seed(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet, DriverError> {
    Ok(realize_channels(
        cfg,
        &cfg.grid_points(),
        &mut rng_for(derive(cfg.rng_seed, seed), Stream::Channels),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    RReq,
    GammaReq,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s {
            "r_req" => Some(SweepAxis::RReq),
            "gamma_req" => Some(SweepAxis::GammaReq),
            _ => None,
        }
    }

    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut out = cfg.clone();
        match self {
            SweepAxis::RReq => out.r_req_bps_hz = value,
            SweepAxis::GammaReq => out.gamma_req_db = value,
        }
        out
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub axis_value: f64,
    pub seed: u64,
    pub power_w: f64,
    pub iterations: usize,
    pub status: String,
    pub min_se_margin: f64,
    pub min_snr_margin_db: f64,
}

impl SweepRow {
    fn from_report(r: &RunReport, axis_value: f64) -> Self {
        Self {
            scheme: r.scheme,
            axis_value,
            seed: r.seed,
            power_w: if r.stop_reason.is_feasible() {
                r.final_power()
            } else {
                f64::NAN
            },
            iterations: r.iterations,
            status: r.stop_reason.to_string(),
            min_se_margin: r.metrics.min_se_margin,
            min_snr_margin_db: r.metrics.min_snr_margin_db,
        }
    }

    fn failed(scheme: Scheme, axis_value: f64, seed: u64, err: &DriverError) -> Self {
        Self {
            scheme,
            axis_value,
            seed,
            power_w: f64::NAN,
            iterations: 0,
            status: if err.is_numerical() {
                "numerical-failure"
            } else {
                "error"
            }
            .into(),
            min_se_margin: f64::NAN,
            min_snr_margin_db: f64::NAN,
        }
    }
}

/// Every `value × seed × scheme` cell. Channels depend only on the seed, so
/// all values of the axis are compared on identical realizations. Cells run
/// in parallel; row order is deterministic (value, seed, scheme).
pub fn sweep(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
    schemes: &[Scheme],
    opts: &AoOptions,
) -> Result<Vec<SweepRow>, DriverError> {
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(DriverError::Invalid(
            "sweep values must be sorted ascending".into(),
        ));
    }
    let channels: Vec<ChannelSet> = seeds
        .iter()
        .map(|&s| channels_for_seed(cfg, s))
        .collect::<Result<_, _>>()?;
    let cells: Vec<(usize, usize, Scheme)> = (0..values.len())
        .flat_map(|vi| {
            (0..seeds.len()).flat_map(move |si| schemes.iter().map(move |&sc| (vi, si, sc)))
        })
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(vi, si, scheme)| {
            let c = axis.apply(cfg, values[vi]);
            match run_scheme(&c, &channels[si], scheme, opts, seeds[si]) {
                Ok(r) => SweepRow::from_report(&r, values[vi]),
                Err(e) => SweepRow::failed(scheme, values[vi], seeds[si], &e),
            }
        })
        .collect();
    Ok(rows)
}

/// Per-scheme, per-value mean power over feasible rows.
pub fn mean_power(rows: &[SweepRow], scheme: Scheme, value: f64) -> Option<f64> {
    let p: Vec<f64> = rows
        .iter()
        .filter(|r| r.scheme == scheme && r.axis_value == value && r.power_w.is_finite())
        .map(|r| r.power_w)
        .collect();
    (!p.is_empty()).then(|| p.iter().sum::<f64>() / p.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatmapPoint {
    pub x: f64,
    pub y: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Heatmap {
    pub altitude: f64,
    pub points: Vec<HeatmapPoint>,
    /// Values at the constraint grid points (realized channels).
    pub region_points: Vec<HeatmapPoint>,
}

/// Points on a `nx × ny` lattice covering `[x0, x1] × [y0, y1]`.
pub fn lattice(
    x_range: [f64; 2],
    y_range: [f64; 2],
    counts: [usize; 2],
    altitude: f64,
) -> Vec<Point3> {
    let axis = |r: [f64; 2], n: usize| -> Vec<f64> {
        if n <= 1 {
            vec![0.5 * (r[0] + r[1])]
        } else {
            (0..n)
                .map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64)
                .collect()
        }
    };
    let xs = axis(x_range, counts[0]);
    let ys = axis(y_range, counts[1]);
    ys.iter()
        .flat_map(|&y| xs.iter().map(move |&x| [x, y, altitude]))
        .collect()
}

/// Sensing SNR (linear) at arbitrary points. Points that coincide with a
/// constraint grid point reuse that point's realized channels; others get
/// fresh target channels drawn with `fading`.
pub fn snr_heatmap(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    w: &BeamformerSet,
    v: &PhaseShifts,
    eval: &[Point3],
    fading: FadingMode,
    seed: u64,
) -> Vec<f64> {
    let model = ChannelModel::new(cfg);
    let grid = cfg.grid_points();
    let sigma2 = Requirements::from_config(cfg).sigma2_sensing;
    let mut rng = rng_for(seed, Stream::HeatmapChannels);
    eval.iter()
        .map(|p| {
            let target = match grid
                .iter()
                .position(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-9))
            {
                Some(l) => channels.target(l),
                None => match model.target_channels(p, fading, &mut rng) {
                    Ok(t) => t,
                    Err(_) => return f64::NAN,
                },
            };
            let h = echo_matrix_for(channels, &target, v);
            sensing_snr(&h, w, sigma2, cfg.snr_form)
        })
        .collect()
}

/// Heatmap over a lattice plus the constraint grid points.
pub fn heatmap_for_report(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    report: &RunReport,
    x_range: [f64; 2],
    y_range: [f64; 2],
    counts: [usize; 2],
    altitude: f64,
    fading: FadingMode,
) -> Heatmap {
    let pts = lattice(x_range, y_range, counts, altitude);
    let field = snr_heatmap(
        cfg,
        channels,
        &report.beamformers,
        &report.phases,
        &pts,
        fading,
        report.seed,
    );
    let to_points = |pts: &[Point3], vals: &[f64]| -> Vec<HeatmapPoint> {
        pts.iter()
            .zip(vals)
            .map(|(p, &s)| HeatmapPoint {
                x: p[0],
                y: p[1],
                snr_db: linear_to_db(s),
            })
            .collect()
    };
    let grid = cfg.grid_points();
    let region_vals = snr_heatmap(
        cfg,
        channels,
        &report.beamformers,
        &report.phases,
        &grid,
        fading,
        report.seed,
    );
    Heatmap {
        altitude,
        points: to_points(&pts, &field),
        region_points: to_points(&grid, &region_vals),
    }
}

/// AO runs from several independent initial phase draws on one channel set.
pub fn convergence_study(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    draws: usize,
    opts: &AoOptions,
    seed: u64,
) -> Result<Vec<RunReport>, DriverError> {
    (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            alternating_optimize(
                cfg,
                channels,
                &alternative_phases(channels, seed, i),
                opts,
                seed,
            )
        })
        .collect()
}

/// Recompute the metrics of a report's solution from scratch.
pub fn reevaluate(cfg: &ScenarioConfig, channels: &ChannelSet, report: &RunReport) -> Metrics {
    let set = match report.scheme {
        Scheme::NoRis => channels.without_ris(),
        _ => channels.clone(),
    };
    let g: Vec<_> = (0..set.num_users())
        .map(|k| crate::channel::stacked_user_channel(&set, &report.phases, k))
        .collect();
    let echo: Vec<_> = (0..set.num_grid_points())
        .map(|l| crate::channel::echo_matrix(&set, &report.phases, l))
        .collect();
    metrics_from(
        &g,
        &echo,
        &report.beamformers,
        &Requirements::from_config(cfg),
        cfg.snr_form,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{preset, Preset};

    fn desk(seed: u64) -> (ScenarioConfig, ChannelSet) {
        let cfg = preset(Preset::Desk, 0);
        let ch = channels_for_seed(&cfg, seed).unwrap();
        (cfg, ch)
    }

    #[test]
    fn ao_run_is_monotone_and_feasible() {
        let (cfg, ch) = desk(1);
        let r = alternating_optimize(
            &cfg,
            &ch,
            &baseline_phases(&ch, 1),
            &AoOptions::default(),
            1,
        )
        .unwrap();
        assert!(r.stop_reason.is_feasible(), "{:?}", r.failure);
        for w in r.power_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-7), "{:?}", r.power_history);
        }
        let m = reevaluate(&cfg, &ch, &r);
        assert!(
            m.meets(&Requirements::from_config(&cfg), 1e-4, 1e-4),
            "{m:?}"
        );
        assert_eq!(r.iterations, r.power_history.len());
    }

    #[test]
    fn degenerate_network_converges_at_zero_power() {
        let mut cfg = preset(Preset::Desk, 0);
        cfg.user_positions.clear();
        let ch0 = channels_for_seed(&cfg, 0).unwrap();
        let mut ch = ch0.clone();
        ch.h_bs_target.iter_mut().for_each(|v| v.clear());
        ch.h_ris_target.clear();
        ch.h_target_rx.clear();
        let r = alternating_optimize(
            &cfg,
            &ch,
            &baseline_phases(&ch, 0),
            &AoOptions::default(),
            0,
        )
        .unwrap();
        assert_eq!(r.power_history, vec![0.0]);
        assert_eq!(r.stop_reason, StopReason::Converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn no_ris_baseline_matches_dead_ris_first_step() {
        let (cfg, ch) = desk(2);
        let dead = ch.without_ris();
        let opts = AoOptions {
            max_iter: 1,
            ..AoOptions::default()
        };
        let ao = alternating_optimize(&cfg, &dead, &baseline_phases(&dead, 2), &opts, 2).unwrap();
        let base = run_baseline(&cfg, &ch, Scheme::NoRis, &opts, 2).unwrap();
        let (a, b) = (ao.power_history[0], base.final_power());
        assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }

    #[test]
    fn random_phase_baseline_is_reproducible() {
        let (cfg, ch) = desk(3);
        let a = run_baseline(&cfg, &ch, Scheme::RandomPhase, &AoOptions::default(), 3).unwrap();
        let b = run_baseline(&cfg, &ch, Scheme::RandomPhase, &AoOptions::default(), 3).unwrap();
        assert_eq!(a.final_power().to_bits(), b.final_power().to_bits());
        assert_eq!(a.phases, b.phases);
    }

    #[test]
    fn single_cell_sweep_has_one_row_per_scheme() {
        let cfg = preset(Preset::Desk, 0);
        let rows = sweep(
            &cfg,
            SweepAxis::GammaReq,
            &[10.0],
            &[4],
            &Scheme::ALL,
            &AoOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        let schemes: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
        assert_eq!(schemes, Scheme::ALL.to_vec());
        assert!(sweep(
            &cfg,
            SweepAxis::GammaReq,
            &[10.0, 5.0],
            &[4],
            &Scheme::ALL,
            &AoOptions::default()
        )
        .is_err());
    }

    #[test]
    fn nested_feasible_sets_order_powers() {
        let (cfg, ch) = desk(5);
        let lo = run_baseline(
            &SweepAxis::GammaReq.apply(&cfg, 5.0),
            &ch,
            Scheme::NoRis,
            &AoOptions::default(),
            5,
        )
        .unwrap();
        let hi = run_baseline(
            &SweepAxis::GammaReq.apply(&cfg, 15.0),
            &ch,
            Scheme::NoRis,
            &AoOptions::default(),
            5,
        )
        .unwrap();
        assert!(lo.final_power() <= hi.final_power());
    }

    #[test]
    fn heatmap_grid_points_meet_threshold_and_zero_beams_give_zero() {
        let (cfg, ch) = desk(6);
        let r = run_scheme(&cfg, &ch, Scheme::Proposed, &AoOptions::default(), 6).unwrap();
        let grid = cfg.grid_points();
        let at_grid = snr_heatmap(
            &cfg,
            &ch,
            &r.beamformers,
            &r.phases,
            &grid,
            FadingMode::LosOnly,
            6,
        );
        let g = cfg.gamma_req_linear();
        assert!(
            at_grid.iter().all(|&s| s >= g * (1.0 - 1e-4)),
            "{at_grid:?}"
        );
        let zero = BeamformerSet::zeros(ch.num_users(), ch.stacked_dim());
        let pts = lattice([0.0, 100.0], [0.0, 100.0], [3, 3], 60.0);
        assert!(
            snr_heatmap(&cfg, &ch, &zero, &r.phases, &pts, FadingMode::LosOnly, 6)
                .iter()
                .all(|&s| s == 0.0)
        );
    }

    #[test]
    fn off_grid_value_matches_recomputation() {
        let (cfg, ch) = desk(7);
        let r = run_scheme(&cfg, &ch, Scheme::RandomPhase, &AoOptions::default(), 7).unwrap();
        let p = [41.3, 87.9, 60.0];
        let field = snr_heatmap(
            &cfg,
            &ch,
            &r.beamformers,
            &r.phases,
            &[p],
            FadingMode::LosOnly,
            7,
        );
        let t = ChannelModel::new(&cfg)
            .target_channels(
                &p,
                FadingMode::LosOnly,
                &mut rng_for(0, Stream::HeatmapChannels),
            )
            .unwrap();
        let h = echo_matrix_for(&ch, &t, &r.phases);
        let direct: f64 = r
            .beamformers
            .w
            .iter()
            .map(|x| (&h * x).norm_squared())
            .sum::<f64>()
            / Requirements::from_config(&cfg).sigma2_sensing;
        assert!((field[0] - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn lattice_layout() {
        let pts = lattice([0.0, 10.0], [0.0, 20.0], [3, 2], 5.0);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], [5.0, 0.0, 5.0]);
        assert_eq!(pts[3], [0.0, 20.0, 5.0]);
    }
}
