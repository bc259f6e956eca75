//! Channel synthesis for one network realization.
//!
//! Every link is built from a distance-based path gain, a UPA steering vector
//! and a Rician mix of a deterministic LOS component (carrying the
//! propagation-delay phase) with i.i.d. `CN(0, 1)` scattering.
//!
//! # Phase-shift convention
//!
//! [`PhaseShifts`] stores the reflection vector `v`. The RIS reflection matrix
//! is `Φ = diag(v)ᴴ`, i.e. `v_m = e^{-jφ_m}`. With this choice both cascaded
//! links are linear in `vᴴ`:
//!
//! * user link: `g_{j,k} = h_{j,k} + G_jᴴ Φᴴ h_{R,k} = h_{j,k} + G_jᴴ diag(v) h_{R,k}`
//! * echo link: `h_{j,o}ᴴ + h_{R,o}ᴴ Φ G_j = (h_{j,o} + G_jᴴ diag(v) h_{R,o})ᴴ`
//!
//! which is exactly the `vᴴ Ψ` form the RIS subproblem lifts.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cis, complex_gaussian, complex_gaussian_vec, kron, outer, stack, CMat, CVec};
use crate::scenario::{LinkClass, Point3, ScenarioConfig, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("degenerate geometry: {0} are coincident")]
    DegenerateGeometry(String),
    #[error("invalid distance {0} m (must be > 0)")]
    InvalidDistance(f64),
    #[error("phase shifts must be unit-modulus (entry {index} has |v| = {modulus})")]
    NotUnitModulus { index: usize, modulus: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("channel dump: {0}")]
    Dump(String),
}

/// Uniform planar array in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub counts: [usize; 2],
    pub spacing: [f64; 2],
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// UPA response `α_x ⊗ α_y` for azimuth `θ` and elevation (polar) angle `φ`.
pub fn steering_vector(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> CVec {
    let k = 2.0 * std::f64::consts::PI / geom.wavelength;
    let dx = k * geom.spacing[0] * azimuth.cos() * elevation.sin();
    let dy = k * geom.spacing[1] * azimuth.sin() * elevation.sin();
    let ax = CVec::from_fn(geom.counts[0], |n, _| cis(-dx * n as f64));
    let ay = CVec::from_fn(geom.counts[1], |n, _| cis(-dy * n as f64));
    kron(&ax, &ay)
}

/// Azimuth, polar elevation and distance of `to` as seen from `from`.
pub fn link_angles(from: &Point3, to: &Point3) -> (f64, f64, f64) {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let azimuth = d[1].atan2(d[0]);
    let elevation = if dist > 0.0 {
        (d[2] / dist).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    (azimuth, elevation, dist)
}

/// Large-scale power gain `ref_gain / d^α` (linear). The amplitude factor is
/// its square root.
pub fn path_gain(distance: f64, exponent: f64, ref_gain: f64) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::InvalidDistance(distance));
    }
    Ok(ref_gain / distance.powf(exponent))
}

/// `amplitude · (√(1/(β+1)) h_nlos + √(β/(β+1)) los · delay_phase)`.
///
/// `beta` is linear; `+∞` returns the LOS term alone without consuming
/// randomness.
pub fn draw_rician<R: Rng + ?Sized>(
    los: &CVec,
    beta: f64,
    amplitude: f64,
    delay_phase: Complex64,
    rng: &mut R,
) -> CVec {
    if beta.is_infinite() {
        return los * (delay_phase * amplitude);
    }
    let nlos = complex_gaussian_vec(los.len(), rng);
    let w_nlos = (1.0 / (beta + 1.0)).sqrt();
    let w_los = (beta / (beta + 1.0)).sqrt();
    (nlos * Complex64::new(w_nlos, 0.0) + los * (delay_phase * w_los))
        * Complex64::new(amplitude, 0.0)
}

/// RIS reflection vector `v` (unit-modulus entries).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifts {
    v: CVec,
}

impl PhaseShifts {
    pub fn new(v: CVec) -> Result<Self, ChannelError> {
        for (index, x) in v.iter().enumerate() {
            let modulus = x.norm();
            if (modulus - 1.0).abs() > 1e-9 {
                return Err(ChannelError::NotUnitModulus { index, modulus });
            }
        }
        Ok(Self { v })
    }

    /// From element phase shifts `φ_m`: `v_m = e^{-jφ_m}`.
    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            v: CVec::from_iterator(phases.len(), phases.iter().map(|&p| cis(-p))),
        }
    }

    /// All elements at zero phase.
    pub fn zero(m: usize) -> Self {
        Self::from_phases(&vec![0.0; m])
    }

    /// `φ_m ~ U[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..m)
            .map(|_| rng.random_range(0.0..2.0 * std::f64::consts::PI))
            .collect();
        Self::from_phases(&phases)
    }

    pub fn vector(&self) -> &CVec {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Element phases `φ_m ∈ [0, 2π)`.
    pub fn phases(&self) -> Vec<f64> {
        self.v
            .iter()
            .map(|x| (-x.arg()).rem_euclid(2.0 * std::f64::consts::PI))
            .collect()
    }

    /// `Φ = diag(v)ᴴ`.
    pub fn reflection_matrix(&self) -> CMat {
        CMat::from_diagonal(&self.v.map(|x| x.conj()))
    }
}

/// One realization of every channel in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `h_{j,k}`, indexed `[j][k]`, each `C^N`.
    pub h_bs_user: Vec<Vec<CVec>>,
    /// `G_{R,j}`, each `C^{M×N}`.
    pub g_bs_ris: Vec<CMat>,
    /// `h_{R,k}`, each `C^M`.
    pub h_ris_user: Vec<CVec>,
    /// `h_{j,o_l}` including `√σ_rcs`, indexed `[j][l]`.
    pub h_bs_target: Vec<Vec<CVec>>,
    /// `h_{R,o_l}` including `√σ_rcs`.
    pub h_ris_target: Vec<CVec>,
    /// `h_{0,o_l}`, target to RX BS.
    pub h_target_rx: Vec<CVec>,
}

/// Target-side channels for one location.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetChannels {
    pub h_bs_target: Vec<CVec>,
    pub h_ris_target: CVec,
    pub h_target_rx: CVec,
}

impl ChannelSet {
    pub fn num_tx(&self) -> usize {
        self.g_bs_ris.len()
    }

    pub fn num_bs_antennas(&self) -> usize {
        self.g_bs_ris.first().map_or(0, |g| g.ncols())
    }

    pub fn num_ris_elements(&self) -> usize {
        self.g_bs_ris.first().map_or(0, |g| g.nrows())
    }

    pub fn num_users(&self) -> usize {
        self.h_ris_user.len()
    }

    pub fn num_grid_points(&self) -> usize {
        self.h_target_rx.len()
    }

    /// Stacked dimension `N·J`.
    pub fn stacked_dim(&self) -> usize {
        self.num_tx() * self.num_bs_antennas()
    }

    /// Same realization with the BS-RIS links removed, so every cascaded
    /// term vanishes.
    pub fn without_ris(&self) -> ChannelSet {
        let mut out = self.clone();
        for g in &mut out.g_bs_ris {
            g.fill(Complex64::new(0.0, 0.0));
        }
        out
    }

    pub fn target(&self, l: usize) -> TargetChannels {
        TargetChannels {
            h_bs_target: self
                .h_bs_target
                .iter()
                .map(|per_j| per_j[l].clone())
                .collect(),
            h_ris_target: self.h_ris_target[l].clone(),
            h_target_rx: self.h_target_rx[l].clone(),
        }
    }

    pub fn check_phases(&self, v: &PhaseShifts) -> Result<(), ChannelError> {
        if v.len() != self.num_ris_elements() {
            return Err(ChannelError::Dimension(format!(
                "{} phase shifts for a {}-element RIS",
                v.len(),
                self.num_ris_elements()
            )));
        }
        Ok(())
    }

    pub fn check_dimensions(&self) -> Result<(), ChannelError> {
        let (j, n, m, k, l) = (
            self.num_tx(),
            self.num_bs_antennas(),
            self.num_ris_elements(),
            self.num_users(),
            self.num_grid_points(),
        );
        let bad = |what: &str| Err(ChannelError::Dimension(what.to_string()));
        if self.h_bs_user.len() != j || self.h_bs_target.len() != j {
            return bad("per-BS tables must have J rows");
        }
        if self
            .g_bs_ris
            .iter()
            .any(|g| g.nrows() != m || g.ncols() != n)
        {
            return bad("every G_{R,j} must be M×N");
        }
        if self
            .h_bs_user
            .iter()
            .any(|r| r.len() != k || r.iter().any(|h| h.len() != n))
        {
            return bad("h_{j,k} must be J×K vectors of length N");
        }
        if self.h_ris_user.iter().any(|h| h.len() != m) {
            return bad("h_{R,k} must have length M");
        }
        if self
            .h_bs_target
            .iter()
            .any(|r| r.len() != l || r.iter().any(|h| h.len() != n))
        {
            return bad("h_{j,o} must be J×L vectors of length N");
        }
        if self.h_ris_target.len() != l || self.h_ris_target.iter().any(|h| h.len() != m) {
            return bad("h_{R,o} must be L vectors of length M");
        }
        if self.h_target_rx.iter().any(|h| h.len() != n) {
            return bad("h_{0,o} must have length N");
        }
        Ok(())
    }
}

/// `h_direct + Gᴴ diag(v) h_ris` for one BS.
fn cascade(direct: &CVec, g: &CMat, v: &CVec, h_ris: &CVec) -> CVec {
    let reflected = v.component_mul(h_ris);
    direct + g.adjoint() * reflected
}

/// Effective channel `g_{j,k}` from BS `j` to user `k`.
pub fn effective_user_channel(set: &ChannelSet, v: &PhaseShifts, j: usize, k: usize) -> CVec {
    cascade(
        &set.h_bs_user[j][k],
        &set.g_bs_ris[j],
        v.vector(),
        &set.h_ris_user[k],
    )
}

/// `g_k ∈ C^{NJ}`, stacked in BS order.
pub fn stacked_user_channel(set: &ChannelSet, v: &PhaseShifts, k: usize) -> CVec {
    let parts: Vec<CVec> = (0..set.num_tx())
        .map(|j| effective_user_channel(set, v, j, k))
        .collect();
    stack(&parts)
}

/// Stacked transmit-side echo signature `c` of a target, with
/// `H₀ = h_{0,o} cᴴ`.
pub fn stacked_target_channel(set: &ChannelSet, target: &TargetChannels, v: &PhaseShifts) -> CVec {
    let parts: Vec<CVec> = (0..set.num_tx())
        .map(|j| {
            cascade(
                &target.h_bs_target[j],
                &set.g_bs_ris[j],
                v.vector(),
                &target.h_ris_target,
            )
        })
        .collect();
    stack(&parts)
}

/// `H₀(o) = [H_{0,1}, …, H_{0,J}] ∈ C^{N×NJ}` for arbitrary target channels.
pub fn echo_matrix_for(set: &ChannelSet, target: &TargetChannels, v: &PhaseShifts) -> CMat {
    outer(&target.h_target_rx, &stacked_target_channel(set, target, v))
}

/// `H₀(o_l)` for grid point `l`.
pub fn echo_matrix(set: &ChannelSet, v: &PhaseShifts, l: usize) -> CMat {
    echo_matrix_for(set, &set.target(l), v)
}

/// How target channels at evaluation points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// Per-link Rician factors from the scenario.
    #[default]
    Rician,
    /// LOS component only (deterministic).
    LosOnly,
}

/// Channel synthesizer bound to one scenario.
pub struct ChannelModel<'a> {
    cfg: &'a ScenarioConfig,
    bs: ArrayGeometry,
    ris: ArrayGeometry,
}

impl<'a> ChannelModel<'a> {
    pub fn new(cfg: &'a ScenarioConfig) -> Self {
        let wavelength = cfg.wavelength_m();
        let spacing = [cfg.element_spacing_m; 2];
        Self {
            cfg,
            bs: ArrayGeometry {
                counts: cfg.array_shape_bs,
                spacing,
                wavelength,
            },
            ris: ArrayGeometry {
                counts: cfg.array_shape_ris,
                spacing,
                wavelength,
            },
        }
    }

    fn ref_gain(&self, class: LinkClass) -> f64 {
        let db = match class {
            LinkClass::BsRis | LinkClass::RisTarget => self.cfg.ris_ref_gain_db,
            _ => self.cfg.ref_path_gain_db,
        };
        crate::linalg::db_to_linear(db)
    }

    fn delay_phase(&self, distance: f64) -> Complex64 {
        let tau = distance / SPEED_OF_LIGHT;
        cis(-2.0 * std::f64::consts::PI * self.cfg.carrier_frequency_hz * tau)
    }

    fn amplitude(&self, class: LinkClass, dist: f64, what: &str) -> Result<f64, ChannelError> {
        if !(dist > 0.0) {
            return Err(ChannelError::DegenerateGeometry(what.to_string()));
        }
        let gain = path_gain(
            dist,
            self.cfg.pathloss_exponents.get(class),
            self.ref_gain(class),
        )?;
        Ok(gain.sqrt())
    }

    fn beta(&self, class: LinkClass, fading: FadingMode) -> f64 {
        match fading {
            FadingMode::LosOnly => f64::INFINITY,
            FadingMode::Rician => self.cfg.rician_factors_db.get(class).linear(),
        }
    }

    /// Vector channel seen by an array at `array_pos` toward `other`.
    #[allow(clippy::too_many_arguments)]
    fn vector_link<R: Rng + ?Sized>(
        &self,
        geom: &ArrayGeometry,
        array_pos: &Point3,
        other: &Point3,
        class: LinkClass,
        extra_gain: f64,
        fading: FadingMode,
        what: &str,
        rng: &mut R,
    ) -> Result<CVec, ChannelError> {
        let (az, el, dist) = link_angles(array_pos, other);
        let amp = self.amplitude(class, dist, what)? * extra_gain.sqrt();
        let los = steering_vector(geom, az, el);
        Ok(draw_rician(
            &los,
            self.beta(class, fading),
            amp,
            self.delay_phase(dist),
            rng,
        ))
    }

    fn bs_ris_link<R: Rng + ?Sized>(&self, bs: &Point3, rng: &mut R) -> Result<CMat, ChannelError> {
        let ris = &self.cfg.ris_position;
        let (az_r, el_r, dist) = link_angles(ris, bs);
        let (az_b, el_b, _) = link_angles(bs, ris);
        let amp = self.amplitude(LinkClass::BsRis, dist, "TX BS and RIS")?;
        let los = outer(
            &steering_vector(&self.ris, az_r, el_r),
            &steering_vector(&self.bs, az_b, el_b),
        ) * self.delay_phase(dist);
        let beta = self.cfg.rician_factors_db.bs_ris.linear();
        if beta.is_infinite() {
            return Ok(los * Complex64::new(amp, 0.0));
        }
        let nlos = CMat::from_fn(los.nrows(), los.ncols(), |_, _| complex_gaussian(rng));
        let mix = nlos * Complex64::new((1.0 / (beta + 1.0)).sqrt(), 0.0)
            + los * Complex64::new((beta / (beta + 1.0)).sqrt(), 0.0);
        Ok(mix * Complex64::new(amp, 0.0))
    }

    /// Target-side channels for a target at `point`. `√σ_rcs` rides on the
    /// two arrival channels so every echo path carries it exactly once.
    pub fn target_channels<R: Rng + ?Sized>(
        &self,
        point: &Point3,
        fading: FadingMode,
        rng: &mut R,
    ) -> Result<TargetChannels, ChannelError> {
        let rcs = self.cfg.rcs_m2;
        let mut h_bs_target = Vec::with_capacity(self.cfg.num_tx());
        for q in &self.cfg.tx_bs_positions {
            h_bs_target.push(self.vector_link(
                &self.bs,
                q,
                point,
                LinkClass::BsTarget,
                rcs,
                fading,
                "TX BS and target",
                rng,
            )?);
        }
        let h_ris_target = self.vector_link(
            &self.ris,
            &self.cfg.ris_position,
            point,
            LinkClass::RisTarget,
            rcs,
            fading,
            "RIS and target",
            rng,
        )?;
        let h_target_rx = self.vector_link(
            &self.bs,
            &self.cfg.rx_bs_position,
            point,
            LinkClass::TargetRx,
            1.0,
            fading,
            "RX BS and target",
            rng,
        )?;
        Ok(TargetChannels {
            h_bs_target,
            h_ris_target,
            h_target_rx,
        })
    }

    /// Draw every channel of the network for the given grid points.
    pub fn realize<R: Rng + ?Sized>(
        &self,
        grid: &[Point3],
        rng: &mut R,
    ) -> Result<ChannelSet, ChannelError> {
        let cfg = self.cfg;
        let mut h_bs_user = Vec::with_capacity(cfg.num_tx());
        for q in &cfg.tx_bs_positions {
            let mut row = Vec::with_capacity(cfg.num_users());
            for u in &cfg.user_positions {
                row.push(self.vector_link(
                    &self.bs,
                    q,
                    u,
                    LinkClass::BsUser,
                    1.0,
                    FadingMode::Rician,
                    "TX BS and user",
                    rng,
                )?);
            }
            h_bs_user.push(row);
        }
        let mut g_bs_ris = Vec::with_capacity(cfg.num_tx());
        for q in &cfg.tx_bs_positions {
            g_bs_ris.push(self.bs_ris_link(q, rng)?);
        }
        let mut h_ris_user = Vec::with_capacity(cfg.num_users());
        for u in &cfg.user_positions {
            h_ris_user.push(self.vector_link(
                &self.ris,
                &cfg.ris_position,
                u,
                LinkClass::RisUser,
                1.0,
                FadingMode::Rician,
                "RIS and user",
                rng,
            )?);
        }
        let mut h_bs_target = vec![Vec::with_capacity(grid.len()); cfg.num_tx()];
        let mut h_ris_target = Vec::with_capacity(grid.len());
        let mut h_target_rx = Vec::with_capacity(grid.len());
        for p in grid {
            let t = self.target_channels(p, FadingMode::Rician, rng)?;
            for (j, h) in t.h_bs_target.into_iter().enumerate() {
                h_bs_target[j].push(h);
            }
            h_ris_target.push(t.h_ris_target);
            h_target_rx.push(t.h_target_rx);
        }
        Ok(ChannelSet {
            h_bs_user,
            g_bs_ris,
            h_ris_user,
            h_bs_target,
            h_ris_target,
            h_target_rx,
        })
    }
}

/// Draw one realization of all channels for `cfg` at the given grid points.
pub fn realize_channels<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    grid: &[Point3],
    rng: &mut R,
) -> Result<ChannelSet, ChannelError> {
    ChannelModel::new(cfg).realize(grid, rng)
}

// ── channel dump ────────────────────────────────────────────────────────────

type Pair = [f64; 2];

#[derive(Serialize, Deserialize)]
struct DumpVec(Vec<Pair>);

#[derive(Serialize, Deserialize)]
struct DumpMat {
    rows: usize,
    cols: usize,
    /// Column-major entries.
    data: Vec<Pair>,
}

#[derive(Serialize, Deserialize)]
struct Dump {
    format: String,
    h_bs_user: Vec<Vec<DumpVec>>,
    g_bs_ris: Vec<DumpMat>,
    h_ris_user: Vec<DumpVec>,
    h_bs_target: Vec<Vec<DumpVec>>,
    h_ris_target: Vec<DumpVec>,
    h_target_rx: Vec<DumpVec>,
}

const DUMP_FORMAT: &str = "ris-isac-channels/1";

fn dv(v: &CVec) -> DumpVec {
    DumpVec(v.iter().map(|x| [x.re, x.im]).collect())
}

fn vd(d: &DumpVec) -> CVec {
    CVec::from_iterator(d.0.len(), d.0.iter().map(|p| Complex64::new(p[0], p[1])))
}

fn dm(m: &CMat) -> DumpMat {
    DumpMat {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.iter().map(|x| [x.re, x.im]).collect(),
    }
}

fn md(d: &DumpMat) -> Result<CMat, ChannelError> {
    if d.data.len() != d.rows * d.cols {
        return Err(ChannelError::Dump(format!(
            "matrix declares {}×{} but holds {} entries",
            d.rows,
            d.cols,
            d.data.len()
        )));
    }
    Ok(CMat::from_iterator(
        d.rows,
        d.cols,
        d.data.iter().map(|p| Complex64::new(p[0], p[1])),
    ))
}

impl ChannelSet {
    /// JSON dump with complex entries as `[re, im]` pairs. Round-trips bitwise.
    pub fn to_dump_json(&self) -> String {
        let dump = Dump {
            format: DUMP_FORMAT.to_string(),
            h_bs_user: self
                .h_bs_user
                .iter()
                .map(|r| r.iter().map(dv).collect())
                .collect(),
            g_bs_ris: self.g_bs_ris.iter().map(dm).collect(),
            h_ris_user: self.h_ris_user.iter().map(dv).collect(),
            h_bs_target: self
                .h_bs_target
                .iter()
                .map(|r| r.iter().map(dv).collect())
                .collect(),
            h_ris_target: self.h_ris_target.iter().map(dv).collect(),
            h_target_rx: self.h_target_rx.iter().map(dv).collect(),
        };
        serde_json::to_string(&dump).expect("dump serializes")
    }

    pub fn from_dump_json(text: &str) -> Result<ChannelSet, ChannelError> {
        let d: Dump = serde_json::from_str(text).map_err(|e| ChannelError::Dump(e.to_string()))?;
        if d.format != DUMP_FORMAT {
            return Err(ChannelError::Dump(format!(
                "unsupported format tag {}",
                d.format
            )));
        }
        let set = ChannelSet {
            h_bs_user: d
                .h_bs_user
                .iter()
                .map(|r| r.iter().map(vd).collect())
                .collect(),
            g_bs_ris: d.g_bs_ris.iter().map(md).collect::<Result<_, _>>()?,
            h_ris_user: d.h_ris_user.iter().map(vd).collect(),
            h_bs_target: d
                .h_bs_target
                .iter()
                .map(|r| r.iter().map(vd).collect())
                .collect(),
            h_ris_target: d.h_ris_target.iter().map(vd).collect(),
            h_target_rx: d.h_target_rx.iter().map(vd).collect(),
        };
        set.check_dimensions()?;
        Ok(set)
    }

    pub fn write_dump(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_dump_json())
    }
}
