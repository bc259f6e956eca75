//! Joint transmit beamforming and RIS phase-shift design for RIS-assisted
//! coordinated multi-point ISAC networks.
//!
//! The crate minimizes total BS transmit power subject to per-user spectral
//! efficiency and per-grid-point sensing SNR requirements. The non-convex
//! problem is split into two semidefinite relaxations that are solved
//! alternately:
//!
//! * [`beamform`]: transmit beamformers for fixed RIS phases.
//! * [`ris`]: RIS reflection coefficients for fixed beamformers.
//!
//! Both lean on the solver-agnostic Hermitian SDP layer in [`sdp`], which
//! embeds complex problems into real symmetric ones, solves them with a
//! primal-dual interior-point method and certifies the result independently
//! of the backend.
//!
//! [`scenario`] and [`channel`] build the network geometry and random channel
//! realizations, [`driver`] runs the alternating loop, baselines, sweeps and
//! SNR heatmaps, and [`cli`] wraps everything in a command-line front end.

pub mod beamform;
pub mod channel;
pub mod cli;
pub mod driver;
pub mod linalg;
pub mod output;
pub mod ris;
pub mod scenario;
pub mod sdp;
pub mod seeds;
pub mod validation;

pub use beamform::{BeamformerSet, Metrics};
pub use channel::{ChannelSet, PhaseShifts};
pub use driver::{RunReport, StopReason};
pub use scenario::{RegionSpec, ScenarioConfig};
pub use sdp::{HermitianSdp, SdpSolution, SolveStatus};
