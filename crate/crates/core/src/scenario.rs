//! Network scenario: node placement, array shapes, RF parameters, thresholds
//! and the sensing region.
//!
//! Scenarios are loaded from a JSON document. A document may name a `preset`
//! (`"table1"` or `"desk"`) that supplies every value, and then override any
//! subset of keys. Without a preset the geometry keys (`tx_bs_positions`,
//! `rx_bs_position`, `ris_position` and one of `user_positions` /
//! `num_users`) are required and everything else falls back to the Table-1
//! RF defaults. Powers stay in dB/dBm in the document and in
//! [`ScenarioConfig`]; conversions to linear units happen on use.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::db_to_linear;
use crate::seeds::{rng_for, Stream};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point3 = [f64; 3];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("type mismatch for `{field}`: {detail}")]
    TypeMismatch { field: String, detail: String },
    #[error("invalid `{field}`: {reason}")]
    Invariant { field: String, reason: String },
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invariant(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invariant {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Rician K-factor in dB; `+∞` denotes a pure line-of-sight link and is
/// written as the string `"inf"` in documents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFactor(pub f64);

impl RicianFactor {
    pub const LOS: RicianFactor = RicianFactor(f64::INFINITY);

    pub fn db(self) -> f64 {
        self.0
    }

    /// Linear power ratio `β`; `+∞` for pure LOS.
    pub fn linear(self) -> f64 {
        if self.0.is_infinite() && self.0 > 0.0 {
            f64::INFINITY
        } else {
            db_to_linear(self.0)
        }
    }
}

impl Serialize for RicianFactor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for RicianFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(RicianFactor(x)),
            Repr::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(RicianFactor::LOS),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number in dB or \"inf\", got \"{other}\""
                ))),
            },
        }
    }
}

/// Per-link-class parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams<T> {
    pub bs_user: T,
    pub bs_ris: T,
    pub ris_user: T,
    pub bs_target: T,
    pub ris_target: T,
    pub target_rx: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    BsUser,
    BsRis,
    RisUser,
    BsTarget,
    RisTarget,
    TargetRx,
}

impl<T: Copy> LinkParams<T> {
    pub fn get(&self, class: LinkClass) -> T {
        match class {
            LinkClass::BsUser => self.bs_user,
            LinkClass::BsRis => self.bs_ris,
            LinkClass::RisUser => self.ris_user,
            LinkClass::BsTarget => self.bs_target,
            LinkClass::RisTarget => self.ris_target,
            LinkClass::TargetRx => self.target_rx,
        }
    }

    fn values(&self) -> [(&'static str, T); 6] {
        [
            ("bs_user", self.bs_user),
            ("bs_ris", self.bs_ris),
            ("ris_user", self.ris_user),
            ("bs_target", self.bs_target),
            ("ris_target", self.ris_target),
            ("target_rx", self.target_rx),
        ]
    }
}

/// Rectangular sensing region at a fixed altitude, sampled on an
/// `L_x × L_y` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub center_xy: [f64; 2],
    pub width_x: f64,
    pub width_y: f64,
    pub altitude: f64,
    pub grid: [usize; 2],
}

impl RegionSpec {
    pub fn num_points(&self) -> usize {
        self.grid[0] * self.grid[1]
    }

    /// Closed rectangle `[x0, x1] × [y0, y1]`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let [cx, cy] = self.center_xy;
        (
            [cx - self.width_x / 2.0, cx + self.width_x / 2.0],
            [cy - self.width_y / 2.0, cy + self.width_y / 2.0],
        )
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.grid[0] == 0 || self.grid[1] == 0 {
            return Err(invariant("region.grid", "both lattice counts must be >= 1"));
        }
        if !(self.width_x > 0.0 && self.width_y > 0.0) {
            return Err(invariant("region.width_x/width_y", "widths must be > 0"));
        }
        if !(self.altitude > 0.0) {
            return Err(invariant("region.altitude", "altitude must be > 0"));
        }
        if !self.center_xy.iter().all(|c| c.is_finite()) {
            return Err(invariant("region.center_xy", "must be finite"));
        }
        Ok(())
    }
}

/// Sample positions along one lattice axis, endpoints included.
fn axis_samples(center: f64, width: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![center];
    }
    let start = center - width / 2.0;
    let step = width / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                center + width / 2.0
            } else {
                start + step * i as f64
            }
        })
        .collect()
}

/// Uniform lattice over the region at its altitude, row-major with `y` as the
/// row index and `x` varying fastest.
pub fn discretize_region(region: &RegionSpec) -> Vec<Point3> {
    let xs = axis_samples(region.center_xy[0], region.width_x, region.grid[0]);
    let ys = axis_samples(region.center_xy[1], region.width_y, region.grid[1]);
    let mut pts = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            pts.push([x, y, region.altitude]);
        }
    }
    pts
}

/// Horizontal area in which users are dropped when not listed explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceArea {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Users keep at least this horizontal distance from every TX BS.
    pub exclusion_radius_m: f64,
}

/// How the sensing SNR combines the `K+1` streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnrForm {
    /// `Σ_k ‖H₀ w_k‖² / σ²`, the form the relaxed constraints use.
    #[default]
    Trace,
    /// `‖H₀ Σ_k w_k‖² / σ²`, kept for comparison only.
    Coherent,
}

/// Fully validated scenario. Immutable after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub tx_bs_positions: Vec<Point3>,
    pub rx_bs_position: Point3,
    pub ris_position: Point3,
    pub user_positions: Vec<Point3>,
    pub array_shape_bs: [usize; 2],
    pub array_shape_ris: [usize; 2],
    pub element_spacing_m: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_per_hz: f64,
    /// `ζ`, channel power gain at 1 m.
    pub ref_path_gain_db: f64,
    /// `κ`, reference gain of RIS-side links.
    pub ris_ref_gain_db: f64,
    pub pathloss_exponents: LinkParams<f64>,
    pub rician_factors_db: LinkParams<RicianFactor>,
    pub rcs_m2: f64,
    pub region: RegionSpec,
    pub service_area: ServiceArea,
    pub r_req_bps_hz: f64,
    pub gamma_req_db: f64,
    pub rng_seed: u64,
    /// Re-include the dedicated sensing beam as user interference.
    pub sensing_interference_in_sinr: bool,
    pub snr_form: SnrForm,
}

/// Noise powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePower {
    pub sensing_w: f64,
    pub user_w: Vec<f64>,
}

impl ScenarioConfig {
    pub fn num_tx(&self) -> usize {
        self.tx_bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn num_bs_antennas(&self) -> usize {
        self.array_shape_bs[0] * self.array_shape_bs[1]
    }

    pub fn num_ris_elements(&self) -> usize {
        self.array_shape_ris[0] * self.array_shape_ris[1]
    }

    pub fn num_grid_points(&self) -> usize {
        self.region.num_points()
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// `S = 2^{R_req} − 1`.
    pub fn se_threshold(&self) -> f64 {
        2f64.powf(self.r_req_bps_hz) - 1.0
    }

    pub fn gamma_req_linear(&self) -> f64 {
        db_to_linear(self.gamma_req_db)
    }

    pub fn grid_points(&self) -> Vec<Point3> {
        discretize_region(&self.region)
    }

    /// Hex SHA-256 of the canonical JSON form, truncated to 16 characters.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&json);
        hex::encode(&hash[..8])
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite3 = |p: &Point3| p.iter().all(|c| c.is_finite());
        if self.tx_bs_positions.is_empty() {
            return Err(invariant(
                "tx_bs_positions",
                "at least one TX BS is required",
            ));
        }
        for (j, p) in self.tx_bs_positions.iter().enumerate() {
            if !finite3(p) || !(p[2] > 0.0) {
                return Err(invariant(
                    "tx_bs_positions",
                    format!("TX BS {j} must have finite coordinates and height > 0"),
                ));
            }
        }
        if !finite3(&self.rx_bs_position) || !(self.rx_bs_position[2] > 0.0) {
            return Err(invariant("rx_bs_position", "height must be > 0"));
        }
        if !finite3(&self.ris_position) || !(self.ris_position[2] > 0.0) {
            return Err(invariant("ris_position", "height must be > 0"));
        }
        for (k, u) in self.user_positions.iter().enumerate() {
            if !finite3(u) || u[2] != 0.0 {
                return Err(invariant(
                    "user_positions",
                    format!("user {k} must be finite with z exactly 0"),
                ));
            }
        }
        if self.array_shape_bs.contains(&0) {
            return Err(invariant("array_shape_bs", "N_x and N_y must be >= 1"));
        }
        if self.array_shape_ris.contains(&0) {
            return Err(invariant("array_shape_ris", "M_x and M_y must be >= 1"));
        }
        for (field, v) in [
            ("element_spacing_m", self.element_spacing_m),
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("rcs_m2", self.rcs_m2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invariant(field, "must be finite and > 0"));
            }
        }
        for (field, v) in [
            ("noise_density_dbm_per_hz", self.noise_density_dbm_per_hz),
            ("ref_path_gain_db", self.ref_path_gain_db),
            ("ris_ref_gain_db", self.ris_ref_gain_db),
            ("gamma_req_db", self.gamma_req_db),
        ] {
            if !v.is_finite() {
                return Err(invariant(field, "must be finite"));
            }
        }
        if !(self.r_req_bps_hz >= 0.0 && self.r_req_bps_hz.is_finite()) {
            return Err(invariant("r_req_bps_hz", "must be finite and >= 0"));
        }
        for (name, a) in self.pathloss_exponents.values() {
            if !(a > 0.0 && a.is_finite()) {
                return Err(invariant(
                    &format!("pathloss_exponents.{name}"),
                    "must be finite and > 0",
                ));
            }
        }
        for (name, b) in self.rician_factors_db.values() {
            if b.0.is_nan() || b.0 == f64::NEG_INFINITY {
                return Err(invariant(
                    &format!("rician_factors_db.{name}"),
                    "must be a finite dB value or \"inf\"",
                ));
            }
        }
        self.region.validate()?;
        let sa = &self.service_area;
        if !(sa.x_range[0] < sa.x_range[1] && sa.y_range[0] < sa.y_range[1]) {
            return Err(invariant("service_area", "ranges must be increasing"));
        }
        if !(sa.exclusion_radius_m >= 0.0) {
            return Err(invariant("service_area.exclusion_radius_m", "must be >= 0"));
        }
        if self.user_positions.is_empty() && self.region.num_points() == 0 {
            return Err(invariant(
                "user_positions",
                "need at least one user or grid point",
            ));
        }
        Ok(())
    }
}

/// `σ² = σ_k² = N₀·B` in watts.
pub fn noise_power_watts(cfg: &ScenarioConfig) -> NoisePower {
    let dbm = cfg.noise_density_dbm_per_hz + 10.0 * cfg.bandwidth_hz.log10();
    let watts = db_to_linear(dbm - 30.0);
    NoisePower {
        sensing_w: watts,
        user_w: vec![watts; cfg.num_users()],
    }
}

/// Shipped parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Full-scale network: J=3, K=10, N=32, M=64, L=16.
    Table1,
    /// Small network for fast experiments: J=2, K=3, N=8, M=16, L=4.
    Desk,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Preset> {
        match s.to_ascii_lowercase().as_str() {
            "table1" | "table-1" => Some(Preset::Table1),
            "desk" => Some(Preset::Desk),
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Table1 => "table1",
            Preset::Desk => "desk",
        })
    }
}

const TX_SITES: [Point3; 3] = [[0.0, 0.0, 30.0], [0.0, 200.0, 30.0], [173.0, 100.0, 30.0]];

fn default_pathloss() -> LinkParams<f64> {
    LinkParams {
        bs_user: 3.7,
        bs_ris: 2.0,
        ris_user: 2.0,
        bs_target: 2.8,
        ris_target: 2.0,
        target_rx: 2.0,
    }
}

fn default_rician() -> LinkParams<RicianFactor> {
    let nlos = RicianFactor(3.0);
    LinkParams {
        bs_user: nlos,
        bs_ris: RicianFactor::LOS,
        ris_user: nlos,
        bs_target: nlos,
        ris_target: RicianFactor::LOS,
        target_rx: nlos,
    }
}

/// RF and modelling defaults shared by every preset (no geometry).
fn rf_defaults() -> Map<String, Value> {
    let v = serde_json::json!({
        "array_shape_bs": [8, 4],
        "array_shape_ris": [8, 8],
        "carrier_frequency_hz": 3.5e9,
        "bandwidth_hz": 100e6,
        "noise_density_dbm_per_hz": -174.0,
        "ref_path_gain_db": -43.0,
        "pathloss_exponents": default_pathloss(),
        "rician_factors_db": default_rician(),
        "rcs_m2": 2.0,
        "region": RegionSpec {
            center_xy: [60.0, 100.0],
            width_x: 30.0,
            width_y: 30.0,
            altitude: 60.0,
            grid: [4, 4],
        },
        "service_area": ServiceArea {
            x_range: [0.0, 173.0],
            y_range: [0.0, 200.0],
            exclusion_radius_m: 50.0,
        },
        "r_req_bps_hz": 10.0,
        "gamma_req_db": 10.0,
        "rng_seed": 0,
        "sensing_interference_in_sinr": false,
        "snr_form": "trace",
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn preset_document(preset: Preset) -> Map<String, Value> {
    let mut m = rf_defaults();
    let set = |m: &mut Map<String, Value>, k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    set(
        &mut m,
        "rx_bs_position",
        serde_json::json!([58.0, 100.0, 40.0]),
    );
    set(
        &mut m,
        "ris_position",
        serde_json::json!([65.0, 95.0, 40.0]),
    );
    match preset {
        Preset::Table1 => {
            set(&mut m, "tx_bs_positions", serde_json::json!(TX_SITES));
            set(&mut m, "num_users", serde_json::json!(10));
        }
        Preset::Desk => {
            set(&mut m, "tx_bs_positions", serde_json::json!(&TX_SITES[..2]));
            set(&mut m, "num_users", serde_json::json!(3));
            set(&mut m, "array_shape_bs", serde_json::json!([4, 2]));
            set(&mut m, "array_shape_ris", serde_json::json!([4, 4]));
            let mut region = m["region"].clone();
            region["grid"] = serde_json::json!([2, 2]);
            set(&mut m, "region", region);
            set(&mut m, "r_req_bps_hz", serde_json::json!(6.0));
        }
    }
    m
}

/// Build a preset scenario with users placed from `seed`.
pub fn preset(preset: Preset, seed: u64) -> ScenarioConfig {
    let mut doc = Map::new();
    doc.insert("preset".into(), Value::String(preset.to_string()));
    doc.insert("rng_seed".into(), Value::from(seed));
    load_scenario_value(Value::Object(doc)).expect("shipped presets are valid")
}

/// Keys a document may carry beyond the [`ScenarioConfig`] fields.
const EXTRA_KEYS: [&str; 4] = ["preset", "num_users", "num_bs_antennas", "num_ris_elements"];

const CONFIG_KEYS: [&str; 22] = [
    "tx_bs_positions",
    "rx_bs_position",
    "ris_position",
    "user_positions",
    "array_shape_bs",
    "array_shape_ris",
    "element_spacing_m",
    "carrier_frequency_hz",
    "bandwidth_hz",
    "noise_density_dbm_per_hz",
    "ref_path_gain_db",
    "ris_ref_gain_db",
    "pathloss_exponents",
    "rician_factors_db",
    "rcs_m2",
    "region",
    "service_area",
    "r_req_bps_hz",
    "gamma_req_db",
    "rng_seed",
    "sensing_interference_in_sinr",
    "snr_form",
];

fn deep_merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => deep_merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn take<T: DeserializeOwned>(
    map: &Map<String, Value>,
    key: &str,
) -> Result<Option<T>, ScenarioError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| ScenarioError::TypeMismatch {
                    field: key.to_string(),
                    detail: e.to_string(),
                })
        }
    }
}

fn require<T: DeserializeOwned>(map: &Map<String, Value>, key: &str) -> Result<T, ScenarioError> {
    take(map, key)?.ok_or_else(|| ScenarioError::MissingKey(key.to_string()))
}

/// Drop `count` users uniformly in the service area outside the exclusion
/// disks around the TX BSs.
pub fn place_users<R: Rng + ?Sized>(
    count: usize,
    area: &ServiceArea,
    tx_bs: &[Point3],
    rng: &mut R,
) -> Result<Vec<Point3>, ScenarioError> {
    const MAX_ATTEMPTS: usize = 100_000;
    let mut users = Vec::with_capacity(count);
    let mut attempts = 0;
    while users.len() < count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS * count.max(1) {
            return Err(invariant(
                "service_area",
                "exclusion disks leave no room to place users",
            ));
        }
        let x = rng.random_range(area.x_range[0]..area.x_range[1]);
        let y = rng.random_range(area.y_range[0]..area.y_range[1]);
        let clear = tx_bs
            .iter()
            .all(|q| ((x - q[0]).powi(2) + (y - q[1]).powi(2)).sqrt() > area.exclusion_radius_m);
        if clear {
            users.push([x, y, 0.0]);
        }
    }
    Ok(users)
}

/// Parse and validate a scenario document from JSON text.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    load_scenario_value(value)
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scenario(&text)
}

pub fn load_scenario_value(doc: Value) -> Result<ScenarioConfig, ScenarioError> {
    let Value::Object(doc) = doc else {
        return Err(ScenarioError::Parse("top level must be an object".into()));
    };
    for key in doc.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) && !EXTRA_KEYS.contains(&key.as_str()) {
            return Err(ScenarioError::UnknownKey(key.clone()));
        }
    }
    let preset = match take::<String>(&doc, "preset")? {
        None => None,
        Some(name) => Some(
            Preset::parse(&name).ok_or_else(|| ScenarioError::TypeMismatch {
                field: "preset".into(),
                detail: format!("unknown preset \"{name}\" (expected table1 or desk)"),
            })?,
        ),
    };
    let mut merged = Value::Object(match preset {
        Some(p) => preset_document(p),
        None => rf_defaults(),
    });
    // Explicit users replace a preset's user count.
    if doc.contains_key("user_positions") {
        if let Value::Object(m) = &mut merged {
            m.remove("num_users");
        }
    }
    deep_merge(&mut merged, Value::Object(doc));
    let Value::Object(m) = merged else {
        unreachable!()
    };

    let tx_bs_positions: Vec<Point3> = require(&m, "tx_bs_positions")?;
    let rx_bs_position: Point3 = require(&m, "rx_bs_position")?;
    let ris_position: Point3 = require(&m, "ris_position")?;
    let array_shape_bs: [usize; 2] = require(&m, "array_shape_bs")?;
    let array_shape_ris: [usize; 2] = require(&m, "array_shape_ris")?;
    let carrier_frequency_hz: f64 = require(&m, "carrier_frequency_hz")?;
    let rng_seed: u64 = require(&m, "rng_seed")?;
    let service_area: ServiceArea = require(&m, "service_area")?;

    if let Some(n) = take::<usize>(&m, "num_bs_antennas")? {
        if n != array_shape_bs[0] * array_shape_bs[1] {
            return Err(invariant(
                "num_bs_antennas",
                format!(
                    "declared N={n} but array_shape_bs gives {}",
                    array_shape_bs[0] * array_shape_bs[1]
                ),
            ));
        }
    }
    if let Some(mm) = take::<usize>(&m, "num_ris_elements")? {
        if mm != array_shape_ris[0] * array_shape_ris[1] {
            return Err(invariant(
                "num_ris_elements",
                format!(
                    "declared M={mm} but array_shape_ris gives {}",
                    array_shape_ris[0] * array_shape_ris[1]
                ),
            ));
        }
    }

    let user_positions = match take::<Vec<Point3>>(&m, "user_positions")? {
        Some(u) => {
            if let Some(k) = take::<usize>(&m, "num_users")? {
                if k != u.len() {
                    return Err(invariant(
                        "num_users",
                        format!("declared K={k} but {} user positions are listed", u.len()),
                    ));
                }
            }
            u
        }
        None => {
            let k: usize = require(&m, "num_users")?;
            let mut rng = rng_for(rng_seed, Stream::UserPlacement);
            place_users(k, &service_area, &tx_bs_positions, &mut rng)?
        }
    };

    if !(carrier_frequency_hz > 0.0 && carrier_frequency_hz.is_finite()) {
        return Err(invariant("carrier_frequency_hz", "must be finite and > 0"));
    }
    let ref_path_gain_db: f64 = require(&m, "ref_path_gain_db")?;
    let cfg = ScenarioConfig {
        tx_bs_positions,
        rx_bs_position,
        ris_position,
        user_positions,
        array_shape_bs,
        array_shape_ris,
        element_spacing_m: take(&m, "element_spacing_m")?
            .unwrap_or(SPEED_OF_LIGHT / carrier_frequency_hz / 2.0),
        carrier_frequency_hz,
        bandwidth_hz: require(&m, "bandwidth_hz")?,
        noise_density_dbm_per_hz: require(&m, "noise_density_dbm_per_hz")?,
        ref_path_gain_db,
        ris_ref_gain_db: take(&m, "ris_ref_gain_db")?.unwrap_or(ref_path_gain_db),
        pathloss_exponents: require(&m, "pathloss_exponents")?,
        rician_factors_db: require(&m, "rician_factors_db")?,
        rcs_m2: require(&m, "rcs_m2")?,
        region: require(&m, "region")?,
        service_area,
        r_req_bps_hz: require(&m, "r_req_bps_hz")?,
        gamma_req_db: require(&m, "gamma_req_db")?,
        rng_seed,
        sensing_interference_in_sinr: require(&m, "sensing_interference_in_sinr")?,
        snr_form: require(&m, "snr_form")?,
    };
    cfg.validate()?;
    Ok(cfg)
}
