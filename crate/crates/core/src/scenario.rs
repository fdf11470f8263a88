//! Experiment scenarios: geometry, assignment and physical parameters.
//!
//! Scenarios are stored as TOML. Power-like quantities are held in linear
//! units (watts, linear SINR); documents may give them in dB/dBm instead via
//! the `_db`/`_dbm` suffixed keys, which are converted once here.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::optimizer::SolverOptions;
use crate::rng::{substream_rng, Substream};
use crate::scalar::{db_to_linear, dbm_to_watts};

pub const SCHEMA_VERSION: u32 = 1;

/// Reference parameter values.
pub mod defaults {
    pub const CARRIER_FREQUENCY: f64 = 3.85e9;
    pub const BANDWIDTH: f64 = 1.0;
    pub const NOISE_POWER_DBM: f64 = -170.0;
    pub const RICIAN_FACTOR: f64 = 10.0;
    pub const SINR_THRESHOLD_DB: f64 = -10.0;
    pub const RAIN_ATTENUATION_DB: f64 = 0.026;
    pub const GAS_ATTENUATION_DB: f64 = 0.020;
    pub const RX_GAIN_DB: f64 = 1.761;
    /// 220 km/h.
    pub const UAV_CRUISE_SPEED: f64 = 220.0 / 3.6;
    pub const COMPUTE_INTENSITY: f64 = 1.0;
    pub const PROCESSOR_COEFFICIENT: f64 = 0.8;
    pub const POWER_BUDGET_DBM: f64 = 40.0;
    pub const UPLINK_TX_POWER_DBM: f64 = 30.0;
    pub const PAYLOAD_BITS: f64 = 1.0;
    pub const FBS_ALTITUDE: f64 = 1000.0;
    pub const TURBINE_HEIGHT: f64 = 190.0;
    pub const ACCESS_AIRTIME: f64 = 1e-3;
    pub const ACCESS_PROCESSING_DELAY: f64 = 0.5e-3;
    pub const SPACING_OVER_WAVELENGTH: f64 = 0.5;
    /// Distance from the first to the last waypoint.
    pub const FLYING_DISTANCE: f64 = 53_640.0;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_spacing")]
    pub spacing_over_wavelength: f64,
}

fn default_spacing() -> f64 {
    defaults::SPACING_OVER_WAVELENGTH
}

impl ArrayGeometry {
    pub const fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            spacing_over_wavelength: defaults::SPACING_OVER_WAVELENGTH,
        }
    }

    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turbine {
    pub id: u32,
    pub position: Position3D,
    pub panel: ArrayGeometry,
    pub uplink_payload_bits: f64,
    pub downlink_payload_bits: f64,
    /// P_k in watts.
    pub uplink_tx_power: f64,
}

impl Turbine {
    /// Turbine with default parameters at `position`.
    pub fn new(id: u32, position: Position3D) -> Self {
        Self {
            id,
            position,
            panel: ArrayGeometry::new(3, 3),
            uplink_payload_bits: defaults::PAYLOAD_BITS,
            downlink_payload_bits: defaults::PAYLOAD_BITS,
            uplink_tx_power: dbm_to_watts(defaults::UPLINK_TX_POWER_DBM),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub id: u32,
    pub position: Position3D,
    /// P_j in watts.
    pub power_budget: f64,
    pub assigned_turbines: Vec<u32>,
}

impl Waypoint {
    pub fn new(id: u32, position: Position3D) -> Self {
        Self {
            id,
            position,
            power_budget: dbm_to_watts(defaults::POWER_BUDGET_DBM),
            assigned_turbines: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessProcedure {
    #[serde(rename = "rap")]
    FourStepRap,
    #[serde(rename = "edt")]
    TwoStepEdt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteEdge {
    pub a: u32,
    pub b: u32,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub turbines: Vec<Turbine>,
    pub waypoints: Vec<Waypoint>,
    pub fbs_panel: ArrayGeometry,
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    /// σ² in watts.
    pub noise_power: f64,
    pub rician_factor: f64,
    /// Linear SINR floor.
    pub sinr_threshold: f64,
    pub rain_attenuation_db: f64,
    pub gas_attenuation_db: f64,
    pub rx_gain_db: f64,
    pub uav_cruise_speed: f64,
    pub compute_intensity: f64,
    pub processor_coefficient: f64,
    pub access_procedure: AccessProcedure,
    pub access_airtime: f64,
    pub access_processing_delay: f64,
    /// Explicit flight graph; `None` means the complete Euclidean graph.
    pub route_edges: Option<Vec<RouteEdge>>,
    pub solver: SolverOptions,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// Empty scenario carrying the default parameters.
    pub fn table_one_parameters() -> Self {
        Self {
            turbines: Vec::new(),
            waypoints: Vec::new(),
            fbs_panel: ArrayGeometry::new(4, 4),
            carrier_frequency: defaults::CARRIER_FREQUENCY,
            bandwidth: defaults::BANDWIDTH,
            noise_power: dbm_to_watts(defaults::NOISE_POWER_DBM),
            rician_factor: defaults::RICIAN_FACTOR,
            sinr_threshold: db_to_linear(defaults::SINR_THRESHOLD_DB),
            rain_attenuation_db: defaults::RAIN_ATTENUATION_DB,
            gas_attenuation_db: defaults::GAS_ATTENUATION_DB,
            rx_gain_db: defaults::RX_GAIN_DB,
            uav_cruise_speed: defaults::UAV_CRUISE_SPEED,
            compute_intensity: defaults::COMPUTE_INTENSITY,
            processor_coefficient: defaults::PROCESSOR_COEFFICIENT,
            access_procedure: AccessProcedure::TwoStepEdt,
            access_airtime: defaults::ACCESS_AIRTIME,
            access_processing_delay: defaults::ACCESS_PROCESSING_DELAY,
            route_edges: None,
            solver: SolverOptions::default(),
            rng_seed: 0,
        }
    }

    pub fn turbine(&self, id: u32) -> Option<&Turbine> {
        self.turbines.iter().find(|t| t.id == id)
    }

    pub fn waypoint(&self, id: u32) -> Option<&Waypoint> {
        self.waypoints.iter().find(|w| w.id == id)
    }

    /// Turbines assigned to `waypoint`, in assignment order.
    pub fn assigned(&self, waypoint: &Waypoint) -> Vec<&Turbine> {
        waypoint
            .assigned_turbines
            .iter()
            .filter_map(|id| self.turbine(*id))
            .collect()
    }

    /// Checks every field and the assignment partition.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.turbines.is_empty() {
            return Err(ScenarioError::NoTurbines);
        }
        if self.waypoints.is_empty() {
            return Err(ScenarioError::NoWaypoints);
        }
        positive("carrier_frequency", self.carrier_frequency)?;
        positive("bandwidth", self.bandwidth)?;
        positive("noise_power", self.noise_power)?;
        non_negative("rician_factor", self.rician_factor)?;
        positive("sinr_threshold", self.sinr_threshold)?;
        finite("rain_attenuation_db", self.rain_attenuation_db)?;
        finite("gas_attenuation_db", self.gas_attenuation_db)?;
        finite("rx_gain_db", self.rx_gain_db)?;
        positive("uav_cruise_speed", self.uav_cruise_speed)?;
        positive("compute_intensity", self.compute_intensity)?;
        positive("processor_coefficient", self.processor_coefficient)?;
        non_negative("access_airtime", self.access_airtime)?;
        non_negative("access_processing_delay", self.access_processing_delay)?;
        validate_geometry("fbs_panel", &self.fbs_panel)?;
        self.solver.validate()?;

        let mut turbine_ids = BTreeSet::new();
        for t in &self.turbines {
            if !turbine_ids.insert(t.id) {
                return Err(ScenarioError::DuplicateId { kind: "turbine", id: t.id });
            }
            let name = format!("turbines[{}]", t.id);
            validate_position(&name, &t.position)?;
            validate_geometry(&format!("{name}.panel"), &t.panel)?;
            positive(&format!("{name}.uplink_payload_bits"), t.uplink_payload_bits)?;
            positive(&format!("{name}.downlink_payload_bits"), t.downlink_payload_bits)?;
            positive(&format!("{name}.uplink_tx_power"), t.uplink_tx_power)?;
        }

        let mut owner: BTreeMap<u32, u32> = BTreeMap::new();
        let mut waypoint_ids = BTreeSet::new();
        for w in &self.waypoints {
            if !waypoint_ids.insert(w.id) {
                return Err(ScenarioError::DuplicateId { kind: "waypoint", id: w.id });
            }
            let name = format!("waypoints[{}]", w.id);
            validate_position(&name, &w.position)?;
            positive(&format!("{name}.power_budget"), w.power_budget)?;
            for &tid in &w.assigned_turbines {
                if !turbine_ids.contains(&tid) {
                    return Err(ScenarioError::DanglingTurbine { waypoint: w.id, turbine: tid });
                }
                if let Some(first) = owner.insert(tid, w.id) {
                    return Err(ScenarioError::DoublyAssigned {
                        turbine: tid,
                        first,
                        second: w.id,
                    });
                }
            }
        }
        if let Some(tid) = turbine_ids.iter().find(|id| !owner.contains_key(id)) {
            return Err(ScenarioError::Unassigned(*tid));
        }

        if let Some(edges) = &self.route_edges {
            for e in edges {
                for id in [e.a, e.b] {
                    if !waypoint_ids.contains(&id) {
                        return Err(ScenarioError::field(
                            "route_edges",
                            format!("edge references unknown waypoint {id}"),
                        ));
                    }
                }
                positive("route_edges.length", e.length)?;
            }
        }
        Ok(())
    }

    /// Canonical TOML document, linear units throughout.
    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioDocument::from(self)).expect("scenario serializes")
    }
}

fn finite(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::field(field, "must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::field(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::field(field, format!("must be ≥ 0, got {v}")))
    }
}

fn validate_position(field: &str, p: &Position3D) -> Result<(), ScenarioError> {
    finite(&format!("{field}.position.x"), p.x)?;
    finite(&format!("{field}.position.y"), p.y)?;
    non_negative(&format!("{field}.position.z"), p.z)
}

fn validate_geometry(field: &str, g: &ArrayGeometry) -> Result<(), ScenarioError> {
    if g.nx == 0 || g.ny == 0 {
        return Err(ScenarioError::field(field, "nx and ny must be ≥ 1"));
    }
    positive(&format!("{field}.spacing_over_wavelength"), g.spacing_over_wavelength)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TurbineEntry {
    id: u32,
    position: Position3D,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    panel: Option<ArrayGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uplink_payload_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    downlink_payload_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uplink_tx_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uplink_tx_power_dbm: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointEntry {
    id: u32,
    position: Position3D,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_budget_dbm: Option<f64>,
    #[serde(default)]
    assigned_turbines: Vec<u32>,
}

/// On-disk scenario layout. Omitted parameters take their defaults.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    carrier_frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rician_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sinr_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sinr_threshold_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rain_attenuation_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gas_attenuation_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rx_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uav_cruise_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compute_intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    processor_coefficient: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    access_procedure: Option<AccessProcedure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    access_airtime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    access_processing_delay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fbs_panel: Option<ArrayGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solver: Option<SolverOptions>,
    #[serde(default)]
    turbines: Vec<TurbineEntry>,
    #[serde(default)]
    waypoints: Vec<WaypointEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    route_edges: Option<Vec<RouteEdge>>,
}

impl From<&ScenarioConfig> for ScenarioDocument {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            rng_seed: Some(c.rng_seed),
            carrier_frequency: Some(c.carrier_frequency),
            bandwidth: Some(c.bandwidth),
            noise_power: Some(c.noise_power),
            noise_power_dbm: None,
            rician_factor: Some(c.rician_factor),
            sinr_threshold: Some(c.sinr_threshold),
            sinr_threshold_db: None,
            rain_attenuation_db: Some(c.rain_attenuation_db),
            gas_attenuation_db: Some(c.gas_attenuation_db),
            rx_gain_db: Some(c.rx_gain_db),
            uav_cruise_speed: Some(c.uav_cruise_speed),
            compute_intensity: Some(c.compute_intensity),
            processor_coefficient: Some(c.processor_coefficient),
            access_procedure: Some(c.access_procedure),
            access_airtime: Some(c.access_airtime),
            access_processing_delay: Some(c.access_processing_delay),
            fbs_panel: Some(c.fbs_panel),
            solver: Some(c.solver.clone()),
            turbines: c
                .turbines
                .iter()
                .map(|t| TurbineEntry {
                    id: t.id,
                    position: t.position,
                    panel: Some(t.panel),
                    uplink_payload_bits: Some(t.uplink_payload_bits),
                    downlink_payload_bits: Some(t.downlink_payload_bits),
                    uplink_tx_power: Some(t.uplink_tx_power),
                    uplink_tx_power_dbm: None,
                })
                .collect(),
            waypoints: c
                .waypoints
                .iter()
                .map(|w| WaypointEntry {
                    id: w.id,
                    position: w.position,
                    power_budget: Some(w.power_budget),
                    power_budget_dbm: None,
                    assigned_turbines: w.assigned_turbines.clone(),
                })
                .collect(),
            route_edges: c.route_edges.clone(),
        }
    }
}

/// Picks the linear value, converting the dB alternative when that is given.
fn linear_or_db(
    field: &str,
    linear: Option<f64>,
    db: Option<f64>,
    convert: fn(f64) -> f64,
    default: f64,
) -> Result<f64, ScenarioError> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(ScenarioError::DuplicateField(field.to_string())),
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(convert(d)),
        (None, None) => Ok(default),
    }
}

impl ScenarioDocument {
    fn into_config(self) -> Result<ScenarioConfig, ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let base = ScenarioConfig::table_one_parameters();
        let turbines = self
            .turbines
            .into_iter()
            .map(|e| {
                let d = Turbine::new(e.id, e.position);
                Ok(Turbine {
                    panel: e.panel.unwrap_or(d.panel),
                    uplink_payload_bits: e.uplink_payload_bits.unwrap_or(d.uplink_payload_bits),
                    downlink_payload_bits: e.downlink_payload_bits.unwrap_or(d.downlink_payload_bits),
                    uplink_tx_power: linear_or_db(
                        "uplink_tx_power",
                        e.uplink_tx_power,
                        e.uplink_tx_power_dbm,
                        dbm_to_watts,
                        d.uplink_tx_power,
                    )?,
                    ..d
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        let waypoints = self
            .waypoints
            .into_iter()
            .map(|e| {
                let d = Waypoint::new(e.id, e.position);
                Ok(Waypoint {
                    power_budget: linear_or_db(
                        "power_budget",
                        e.power_budget,
                        e.power_budget_dbm,
                        dbm_to_watts,
                        d.power_budget,
                    )?,
                    assigned_turbines: e.assigned_turbines,
                    ..d
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        let config = ScenarioConfig {
            turbines,
            waypoints,
            fbs_panel: self.fbs_panel.unwrap_or(base.fbs_panel),
            carrier_frequency: self.carrier_frequency.unwrap_or(base.carrier_frequency),
            bandwidth: self.bandwidth.unwrap_or(base.bandwidth),
            noise_power: linear_or_db(
                "noise_power",
                self.noise_power,
                self.noise_power_dbm,
                dbm_to_watts,
                base.noise_power,
            )?,
            rician_factor: self.rician_factor.unwrap_or(base.rician_factor),
            sinr_threshold: linear_or_db(
                "sinr_threshold",
                self.sinr_threshold,
                self.sinr_threshold_db,
                db_to_linear,
                base.sinr_threshold,
            )?,
            rain_attenuation_db: self.rain_attenuation_db.unwrap_or(base.rain_attenuation_db),
            gas_attenuation_db: self.gas_attenuation_db.unwrap_or(base.gas_attenuation_db),
            rx_gain_db: self.rx_gain_db.unwrap_or(base.rx_gain_db),
            uav_cruise_speed: self.uav_cruise_speed.unwrap_or(base.uav_cruise_speed),
            compute_intensity: self.compute_intensity.unwrap_or(base.compute_intensity),
            processor_coefficient: self.processor_coefficient.unwrap_or(base.processor_coefficient),
            access_procedure: self.access_procedure.unwrap_or(base.access_procedure),
            access_airtime: self.access_airtime.unwrap_or(base.access_airtime),
            access_processing_delay: self
                .access_processing_delay
                .unwrap_or(base.access_processing_delay),
            route_edges: self.route_edges,
            solver: self.solver.unwrap_or_default(),
            rng_seed: self.rng_seed.unwrap_or(base.rng_seed),
        };
        let unassigned = config.waypoints.iter().all(|w| w.assigned_turbines.is_empty());
        let config = if unassigned && !config.waypoints.is_empty() {
            assign_turbines(config)
        } else {
            config
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses and validates a scenario document. If no waypoint lists any
/// turbines, turbines are assigned to their nearest waypoint.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig, ScenarioError> {
    let doc: ScenarioDocument =
        toml::from_str(source).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    doc.into_config()
}

/// Axis-aligned rectangle in the horizontal plane, meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Area {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub const fn new(width: f64, height: f64) -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            width,
            height,
        }
    }
}

/// Turbines on a jittered grid covering `area`, waypoints evenly spaced on
/// the area's east-west midline. Turbines are assigned to the nearest
/// waypoint and all other parameters take their defaults.
pub fn generate_synthetic_layout(
    n_turbines: usize,
    n_waypoints: usize,
    area: Area,
    seed: u64,
) -> Result<ScenarioConfig, ScenarioError> {
    if !(area.width > 0.0 && area.height > 0.0) || !area.width.is_finite() || !area.height.is_finite() {
        return Err(ScenarioError::ZeroArea);
    }
    if n_waypoints == 0 || n_turbines < n_waypoints {
        return Err(ScenarioError::LayoutCounts {
            turbines: n_turbines,
            waypoints: n_waypoints,
        });
    }
    let mut rng = substream_rng(seed, Substream::Scenario, 0);
    let cols = ((n_turbines as f64 * area.width / area.height).sqrt().ceil() as usize).clamp(1, n_turbines);
    let rows = n_turbines.div_ceil(cols);
    let cell_w = area.width / cols as f64;
    let cell_h = area.height / rows as f64;
    let turbines = (0..n_turbines)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let jx: f64 = rng.random_range(-0.35..0.35);
            let jy: f64 = rng.random_range(-0.35..0.35);
            let x = area.x0 + (c as f64 + 0.5 + jx) * cell_w;
            let y = area.y0 + (r as f64 + 0.5 + jy) * cell_h;
            Turbine::new(i as u32 + 1, Position3D::new(x, y, defaults::TURBINE_HEIGHT))
        })
        .collect();
    let mid_y = area.y0 + area.height / 2.0;
    let waypoints = (0..n_waypoints)
        .map(|j| {
            let x = if n_waypoints == 1 {
                area.x0 + area.width / 2.0
            } else {
                area.x0 + area.width * j as f64 / (n_waypoints - 1) as f64
            };
            Waypoint::new(j as u32 + 1, Position3D::new(x, mid_y, defaults::FBS_ALTITUDE))
        })
        .collect();
    let config = assign_turbines(ScenarioConfig {
        turbines,
        waypoints,
        rng_seed: seed,
        ..ScenarioConfig::table_one_parameters()
    });
    config.validate()?;
    Ok(config)
}

/// Reassigns every turbine to its nearest waypoint (3-D distance), breaking
/// ties toward the lowest waypoint id. Assignment lists come out sorted.
pub fn assign_turbines(mut config: ScenarioConfig) -> ScenarioConfig {
    assert!(!config.waypoints.is_empty(), "assign_turbines needs at least one waypoint");
    let mut order: Vec<usize> = (0..config.waypoints.len()).collect();
    order.sort_by_key(|&i| config.waypoints[i].id);
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); config.waypoints.len()];
    for t in &config.turbines {
        let mut best = order[0];
        let mut best_d = t.position.distance(&config.waypoints[best].position);
        for &i in &order[1..] {
            let d = t.position.distance(&config.waypoints[i].position);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        lists[best].push(t.id);
    }
    for (w, mut list) in config.waypoints.iter_mut().zip(lists) {
        list.sort_unstable();
        w.assigned_turbines = list;
    }
    config
}

/// The full-scale synthetic mission: 173 turbines, 7 waypoints, and a
/// 53.64 km east-west extent.
pub fn table_one_scenario() -> ScenarioConfig {
    generate_synthetic_layout(
        173,
        7,
        Area::new(defaults::FLYING_DISTANCE, 9_000.0),
        1,
    )
    .expect("preset is valid")
}

/// Small two-waypoint scenario: three turbines per waypoint placed 300 m to
/// 2.5 km from the waypoint's ground track, 4×4 FBS and 3×3 turbine panels.
pub fn desk_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = substream_rng(seed, Substream::Scenario, 1);
    let centers = [Position3D::new(0.0, 0.0, 1000.0), Position3D::new(6000.0, 0.0, 1000.0)];
    let mut turbines = Vec::new();
    let mut waypoints = Vec::new();
    for (j, c) in centers.iter().enumerate() {
        let mut wp = Waypoint::new(j as u32 + 1, *c);
        for k in 0..3 {
            let id = (3 * j + k) as u32 + 1;
            let r: f64 = rng.random_range(300.0..2500.0);
            let phi: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            turbines.push(Turbine::new(
                id,
                Position3D::new(c.x + r * phi.cos(), c.y + r * phi.sin(), defaults::TURBINE_HEIGHT),
            ));
            wp.assigned_turbines.push(id);
        }
        waypoints.push(wp);
    }
    ScenarioConfig {
        turbines,
        waypoints,
        rng_seed: seed,
        ..ScenarioConfig::table_one_parameters()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
sinr_threshold_db = -10.0

[[turbines]]
id = 1
position = { x = 100.0, y = 0.0, z = 190.0 }

[[turbines]]
id = 2
position = { x = 900.0, y = 0.0, z = 190.0 }

[[waypoints]]
id = 1
position = { x = 0.0, y = 0.0, z = 1000.0 }

[[waypoints]]
id = 2
position = { x = 1000.0, y = 0.0, z = 1000.0 }
"#;

    #[test]
    fn defaults_fill_missing_fields() {
        let c = load_scenario(MINIMAL).unwrap();
        assert_eq!(c.carrier_frequency, 3.85e9);
        assert!((c.sinr_threshold - 0.1).abs() < 1e-15);
        assert!((c.noise_power - 1e-20).abs() < 1e-32);
        assert!((c.waypoints[0].power_budget - 10.0).abs() < 1e-12);
        assert_eq!(c.waypoints[0].assigned_turbines, vec![1]);
        assert_eq!(c.waypoints[1].assigned_turbines, vec![2]);
    }

    #[test]
    fn rejects_both_forms_of_a_field() {
        let doc = MINIMAL.replace("sinr_threshold_db = -10.0", "sinr_threshold_db = -10.0\nsinr_threshold = 0.1");
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::DuplicateField(_))));
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let doc = MINIMAL.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaVersion { .. })));
    }

    #[test]
    fn empty_turbine_list_is_an_error() {
        let doc = "schema_version = 1\n[[waypoints]]\nid = 1\nposition = { x = 0.0, y = 0.0, z = 1000.0 }\n";
        let err = load_scenario(doc).unwrap_err();
        assert_eq!(err.to_string(), "scenario must contain ≥1 turbine");
    }

    #[test]
    fn double_assignment_is_a_partition_error() {
        let mut c = desk_scenario(0);
        let moved = c.waypoints[0].assigned_turbines[0];
        c.waypoints[1].assigned_turbines.push(moved);
        assert!(matches!(c.validate(), Err(ScenarioError::DoublyAssigned { .. })));
        let doc = c.to_toml();
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::DoublyAssigned { .. })));
    }

    #[test]
    fn dangling_turbine_is_reported() {
        let mut c = desk_scenario(0);
        c.waypoints[0].assigned_turbines.push(99);
        assert!(matches!(
            c.validate(),
            Err(ScenarioError::DanglingTurbine { waypoint: 1, turbine: 99 })
        ));
    }

    #[test]
    fn invalid_field_is_named() {
        let mut c = desk_scenario(0);
        c.bandwidth = 0.0;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("bandwidth"), "{msg}");
    }

    #[test]
    fn canonical_document_round_trips() {
        let c = table_one_scenario();
        let text = c.to_toml();
        let back = load_scenario(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn table_one_preset_shape() {
        let c = table_one_scenario();
        assert_eq!(c.turbines.len(), 173);
        assert_eq!(c.waypoints.len(), 7);
        let first = c.waypoints.first().unwrap().position;
        let last = c.waypoints.last().unwrap().position;
        assert!((first.horizontal_distance(&last) - 53_640.0).abs() < 1e-9);
    }

    #[test]
    fn generator_is_deterministic_and_seed_sensitive() {
        let area = Area::new(30_000.0, 18_000.0);
        let a = generate_synthetic_layout(173, 7, area, 1).unwrap();
        let b = generate_synthetic_layout(173, 7, area, 1).unwrap();
        let c = generate_synthetic_layout(173, 7, area, 2).unwrap();
        assert_eq!(a.to_toml(), b.to_toml());
        assert_ne!(a.turbines[0].position, c.turbines[0].position);
        for t in &a.turbines {
            assert!(t.position.x > 0.0 && t.position.x < 30_000.0);
            assert!(t.position.y > 0.0 && t.position.y < 18_000.0);
        }
    }

    #[test]
    fn generator_single_turbine() {
        let c = generate_synthetic_layout(1, 1, Area::new(10.0, 10.0), 0).unwrap();
        assert_eq!(c.waypoints[0].assigned_turbines, vec![1]);
    }

    #[test]
    fn generator_rejects_bad_inputs() {
        assert!(matches!(
            generate_synthetic_layout(3, 1, Area::new(0.0, 10.0), 0),
            Err(ScenarioError::ZeroArea)
        ));
        assert!(matches!(
            generate_synthetic_layout(1, 2, Area::new(10.0, 10.0), 0),
            Err(ScenarioError::LayoutCounts { .. })
        ));
    }

    #[test]
    fn equidistant_turbine_goes_to_lowest_id() {
        let mut c = ScenarioConfig::table_one_parameters();
        c.waypoints = vec![
            Waypoint::new(3, Position3D::new(10.0, 0.0, 1000.0)),
            Waypoint::new(2, Position3D::new(0.0, 0.0, 1000.0)),
        ];
        c.turbines = vec![Turbine::new(1, Position3D::new(5.0, 0.0, 190.0))];
        let c = assign_turbines(c);
        assert_eq!(c.waypoint(2).unwrap().assigned_turbines, vec![1]);
        assert!(c.waypoint(3).unwrap().assigned_turbines.is_empty());
    }

    #[test]
    fn turbine_below_waypoint_is_assigned_to_it() {
        let mut c = ScenarioConfig::table_one_parameters();
        c.waypoints = vec![
            Waypoint::new(1, Position3D::new(0.0, 0.0, 1000.0)),
            Waypoint::new(2, Position3D::new(800.0, 0.0, 1000.0)),
        ];
        c.turbines = vec![Turbine::new(1, Position3D::new(800.0, 0.0, 190.0))];
        let c = assign_turbines(c);
        assert_eq!(c.waypoint(2).unwrap().assigned_turbines, vec![1]);
    }
}
