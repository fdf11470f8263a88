use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario document: {0}")]
    Parse(String),
    #[error("unsupported schema_version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("scenario must contain ≥1 turbine")]
    NoTurbines,
    #[error("scenario must contain ≥1 waypoint")]
    NoWaypoints,
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("field `{0}` given in both linear and dB form")]
    DuplicateField(String),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("waypoint {waypoint} references unknown turbine {turbine}")]
    DanglingTurbine { waypoint: u32, turbine: u32 },
    #[error("turbine {turbine} is assigned to waypoints {first} and {second}")]
    DoublyAssigned { turbine: u32, first: u32, second: u32 },
    #[error("turbine {0} is not assigned to any waypoint")]
    Unassigned(u32),
    #[error("layout area must have positive width and height")]
    ZeroArea,
    #[error("need n_turbines ≥ n_waypoints ≥ 1, got {turbines} turbines and {waypoints} waypoints")]
    LayoutCounts { turbines: usize, waypoints: usize },
}

impl ScenarioError {
    pub(crate) fn field(field: &str, reason: impl Into<String>) -> Self {
        Self::InvalidField {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("transmitter and receiver positions coincide")]
    CoincidentPositions,
    #[error("path loss needs positive distance and frequency, got d={distance} m, f={frequency} Hz")]
    NonPositiveInput { distance: f64, frequency: f64 },
    #[error("zeta has {found} entries but the array has {expected} elements")]
    ZetaLength { expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("waypoint {0} is not in the graph")]
    UnknownNode(u32),
    #[error("no path from waypoint {from} to waypoint {to}")]
    Unreachable { from: u32, to: u32 },
    #[error("visit order is empty")]
    EmptyVisitOrder,
    #[error("edge ({a}, {b}) has non-positive or non-finite length {length}")]
    BadEdge { a: u32, b: u32, length: f64 },
    #[error("cruise speed must be positive, got {0}")]
    BadSpeed(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("turbine {turbine} has zero rate; latency is unbounded")]
    ZeroRate { turbine: u32 },
    #[error("turbine {turbine} has non-positive compute power")]
    ZeroComputePower { turbine: u32 },
    #[error("beamformer {index} has norm {norm} > 1")]
    BeamNorm { index: usize, norm: f64 },
    #[error("power allocation uses {used} W of a {budget} W budget")]
    OverBudget { used: f64, budget: f64 },
    #[error("power allocation entry {index} is not positive")]
    NonPositivePower { index: usize },
    #[error("expected {expected} entries, got {found}")]
    Length { expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ConvexError {
    #[error("feasible set is empty (phase-I optimum {margin:e} < 0)")]
    Infeasible { margin: f64 },
    #[error("no convergence within {iterations} Newton iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("Newton system is singular")]
    Singular,
    #[error("initial point violates a hard constraint")]
    BadStart,
}

/// Why a waypoint has no SINR-feasible design.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub enum InfeasibilityReason {
    /// Even interference-free, full-power transmission cannot reach the threshold.
    SingleUserBound,
    /// The solver found no point meeting every threshold.
    NoFeasiblePoint,
}

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("waypoint {waypoint}: SINR threshold unreachable for turbines {turbines:?} ({reason:?})")]
    Infeasible {
        waypoint: u32,
        turbines: Vec<u32>,
        reason: InfeasibilityReason,
    },
    #[error("waypoint {waypoint}: {source}")]
    Subproblem {
        waypoint: u32,
        #[source]
        source: ConvexError,
    },
    #[error("waypoint {waypoint} has no assigned turbines")]
    EmptyWaypoint { waypoint: u32 },
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Top-level error for the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Scenario(_) => "invalid_scenario",
            Error::Channel(_) => "channel",
            Error::Routing(_) => "routing",
            Error::Link(_) => "link",
            Error::Optimizer(OptimizerError::Infeasible { .. }) => "infeasible",
            Error::Optimizer(_) => "optimizer",
            Error::Io(_) => "io",
        }
    }
}
