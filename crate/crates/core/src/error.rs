use thiserror::Error;

/// Everything that can go wrong while characterizing devices or running
/// the switched-capacitor engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("calibration infeasible: contact gap {contact_gap:.4e} m is below the dielectric gap {dielectric_gap:.4e} m")]
    CalibrationInfeasible {
        contact_gap: f64,
        dielectric_gap: f64,
    },

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("displacement {x:.4e} m outside [0, {g0:.4e}] m")]
    DisplacementOutOfRange { x: f64, g0: f64 },

    #[error("solver did not converge on [{lo:.4e}, {hi:.4e}] (tol {tol:.1e}) after {iterations} iterations")]
    NoConvergence {
        lo: f64,
        hi: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("step size underflow at t = {t:.6e} s (dt = {dt:.3e} s)")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("network has no ground node")]
    NoGround,

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("element `{0}` is dangling (both terminals on the same node)")]
    DanglingElement(String),

    #[error("island {island} pinned to conflicting sources ({a} V vs {b} V)")]
    SourceConflict { island: usize, a: f64, b: f64 },

    #[error(
        "island {island} did not converge: residual {residual:.3e} V after {iterations} iterations"
    )]
    IslandNoConvergence {
        island: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("floating islands form a singular system")]
    SingularIsland,

    #[error("phase {phase}: {source}")]
    InPhase {
        phase: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("beam stayed latched in hold phase at vin = {vin:.4e} V: input out of dynamic range")]
    NoRelease { vin: f64 },

    #[error("beam failed to latch in sample phase at vin = {vin:.4e} V")]
    NoLatch { vin: f64 },
}

impl Error {
    /// True for failures of a numerical solver rather than of the inputs.
    pub fn is_solver(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::StepUnderflow { .. }
            | Error::IslandNoConvergence { .. }
            | Error::SingularIsland
            | Error::NoRelease { .. }
            | Error::NoLatch { .. } => true,
            Error::InPhase { source, .. } => source.is_solver(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
