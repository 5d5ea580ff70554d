//! Error type shared by every module of the crate.
//!
//! Each variant maps to a stable upper-case code (see [`Error::code`]) which
//! is what the experiment runner prints and what reports carry.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // geometry
    #[error("interfaces {upper} and {lower} cross or touch at ({x}, {y})")]
    InterfacesCross { upper: usize, lower: usize, x: f64, y: f64 },
    #[error("subdomain D_{index} has volume {volume} exceeding the bound {bound}")]
    VolumeBound { index: usize, volume: f64, bound: f64 },
    #[error("boundary patch is empty or not contained in the top face")]
    EmptySigma,
    #[error("interface {index} fails the regularity check: estimate {estimate} > {bound}")]
    Regularity { index: usize, estimate: f64, bound: f64 },
    #[error("non-finite sample of the graph function at ({x}, {y})")]
    NonfiniteSample { x: f64, y: f64 },
    #[error("degenerate tetrahedron {tet} (volume {volume})")]
    DegenerateTet { tet: usize, volume: f64 },
    #[error("incompatible mesh: {0}")]
    IncompatibleMesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("untagged element: {0}")]
    UntaggedElement(String),
    #[error("invalid geometry input: {0}")]
    InvalidGeometry(String),

    // material
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    // forward
    #[error("element label {label} out of range (table has {len} entries)")]
    LabelOutOfRange { label: usize, len: usize },
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNoConvergence { iterations: usize, residual: f64 },

    // boundary
    #[error("no mesh vertex lies in the interior of the boundary patch")]
    EmptyBasis,
    #[error("eigen decomposition failed: {0}")]
    EigFail(String),
    #[error("DtN matrices were built against different H^1/2 Gram matrices")]
    GramMismatch,

    // inverse
    #[error("initial parameters are not admissible")]
    InadmissibleInit,

    // probes
    #[error("sampler exhausted after {attempts} attempts")]
    SamplerExhausted { attempts: usize },
    #[error("no admissible exponent on the delta grid")]
    NoFeasibleDelta,
    #[error("evaluation point at the singularity")]
    AtSingularity,

    // cli / io
    #[error("config error: {0}")]
    Config(String),
    #[error("missing config section `{0}`")]
    ConfigMissingSection(String),
    #[error("artifact hash mismatch: header {expected}, file {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InterfacesCross { .. } => "INTERFACES_CROSS",
            Error::VolumeBound { .. } => "VOLUME_BOUND",
            Error::EmptySigma => "EMPTY_SIGMA",
            Error::Regularity { .. } => "REGULARITY",
            Error::NonfiniteSample { .. } => "NONFINITE_SAMPLE",
            Error::DegenerateTet { .. } => "DEGENERATE_TET",
            Error::IncompatibleMesh(_) => "INCOMPATIBLE_MESH",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::UntaggedElement(_) => "UNTAGGED_ELEMENT",
            Error::InvalidGeometry(_) => "INVALID_GEOMETRY",
            Error::DimMismatch(..) => "DIM_MISMATCH",
            Error::LabelOutOfRange { .. } => "LABEL_OUT_OF_RANGE",
            Error::CgNoConvergence { .. } => "CG_NO_CONVERGENCE",
            Error::EmptyBasis => "EMPTY_BASIS",
            Error::EigFail(_) => "EIG_FAIL",
            Error::GramMismatch => "GRAM_MISMATCH",
            Error::InadmissibleInit => "INADMISSIBLE_INIT",
            Error::SamplerExhausted { .. } => "SAMPLER_EXHAUSTED",
            Error::NoFeasibleDelta => "NO_FEASIBLE_DELTA",
            Error::AtSingularity => "AT_SINGULARITY",
            Error::Config(_) => "CONFIG_ERROR",
            Error::ConfigMissingSection(_) => "CONFIG_MISSING_SECTION",
            Error::HashMismatch { .. } => "HASH_MISMATCH",
            Error::Artifact(_) => "ARTIFACT_ERROR",
            Error::Io(_) => "IO_ERROR",
        }
    }

    /// Module the error originates from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InterfacesCross { .. }
            | Error::VolumeBound { .. }
            | Error::EmptySigma
            | Error::Regularity { .. }
            | Error::NonfiniteSample { .. }
            | Error::DegenerateTet { .. }
            | Error::IncompatibleMesh(_)
            | Error::Parse { .. }
            | Error::UntaggedElement(_)
            | Error::InvalidGeometry(_) => "geometry",
            Error::DimMismatch(..) => "material",
            Error::LabelOutOfRange { .. } | Error::CgNoConvergence { .. } => "forward",
            Error::EmptyBasis | Error::EigFail(_) | Error::GramMismatch => "boundary",
            Error::InadmissibleInit => "inverse",
            Error::SamplerExhausted { .. } | Error::NoFeasibleDelta | Error::AtSingularity => {
                "probes"
            }
            Error::Config(_)
            | Error::ConfigMissingSection(_)
            | Error::HashMismatch { .. }
            | Error::Artifact(_)
            | Error::Io(_) => "cli",
        }
    }

    /// True for configuration and input-validation failures, false for
    /// numerical failures discovered during compute.
    pub fn is_config_error(&self) -> bool {
        !matches!(
            self,
            Error::CgNoConvergence { .. }
                | Error::EigFail(_)
                | Error::NoFeasibleDelta
                | Error::SamplerExhausted { .. }
                | Error::DegenerateTet { .. }
                | Error::Io(_)
        )
    }
}
