use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {what}")]
    Parse {
        what: &'static str,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(ValidationReport),

    #[error("bus `{0}` does not exist")]
    UnknownBus(String),

    #[error("bus `{0}` is not supplied from the source")]
    Unsupplied(String),

    #[error("bus `{0}` lies on a meshed feeder, the path to the source is not unique")]
    Meshed(String),

    #[error("load flow requires a radial network, found a loop closed by {0}")]
    NotRadial(String),

    #[error("parallel transformers between `{0}` and `{1}` are not supported")]
    ParallelTransformers(String, String),

    #[error("load case `{case}`")]
    InCase {
        case: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid load case `{0}`: {1}")]
    InvalidLoadCase(String, String),

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("duplicate measure id `{0}`")]
    DuplicateMeasure(String),

    #[error("measures `{0}` and `{1}` cannot be applied together: {2}")]
    Conflict(String, String, String),

    #[error("measure `{0}` refers to missing element `{1}`")]
    DanglingTarget(String, String),

    #[error("rule `{rule}` requires bus positions, but bus `{bus}` has none")]
    MissingGeometry { rule: &'static str, bus: String },

    #[error("invalid planning rules: {0}")]
    InvalidRules(String),

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error("exhaustive search over {0} measures exceeds the limit of {1}")]
    CatalogTooLarge(usize, usize),

    #[error("no dependency-satisfying solution exists for this catalog")]
    NoValidSolution,

    #[error("scenario `{0}`: {1}")]
    Scenario(String, String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}
