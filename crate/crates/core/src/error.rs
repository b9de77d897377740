use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("value {value} outside domain: {what}")]
    Domain { what: &'static str, value: f64 },

    /// No source-to-sink path survives the cuts. `restoring_theta` is the
    /// minimum edge probability on the uncut optimum, when that optimum
    /// could be computed.
    #[error("no complete reassembly survives the cuts (restoring theta: {restoring_theta:?})")]
    Infeasible { restoring_theta: Option<f64> },

    #[error("all {hypotheses} center hypotheses are infeasible")]
    AllHypothesesInfeasible { hypotheses: usize },

    #[error("graph would hold {required} nodes, budget is {budget}")]
    NodeBudget { required: u128, budget: u64 },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("image too small: need a {required}px square, got {width}x{height}")]
    ImageSize {
        required: u32,
        width: u32,
        height: u32,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
