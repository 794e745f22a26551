use thiserror::Error;

/// Parse-stage failure, always carrying a source location.
///
/// Rendered as `file:line:col: message` so editors and CI logs can jump
/// straight to the offending form.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{origin}:{line}:{col}: {kind}")]
pub struct PddlError {
    pub origin: String,
    pub line: u32,
    pub col: u32,
    pub kind: PddlErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlErrorKind {
    #[error("{0}")]
    Lex(String),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unsupported requirement {0}")]
    UnsupportedRequirement(String),
    #[error("cyclic type hierarchy through '{0}'")]
    CyclicTypes(String),
    #[error("duplicate {what} '{name}'")]
    Duplicate { what: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
}

impl PddlError {
    pub fn new(origin: &str, line: u32, col: u32, kind: PddlErrorKind) -> Self {
        PddlError { origin: origin.to_owned(), line, col, kind }
    }
}

/// Grounding and state-transition failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("goal mentions unknown object '{0}'")]
    UnknownGoalObject(String),
    #[error("action '{action}' inapplicable: precondition {literal} does not hold")]
    Inapplicable { action: String, literal: String },
    #[error("unknown function value for ({name} {args})")]
    UnknownFunctionValue { name: String, args: String },
}

/// Durative-transform failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("non-positive duration {0} s")]
    NonPositiveDuration(i64),
    #[error("unit_T must be positive")]
    ZeroUnit,
    #[error("t_max {t_max} is not a multiple of unit_T {unit_t}")]
    UnalignedTMax { t_max: u64, unit_t: u64 },
    #[error("config names unknown action '{0}'")]
    UnknownAction(String),
    #[error("action '{0}' missing from the durations map")]
    MissingDuration(String),
    #[error("agent parameter '{param}' not found on action '{action}'")]
    BadAgentParam { action: String, param: String },
    #[error("config parse error: {0}")]
    Config(String),
}

/// Stream evaluation and binding failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("no generator registered: {0}")]
    UnregisteredGenerator(String),
    #[error("stream instance {0} already tried")]
    AlreadyTried(String),
}

/// Search failures distinct from "no plan exists".
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("node limit {0} exceeded")]
    NodeLimit(u64),
}

/// Top-level planning failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("no plan within t_max")]
    NoPlanWithinTMax,
    #[error("iteration limit {0} exceeded")]
    IterationLimit(u32),
    #[error("plan structure error: {0}")]
    Structure(String),
}
