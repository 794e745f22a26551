use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzerError {
    #[error("sigma below floor")]
    SigmaBelowFloor,
    #[error("need at least 2 distinct pH values")]
    TooFewPoints,
    #[error("non-finite value in dataset")]
    NonFinite,
    #[error("prior range for {0} is empty")]
    InvalidRange(&'static str),
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
    #[error("need at least 2 histogram bins")]
    TooFewBins,
    #[error("no samples")]
    EmptySamples,
    #[error("empty pH grid")]
    EmptyGrid,
    #[error("need at least 1 sample")]
    ZeroSamples,
    #[error("csv error: {0}")]
    Csv(String),
}
