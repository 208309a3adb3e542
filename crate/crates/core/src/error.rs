use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("sequence is not strictly increasing and positive at k = {k}")]
    NonMonotonic { k: usize },

    #[error("prefix of length {requested} requested but only {available} terms are available")]
    PrefixTooShort { requested: usize, available: usize },

    #[error("digit budget exceeded at k = {k}: ~{digits} decimal digits > budget {budget}")]
    DigitBudgetExceeded { k: usize, digits: u64, budget: u64 },

    #[error("site {0} is outside the solved domain")]
    OutOfDomain(String),

    #[error("domain has no interior site")]
    EmptyInterior,

    #[error("domain has {sites} interior sites, above the limit {limit}")]
    DomainTooLarge { sites: u64, limit: u64 },

    #[error("absorption probability per excursion is zero")]
    ZeroAbsorption,

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("no admissible jump index up to horizon {horizon} for target {target}")]
    TargetUnreachable { horizon: usize, target: String },

    #[error("start site {0} is not an interior site")]
    BadStart(i64),

    #[error("bad excursion radius: {0}")]
    BadRadius(String),

    #[error("site {0} is outside the sandpile volume")]
    OutOfVolume(i64),

    #[error("closed-form half-line solver requires trap probability 1/3, got {0}")]
    UnsupportedTrapProb(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0} episodes hit the step cap; estimate is invalid")]
    StepCapHit(u64),
}

impl Error {
    /// Stable identifier used in machine-readable error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::BadParams(_) => "BadParams",
            Error::NonMonotonic { .. } => "NonMonotonic",
            Error::PrefixTooShort { .. } => "PrefixTooShort",
            Error::DigitBudgetExceeded { .. } => "DigitBudgetExceeded",
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::EmptyInterior => "EmptyInterior",
            Error::DomainTooLarge { .. } => "DomainTooLarge",
            Error::ZeroAbsorption => "ZeroAbsorption",
            Error::UnsupportedFamily(_) => "UnsupportedFamily",
            Error::TargetUnreachable { .. } => "TargetUnreachable",
            Error::BadStart(_) => "BadStart",
            Error::BadRadius(_) => "BadRadius",
            Error::OutOfVolume(_) => "OutOfVolume",
            Error::UnsupportedTrapProb(_) => "UnsupportedTrapProb",
            Error::Parse(_) => "Parse",
            Error::StepCapHit(_) => "StepCapHit",
        }
    }
}
