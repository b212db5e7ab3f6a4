use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, malformed or out of its physical range.
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The intensity equation has no admissible root (I ≥ 0, ω̃_m > 0).
    #[error("no steady state: {candidates} polynomial roots, {excluded} excluded ({detail})")]
    NoSteadyState {
        candidates: usize,
        excluded: usize,
        detail: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty branch set")]
    EmptyBranchSet,

    /// The operating point is not linearly stable, so time-domain or
    /// spectral evaluation is refused.
    #[error("operating point is unstable (max Re λ = {max_real_part:.6e} rad/s)")]
    Unstable { max_real_part: f64 },

    /// Re D(ω) = 0 has no usable positive root.
    #[error("no real positive root of Re D(ω): discriminant {discriminant:.6e}, roots ω² = {y_lo:.6e}, {y_hi:.6e}")]
    NoPeakFrequency {
        discriminant: f64,
        y_lo: f64,
        y_hi: f64,
    },

    #[error("no crossing of S_opt = 1 in [{t_lo:.6e}, {t_hi:.6e}] K (S_opt - 1 = {f_lo:.6e}, {f_hi:.6e})")]
    NoCrossing {
        t_lo: f64,
        t_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("series too short: {len} samples for {segments} segments")]
    SeriesTooShort { len: usize, segments: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::NoSteadyState { .. } | Error::EmptyBranchSet => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 4,
        }
    }

    /// Short stable code written into sweep tables in place of a value.
    pub fn table_code(&self) -> &'static str {
        match self {
            Error::Config { .. } => "ERR_CONFIG",
            Error::NoSteadyState { .. } | Error::EmptyBranchSet => "ERR_NO_STEADY_STATE",
            Error::Unstable { .. } => "ERR_UNSTABLE",
            Error::NoPeakFrequency { .. } => "ERR_NO_PEAK",
            Error::NoCrossing { .. } => "ERR_NO_CROSSING",
            _ => "ERR_NUMERICAL",
        }
    }
}
