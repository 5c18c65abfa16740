use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eccentricity {0} outside [0, 1)")]
    Eccentricity(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate state: {0}")]
    DegenerateState(&'static str),

    #[error("orbit is not bound (e = {0})")]
    Unbound(f64),

    #[error("inclination {0} rad is within the retrograde singularity")]
    RetrogradeSingularity(f64),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("particle set degenerated: effective sample size {ess:.3} < {threshold}")]
    Degeneracy { ess: f64, threshold: f64 },

    #[error("sample covariance is singular (rank deficient)")]
    RankDeficient,

    #[error("{count} of {total} sampled states are unbound")]
    RejectedSamples { count: usize, total: usize },

    #[error("track aborted at step {step}: {source}")]
    TrackAborted {
        /// 1-based observation index.
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
