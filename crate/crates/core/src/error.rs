use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky factorization failed even at the largest jitter level.
    #[error(
        "covariance factorization failed for a {dim}x{dim} matrix: non-positive pivot at \
         index {pivot} with jitter {jitter:e} (relative to variance); max |entry| {max_abs:e}"
    )]
    Factorization {
        dim: usize,
        pivot: usize,
        jitter: f64,
        max_abs: f64,
    },

    #[error("intensity {value} exceeds the dominating rate {bound} at ({x}, {y})")]
    IntensityBound { value: f64, bound: f64, x: f64, y: f64 },

    #[error("rejection sampler gave up after {attempts} proposals: {hint}")]
    RejectionExhausted { attempts: usize, hint: String },

    #[error("covariate lookup outside raster at ({x}, {y})")]
    OutsideRaster { x: f64, y: f64 },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("configuration error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("state error: {0}")]
    State(String),

    #[error("block `{block}` failed at iteration {iteration}: {source}")]
    Block {
        iteration: u64,
        block: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
