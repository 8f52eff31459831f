//! Self-checks of the sampler that are also exposed through the CLI: a
//! brute-force evaluation of the partition-move ratio and a joint
//! distribution ("getting it right") test, and direct simulation of prior
//! covariances.

pub mod covariance;
pub mod geweke;
pub mod partition_oracle;
pub mod stats;
