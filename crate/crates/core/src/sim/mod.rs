//! Monte Carlo harness: certified truths, error metrics and sweeps.

mod experiment;
mod functions;
mod metrics;
mod slope;

pub use experiment::{
    derive_seed, fmt_float, gen_data, mise_mc, resolve_degree, rows_to_csv, splitmix64, sweep, DegreeToken,
    Density, ExperimentConfig, MiseResult, RunConstants, RunMetadata, SweepOutput, SweepRow, CSV_HEADER,
    MAX_FAILURE_RATE, PRNG_ID, SEED_MIXER,
};
pub use functions::{
    sobolev_norm_sq, Certificate, CertificateCheck, TestFunction, Truth, CERTIFICATE_GRID,
};
pub use metrics::{ise, ise_on, kl_pair, smse, QuadratureGrid, MIN_QUAD_POINTS, NODES_PER_PANEL};
pub use slope::{slope_fit, SlopeFit};
