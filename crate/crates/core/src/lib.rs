pub mod baselines;
pub mod grid;
pub mod harness;
pub mod idm;
pub mod labeling;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod ngsim;
