pub mod covariance;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod error_lab;
pub mod noise;
pub mod orchestrator;
pub mod spectral;
pub mod stats;
