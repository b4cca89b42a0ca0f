pub mod error;
pub mod group;
pub mod harmonic;
pub mod kernel;
pub mod lift;
pub mod measure;
pub mod montecarlo;
pub mod rational;
pub mod stopping;
