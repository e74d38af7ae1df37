pub mod config;
pub mod feedback;
pub mod geometry;
pub mod gym;
pub mod metrics;
pub mod optim;
pub mod protocol;
pub mod reward;
