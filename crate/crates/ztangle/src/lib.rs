pub mod surface;
pub mod models;
pub mod quad;
pub mod relations;
pub mod flips;
pub mod partition;
pub mod classical;
pub mod report;
