//! Numerical toolkit for singular integral operators on curves and discrete
//! measures in the first Heisenberg group.

pub mod curvature;
pub mod error;
pub mod heis;
pub mod kernels;
pub mod koch;
pub mod lifts;
pub mod measure;
pub mod numeric;
pub mod sio;

pub use error::{Error, Result};
pub use heis::HPoint;
pub use kernels::{CzParams, Kernel, KernelSpec};
pub use koch::{AngleSchedule, PlanarPoint, PolygonStage, Word};
