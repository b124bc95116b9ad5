//! Numerical laboratory for general-β log-gases, quantum Painlevé II and
//! ODE/IM spectral determinants.
//!
//! All kernels are generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

pub mod ensemble;
pub mod error;
pub mod io;
pub mod lax;
pub mod numerics;
pub mod odeim;
pub mod poles;
pub mod qpii;
pub mod scalar;

pub use error::{LabError, Result};
pub use numerics::stats::MCStat;
pub use scalar::{Cx, Scalar};

pub type MCStat64 = MCStat<f64>;
pub type EnsembleSpec64 = ensemble::EnsembleSpec<f64>;
pub type SampleBatch64 = ensemble::SampleBatch<f64>;
pub type Grid2D64 = qpii::Grid2D<f64>;
pub type Field2D64 = qpii::Field2D<f64>;
pub type TWTable64 = qpii::TWTable<f64>;
pub type PoleState64 = poles::PoleState<f64>;
pub type Trajectory64 = poles::Trajectory<f64>;
pub type LinSolution64 = lax::LinSolution<f64>;
pub type SpectralProblem64 = odeim::SpectralProblem<f64>;
pub type BetheRoots64 = odeim::BetheRoots<f64>;
