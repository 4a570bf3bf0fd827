//! Zero-dimensional hemodynamic network models with learned junction pressure-drop laws.
//!
//! The crate covers the full pipeline: network description and Poiseuille
//! elements ([`network`]), physics-based scaling ([`nondim`]), synthetic
//! junction data and coefficient fitting ([`datagen`]), per-coefficient
//! neural surrogates ([`ml`]), a-priori flow splits ([`flowsplit`]), the
//! standard and optimization-based network solvers ([`solver`]) and
//! post-processing ([`analysis`]).
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod analysis;
pub mod datagen;
pub mod error;
pub mod flowsplit;
pub mod linalg;
pub mod ml;
pub mod network;
pub mod nondim;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Network = network::VascularNetwork<f64>;
pub type Coefficients = nondim::CoefficientSet<f64>;
pub type Scales = nondim::CharacteristicScales<f64>;
pub type Geometry = nondim::DimensionlessGeometry<f64>;
pub type Series = datagen::TimeSeries<f64>;
pub type Models = ml::ModelBundle<f64>;
pub type Dataset = ml::TrainingDataset<f64>;
pub type SolverSettings = solver::SolverConfig<f64>;
pub type NetworkSolution = solver::Solution<f64>;
