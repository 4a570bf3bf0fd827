//! Post-processing of solutions: impedance spectra, pressure errors,
//! per-depth junction statistics and in-tree coefficient fits.

mod errors;
mod impedance;
mod treefit;

pub use errors::{depth_statistics, pressure_error, DepthStatistics, PressureError, BA_PER_MMHG};
pub use impedance::{impedance, Harmonic, ImpedanceSpectrum, DEFAULT_HARMONIC_FLOOR};
pub use treefit::{
    fit_outlets, fit_tree_coefficients, sweep_inflows, tree_fit_report, OutletFit, ResolvedPoint, SweepPoint, TreeFit,
    TreeFitReport, DEFAULT_REYNOLDS_SWEEP,
};
