//! Synthetic junction data: geometry sampling, a reference coefficient
//! oracle, pressure-drop time series and least-squares coefficient fits.

mod cohort;
mod fit;
mod oracle;
mod sampling;
mod timeseries;

pub use cohort::{
    build_cohort, inlet_radius, outlet_row, Cohort, CohortConfig, CohortManifest, CohortRow, JunctionRecord,
    OUTLET_FRACTIONS,
};
pub use fit::{fit, fit_ri, fit_rri, r_squared, Fit};
pub use oracle::{
    distal_resistance_for_split, flow_for_reynolds, oracle_coeffs, systolic_waveform, Waveform, DEFAULT_R_DIST2,
    ORACLE_ID,
};
pub use sampling::{sample_geometries, Interval, JunctionSample, SamplingRanges, BASE_DIMS};
pub use timeseries::{
    central_difference, ingest_timeseries_csv, read_timeseries_csv, synthesize_timeseries, uniform_step,
    write_timeseries_csv, TimeSeries,
};
