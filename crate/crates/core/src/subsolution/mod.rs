//! Discrete subsolution fields and the audits built on them.

pub mod audit;
pub mod field;
pub mod io;
pub mod series;

pub use audit::{audit_stationary, AuditReport, BoundTerms, CellCounts, ChainTerms};
pub use field::{
    build_field, build_field_with_cell_flux, BoundaryMode, DiscreteField, Flux, Grid,
};
pub use io::{read_field, read_series, write_field, write_series, Header};
pub use series::{
    check_frames, f_of_t, infinite_time_bound, FReport, FSample, TimeBoundReport, TimeSeries,
};
