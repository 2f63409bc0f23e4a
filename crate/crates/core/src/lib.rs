//! Lamination convex hull of the stationary incompressible porous media
//! inclusion.
//!
//! The crate provides membership tests for the constitutive set and the wave
//! cone, the closed-form hull and its classifier, separating functions,
//! constructive laminate trees, an iterative hull approximator, and audits of
//! discrete subsolution fields.

pub mod cloud;
pub mod error;
pub mod hull;
pub mod laminate;
pub mod sample;
pub mod separators;
pub mod state;
pub mod subsolution;

pub use cloud::{
    containment_report, grow_cloud, grow_cloud_with_tol, k_coverage, write_csv, CloudConfig,
    ContainmentReport, KCoverage, PointCloud,
};
pub use error::{Error, Result};
pub use hull::{classify, in_cone, k_bound, k_range, power_balance, ConeSide, KRange, KRangeKind, Region, RegionTag};
pub use laminate::{decompose, lambda_segment, recombine, verify_tree, LaminateNode, TreeReport};
pub use separators::{check_convex_along, separation_bound, ConvexityReport, Separator, SeparatorValue};
pub use state::{
    in_k, in_wave_cone, sample_wave_cone, BoundaryPolicy, State, ToleranceConfig, WaveDirection,
};
