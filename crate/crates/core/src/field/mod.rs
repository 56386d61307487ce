//! Grids, fields, spectral operators and space-time integration.

pub mod analytic;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod quadrature;
pub mod sample;
pub mod slab;
pub mod source;
pub mod spectral;

pub use analytic::{AnalyticField, ExactSampler, TimeRule, Zoomed};
pub use fields::{AnyField, ScalarField, VectorField};
pub use geometry::{Ball, ParabolicCylinder};
pub use grid::Grid;
pub use quadrature::{lp_norm_ball, Region};
pub use sample::{sample, AffineMap, Extension, SampleMode};
pub use slab::{Snapshot, SpaceTimeSlab};
pub use source::{Integrand, SpaceTimeSource};
pub use spectral::{apply_operator, Fft3, Operator};
