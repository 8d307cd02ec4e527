//! Energy evaluation, minimization and certification for particle systems
//! whose energy combines a square-root surface term with the semi-discrete
//! quadratic transport cost to an atomic measure.

// `!(x > 0.0)` is the idiom used to reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod certify;
pub mod cli;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimize;
pub mod quadrature;
pub mod tessellation;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{ConvexPolygon, HalfPlane, Point, TOL_GEOM};
pub use tessellation::{CellPartition, DomainSpec, WeightedSites};
pub use transport::{AtomicMeasure, TransportSolution};
