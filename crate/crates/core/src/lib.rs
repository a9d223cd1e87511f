//! Null distance on spacetimes.
//!
//! Null lengths of piecewise causal curves, zigzag upper bounds for the null
//! distance, the slim-cone curve construction near a level set, cosmological
//! time on warped products and finite metric-space utilities used to check
//! Hausdorff collapse of level sets.

pub mod checks;
pub mod cosmo;
pub mod curves;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod metricspace;
pub mod nulldist;
pub mod sampling;
pub mod slim;
pub mod timefns;

pub use curves::{CausalSegment, PiecewiseCausalCurve};
pub use error::{Error, Result};
pub use expr::TimeExpr;
pub use geometry::{CausalClass, CausalKind, Direction, Family, Point, Spacetime, Spatial, TangentVector};
pub use nulldist::{EstimateOptions, NullDistanceEstimate};
pub use timefns::{TimeFunctionHandle, TimeFunctionKind};
