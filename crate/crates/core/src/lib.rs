//! Minimal Riesz energy and best-packing configurations on compact sets,
//! together with the asymptotic quantities attached to them: normalized
//! energy and packing limits, Minkowski contents, root limits as `s` grows,
//! and equidistribution of optimal configurations.

pub mod asymptotics;
pub mod cantor;
pub mod cli;
pub mod energy;
pub mod equidist;
pub mod error;
pub mod geometry;
pub mod minkowski;
pub mod packing;

pub use error::{Error, Result};
pub use geometry::{CompactSet, IfsSpec, Point};
