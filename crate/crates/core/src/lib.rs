//! Lewis, Milman and covering ellipsoids for convex bodies given by gauge and support
//! oracles, with lattice-point enumeration and volume estimation built on them.

pub mod body;
pub mod cli;
pub mod covering;
pub mod ellipsoid;
pub mod ellnorm;
pub mod error;
pub mod lattice;
pub mod lewis;
pub mod linalg;
mod lp;
pub mod milman;
pub mod report;
mod solver;
pub mod suite;
pub mod volume;

pub use body::{BodyKind, ConvexBody, Membership};
pub use ellipsoid::Ellipsoid;
pub use error::{Error, Result};
