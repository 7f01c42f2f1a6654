//! Back-projection reconstruction for the two-dimensional wave equation and
//! the circular mean transform with centres on the boundary of a smooth
//! convex domain.
//!
//! For discs and ellipses the back-projection formulas are exact; on a general
//! convex domain they reproduce `f - K f`, where `K` is an explicit smoothing
//! integral operator built from the Hilbert transform of the domain's chord
//! length profiles (see [`radon_hilbert`]).

pub mod cli;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod grid;
pub mod inversion;
pub mod io;
pub mod metrics;
pub mod numerics;
pub mod phantom;
pub mod radon_hilbert;

pub use error::{Error, Result};
pub use geometry::{nhat_ahat, BoundaryCurve, BoundaryNode, ConvexDomain, DirOffset, DomainKind, Point2, Superellipse};
pub use grid::{GridImage, Lattice};
pub use phantom::{Bump, Field2, Phantom};
