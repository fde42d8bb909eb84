//! Meshfree radial-basis-function discretizations of 2D linear advection.
//!
//! Three trial spaces are provided (global Kansa, partition-of-unity and
//! RBF-FD), each sampled on an oversampled evaluation set and projected in the
//! least-squares sense. RBF-FD can be stabilized by a penalty on the jumps of
//! its piecewise interpolant across interior Voronoi edges.
//!
//! The crate is `no_std` and only needs `alloc`. Enable the `std` feature for
//! runtime CPU feature detection in the dense matrix kernels.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod advection;
pub mod analysis;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod kdtree;
pub mod linalg;
pub mod methods;
pub mod voronoi;

mod math;

pub use error::{Error, Result};
pub use geometry::{Domain, Point, PointKind, PointSet};

/// Deterministic RNG used for every seeded operation.
pub type Rng = rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
