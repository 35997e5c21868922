//! α-geometry on the open probability simplex and α-flow generative models.

pub mod alpha;
pub mod energy;
pub mod error;
pub mod eval;
pub mod flow;
pub mod geodesic;
pub mod io;
pub mod manifold;
pub mod nn;
pub mod reparam;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
