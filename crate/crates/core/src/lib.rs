//! Banach-Mazur distances between origin-symmetric polytopes in dimensions
//! two to four, with optimality certificates for the distance to the ball.

// `!(x > t)` guards are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod decomposition;
pub mod distance;
pub mod ellipsoid;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod io;
pub mod lp;
pub mod onesym;
pub mod par;
pub mod report;
pub mod rng;
pub mod search;
pub mod stability;
pub mod tolerance;

pub use body::{point, LinearMap, Point, SymmetricBody};
pub use ellipsoid::Ellipsoid;
pub use error::{Error, Result};
pub use tolerance::Tolerance;
