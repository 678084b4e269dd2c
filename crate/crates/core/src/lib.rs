//! Entire-function minorants of subharmonic functions outside small
//! exceptional sets, verified numerically at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`geom`]: points, disks, rays, circle/disk arcs and the shrinking
//!   radius field `Q(z) = (1+|z|)^{-q}`.
//! * [`measures`]: finite point-mass measures (Riesz measures of
//!   `log|P|`), disk masses, radial counting functions and the truncated
//!   logarithmic potential.
//! * [`subfun`]: representable subharmonic functions and their circle,
//!   disk and supremum averages.
//! * [`growth`]: order, type and indicator estimators.
//! * [`covering`]: exceptional-set membership, radius selection and the
//!   bounded-multiplicity disk subcover.
//! * [`avoidance`]: circles around a point that miss a disk system.
//! * [`pipeline`]: both directions of the minorant equivalence and the
//!   ray/circle/growth verifications.
//! * [`oracles`]: independent quadrature, Monte Carlo and grid oracles.
//! * [`cli`]: JSON scenario runner.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod avoidance;
pub mod cli;
pub mod covering;
mod error;
mod ext;
pub mod geom;
pub mod growth;
pub mod measures;
pub mod oracles;
pub mod pipeline;
mod quad;
mod rng;
pub mod subfun;

pub use error::{Error, Result};
pub use ext::Extended;
pub use geom::{Disk, Point, RadiusFunctionQ, Ray};
pub use measures::PointMassMeasure;
pub use subfun::LogModulusFunction;
