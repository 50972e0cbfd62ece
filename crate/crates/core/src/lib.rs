//! Rotation vectors, rates of escape and geodesic escorts for dynamical
//! systems on non-positively curved model spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: model charts, distances, exponential/log maps, deck
//!   transformations and orbit lifting.
//! * [`escort`]: ε-cones, alignment statistics, rate of escape and escort
//!   fitting on finite lifted orbits.
//! * [`ergodic`]: Birkhoff and subadditive averaging over orbit ensembles.
//! * [`rotation`]: rotation vectors of covered systems, periodic norms and
//!   past/future comparison.
//! * [`boundary`]: boundary endpoints, Busemann functions and horosphere
//!   projection.
//! * [`flows`]: magnetic and warped geodesic flows, rotation vectors through
//!   a map, and semi-conjugacy data.

pub mod boundary;
pub mod ergodic;
pub mod error;
pub mod escort;
pub mod flows;
pub mod geometry;
pub mod io;
pub mod ode;
pub mod plot;
pub mod rotation;
pub mod suite;

pub use error::{Error, Result};
pub use escort::{AlignmentReport, EscortFit, OrbitMetric, PointSequence};
pub use geometry::deck::{DeckTransformation, Moebius};
pub use geometry::{ModelId, ModelPoint, ModelVector};
pub use rotation::RotationEstimate;
