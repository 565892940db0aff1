//! Verification and simulation of correlated equilibria in finite mean field
//! games.
//!
//! * [`measures`] — finite distributions, measure flows, the total-variation
//!   distance and empirical measures.
//! * [`game`] — game primitives with an affine-in-measure cost model.
//! * [`correlated`] — correlated suggestions, the consistency and optimality
//!   checks, structure checks and the conditional DPP.
//! * [`nplayer`] — the induced N-player game: simulation, exact small-N
//!   enumeration and deviation families.
//! * [`chaos`] — propagation-of-chaos diagnostics.
//! * [`toy`] — the two-state example instance and its parameter window scan.
//! * [`config`] — JSON configuration documents.

pub mod chaos;
pub mod config;
pub mod correlated;
pub mod error;
pub mod game;
pub mod measures;
pub mod nplayer;
pub mod scalar;
pub mod stats;
pub mod streams;
pub mod toy;

pub use error::{Error, Result};
pub use game::GameSpec;
pub use measures::{dist, dist_t, empirical, mean_under, FiniteDist, MeasureFlow};
pub use scalar::{parse_q, q, Mode, Scalar, Tolerances, Q};
pub use stats::Estimate;
