//! Causal (retarded) Newton gravity: Liénard–Wiechert potentials of sampled
//! worldlines, the relativistic Kepler problem around a resting Sun, numerical
//! integration of the central-field and retarded two-body equations, and the
//! Mercury perihelion advance as observed from the Earth.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod ephemeris;
pub mod error;
pub mod kepler;
pub mod lw;
pub mod observer;
pub mod state;

pub use error::{Error, Result};
pub use state::SpatialState;
