//! Long-time relaxation of a collisionless gas, and of monokinetic (grey)
//! radiation, enclosed in the unit ball with diffuse reflection on a wall
//! kept at constant temperature.
//!
//! Everything is dimensionless: wall temperature 1, ball radius 1, speed of
//! light 1. Radial symmetry of the initial data makes the outgoing wall flux
//! `mu(t)` a function of time alone, and `mu` solves a renewal equation
//!
//! ```text
//! mu(t) = S(t) + (K * mu)(t)
//! ```
//!
//! whose kernel `K` is the exit-time law of a reemitted particle. The crate
//! evaluates both kernels in closed form, solves the renewal equation,
//! reconstructs the phase-space field, locates the complex zeros of
//! `1 - K~(z)` that fix the exponential decay rate of the radiative problem,
//! evaluates the concentrated-data lower-bound envelopes, and cross-validates
//! everything against a particle Monte Carlo.
//!
//! ```
//! use knudsen::kernels::Kernel;
//!
//! let k = Kernel::monokinetic();
//! assert_eq!(k.eval(1.0).unwrap(), 0.5);       // K(s) = s/2 on [0, 2)
//! assert_eq!(k.moment(1).unwrap(), 4.0 / 3.0); // mean exit time
//! ```

pub mod bounds;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernels;
pub mod montecarlo;
pub mod quad;
pub mod radiative;
pub mod renewal;
pub mod scenario;
pub mod sources;
pub mod spectral;

pub mod export;

pub use error::{Error, Result};

/// `(2 pi)^{-1/2}`, the half-space flux of the unit Maxwellian.
pub const HALF_SPACE_FLUX: f64 = 0.3989422804014327;

/// Volume of the unit ball in three dimensions, `4 pi / 3`.
pub const BALL_VOLUME: f64 = 4.0 * std::f64::consts::PI / 3.0;

/// `sqrt(2 pi)`.
pub const SQRT_TWO_PI: f64 = 2.5066282746310002;
