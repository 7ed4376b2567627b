//! Transport geometry of the unit ball.
//!
//! A phase point is stored in reduced radial coordinates: the radius of the
//! position, the speed, and the cosine of the angle between position and
//! velocity. Those three numbers determine the exit time of the free flight.

use crate::error::{Error, Result};

/// Reduced phase-space coordinates in the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    /// Radius of the position, in `[0, 1]`.
    pub rho: f64,
    /// Speed, thermal units.
    pub speed: f64,
    /// Cosine of the angle between position vector and velocity, in `[-1, 1]`.
    pub xi: f64,
}

impl PhasePoint {
    pub fn new(rho: f64, speed: f64, xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::domain(format!("rho = {rho} outside [0, 1]")));
        }
        if !(speed >= 0.0) {
            return Err(Error::domain(format!("speed = {speed} negative")));
        }
        if !(-1.0..=1.0).contains(&xi) {
            return Err(Error::domain(format!("xi = {xi} outside [-1, 1]")));
        }
        Ok(PhasePoint { rho, speed, xi })
    }
}

/// Time for a particle leaving the wall at angle `theta` from the inward
/// normal to traverse its chord: `2 cos(theta) / speed`.
pub fn boundary_exit_time(cos_theta: f64, speed: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&cos_theta) {
        return Err(Error::domain(format!("cos_theta = {cos_theta} outside [0, 1]")));
    }
    if speed == 0.0 {
        return Err(Error::InfiniteExitTime);
    }
    if !(speed > 0.0) {
        return Err(Error::domain(format!("speed = {speed} not positive")));
    }
    Ok(2.0 * cos_theta / speed)
}

/// Backward exit time of the characteristic through `p`: the unique positive
/// root of `t^2 s^2 - 2 t rho s xi + rho^2 - 1 = 0` with `s` the speed, i.e.
/// the time for the ray `x - t v` to leave the unit ball. With `xi = 1` at
/// `rho = 1` the ray is the inward diametral chord.
///
/// The root is evaluated in the cancellation-free form when `rho * xi < 0`.
pub fn interior_exit_time(p: &PhasePoint) -> Result<f64> {
    if p.speed == 0.0 {
        return Err(Error::InfiniteExitTime);
    }
    let b = p.rho * p.xi;
    let disc = (b * b + 1.0 - p.rho * p.rho).max(0.0).sqrt();
    // chord length along the ray, in units of distance
    let chord = if b >= 0.0 { b + disc } else { (1.0 - p.rho * p.rho) / (disc - b) };
    Ok(chord / p.speed)
}
