//! Planck spectrum and Stefan-Boltzmann law, used to translate the
//! dimensionless wall flux into physical temperatures.
//!
//! ```
//! use knudsen::radiative::PhysicalConstants;
//!
//! let pc = PhysicalConstants::dimensionless();
//! let flux = pc.stefan_boltzmann() / std::f64::consts::PI;
//! assert!((pc.temperature_from_flux(flux).unwrap() - 1.0).abs() < 1e-12);
//! ```

use crate::error::{Error, Result};
#[cfg(test)]
use crate::quad::{integrate_panels, GL64};

/// Planck, Boltzmann and light-speed constants. The dimensionless set puts
/// all three to 1, which is the normalization the solver works in.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalConstants {
    pub h: f64,
    pub k: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub fn dimensionless() -> Self {
        Self { h: 1.0, k: 1.0, c: 1.0 }
    }

    /// SI values (J s, J/K, m/s).
    pub fn si() -> Self {
        Self { h: 6.62607015e-34, k: 1.380649e-23, c: 2.99792458e8 }
    }

    /// Spectral radiance at frequency `nu` and temperature `theta`.
    pub fn planck(&self, nu: f64, theta: f64) -> Result<f64> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::domain(format!("frequency must be positive, got {nu}")));
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::domain(format!("temperature must be positive, got {theta}")));
        }
        let x = self.h * nu / (self.k * theta);
        let prefactor = 2.0 * self.h * nu.powi(3) / (self.c * self.c);
        // 1/(e^x - 1) loses all digits for tiny x; switch to the Laurent series
        let occupation = if x < 1e-4 {
            1.0 / x - 0.5 + x / 12.0 - x.powi(3) / 720.0
        } else {
            1.0 / x.exp_m1()
        };
        Ok(prefactor * occupation)
    }

    /// sigma = 2 pi^5 k^4 / (15 c^2 h^3).
    pub fn stefan_boltzmann(&self) -> f64 {
        let pi = std::f64::consts::PI;
        2.0 * pi.powi(5) * self.k.powi(4) / (15.0 * self.c * self.c * self.h.powi(3))
    }

    /// Inverts f = sigma theta^4 / pi for the flux of spectral radiance
    /// integrated over frequency; `f` is the hemispheric exitance over pi.
    pub fn temperature_from_flux(&self, flux: f64) -> Result<f64> {
        if !(flux > 0.0) || !flux.is_finite() {
            return Err(Error::domain(format!("flux must be positive, got {flux}")));
        }
        Ok((std::f64::consts::PI * flux / self.stefan_boltzmann()).powf(0.25))
    }
}
