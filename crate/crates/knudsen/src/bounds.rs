//! Lower bounds against uniform decay rates, from concentrated initial data.
//!
//! The initial datum `F_in = eps^{-6} 1_{eps B}(x) 1_{eps B}(v)` pushes a
//! sixth of its mass arbitrarily slowly toward the wall. Comparing the
//! diffuse-reflection solution with the absorbing-boundary one gives an
//! explicit chain of inequalities bounding the time-averaged equilibrium gap
//! from below, and hence any admissible decay envelope `E(t)`:
//!
//! ```text
//! direct positive-part integral >= survival-restricted bound
//!                               >= T |B| (1 - kappa)^+ min(1, (R-eps)/(eps(t+T)))^3.
//! ```

use crate::error::{Error, Result};
use crate::quad::{GL32, GL64};
use crate::sources::maxwellian;
use crate::BALL_VOLUME;

/// `|B|`, volume of the unit ball (the container and the data ball coincide
/// here, both of radius 1).
const B_VOL: f64 = BALL_VOLUME;
const OMEGA_VOL: f64 = BALL_VOLUME;
const N_DIM: i32 = 3;

#[derive(Debug, Clone, Copy)]
pub struct LowerBoundScenario {
    /// Concentration radius, in `(0, R)`.
    pub epsilon: f64,
    /// Time-averaging window `T`.
    pub t_window: f64,
    /// Half distance from the data center to the wall; 1/2 for centered data.
    pub r_half: f64,
    /// Norm exponent for the `L^p` envelope, in `(1, inf]`.
    pub p: f64,
}

impl LowerBoundScenario {
    pub fn new(epsilon: f64, t_window: f64, p: f64) -> Result<Self> {
        let r_half = 0.5;
        if !(0.0 < epsilon && epsilon < r_half) {
            return Err(Error::domain(format!("epsilon = {epsilon} outside (0, {r_half})")));
        }
        if !(t_window > 0.0) {
            return Err(Error::domain(format!("T = {t_window} not positive")));
        }
        if !(p > 1.0) {
            return Err(Error::domain(format!("p = {p} not above 1")));
        }
        Ok(LowerBoundScenario { epsilon, t_window, r_half, p })
    }

    /// Dual exponent `p' = p / (p - 1)`.
    pub fn p_dual(&self) -> f64 {
        if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

/// Absorbing-boundary solution `Phi(t, x, v) = F_in(x - tv, v) 1_{t <= tau}`,
/// evaluated exactly from the box geometry.
pub fn absorbing_solution(sc: &LowerBoundScenario, t: f64, x: [f64; 3], v: [f64; 3]) -> f64 {
    let eps = sc.epsilon;
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if v2.sqrt() > eps {
        return 0.0;
    }
    let b = [x[0] - t * v[0], x[1] - t * v[1], x[2] - t * v[2]];
    let b2 = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
    if b2.sqrt() > eps {
        return 0.0;
    }
    let x2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if x2 > 1.0 {
        return 0.0;
    }
    // backward position inside eps B and current position inside Omega:
    // convexity keeps the whole segment inside, so t <= tau automatically
    eps.powi(-6)
}

/// Density excess threshold `kappa = eps^{2N} |B|^2 / (|Omega| (2 pi)^{N/2})`.
fn kappa(eps: f64) -> f64 {
    eps.powi(2 * N_DIM) * B_VOL * B_VOL / (OMEGA_VOL * (2.0 * std::f64::consts::PI).powf(1.5))
}

/// Closed-form lower bound
/// `T |B| (1 - kappa)^+ min(1, (R - eps)/(eps (t + T)))^N`.
pub fn analytic_lower_bound(sc: &LowerBoundScenario, t: f64) -> f64 {
    let eps = sc.epsilon;
    let shrink = ((sc.r_half - eps) / (eps * (t + sc.t_window))).min(1.0);
    sc.t_window * B_VOL * (1.0 - kappa(eps)).max(0.0) * shrink.powi(N_DIM)
}

/// Intermediate link of the chain: the survival indicator is relaxed to
/// `(t + s)|v| <= R - eps` and the Maxwellian to its maximum, after which the
/// space and velocity integrals are exact; only the `s` integral remains,
/// `|B| (1 - kappa)^+ int_0^T min(1, ((R - eps)/(eps (t + s)))^N) ds`.
pub fn intermediate_lower_bound(sc: &LowerBoundScenario, t: f64) -> f64 {
    let a = (sc.r_half - sc.epsilon) / sc.epsilon; // min is 1 while t + s <= a
    let (t0, t1) = (t, t + sc.t_window);
    let flat = (a.min(t1) - t0).max(0.0);
    let decay_from = t0.max(a);
    let decay = if t1 > decay_from {
        // int a^3 / u^3 du = a^3 (u0^{-2} - u1^{-2}) / 2
        a.powi(3) * (decay_from.powi(-2) - t1.powi(-2)) / 2.0
    } else {
        0.0
    };
    B_VOL * (1.0 - kappa(sc.epsilon)).max(0.0) * (flat + decay)
}

/// Volume of the intersection of a ball of radius `eps` whose center sits at
/// distance `d` from the origin with the unit ball.
fn lens_volume(d: f64, eps: f64) -> f64 {
    if d <= 1.0 - eps {
        return 4.0 * std::f64::consts::PI * eps.powi(3) / 3.0;
    }
    if d >= 1.0 + eps {
        return 0.0;
    }
    let (r1, r2) = (eps, 1.0);
    std::f64::consts::PI * (r1 + r2 - d).powi(2)
        * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r1 * r2 - 3.0 * r1 * r1)
        / (12.0 * d)
}

/// The positive-part functional
/// `int_0^T iiint (Phi(t+s) - (|B|^2/|Omega|) M)^+ dv dx ds`
/// integrated numerically, using the box geometry: for each `(s, |v|)` the
/// `x` set is a sphere-sphere lens.
pub fn direct_l1_check(sc: &LowerBoundScenario, t: f64) -> f64 {
    let eps = sc.epsilon;
    let c = B_VOL * B_VOL / OMEGA_VOL;
    let inner = |s: f64| -> f64 {
        let ts = t + s;
        // lens regime changes at (1 -+ eps) / ts
        let mut breaks = vec![0.0, eps];
        if ts > 0.0 {
            for b in [(1.0 - eps) / ts, (1.0 + eps) / ts] {
                if b > 0.0 && b < eps {
                    breaks.push(b);
                }
            }
        }
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        crate::quad::integrate_panels(&GL32, &breaks, |r| {
            let excess = eps.powi(-6) - c * maxwellian(r);
            if excess <= 0.0 {
                return 0.0; // cannot happen for eps < 1, kept for honesty
            }
            4.0 * std::f64::consts::PI * r * r * excess * lens_volume(ts * r, eps)
        })
    };
    GL64.integrate(0.0, sc.t_window, inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    LogEntropy,
    AlgebraicLp,
}

/// Entropy normalizer `2 N |B|^2 |ln eps|`; the optional energy augmentation
/// adds the `iint (1 + |v|^2) F_in` terms, which vanish with `eps`.
pub fn entropy_normalizer(eps: f64, energy_augmented: bool) -> f64 {
    let base = 2.0 * N_DIM as f64 * B_VOL * B_VOL * eps.ln().abs();
    if energy_augmented {
        let mass = B_VOL * B_VOL;
        let energy = 16.0 * std::f64::consts::PI * std::f64::consts::PI / 15.0 * eps * eps;
        base + mass + energy
    } else {
        base
    }
}

/// `L^p` normalizer `|B|^{2/p} / eps^{2N/p'}`.
pub fn lp_normalizer(eps: f64, p: f64) -> f64 {
    let p_dual = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let b_pow = if p.is_infinite() { 1.0 } else { B_VOL.powf(2.0 / p) };
    b_pow / eps.powf(2.0 * N_DIM as f64 / p_dual)
}

/// Constraint on any admissible decay envelope:
/// `analytic_lower_bound / normalizer` with the coupling of the proofs,
/// `eps = 1/t` for the entropy case and for `p < 2`, fixed `eps` for
/// `p >= 2`.
pub fn envelope(kind: EnvelopeKind, sc: &LowerBoundScenario, t: f64) -> Result<f64> {
    match kind {
        EnvelopeKind::LogEntropy => {
            if t <= std::f64::consts::E {
                return Err(Error::domain(format!("entropy envelope needs t > e, got {t}")));
            }
            let eps = 1.0 / t;
            let coupled = LowerBoundScenario { epsilon: eps, ..*sc };
            Ok(analytic_lower_bound(&coupled, t) / entropy_normalizer(eps, false))
        }
        EnvelopeKind::AlgebraicLp => {
            let eps = if sc.p < 2.0 {
                let e = 1.0 / t;
                if !(e > 0.0 && e < sc.r_half) {
                    return Err(Error::domain(format!("coupled eps = {e} outside (0, R) at t = {t}")));
                }
                e
            } else {
                sc.epsilon
            };
            let coupled = LowerBoundScenario { epsilon: eps, ..*sc };
            Ok(analytic_lower_bound(&coupled, t) / lp_normalizer(eps, sc.p))
        }
    }
}

/// Decay exponent of the `L^p` envelope constraint, `N min(1, 2/p')`.
pub fn lp_envelope_exponent(p: f64) -> f64 {
    let p_dual = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    N_DIM as f64 * (2.0 / p_dual).min(1.0)
}
