//! Phase-space reconstruction from the flux history and error functionals.
//!
//! Along a backward characteristic that has already met the wall the
//! Maxwellian-weighted density is carried from the flux,
//!
//! ```text
//! g(t, x, v) = sqrt(2 pi) mu(t - tau) 1_{t > tau} + (f_in / M) 1_{t < tau},
//! ```
//!
//! with `tau` the backward exit time; the monokinetic analogue replaces
//! `f_in / M` by `u_in(|x - t omega|^2)` and the flux by `f(t - tau)`.

use crate::error::{Error, Result};
use crate::geometry::{interior_exit_time, PhasePoint};
use crate::kernels::KernelVariant;
use crate::quad::{GL32, GL64};
use crate::renewal::RenewalSolution;
use crate::sources::{maxwellian, RadialInitialData};
use crate::SQRT_TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    PowerLaw,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Raw,
    /// Fit through local maxima only; meaningful for oscillatory decay.
    Envelope,
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub model: FitModel,
    /// Exponent magnitude (power law) or rate (exponential).
    pub rate: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub mode: FitMode,
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, rms)`.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Reconstructs the weighted density `g` (gas) or intensity `u` (grey) at
/// time `t` and reduced phase point `p`.
pub fn reconstruct(
    sol: &RenewalSolution,
    f_in: &RadialInitialData,
    t: f64,
    p: &PhasePoint,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t = {t} negative")));
    }
    let grey = matches!(sol.kernel_variant, KernelVariant::Monokinetic);
    if p.speed == 0.0 {
        // the particle never meets the wall: its weighted density never
        // changes, which is exactly the obstruction to uniform decay
        return if grey {
            f_in.eval_shell(p.rho * p.rho)
        } else {
            Ok(f_in.eval_gas(p.rho, 0.0)? / maxwellian(0.0))
        };
    }
    let tau = interior_exit_time(p)?;
    if t > tau {
        let flux = sol.mu_at(t - tau);
        Ok(if grey { flux } else { SQRT_TWO_PI * flux })
    } else {
        let rho_back_sq =
            p.rho * p.rho - 2.0 * t * p.rho * p.speed * p.xi + (t * p.speed).powi(2);
        let rho_back = rho_back_sq.max(0.0).sqrt().min(1.0);
        if grey {
            f_in.eval_shell(rho_back * rho_back)
        } else {
            Ok(f_in.eval_gas(rho_back, p.speed)? / maxwellian(p.speed))
        }
    }
}

const SPEED_CUTOFF: f64 = 12.0;

/// Weighted equilibrium gap `iint |g - sqrt(2 pi) mu_inf|^p M dv dx`,
/// by tensorized quadrature split along the characteristic boundary
/// `t = tau(rho, r, xi)`; `rooted` divides out the exponent at the end.
pub fn lp_error(
    sol: &RenewalSolution,
    f_in: &RadialInitialData,
    t: f64,
    p_exponent: f64,
    rooted: bool,
) -> Result<f64> {
    if !(p_exponent >= 1.0) {
        return Err(Error::domain(format!("p = {p_exponent} below 1")));
    }
    if !f_in.is_gas() {
        return Err(Error::UnsupportedVariant("lp_error is for the gas problem"));
    }
    let target = SQRT_TWO_PI * sol.mu_infinity;
    let gap = |rho: f64, r: f64, xi: f64| -> f64 {
        let p = PhasePoint { rho, speed: r, xi };
        let g = reconstruct(sol, f_in, t, &p).unwrap_or(f64::NAN);
        (g - target).abs().powf(p_exponent)
    };
    // xi integral, split at the exited/not-exited boundary when it falls
    // inside (-1, 1)
    let xi_integral = |rho: f64, r: f64| -> f64 {
        if t == 0.0 || t * r <= 1.0 - rho {
            return GL32.integrate(-1.0, 1.0, |xi| gap(rho, r, xi));
        }
        if t * r >= 1.0 + rho {
            return GL32.integrate(-1.0, 1.0, |xi| gap(rho, r, xi));
        }
        let xi_star = ((t * r * t * r + rho * rho - 1.0) / (2.0 * t * r * rho)).clamp(-1.0, 1.0);
        GL32.integrate(-1.0, xi_star, |xi| gap(rho, r, xi))
            + GL32.integrate(xi_star, 1.0, |xi| gap(rho, r, xi))
    };
    let radial = |rho: f64| -> f64 {
        let mut breaks = vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0, SPEED_CUTOFF];
        if t > 0.0 {
            for b in [(1.0 - rho) / t, (1.0 + rho) / t, 2.0 / t] {
                if b > 0.0 && b < SPEED_CUTOFF {
                    breaks.push(b);
                }
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        crate::quad::integrate_panels(&GL32, &breaks, |r| {
            2.0 * std::f64::consts::PI * r * r * maxwellian(r) * xi_integral(rho, r)
        })
    };
    let v = GL32.integrate(0.0, 1.0, |rho| 4.0 * std::f64::consts::PI * rho * rho * radial(rho));
    let v = v.max(0.0);
    Ok(if rooted { v.powf(1.0 / p_exponent) } else { v })
}

/// Power-law fit of `errors` against `times` on a log-log scale over
/// `window`; `rate` is the decay exponent (sign-flipped slope).
pub fn power_fit(times: &[f64], errors: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != errors.len() {
        return Err(Error::FitDomain("times and errors differ in length".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in times.iter().zip(errors) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::FitDomain(format!("nonpositive error {e} at t = {t}")));
        }
        if !(t > 0.0) {
            return Err(Error::FitDomain(format!("nonpositive time {t} in window")));
        }
        xs.push(t.ln());
        ys.push(e.ln());
    }
    if xs.len() < 10 {
        return Err(Error::FitDomain(format!("only {} points in window", xs.len())));
    }
    let (slope, intercept, rms) = fit_line(&xs, &ys);
    Ok(DecayFit {
        model: FitModel::PowerLaw,
        rate: -slope,
        intercept,
        window,
        rms_residual: rms,
        mode: FitMode::Raw,
    })
}

/// Trapezoidal average of a sampled curve over `[t0, t1]`.
pub fn windowed_average(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= t0 && t <= t1)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::FitDomain("fewer than 2 points in averaging window".into()));
    }
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    Ok(acc / (pts.last().unwrap().0 - pts[0].0))
}

/// Outgoing wall flux at a boundary point `x`, computed in raw Cartesian
/// coordinates with a local tangent frame. Radial symmetry of the data makes
/// the result independent of `x`; nothing in this routine assumes it.
pub fn boundary_flux(
    sol: &RenewalSolution,
    f_in: &RadialInitialData,
    t: f64,
    x: [f64; 3],
) -> Result<f64> {
    let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("|x| = {norm}, not a boundary point")));
    }
    let n = [x[0] / norm, x[1] / norm, x[2] / norm];
    // Gram-Schmidt tangent frame from whichever axis is least aligned with n
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = helper[0] * n[0] + helper[1] * n[1] + helper[2] * n[2];
    let mut e1 = [helper[0] - dot * n[0], helper[1] - dot * n[1], helper[2] - dot * n[2]];
    let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / l, e1[1] / l, e1[2] / l];
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];

    let n_phi = 16;
    let grey = matches!(sol.kernel_variant, KernelVariant::Monokinetic);
    // g at the raw phase point (x, v): backward exit time from the 3D
    // quadratic, initial data from the raw backward position
    let g_raw = |v: [f64; 3]| -> f64 {
        let speed2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let speed = speed2.sqrt();
        let xv = x[0] * v[0] + x[1] * v[1] + x[2] * v[2];
        // |x - tau v| = 1 with |x| = 1: tau = (xv + |xv|) / speed^2
        let tau = (xv + xv.abs()) / speed2;
        if t > tau {
            let flux = sol.mu_at(t - tau);
            if grey {
                flux
            } else {
                SQRT_TWO_PI * flux
            }
        } else {
            let b = [x[0] - t * v[0], x[1] - t * v[1], x[2] - t * v[2]];
            let rb2 = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).min(1.0);
            if grey {
                f_in.eval_shell(rb2).unwrap_or(0.0)
            } else {
                f_in.eval_gas(rb2.sqrt(), speed).unwrap_or(0.0) / maxwellian(speed)
            }
        }
    };

    let angular = |r: f64, y: f64| -> f64 {
        let s = (1.0 - y * y).max(0.0).sqrt();
        let mut acc = 0.0;
        for iphi in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * iphi as f64 / n_phi as f64;
            let (cp, sp) = (phi.cos(), phi.sin());
            let v = [
                r * (y * n[0] + s * (cp * e1[0] + sp * e2[0])),
                r * (y * n[1] + s * (cp * e1[1] + sp * e2[1])),
                r * (y * n[2] + s * (cp * e1[2] + sp * e2[2])),
            ];
            acc += g_raw(v);
        }
        acc / n_phi as f64
    };

    let y_integral = |r: f64| -> f64 {
        // outgoing hemisphere; the exit boundary sits at y = t r / 2
        let y_star = (0.5 * t * r).clamp(0.0, 1.0);
        let f = |y: f64| angular(r, y) * y;
        if y_star > 0.0 && y_star < 1.0 {
            GL32.integrate(0.0, y_star, f) + GL32.integrate(y_star, 1.0, f)
        } else {
            GL32.integrate(0.0, 1.0, f)
        }
    };

    if grey {
        // monokinetic: all speeds are 1
        Ok(2.0 * std::f64::consts::PI * y_integral(1.0))
    } else {
        let v = crate::quad::integrate_panels(&GL64, &[0.0, 1.0, 2.0, 4.0, SPEED_CUTOFF], |r| {
            r.powi(3) * maxwellian(r) * y_integral(r)
        });
        Ok(2.0 * std::f64::consts::PI * v)
    }
}
