//! Marching solver for the renewal equation `mu(t) = S(t) + (K * mu)(t)`.
//!
//! The convolution is discretized by product integration: on each panel the
//! unknown `mu` is interpolated linearly while the kernel is integrated
//! exactly through its panel moments
//!
//! ```text
//! m0_j = F(t_{j+1}) - F(t_j),     m1_j = int_panel s K(s) ds,
//! ```
//!
//! giving weights `A_j = (t_{j+1} m0_j - m1_j)/dt` on `mu_{n-j}` and
//! `B_j = (m1_j - t_j m0_j)/dt` on `mu_{n-j-1}`. All weights are nonnegative
//! for a nonnegative kernel, the scheme is exact on constant solutions, and
//! the error is second order in `dt`.
//!
//! ```
//! use knudsen::kernels::Kernel;
//! use knudsen::renewal::solve;
//!
//! let k = Kernel::monokinetic();
//! // the source S = 1 - F(t) makes mu identically 1
//! let sol = solve(&k, &|t| k.survival(t), 5.0, 0.05).unwrap();
//! assert!(sol.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
//! ```

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelVariant};
use crate::quad::GL8;
use crate::sources::{source_integral, SourceIntegral};
use crate::{BALL_VOLUME, SQRT_TWO_PI};

#[derive(Debug, Clone)]
pub struct RenewalSolution {
    pub dt: f64,
    /// `mu(i * dt)` for `i = 0..=n`.
    pub values: Vec<f64>,
    /// Source samples on the same grid.
    pub source_values: Vec<f64>,
    pub mu_infinity: f64,
    pub kernel_variant: KernelVariant,
    /// Largest defect of the discrete equation over a subsample of steps,
    /// recomputed with an independent summation order.
    pub residual_max: f64,
}

impl RenewalSolution {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    /// Mean of the samples on `[from_t, horizon]`. Averaging an oscillatory
    /// tail over the closing stretch estimates the limit of the *discrete*
    /// solution, which sits `O(dt^2)` away from `mu_infinity`; rate fits
    /// against it are not floored by that offset.
    pub fn tail_average(&self, from_t: f64) -> Result<f64> {
        let i0 = (from_t / self.dt).ceil() as usize;
        if i0 + 1 >= self.values.len() {
            return Err(Error::domain(format!("tail window [{from_t}, horizon] is empty")));
        }
        let tail = &self.values[i0..];
        Ok(tail.iter().sum::<f64>() / tail.len() as f64)
    }

    /// Linear interpolation of `mu` on its grid, clamped to the horizon.
    pub fn mu_at(&self, t: f64) -> f64 {
        let n = self.values.len() - 1;
        let s = (t / self.dt).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

/// Convolution weights for the uniform grid: `weight[i]` multiplies
/// `mu_{n-i}` in the discrete memory term at step `n`.
fn convolution_weights(k: &Kernel, dt: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = vec![0.0; n]; // A_j
    let mut b = vec![0.0; n]; // B_j
    for j in 0..n {
        let t0 = j as f64 * dt;
        let t1 = (j + 1) as f64 * dt;
        let m0 = k.cumulative(t1) - k.cumulative(t0);
        let m1 = GL8.integrate(t0, t1, |s| s * k.eval(s).unwrap_or(f64::NAN));
        if !m0.is_finite() || !m1.is_finite() {
            return Err(Error::NonFinite { what: "kernel panel moment", t: t0 });
        }
        a[j] = (t1 * m0 - m1) / dt;
        b[j] = (m1 - t0 * m0) / dt;
    }
    let mut w = vec![0.0; n + 1];
    w[0] = a[0];
    for i in 1..n {
        w[i] = a[i] + b[i - 1];
    }
    w[n] = b[n - 1];
    // at step p the coefficient of mu_0 is B_{p-1} alone, not A_p + B_{p-1};
    // the caller subtracts a[p] * mu_0 to correct the combined weight
    Ok((w, a))
}

/// Threshold above which the per-step dot product is parallelized; the chunk
/// decomposition is fixed so the reduction order never depends on scheduling.
const PAR_CHUNK: usize = 1 << 14;

fn memory_dot(weights: &[f64], mu: &[f64], n: usize) -> f64 {
    // sum_{i=1..=n} w_i mu_{n-i} = sum_{m=0..n-1} mu_m w_{n-m}
    if n <= PAR_CHUNK {
        (0..n).map(|m| mu[m] * weights[n - m]).sum()
    } else {
        let partials: Vec<f64> = (0..n)
            .into_par_iter()
            .chunks(PAR_CHUNK)
            .map(|chunk| chunk.into_iter().map(|m| mu[m] * weights[n - m]).sum::<f64>())
            .collect();
        partials.iter().sum()
    }
}

/// Solves the renewal equation on `[0, horizon]` with step `dt`.
pub fn solve(
    k: &Kernel,
    source: &(dyn Fn(f64) -> f64 + Sync),
    horizon: f64,
    dt: f64,
) -> Result<RenewalSolution> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::domain(format!("need 0 < dt <= horizon, got dt = {dt}, horizon = {horizon}")));
    }
    let n = (horizon / dt).round() as usize;
    let source_values: Vec<f64> = (0..=n).into_par_iter().map(|i| source(i as f64 * dt)).collect();
    if let Some(i) = source_values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "source", t: i as f64 * dt });
    }
    let (weights, a_weights) = convolution_weights(k, dt, n)?;
    let implicit = 1.0 - weights[0];

    let mut mu = Vec::with_capacity(n + 1);
    mu.push(source_values[0]); // the memory integral vanishes at t = 0
    for step in 1..=n {
        let mut mem = memory_dot(&weights, &mu, step);
        if step < n {
            mem -= a_weights[step] * mu[0];
        }
        let v = (source_values[step] + mem) / implicit;
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "mu", t: step as f64 * dt });
        }
        mu.push(v);
    }

    // defect of the discrete equation, independent (reversed) summation order
    let mut residual_max = 0.0f64;
    let stride = (n / 64).max(1);
    for step in (1..=n).step_by(stride) {
        let mut mem: f64 = (0..step).rev().map(|m| mu[m] * weights[step - m]).sum();
        if step < n {
            mem -= a_weights[step] * mu[0];
        }
        let defect = (mu[step] - source_values[step] - mem - weights[0] * mu[step]).abs();
        residual_max = residual_max.max(defect);
    }

    let si = source_integral(source, horizon, None);
    let mu_infinity = limit_value(k, si)?;
    Ok(RenewalSolution {
        dt,
        values: mu,
        source_values,
        mu_infinity,
        kernel_variant: k.variant,
        residual_max,
    })
}

/// Limit flux `mu_inf = int_0^inf S / int_0^inf tau K(tau) dtau`.
pub fn limit_value(k: &Kernel, si: SourceIntegral) -> Result<f64> {
    let m1 = k.moment(1)?;
    if !(m1 > 0.0) {
        return Err(Error::domain("degenerate kernel: zero first moment"));
    }
    Ok(si.value / m1)
}

/// Numerical witnesses for the renewal-limit hypotheses: finite kernel
/// moments up to order 3, `t S(t) -> 0` and `t int_t^inf S -> 0`.
#[derive(Debug, Clone)]
pub struct FellerReport {
    pub moments_finite: [bool; 4],
    /// `t * S(t)` on the dyadic grid `t = 2^i`.
    pub t_source: Vec<f64>,
    /// `t * int_t^inf S` on the same grid.
    pub t_tail: Vec<f64>,
    pub t_source_decreasing: bool,
    pub t_tail_decreasing: bool,
    pub pass: bool,
}

pub fn feller_conditions(k: &Kernel, source: &dyn Fn(f64) -> f64) -> FellerReport {
    let moments_finite =
        [0u32, 1, 2, 3].map(|m| k.moment(m).map(|v| v.is_finite()).unwrap_or(false));
    let grid: Vec<f64> = (0..=10).map(|i| 2f64.powi(i)).collect();
    let total = source_integral(source, 4096.0, None).value;
    let t_source: Vec<f64> = grid.iter().map(|&t| t * source(t)).collect();
    let t_tail: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let head = source_integral(source, t, None).value;
            t * (total - head).max(0.0)
        })
        .collect();
    // decreasing over the last decade of the dyadic grid
    let decade = |v: &[f64]| v[v.len() - 4..].windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let t_source_decreasing = decade(&t_source);
    let t_tail_decreasing = decade(&t_tail);
    let pass = moments_finite.iter().all(|&b| b) && t_source_decreasing && t_tail_decreasing;
    FellerReport { moments_finite, t_source, t_tail, t_source_decreasing, t_tail_decreasing, pass }
}

/// Relative mismatch between `sqrt(2 pi) mu_inf |Omega|` and the initial mass.
pub fn mass_conservation_check(
    sol: &RenewalSolution,
    f_in: &crate::sources::RadialInitialData,
) -> Result<f64> {
    if !f_in.is_gas() {
        return Err(Error::UnsupportedVariant("mass conservation check is for gas data"));
    }
    let mass = f_in.mass()?;
    let lhs = SQRT_TWO_PI * sol.mu_infinity * BALL_VOLUME;
    Ok((lhs - mass).abs() / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{gas_source, gas_source_integral, RadialInitialData};
    use crate::HALF_SPACE_FLUX;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degenerate_kernel_returns_source() {
        // a kernel that is zero everywhere: mu = S exactly
        let k = Kernel::monokinetic();
        let (w, _) = convolution_weights(&k, 0.1, 10).unwrap();
        // reuse solve with a source supported before the kernel support: on
        // [0, dt] the memory term only sees w[0] = A_0 which is tiny but not
        // zero; the honest zero-kernel check goes through the weights
        assert!(w.iter().all(|&v| v >= 0.0));
        let total: f64 = w.iter().sum();
        assert_abs_diff_eq!(total, k.cumulative(1.0), epsilon = 1e-12);
    }

    #[test]
    fn manufactured_constant_is_exact() {
        // S = 1 - F(t) makes mu == 1; product integration reproduces it to
        // roundoff at any step size
        let k = Kernel::monokinetic();
        let s = move |t: f64| k.survival(t);
        let sol = solve(&k, &s, 10.0, 0.05).unwrap();
        for &v in &sol.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        assert!(sol.residual_max < 1e-12);
    }

    #[test]
    fn gas_equilibrium_fixed_point() {
        let k = Kernel::gas_maxwellian();
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let s = move |t: f64| gas_source(&f, t).unwrap();
        let sol = solve(&k, &s, 5.0, 2e-3).unwrap();
        for &v in &sol.values {
            assert_abs_diff_eq!(v, HALF_SPACE_FLUX, epsilon = 1e-6);
        }
    }

    /// Manufactured nonconstant solution for the monokinetic kernel:
    /// `mu(t) = 1 + exp(-t)`, with `(K * exp(-.))(t)` in closed form.
    fn manufactured_source(k: &Kernel, t: f64) -> f64 {
        let a = t.min(2.0);
        let conv_exp = (-t).exp() * ((a - 1.0) * a.exp() + 1.0) / 2.0;
        let conv = k.cumulative(t) + conv_exp;
        1.0 + (-t).exp() - conv
    }

    fn max_error(dt: f64) -> f64 {
        let k = Kernel::monokinetic();
        let s = move |t: f64| manufactured_source(&k, t);
        let sol = solve(&k, &s, 8.0, dt).unwrap();
        sol.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - (1.0 + (-(i as f64) * dt).exp())).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn second_order_convergence() {
        let e1 = max_error(0.02);
        let e2 = max_error(0.01);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, errors {e1} {e2}");
    }

    #[test]
    fn positivity_and_causality() {
        let k = Kernel::monokinetic();
        let bump = |t: f64| if t < 1.0 { (std::f64::consts::PI * t).sin().powi(2) } else { 0.0 };
        let sol = solve(&k, &bump, 20.0, 0.01).unwrap();
        assert!(sol.values.iter().all(|&v| v >= 0.0));
        assert_eq!(sol.values[0], bump(0.0));

        // causality: a later truncation changes nothing before the cut
        let cut = |t: f64| if t <= 10.0 { bump(t) } else { 0.0 };
        let sol2 = solve(&k, &cut, 10.0, 0.01).unwrap();
        for (a, b) in sol2.values.iter().zip(&sol.values) {
            assert_eq!(a, b, "causality violated");
        }
    }

    #[test]
    fn limit_values() {
        let k = Kernel::gas_maxwellian();
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let si = gas_source_integral(&f, 100.0).unwrap();
        assert_abs_diff_eq!(limit_value(&k, si).unwrap(), HALF_SPACE_FLUX, epsilon = 1e-12);
        // radiative arithmetic: int S = 0.4, moment 4/3 -> 0.3
        let si = crate::sources::SourceIntegral { value: 0.4, tail_bound: 0.0 };
        assert_abs_diff_eq!(
            limit_value(&Kernel::monokinetic(), si).unwrap(),
            0.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mass_conservation_equilibrium() {
        let k = Kernel::gas_maxwellian();
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let s = {
            let f = f.clone();
            move |t: f64| gas_source(&f, t).unwrap()
        };
        let mut sol = solve(&k, &s, 4.0, 0.01).unwrap();
        sol.mu_infinity = limit_value(&k, gas_source_integral(&f, 100.0).unwrap()).unwrap();
        assert!(mass_conservation_check(&sol, &f).unwrap() < 1e-8);
    }

    #[test]
    fn feller_report() {
        let k = Kernel::gas_maxwellian();
        let f = crate::sources::bounded_bump_preset();
        let s = move |t: f64| gas_source(&f, t).unwrap();
        let rep = feller_conditions(&k, &s);
        assert!(rep.pass, "{rep:?}");

        // compact supports: trivially pass
        let mono = Kernel::monokinetic();
        let s2 = |t: f64| if t < 2.0 { (1.0 - t / 2.0) * t } else { 0.0 };
        assert!(feller_conditions(&mono, &s2).pass);

        // S = 1/(t+1) fails the o(1/t) witnesses
        let s3 = |t: f64| 1.0 / (t + 1.0);
        let rep = feller_conditions(&mono, &s3);
        assert!(!rep.t_source_decreasing && !rep.pass);
    }

    #[test]
    fn interpolation_and_horizon() {
        let k = Kernel::monokinetic();
        let s = |t: f64| if t < 1.0 { 1.0 } else { 0.0 };
        let sol = solve(&k, &s, 2.0, 0.5).unwrap();
        assert_eq!(sol.horizon(), 2.0);
        let mid = sol.mu_at(0.25);
        assert_abs_diff_eq!(mid, 0.5 * (sol.values[0] + sol.values[1]), epsilon = 1e-15);
    }
}
