//! Exit-time renewal kernels.
//!
//! Both kernels are the image of a flux probability measure under the
//! chord-traversal time map. The gas kernel comes from the wall Maxwellian,
//!
//! ```text
//! K(tau) = (tau/4) * [8 - (c^4 + 4c^2 + 8) exp(-c^2/2)],   c = 2/tau,
//! ```
//!
//! obtained by integrating the antiderivative of `r^5 exp(-r^2/2)`. It is a
//! probability density with `K(tau) ~ 8/(3 tau^5)` at infinity, so moments of
//! order 0..3 are finite and the fourth diverges. The monokinetic kernel is
//! `K(s) = s/2` on `[0, 2)`, compactly supported, with entire Laplace
//! transform `K~(z) = (1 - exp(-2z)(1+2z)) / (2 z^2)`.
//!
//! ```
//! use knudsen::kernels::Kernel;
//! let gas = Kernel::gas_maxwellian();
//! // closed-form cumulative: F(t) = t^2 - (t^2 + 1) exp(-2/t^2)
//! assert!((gas.cumulative(1e6) - 1.0).abs() < 1e-12);
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{geometric_breaks, integrate_panels, GL64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelVariant {
    GasMaxwellian,
    Monokinetic,
}

impl KernelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            KernelVariant::GasMaxwellian => "gas-maxwellian",
            KernelVariant::Monokinetic => "monokinetic",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub variant: KernelVariant,
}

/// Integration split point beyond which the gas kernel tail is handled by its
/// asymptotic expansion.
const T_SPLIT: f64 = 50.0;

impl Kernel {
    pub fn gas_maxwellian() -> Self {
        Kernel { variant: KernelVariant::GasMaxwellian }
    }

    pub fn monokinetic() -> Self {
        Kernel { variant: KernelVariant::Monokinetic }
    }

    /// Upper end of the kernel support: 2 for monokinetic, infinite for gas.
    pub fn support_bound(&self) -> f64 {
        match self.variant {
            KernelVariant::GasMaxwellian => f64::INFINITY,
            KernelVariant::Monokinetic => 2.0,
        }
    }

    /// Kernel density at `tau`.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) {
            return Err(Error::domain(format!("negative tau = {tau}")));
        }
        Ok(match self.variant {
            KernelVariant::Monokinetic => {
                if tau < 2.0 {
                    0.5 * tau
                } else {
                    0.0
                }
            }
            KernelVariant::GasMaxwellian => gas_eval(tau),
        })
    }

    /// Cumulative distribution `F(t) = int_0^t K`.
    pub fn cumulative(&self, t: f64) -> f64 {
        match self.variant {
            KernelVariant::Monokinetic => {
                if t < 2.0 {
                    0.25 * t * t
                } else {
                    1.0
                }
            }
            KernelVariant::GasMaxwellian => 1.0 - gas_survival(t),
        }
    }

    /// Survival function `1 - F(t)`, evaluated without cancellation.
    pub fn survival(&self, t: f64) -> f64 {
        match self.variant {
            KernelVariant::Monokinetic => (1.0 - 0.25 * t * t).max(0.0),
            KernelVariant::GasMaxwellian => gas_survival(t),
        }
    }

    /// `int_0^infty tau^m K(tau) dtau`.
    pub fn moment(&self, m: u32) -> Result<f64> {
        match self.variant {
            KernelVariant::Monokinetic => {
                // int_0^2 s^{m+1}/2 ds = 2^{m+1}/(m+2)
                Ok(2f64.powi(m as i32 + 1) / (m as f64 + 2.0))
            }
            KernelVariant::GasMaxwellian => {
                if m >= 4 {
                    return Err(Error::DivergentMoment(m));
                }
                if m == 0 {
                    return Ok(1.0);
                }
                // m-th moment = m * int_0^infty t^{m-1} survival(t) dt
                let mf = m as f64;
                let body = integrate_panels(
                    &GL64,
                    &geometric_breaks(0.0, T_SPLIT, 0.5, 1.6),
                    |t| t.powi(m as i32 - 1) * gas_survival(t),
                );
                let tail = gas_survival_tail_integral(T_SPLIT, m as i32 - 1);
                Ok(mf * (body + tail))
            }
        }
    }

    /// Laplace transform `K~(z) = int_0^infty exp(-z tau) K(tau) dtau`.
    ///
    /// Entire for the monokinetic kernel; restricted to `Re(z) >= 0` for the
    /// gas kernel, whose algebraic tail forbids any left half-plane
    /// continuation.
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        match self.variant {
            KernelVariant::Monokinetic => Ok(mono_laplace(z)),
            KernelVariant::GasMaxwellian => {
                if z.re < 0.0 {
                    return Err(Error::HeavyTailDomain(z.re));
                }
                Ok(gas_laplace(z))
            }
        }
    }

    /// `d/dz K~(z)`, monokinetic only.
    pub fn laplace_derivative(&self, z: Complex64) -> Result<Complex64> {
        match self.variant {
            KernelVariant::Monokinetic => Ok(mono_laplace_derivative(z)),
            KernelVariant::GasMaxwellian => {
                Err(Error::UnsupportedVariant("gas-maxwellian has no closed Laplace derivative"))
            }
        }
    }

    /// `K(tau) * 3 tau^5 / 8`, which tends to 1 as `tau -> infinity`.
    pub fn tail_ratio(&self, tau: f64) -> Result<f64> {
        match self.variant {
            KernelVariant::GasMaxwellian => {
                if !(tau > 0.0) {
                    return Err(Error::domain(format!("tau = {tau} not positive")));
                }
                Ok(gas_eval(tau) * 3.0 * tau.powi(5) / 8.0)
            }
            KernelVariant::Monokinetic => {
                Err(Error::UnsupportedVariant("monokinetic kernel has compact support, no tail"))
            }
        }
    }
}

/// Bracket `8 - (c^4 + 4c^2 + 8) exp(-c^2/2)` as a series in `u = c^2/2`,
/// convergent and cancellation-free for small `u`:
/// `sum_{k>=3} (-1)^{k+1} [4/(k-2)! - 8/(k-1)! + 8/k!] u^k`.
fn gas_bracket_series(u: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact_km2 = 1.0; // (k-2)! at k = 3 -> 1!
    for k in 3..40 {
        let kf = k as f64;
        let fact_km1 = fact_km2 * (kf - 1.0);
        let fact_k = fact_km1 * kf;
        let coeff = 4.0 / fact_km2 - 8.0 / fact_km1 + 8.0 / fact_k;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * coeff * u.powi(k);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        fact_km2 = fact_km1;
    }
    sum
}

fn gas_eval(tau: f64) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    if tau <= 2.0 {
        // direct closed form, mild cancellation only near tau = 2
        2.0 * tau - (2.0 * tau + 4.0 / tau + 4.0 / tau.powi(3)) * (-2.0 / (tau * tau)).exp()
    } else {
        let u = 2.0 / (tau * tau);
        0.25 * tau * gas_bracket_series(u)
    }
}

/// Survival `1 - F(t)` with `F(t) = t^2 - (t^2 + 1) exp(-2/t^2)`; series
/// `sum_{k>=2} (-1)^k [1/k! - 2/(k+1)!] u^k`, `u = 2/t^2`, for large `t`.
fn gas_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t <= 2.0 {
        1.0 - (t * t - (t * t + 1.0) * (-2.0 / (t * t)).exp())
    } else {
        let u = 2.0 / (t * t);
        let mut sum = 0.0;
        let mut fact_k = 2.0; // k! at k = 2
        for k in 2..40 {
            let kf = k as f64;
            let fact_k1 = fact_k * (kf + 1.0);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * (1.0 / fact_k - 2.0 / fact_k1) * u.powi(k);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
            fact_k = fact_k1; // (k+1)! becomes k! for the next k
        }
        sum
    }
}

/// `int_T^infty t^p survival(t) dt` from the asymptotic expansion
/// `survival ~ 2/(3 t^4) - 2/(3 t^6) + 2/(5 t^8)`, valid for `T >= 50`,
/// `p <= 2`.
fn gas_survival_tail_integral(t_split: f64, p: i32) -> f64 {
    let e = |order: i32, coeff: f64| {
        let q = (order - p - 1) as f64;
        coeff / (q * t_split.powf(q))
    };
    e(4, 2.0 / 3.0) - e(6, 2.0 / 3.0) + e(8, 2.0 / 5.0)
}

/// Series for the monokinetic transform near `z = 0`:
/// `K~(z) = sum_n (-z)^n 2^{n+1} / (n! (n+2))`.
const MONO_SERIES_RADIUS: f64 = 0.25;

fn mono_laplace(z: Complex64) -> Complex64 {
    if z.norm() < MONO_SERIES_RADIUS {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0); // (-z)^n
        let mut fact = 1.0;
        for n in 0..30 {
            let nf = n as f64;
            let term = pow * (2f64.powi(n + 1) / (fact * (nf + 2.0)));
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
            pow *= -z;
            fact *= nf + 1.0;
        }
        sum
    } else {
        (1.0 - (-2.0 * z).exp() * (1.0 + 2.0 * z)) / (2.0 * z * z)
    }
}

fn mono_laplace_derivative(z: Complex64) -> Complex64 {
    if z.norm() < MONO_SERIES_RADIUS {
        // -sum_n (-z)^n 2^{n+2} / (n! (n+3))
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..30 {
            let nf = n as f64;
            let term = pow * (2f64.powi(n + 2) / (fact * (nf + 3.0)));
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
            pow *= -z;
            fact *= nf + 1.0;
        }
        -sum
    } else {
        let em = (-2.0 * z).exp();
        2.0 * em / z - (1.0 - em * (1.0 + 2.0 * z)) / (z * z * z)
    }
}

fn gas_laplace(z: Complex64) -> Complex64 {
    let t_max = 400.0;
    let width = (2.0_f64).min(6.0 / (1.0 + z.im.abs()));
    let n_panels = (t_max / width).ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..n_panels {
        let a = t_max * i as f64 / n_panels as f64;
        let b = t_max * (i + 1) as f64 / n_panels as f64;
        let c = 0.5 * (b - a);
        let d = 0.5 * (a + b);
        let mut panel = Complex64::new(0.0, 0.0);
        for (&x, &w) in GL64.nodes.iter().zip(&GL64.weights) {
            let t = c * x + d;
            panel += w * (-z * t).exp() * gas_eval(t);
        }
        sum += panel * c;
    }
    // asymptotic tail: int_T^infty exp(-z t) g(t) dt ~ exp(-z T) g(T) / (z + 5/T)
    let g = gas_eval(t_max);
    sum + (-z * t_max).exp() * g / (z + 5.0 / t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive;
    use approx::assert_abs_diff_eq;

    const SQRT_PI_OVER_2: f64 = 1.2533141373155003; // sqrt(pi/2)

    /// Definitional oracle: `K(tau) = (pi tau / (2 <M>_+)) int_0^{2/tau} M(r) r^5 dr`.
    fn gas_definition(tau: f64) -> f64 {
        let maxwellian = |r: f64| (2.0 * std::f64::consts::PI).powf(-1.5) * (-r * r / 2.0).exp();
        let flux = (2.0 * std::f64::consts::PI).powf(-0.5);
        let integral = adaptive(&|r: f64| maxwellian(r) * r.powi(5), 0.0, 2.0 / tau, 1e-15);
        std::f64::consts::PI * tau / (2.0 * flux) * integral
    }

    #[test]
    fn mono_eval_examples() {
        let k = Kernel::monokinetic();
        assert_eq!(k.eval(1.0).unwrap(), 0.5);
        assert_eq!(k.eval(3.0).unwrap(), 0.0);
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
        assert!(k.eval(-0.5).is_err());
    }

    #[test]
    fn gas_eval_closed_numbers() {
        let k = Kernel::gas_maxwellian();
        assert_abs_diff_eq!(
            k.eval(2.0).unwrap(),
            (8.0 - 13.0 * (-0.5f64).exp()) / 2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            k.eval(1.0).unwrap(),
            (8.0 - 40.0 * (-2.0f64).exp()) / 4.0,
            epsilon = 1e-15
        );
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gas_closed_form_matches_definition() {
        let k = Kernel::gas_maxwellian();
        // deterministic pseudo-random sample of tau in (0, 100]
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let tau = 100.0 * ((state >> 11) as f64 / (1u64 << 53) as f64).max(1e-3);
            let expect = gas_definition(tau);
            assert_abs_diff_eq!(k.eval(tau).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn moments() {
        let mono = Kernel::monokinetic();
        assert_eq!(mono.moment(0).unwrap(), 1.0);
        assert_eq!(mono.moment(1).unwrap(), 4.0 / 3.0);
        let gas = Kernel::gas_maxwellian();
        assert_eq!(gas.moment(0).unwrap(), 1.0);
        // E[2 cos(theta) / r] = 2 * (2/3) * (sqrt(pi/2)/2) under the flux measure
        assert_abs_diff_eq!(
            gas.moment(1).unwrap(),
            (2.0 / 3.0) * SQRT_PI_OVER_2,
            epsilon = 1e-11
        );
        assert!(matches!(gas.moment(4), Err(Error::DivergentMoment(4))));
    }

    #[test]
    fn gas_moment_by_direct_quadrature() {
        // cross-check m1 against direct quadrature of tau * K(tau)
        let gas = Kernel::gas_maxwellian();
        let body = integrate_panels(&GL64, &geometric_breaks(0.0, 200.0, 0.25, 1.5), |t| {
            t * gas_eval(t)
        });
        let tail = 8.0 / (9.0 * 200.0f64.powi(3)); // int_T^infty t * 8/(3 t^5) dt
        assert_abs_diff_eq!(gas.moment(1).unwrap(), body + tail, epsilon = 1e-9);
    }

    #[test]
    fn normalization_by_quadrature() {
        for k in [Kernel::gas_maxwellian(), Kernel::monokinetic()] {
            // a break at the support edge keeps the mono kink off panel interiors
            let breaks = match k.variant {
                KernelVariant::GasMaxwellian => geometric_breaks(0.0, 200.0, 0.25, 1.5),
                KernelVariant::Monokinetic => vec![0.0, 1.0, 2.0],
            };
            let body = integrate_panels(&GL64, &breaks, |t| k.eval(t).unwrap());
            let tail = match k.variant {
                KernelVariant::GasMaxwellian => {
                    let t = 200.0f64;
                    2.0 / (3.0 * t.powi(4)) - 2.0 / (3.0 * t.powi(6))
                }
                KernelVariant::Monokinetic => 0.0,
            };
            assert_abs_diff_eq!(body + tail, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn positivity_on_grid() {
        for k in [Kernel::gas_maxwellian(), Kernel::monokinetic()] {
            for i in 0..100_000 {
                let tau = i as f64 * 1e-3;
                assert!(k.eval(tau).unwrap() >= 0.0, "K({tau}) < 0");
            }
        }
    }

    #[test]
    fn mono_laplace_values() {
        let k = Kernel::monokinetic();
        assert_abs_diff_eq!(k.laplace(Complex64::new(0.0, 0.0)).unwrap().re, 1.0, epsilon = 1e-15);
        // oracle: int_0^2 exp(-t) t/2 dt = (1 - 3 e^{-2}) / 2
        let oracle = adaptive(&|t: f64| (-t).exp() * 0.5 * t, 0.0, 2.0, 1e-15);
        let v = k.laplace(Complex64::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(v.re, (1.0 - 3.0 * (-2.0f64).exp()) / 2.0, epsilon = 1e-14);
        for y in [1.0, 2.0, 5.0] {
            let v = k.laplace(Complex64::new(0.0, y)).unwrap();
            assert!(v.re < 1.0);
        }
    }

    #[test]
    fn mono_series_agrees_with_closed_form() {
        let k = Kernel::monokinetic();
        // evaluate on both sides of the series switch radius
        for z in [
            Complex64::new(0.249, 0.0),
            Complex64::new(0.251, 0.0),
            Complex64::new(0.2, 0.14),
            Complex64::new(-0.2, 0.2),
        ] {
            let closed = (1.0 - (-2.0 * z).exp() * (1.0 + 2.0 * z)) / (2.0 * z * z);
            assert!((k.laplace(z).unwrap() - closed).norm() < 1e-12);
        }
        // continuity across the series switch radius
        let a = mono_laplace(Complex64::new(0.25 - 1e-10, 0.0));
        let b = mono_laplace(Complex64::new(0.25 + 1e-10, 0.0));
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn laplace_derivative_values() {
        let k = Kernel::monokinetic();
        let d0 = k.laplace_derivative(Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(d0.re, -4.0 / 3.0, epsilon = 1e-15);
        // continuity across the series switch
        let near = k.laplace_derivative(Complex64::new(1e-6, 0.0)).unwrap();
        assert!((near - d0).norm() < 1e-5);
        // finite-difference oracle at z = 1
        let h = 1e-6;
        let fd = (mono_laplace(Complex64::new(1.0 + h, 0.0))
            - mono_laplace(Complex64::new(1.0 - h, 0.0)))
            / (2.0 * h);
        let d1 = k.laplace_derivative(Complex64::new(1.0, 0.0)).unwrap();
        assert!((d1 - fd).norm() < 1e-8);
        assert!(Kernel::gas_maxwellian().laplace_derivative(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn gas_laplace_domain_and_value() {
        let k = Kernel::gas_maxwellian();
        let err = k.laplace(Complex64::new(-0.1, 0.0)).unwrap_err();
        assert!(err.to_string().contains("heavy-tail"));
        assert_abs_diff_eq!(k.laplace(Complex64::new(0.0, 0.0)).unwrap().re, 1.0, epsilon = 1e-9);
        // against the mean: K~(z) ~ 1 - m1 z near 0
        let m1 = k.moment(1).unwrap();
        let v = k.laplace(Complex64::new(1e-4, 0.0)).unwrap();
        assert_abs_diff_eq!((1.0 - v.re) / 1e-4, m1, epsilon = 1e-3);
    }

    #[test]
    fn laplace_modulus_bound() {
        // |K~(z)| <= (1 + (1 + 2|z|) exp(-2 Re z)) / (2 |z|^2), and < 1 on Re > 0
        let k = Kernel::monokinetic();
        let mut state = 12345u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let z = Complex64::new(8.0 * rng() - 4.0, 40.0 * rng() - 20.0);
            if z.norm() < 1e-3 {
                continue;
            }
            let v = k.laplace(z).unwrap().norm();
            let bound =
                (1.0 + (1.0 + 2.0 * z.norm()) * (-2.0 * z.re).exp()) / (2.0 * z.norm_sqr());
            assert!(v <= bound * (1.0 + 1e-12), "bound violated at {z}");
            if z.re > 0.0 {
                assert!(v < 1.0);
            }
        }
    }

    #[test]
    fn tail_ratio_behavior() {
        let gas = Kernel::gas_maxwellian();
        assert!((gas.tail_ratio(50.0).unwrap() - 1.0).abs() < 0.01);
        let r5 = gas.tail_ratio(5.0).unwrap();
        assert!(r5.is_finite() && r5 > 0.0);
        // small-tau slope: K(tau) / (2 tau) -> 1
        assert!((gas.eval(1e-2).unwrap() / (2.0 * 1e-2) - 1.0).abs() < 1e-12);
        assert!(Kernel::monokinetic().tail_ratio(1.0).is_err());
    }

    #[test]
    fn tail_ratio_vs_sixth_order_expansion() {
        // oracle: bracket = c^6/6 + O(c^8), so K * 3 tau^5 / 8 = 1 - (3/4) c^2 ... ;
        // compare against the series evaluation at tau = 50 directly.
        let tau = 50.0f64;
        let u = 2.0 / (tau * tau);
        let bracket_leading = 4.0 * u.powi(3) / 3.0;
        let ratio = gas_eval(tau) / (0.25 * tau * bracket_leading);
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn survival_continuity_at_switch() {
        for t in [1.999999, 2.0, 2.000001] {
            let s = gas_survival(t);
            assert!(s > 0.0 && s < 1.0);
        }
        // branch switch at t = 2: closed form just below, series just above
        assert!((gas_survival(2.0) - gas_survival(2.0 + 1e-9)).abs() < 1e-9);
    }
}
