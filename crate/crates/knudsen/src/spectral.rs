//! Zeros of `1 - K~(z)` for the monokinetic kernel and the spectral
//! abscissa that governs the exponential relaxation of the grey problem.
//!
//! Counts are argument-principle winding numbers obtained by phase tracking
//! along rectangle contours; no quadrature of `K~' / (1 - K~)` is involved,
//! so every count is an exact integer. Zeros are refined by Newton iteration
//! and re-certified by a count in a shrunken box.
//!
//! ```
//! use knudsen::kernels::Kernel;
//! use knudsen::spectral::{count_zeros, Rect};
//!
//! let k = Kernel::monokinetic();
//! // z = 0 is the only zero near the origin, and none sit in Re z >= 0.05
//! let near = Rect::new(-0.1, 0.1, -0.5, 0.5).unwrap();
//! assert_eq!(count_zeros(&k, &near).unwrap(), 1);
//! let right = Rect::new(0.05, 2.0, -10.0, 10.0).unwrap();
//! assert_eq!(count_zeros(&k, &right).unwrap(), 0);
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{fit_line, DecayFit, FitMode, FitModel};
use crate::kernels::Kernel;
use crate::renewal::RenewalSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::domain(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn jittered(&self, step: u32) -> Rect {
        // deterministic outward inflation, documented retry policy
        let d = 1e-4 * (1.0 + step as f64) * (self.re_max - self.re_min).max(self.im_max - self.im_min);
        Rect {
            re_min: self.re_min - d,
            re_max: self.re_max + d,
            im_min: self.im_min - d,
            im_max: self.im_max + d,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZeroSet {
    pub rectangle: Rect,
    pub count: usize,
    pub zeros: Vec<Complex64>,
    pub refinement_residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectralAbscissa {
    pub alpha: f64,
    /// A nonzero zero achieving the abscissa, if one lies in the strip.
    pub witness_zero: Option<Complex64>,
    pub searched_strip: (f64, f64),
}

fn f_of(k: &Kernel, z: Complex64) -> Result<Complex64> {
    Ok(Complex64::new(1.0, 0.0) - k.laplace(z)?)
}

/// Modulus below which the contour is declared too close to a zero.
const CONTOUR_MIN_MODULUS: f64 = 1e-9;
const MAX_CONTOUR_RETRIES: u32 = 8;

/// Phase increment along one edge, adaptively bisected until every step
/// turns by less than pi/2.
fn edge_phase(k: &Kernel, a: Complex64, b: Complex64) -> Result<f64> {
    fn go(
        k: &Kernel,
        a: Complex64,
        fa: Complex64,
        b: Complex64,
        fb: Complex64,
        depth: u32,
        min_depth: u32,
    ) -> Result<f64> {
        let step = (fb / fa).arg();
        if step.abs() < std::f64::consts::FRAC_PI_2 && depth >= min_depth {
            return Ok(step);
        }
        if depth > 48 {
            return Err(Error::Contour { retries: depth });
        }
        let m = 0.5 * (a + b);
        let fm = f_of(k, m)?;
        if fm.norm() < CONTOUR_MIN_MODULUS {
            return Err(Error::Contour { retries: depth });
        }
        Ok(go(k, a, fa, m, fm, depth + 1, min_depth)?
            + go(k, m, fm, b, fb, depth + 1, min_depth)?)
    }
    let fa = f_of(k, a)?;
    let fb = f_of(k, b)?;
    if fa.norm() < CONTOUR_MIN_MODULUS || fb.norm() < CONTOUR_MIN_MODULUS {
        return Err(Error::Contour { retries: 0 });
    }
    // force segments below 1/4 so a full phase turn cannot hide in one step
    let min_depth = (((b - a).norm() / 0.25).log2().ceil().max(2.0)) as u32;
    go(k, a, fa, b, fb, 0, min_depth)
}

fn count_zeros_once(k: &Kernel, rect: &Rect) -> Result<i64> {
    let c = rect.corners();
    let mut total = 0.0;
    for i in 0..4 {
        total += edge_phase(k, c[i], c[(i + 1) % 4])?;
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.25 {
        return Err(Error::Contour { retries: 0 });
    }
    Ok(rounded as i64)
}

/// Winding number of `1 - K~` around the rectangle; retries with a
/// deterministic jitter when the contour grazes a zero.
pub fn count_zeros(k: &Kernel, rect: &Rect) -> Result<usize> {
    let mut last_err = None;
    for attempt in 0..MAX_CONTOUR_RETRIES {
        let r = if attempt == 0 { *rect } else { rect.jittered(attempt) };
        match count_zeros_once(k, &r) {
            Ok(n) => return Ok(n.max(0) as usize),
            Err(e @ Error::Contour { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let _ = last_err;
    Err(Error::Contour { retries: MAX_CONTOUR_RETRIES })
}

/// Newton iteration on `F(z) = 1 - K~(z)`, `F' = -K~'`.
pub fn refine_zero(k: &Kernel, seed: Complex64) -> Result<Complex64> {
    let mut z = seed;
    for _ in 0..50 {
        let f = f_of(k, z)?;
        if f.norm() < 1e-13 {
            return Ok(z);
        }
        let df = -k.laplace_derivative(z)?;
        if df.norm() < 1e-300 {
            break;
        }
        let step = f / df;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            break;
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) && f_of(k, z)?.norm() < 1e-12 {
            return Ok(z);
        }
    }
    if f_of(k, z)?.norm() < 1e-12 {
        Ok(z)
    } else {
        Err(Error::Refinement { seed })
    }
}

/// All zeros inside the rectangle: count, isolate by bisection into count-1
/// boxes, refine each by Newton, certify by a recount around the result.
pub fn zeros_in(k: &Kernel, rect: &Rect) -> Result<ZeroSet> {
    let count = count_zeros(k, rect)?;
    let mut zeros = Vec::new();
    if count > 0 {
        let mut stack = vec![(*rect, count)];
        while let Some((r, n)) = stack.pop() {
            if n == 0 {
                continue;
            }
            if n == 1 {
                // Newton from the center can escape the box; seed from a
                // quarter point as a fallback, and if both fail, fall through
                // to the bisection splitter to shrink the box around the zero
                let q = Complex64::new(
                    0.75 * r.re_min + 0.25 * r.re_max,
                    0.75 * r.im_min + 0.25 * r.im_max,
                );
                let attempt = refine_zero(k, r.center()).or_else(|_| refine_zero(k, q));
                if let Ok(z) = attempt {
                    let pad = r.jittered(0);
                    if pad.contains(z) {
                        zeros.push(z);
                        continue;
                    }
                }
                let diam = (r.re_max - r.re_min).max(r.im_max - r.im_min);
                if diam < 1e-8 {
                    return Err(Error::Refinement { seed: r.center() });
                }
            }
            // split along the longer side; move the cut if it grazes a zero
            let mut placed = false;
            for frac in [0.5, 0.47, 0.55, 0.41, 0.61] {
                let (ra, rb) = if r.re_max - r.re_min >= r.im_max - r.im_min {
                    let m = r.re_min + frac * (r.re_max - r.re_min);
                    (Rect { re_max: m, ..r }, Rect { re_min: m, ..r })
                } else {
                    let m = r.im_min + frac * (r.im_max - r.im_min);
                    (Rect { im_max: m, ..r }, Rect { im_min: m, ..r })
                };
                match (count_zeros(k, &ra), count_zeros(k, &rb)) {
                    (Ok(na), Ok(nb)) if na + nb == n => {
                        stack.push((ra, na));
                        stack.push((rb, nb));
                        placed = true;
                        break;
                    }
                    _ => continue,
                }
            }
            if !placed {
                return Err(Error::Contour { retries: MAX_CONTOUR_RETRIES });
            }
        }
    }
    zeros.sort_by(|a, b| (a.im, a.re).partial_cmp(&(b.im, b.re)).unwrap());
    zeros.dedup_by(|a, b| (*a - *b).norm() < 1e-8);
    let residuals: Result<Vec<f64>> = zeros.iter().map(|&z| Ok(f_of(k, z)?.norm())).collect();
    Ok(ZeroSet { rectangle: *rect, count, zeros, refinement_residuals: residuals? })
}

/// Height above which `|K~| < 1/2` throughout `Re(z) >= -depth`, from the
/// modulus bound `|K~(z)| <= (1 + (1 + 2|z|) e^{-2 Re z}) / (2 |z|^2)`.
pub fn safe_height(depth: f64) -> f64 {
    let e = (2.0 * depth).exp();
    // solve r^2 = 1 + (1 + 2r) e^{2 depth} and pad
    let r = (2.0 * e + (4.0 * e * e + e + 1.0).sqrt()).max(4.0);
    1.5 * r
}

/// Locates every zero in the strip `(-depth, 0] x [0, safe_height]`,
/// excluding `z = 0`, and returns the spectral abscissa.
pub fn spectral_abscissa(strip_depth: f64) -> Result<SpectralAbscissa> {
    if !(strip_depth > 0.0) {
        return Err(Error::domain(format!("strip depth {strip_depth} not positive")));
    }
    let k = Kernel::monokinetic();
    let height = safe_height(strip_depth);
    // stay off the real axis (z = 0 is a zero) and off Re = 0
    let im_floor = 1e-3;
    let re_ceil = -1e-6;
    let mut zeros: Vec<Complex64> = Vec::new();
    let rows = (height / 4.0).ceil() as usize;
    for row in 0..rows {
        let im_min = if row == 0 { im_floor } else { row as f64 * 4.0 };
        let im_max = ((row + 1) as f64) * 4.0;
        let rect = Rect::new(-strip_depth, re_ceil, im_min, im_max)?;
        // cheap modulus pruning: no zeros where the bound keeps |K~| < 1
        let r_min = (rect.re_max.min(0.0).powi(2) + rect.im_min * rect.im_min).sqrt();
        let r_max = (rect.re_min * rect.re_min + rect.im_max * rect.im_max).sqrt();
        let bound =
            (1.0 + (1.0 + 2.0 * r_max) * (-2.0 * rect.re_min).exp()) / (2.0 * r_min * r_min).max(1e-300);
        if r_min > 1.0 && bound < 1.0 {
            continue;
        }
        let set = zeros_in(&k, &rect)?;
        zeros.extend(set.zeros);
    }
    zeros.retain(|z| z.norm() > 1e-6);
    let witness = zeros
        .iter()
        .copied()
        .min_by(|a, b| (-a.re).partial_cmp(&(-b.re)).unwrap());
    let alpha = witness.map(|z| -z.re).unwrap_or(strip_depth);
    Ok(SpectralAbscissa {
        alpha,
        witness_zero: witness,
        searched_strip: (-strip_depth, 0.0),
    })
}

/// Independent certification of the abscissa: bisection on rectangle counts
/// only, no Newton refinement involved.
pub fn abscissa_by_bisection(depth: f64, tol: f64) -> Result<f64> {
    let k = Kernel::monokinetic();
    let height = safe_height(depth);
    let has_zero_past = |a: f64| -> Result<bool> {
        let rect = Rect::new(-a, -1e-6, 1e-3, height)?;
        Ok(count_zeros(&k, &rect)? > 0)
    };
    if !has_zero_past(depth)? {
        return Err(Error::domain(format!("no zeros within depth {depth}")));
    }
    let (mut lo, mut hi) = (0.0, depth); // alpha in (lo, hi]
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if has_zero_past(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits `log |mu(t) - mu_inf|` against `t` over the window; envelope mode
/// fits through local maxima only, the right reading of an oscillatory
/// `O(e^{-alpha t})` envelope.
pub fn exponential_rate_fit(
    sol: &RenewalSolution,
    window: (f64, f64),
    mode: FitMode,
) -> Result<DecayFit> {
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (i, &v) in sol.values.iter().enumerate() {
        let t = i as f64 * sol.dt;
        if t < window.0 || t > window.1 {
            continue;
        }
        let gap = (v - sol.mu_infinity).abs();
        if gap > 0.0 {
            ts.push(t);
            logs.push(gap.ln());
        }
    }
    if ts.is_empty() {
        return Err(Error::WindowTooLate);
    }
    if ts.len() < 10 {
        return Err(Error::FitDomain(format!("only {} usable points in window", ts.len())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = match mode {
        FitMode::Raw => (ts, logs),
        FitMode::Envelope => {
            let mut px = Vec::new();
            let mut py = Vec::new();
            for i in 1..ts.len() - 1 {
                if logs[i] >= logs[i - 1] && logs[i] >= logs[i + 1] {
                    px.push(ts[i]);
                    py.push(logs[i]);
                }
            }
            if px.len() < 4 {
                return Err(Error::FitDomain(format!(
                    "only {} envelope peaks in window",
                    px.len()
                )));
            }
            (px, py)
        }
    };
    let (slope, intercept, rms) = fit_line(&xs, &ys);
    Ok(DecayFit {
        model: FitModel::Exponential,
        rate: -slope,
        intercept,
        window,
        rms_residual: rms,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelVariant;
    use approx::assert_abs_diff_eq;

    #[test]
    fn counts_near_origin_and_right_half_plane() {
        let k = Kernel::monokinetic();
        let r = Rect::new(-0.1, 0.1, -0.5, 0.5).unwrap();
        assert_eq!(count_zeros(&k, &r).unwrap(), 1); // z = 0 only
        let r = Rect::new(0.05, 2.0, -10.0, 10.0).unwrap();
        assert_eq!(count_zeros(&k, &r).unwrap(), 0);
        let r = Rect::new(-0.1, 0.1, 0.5, 5.0).unwrap();
        assert_eq!(count_zeros(&k, &r).unwrap(), 0);
    }

    #[test]
    fn refine_converges_to_origin() {
        let k = Kernel::monokinetic();
        let z = refine_zero(&k, Complex64::new(1e-3, 1e-3)).unwrap();
        assert!(z.norm() < 1e-10, "{z}");
    }

    #[test]
    fn refine_flags_zero_free_seeds() {
        let k = Kernel::monokinetic();
        // deep in the right half plane F is near 1 and Newton stalls or
        // walks out; either way the flagged result is not a certified zero
        match refine_zero(&k, Complex64::new(1.5, 4.0)) {
            Err(Error::Refinement { .. }) => {}
            Ok(z) => assert!(z.re < 0.05, "converged into the zero-free region: {z}"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn first_zero_pair_and_certification() {
        let k = Kernel::monokinetic();
        let upper = Rect::new(-1.0, -1e-6, 1.0, 6.0).unwrap();
        let set = zeros_in(&k, &upper).unwrap();
        assert_eq!(set.count, 1);
        let z = set.zeros[0];
        assert!(set.refinement_residuals[0] < 1e-10);
        // conjugate symmetry
        let lower = Rect::new(-1.0, -1e-6, -6.0, -1.0).unwrap();
        let set_c = zeros_in(&k, &lower).unwrap();
        assert_eq!(set_c.count, 1);
        assert!((set_c.zeros[0] - z.conj()).norm() < 1e-10);
        // certification in a tiny box
        let tiny = Rect::new(z.re - 1e-6, z.re + 1e-6, z.im - 1e-6, z.im + 1e-6).unwrap();
        assert_eq!(count_zeros(&k, &tiny).unwrap(), 1);
    }

    #[test]
    fn abscissa_newton_vs_bisection() {
        let a = spectral_abscissa(1.2).unwrap();
        assert!(a.alpha > 0.0);
        assert!(a.witness_zero.is_some());
        let b = abscissa_by_bisection(1.2, 1e-9).unwrap();
        assert_abs_diff_eq!(a.alpha, b, epsilon = 1e-8);
    }

    #[test]
    fn no_zero_region_box_count() {
        // the defining property of alpha as a literal box count
        let a = spectral_abscissa(1.2).unwrap();
        let k = Kernel::monokinetic();
        let delta = 1e-3;
        let r = Rect::new(-a.alpha + delta, -delta, delta, safe_height(a.alpha)).unwrap();
        assert_eq!(count_zeros(&k, &r).unwrap(), 0);
    }

    #[test]
    fn tile_additivity_and_sampling_stability() {
        let k = Kernel::monokinetic();
        let whole = Rect::new(-1.5, -1e-6, 0.5, 8.0).unwrap();
        let total = count_zeros(&k, &whole).unwrap();
        let mid = 4.0;
        let a = count_zeros(&k, &Rect::new(-1.5, -1e-6, 0.5, mid).unwrap()).unwrap();
        let b = count_zeros(&k, &Rect::new(-1.5, -1e-6, mid, 8.0).unwrap()).unwrap();
        assert_eq!(total, a + b);
    }

    #[test]
    fn rate_fit_on_synthetic_decay() {
        let dt = 0.01;
        let n = 4000;
        let mu_inf = 0.3;
        let mk = |f: &dyn Fn(f64) -> f64| RenewalSolution {
            dt,
            values: (0..=n).map(|i| mu_inf + f(i as f64 * dt)).collect(),
            source_values: vec![0.0; n + 1],
            mu_infinity: mu_inf,
            kernel_variant: KernelVariant::Monokinetic,
            residual_max: 0.0,
        };
        let sol = mk(&|t| (-0.5 * t).exp());
        let fit = exponential_rate_fit(&sol, (3.0, 30.0), FitMode::Raw).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.5, epsilon = 1e-6);

        // oscillatory: envelope mode recovers alpha
        let alpha = 0.696;
        let beta = 3.7765;
        let sol = mk(&|t| (-alpha * t).exp() * (beta * t).cos());
        let fit = exponential_rate_fit(&sol, (3.0, 30.0), FitMode::Envelope).unwrap();
        assert!((fit.rate - alpha).abs() / alpha < 0.05, "rate {}", fit.rate);

        // window past all resolvable decay
        let sol = mk(&|_| 0.0);
        assert!(matches!(
            exponential_rate_fit(&sol, (3.0, 30.0), FitMode::Raw),
            Err(Error::WindowTooLate)
        ));
    }

    #[test]
    fn gas_kernel_contour_is_rejected() {
        let k = Kernel::gas_maxwellian();
        let r = Rect::new(-0.5, 0.5, 0.1, 1.0).unwrap();
        assert!(count_zeros(&k, &r).is_err());
    }
}
