//! Radial initial data and the renewal source terms.
//!
//! The gas source is the outgoing wall flux carried by particles of the
//! initial data that have not yet touched the wall,
//!
//! ```text
//! S(t) = 2 pi int_0^inf int_0^1 f_in(sqrt(1 + t^2 r^2 - 2 t r y), r)
//!                                 1_{t r < 2 y} r^3 y dy dr,
//! ```
//!
//! with `y` the cosine of the angle at the wall. The radiative source is the
//! same quantity for monokinetic intensity, `S(t) = (1/2) int_t^2
//! u_in(1 + t^2 - t s) s ds`, compactly supported in `[0, 2]`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quad::{adaptive, geometric_breaks, integrate_panels, GL64};
use crate::{BALL_VOLUME, SQRT_TWO_PI};

const INV_TWO_PI_CUBED_SQRT: f64 = 0.06349363593424097; // (2 pi)^{-3/2}

/// Unit Maxwellian speed density factor `M(r) = (2 pi)^{-3/2} exp(-r^2/2)`.
pub fn maxwellian(r: f64) -> f64 {
    INV_TWO_PI_CUBED_SQRT * (-0.5 * r * r).exp()
}

/// Speed-axis truncation: the Maxwellian weight below 1e-31 past r = 12.
const SPEED_CUTOFF: f64 = 12.0;

type GasFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type ShellFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonnegative profile on `(rho, speed)`, callable or tabulated.
#[derive(Clone)]
pub enum RadialProfile {
    Callable(GasFn),
    Table(Arc<Table2>),
}

impl RadialProfile {
    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        RadialProfile::Callable(Arc::new(f))
    }

    /// Three-column table `rho speed value` on a rectangular sorted grid.
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(RadialProfile::Table(Arc::new(Table2::load(path)?)))
    }

    pub fn eval(&self, rho: f64, speed: f64) -> f64 {
        match self {
            RadialProfile::Callable(f) => f(rho, speed),
            RadialProfile::Table(t) => t.eval(rho, speed),
        }
    }
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Callable(_) => f.write_str("RadialProfile::Callable(..)"),
            RadialProfile::Table(_) => f.write_str("RadialProfile::Table(..)"),
        }
    }
}

/// Nonnegative profile of the squared radius, for grey radiative data.
#[derive(Clone)]
pub enum ShellProfile {
    Callable(ShellFn),
    Table(Arc<Table1>),
}

impl ShellProfile {
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ShellProfile::Callable(Arc::new(f))
    }

    /// Two-column table `rho_squared value`, sorted.
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(ShellProfile::Table(Arc::new(Table1::load(path)?)))
    }

    pub fn eval(&self, rho_squared: f64) -> f64 {
        match self {
            ShellProfile::Callable(f) => f(rho_squared),
            ShellProfile::Table(t) => t.eval(rho_squared),
        }
    }

    /// C^1 bump `((q - a)(b - q))^2`, normalized to peak 1, supported in
    /// `[a, b]` with `0 < a < b < 1`.
    pub fn bump(a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::domain(format!("bump support [{a}, {b}] not inside (0, 1)")));
        }
        let peak = ((b - a) * (b - a) / 4.0).powi(2);
        Ok(ShellProfile::from_fn(move |q| {
            if q <= a || q >= b {
                0.0
            } else {
                ((q - a) * (b - q)).powi(2) / peak
            }
        }))
    }
}

impl fmt::Debug for ShellProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShellProfile::Callable(_) => f.write_str("ShellProfile::Callable(..)"),
            ShellProfile::Table(_) => f.write_str("ShellProfile::Table(..)"),
        }
    }
}

/// Radial initial data presets.
#[derive(Debug, Clone)]
pub enum RadialInitialData {
    /// `f_in = c M`, a constant multiple of the wall Maxwellian.
    EquilibriumMultiple { c: f64 },
    /// `0 <= f_in(rho, r) <= bound_constant * M(r)`.
    BoundedRadial { profile: RadialProfile, bound_constant: f64 },
    /// `f_in = eps^{-6} 1_{|x| <= eps} 1_{|v| <= eps}`.
    ConcentratedBox { epsilon: f64 },
    /// Grey intensity `u_in(rho^2)`, compactly supported in `(0, 1)`.
    RadialShellGrey { profile: ShellProfile },
}

impl RadialInitialData {
    pub fn equilibrium_multiple(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::domain(format!("equilibrium multiple c = {c} not positive")));
        }
        Ok(RadialInitialData::EquilibriumMultiple { c })
    }

    /// Validates `profile <= bound_constant * M` on a sample grid.
    pub fn bounded_radial(profile: RadialProfile, bound_constant: f64) -> Result<Self> {
        if !(bound_constant > 0.0) {
            return Err(Error::domain(format!(
                "bound_constant = {bound_constant} not positive"
            )));
        }
        for i in 0..=60 {
            let rho = i as f64 / 60.0;
            for j in 0..=60 {
                let r = SPEED_CUTOFF * j as f64 / 60.0;
                let v = profile.eval(rho, r);
                if !(v >= 0.0) {
                    return Err(Error::domain(format!("profile({rho}, {r}) = {v} negative")));
                }
                if v > bound_constant * maxwellian(r) * (1.0 + 1e-9) {
                    return Err(Error::domain(format!(
                        "profile({rho}, {r}) = {v} exceeds bound_constant * M"
                    )));
                }
            }
        }
        Ok(RadialInitialData::BoundedRadial { profile, bound_constant })
    }

    pub fn concentrated_box(epsilon: f64) -> Result<Self> {
        if !(0.0 < epsilon && epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon = {epsilon} outside (0, 1)")));
        }
        Ok(RadialInitialData::ConcentratedBox { epsilon })
    }

    /// Validates compact support in `(0, 1)`: the profile must vanish at the
    /// center and at the wall, so the radiative source vanishes at `t = 0`.
    pub fn radial_shell_grey(profile: ShellProfile) -> Result<Self> {
        for q in [0.0, 1e-4, 1.0 - 1e-4, 1.0] {
            let v = profile.eval(q);
            if v.abs() > 1e-12 {
                return Err(Error::domain(format!(
                    "shell profile({q}) = {v}, must vanish near 0 and 1"
                )));
            }
        }
        Ok(RadialInitialData::RadialShellGrey { profile })
    }

    pub fn is_gas(&self) -> bool {
        !matches!(self, RadialInitialData::RadialShellGrey { .. })
    }

    /// `f_in(rho, speed)` for the gas variants.
    pub fn eval_gas(&self, rho: f64, speed: f64) -> Result<f64> {
        match self {
            RadialInitialData::EquilibriumMultiple { c } => Ok(c * maxwellian(speed)),
            RadialInitialData::BoundedRadial { profile, .. } => {
                Ok(profile.eval(rho, speed).max(0.0))
            }
            RadialInitialData::ConcentratedBox { epsilon } => {
                if rho <= *epsilon && speed <= *epsilon {
                    Ok(epsilon.powi(-6))
                } else {
                    Ok(0.0)
                }
            }
            RadialInitialData::RadialShellGrey { .. } => {
                Err(Error::UnsupportedVariant("radial-shell-grey is not gas data"))
            }
        }
    }

    /// `u_in(rho^2)` for the grey variant.
    pub fn eval_shell(&self, rho_squared: f64) -> Result<f64> {
        match self {
            RadialInitialData::RadialShellGrey { profile } => {
                Ok(profile.eval(rho_squared).max(0.0))
            }
            _ => Err(Error::UnsupportedVariant("gas data has no shell profile")),
        }
    }

    /// Total initial mass `iint f_in dx dv` (gas) or `iint u_in dx domega`
    /// over the sphere of directions (grey), by independent radial quadrature.
    pub fn mass(&self) -> Result<f64> {
        match self {
            RadialInitialData::EquilibriumMultiple { c } => Ok(c * BALL_VOLUME),
            RadialInitialData::ConcentratedBox { epsilon } => {
                // (eps^{-6}) * (4 pi eps^3 / 3)^2 = |B|^2
                let _ = epsilon;
                Ok(BALL_VOLUME * BALL_VOLUME)
            }
            RadialInitialData::BoundedRadial { profile, .. } => {
                let inner = |rho: f64| {
                    integrate_panels(&GL64, &[0.0, 2.0, 5.0, SPEED_CUTOFF], |r| {
                        profile.eval(rho, r).max(0.0) * r * r
                    })
                };
                let outer = integrate_panels(&GL64, &[0.0, 0.5, 1.0], |rho| inner(rho) * rho * rho);
                Ok(16.0 * std::f64::consts::PI * std::f64::consts::PI * outer)
            }
            RadialInitialData::RadialShellGrey { profile } => {
                let v = integrate_panels(&GL64, &[0.0, 0.5, 1.0], |rho| {
                    profile.eval(rho * rho).max(0.0) * rho * rho
                });
                Ok(16.0 * std::f64::consts::PI * std::f64::consts::PI * v)
            }
        }
    }

    /// Pointwise supremum of `f_in`, the constant in the `t^{-4}` source tail.
    pub fn sup_bound(&self) -> f64 {
        match self {
            RadialInitialData::EquilibriumMultiple { c } => c * INV_TWO_PI_CUBED_SQRT,
            RadialInitialData::BoundedRadial { bound_constant, .. } => {
                bound_constant * INV_TWO_PI_CUBED_SQRT
            }
            RadialInitialData::ConcentratedBox { epsilon } => epsilon.powi(-6),
            RadialInitialData::RadialShellGrey { profile } => {
                (0..=1000).map(|i| profile.eval(i as f64 / 1000.0)).fold(0.0, f64::max)
            }
        }
    }
}

/// Gas source term `S(t)`: outgoing wall flux of particles of the initial
/// data still on their first flight at time `t`.
pub fn gas_source(f_in: &RadialInitialData, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t = {t} negative")));
    }
    if let RadialInitialData::ConcentratedBox { epsilon } = f_in {
        return Ok(box_source(*epsilon, t));
    }
    if !f_in.is_gas() {
        return Err(Error::UnsupportedVariant("radial-shell-grey is not gas data"));
    }
    // indicator t r < 2 y confines r below 2/t and y above t r / 2
    let r_max = if t > 0.0 { SPEED_CUTOFF.min(2.0 / t) } else { SPEED_CUTOFF };
    let inner = |r: f64| -> f64 {
        let y_min = (0.5 * t * r).min(1.0);
        GL64.integrate(y_min, 1.0, |y| {
            let rho2 = 1.0 + t * t * r * r - 2.0 * t * r * y;
            let rho = rho2.max(0.0).sqrt().min(1.0);
            f_in.eval_gas(rho, r).unwrap_or(0.0) * y
        })
    };
    let mid = 0.5 * r_max;
    let v = integrate_panels(&GL64, &[0.0, mid, r_max], |r| inner(r) * r.powi(3));
    Ok(2.0 * std::f64::consts::PI * v)
}

/// Concentrated-box source, exact in the angular variable: the support makes
/// the `y` integral elementary, leaving a one-dimensional smooth `r` integral.
fn box_source(epsilon: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0; // backward position sits on the wall, outside the box
    }
    // support: |1 - t r| < eps and r <= eps
    let r_lo = ((1.0 - epsilon) / t).max(0.0);
    let r_hi = ((1.0 + epsilon) / t).min(epsilon);
    if r_hi <= r_lo {
        return 0.0;
    }
    let v = GL64.integrate(r_lo, r_hi, |r| {
        let y1 = (1.0 + t * t * r * r - epsilon * epsilon) / (2.0 * t * r);
        let y1 = y1.clamp(0.5 * t * r, 1.0);
        r.powi(3) * 0.5 * (1.0 - y1 * y1)
    });
    2.0 * std::f64::consts::PI * epsilon.powi(-6) * v
}

/// Radiative source `S(t) = (1/2) int_t^2 u_in(1 + t^2 - t s) s ds`.
pub fn radiative_source(u_in: &RadialInitialData, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t = {t} negative")));
    }
    let profile = match u_in {
        RadialInitialData::RadialShellGrey { profile } => profile,
        _ => return Err(Error::UnsupportedVariant("radiative source needs radial-shell-grey")),
    };
    if t >= 2.0 {
        return Ok(0.0);
    }
    // profiles are only piecewise smooth at their support edges, so a fixed
    // panel rule stalls around 1e-6; the adaptive driver finds the kinks
    let f = |s: f64| profile.eval((1.0 + t * t - t * s).clamp(0.0, 1.0)) * s;
    Ok(0.5 * adaptive(&f, t, 2.0, 1e-13))
}

/// Time integral of a source with its tail error bar.
#[derive(Debug, Clone, Copy)]
pub struct SourceIntegral {
    pub value: f64,
    /// Bound on the neglected `[horizon, infinity)` tail.
    pub tail_bound: f64,
}

/// `int_0^horizon source` by composite quadrature, plus an asymptotic
/// `t^{-4}` tail correction; `profile_sup` feeds the `4 pi C / (3 h^3)` tail
/// bound reported as the error bar.
pub fn source_integral(
    source: &dyn Fn(f64) -> f64,
    horizon: f64,
    profile_sup: Option<f64>,
) -> SourceIntegral {
    // the near region carries the kinks of compactly supported data, so it
    // is integrated adaptively; the smooth algebraic tail takes fixed
    // geometric panels
    let near = horizon.min(4.0);
    let body_near = adaptive(&|t| source(t), 0.0, near, 1e-13);
    let body_far = if horizon > near {
        integrate_panels(&GL64, &geometric_breaks(near, horizon, 0.5, 1.4), source)
    } else {
        0.0
    };
    let body = body_near + body_far;
    let s_end = source(horizon);
    // if S ~ a / t^4 past the horizon, the tail is S(h) h / 3
    let correction = s_end * horizon / 3.0;
    let tail_bound = match profile_sup {
        Some(c) => 4.0 * std::f64::consts::PI * c / (3.0 * horizon.powi(3)),
        None => 2.0 * correction.abs(),
    };
    SourceIntegral { value: body + correction, tail_bound }
}

/// Source integral for a preset, using exact shortcuts where available.
pub fn gas_source_integral(f_in: &RadialInitialData, horizon: f64) -> Result<SourceIntegral> {
    match f_in {
        RadialInitialData::EquilibriumMultiple { c } => {
            // S = c (1 - F_K) / sqrt(2 pi), so int S = c * moment_1 / sqrt(2 pi)
            let m1 = Kernel::gas_maxwellian().moment(1)?;
            Ok(SourceIntegral { value: c * m1 / SQRT_TWO_PI, tail_bound: 0.0 })
        }
        _ => {
            let f = |t: f64| gas_source(f_in, t).unwrap_or(0.0);
            Ok(source_integral(&f, horizon, Some(f_in.sup_bound())))
        }
    }
}

/// Monotone cubic (Fritsch-Carlson) interpolant on a sorted grid, clamped to
/// the end values outside and to nonnegative values everywhere.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::TableFormat(format!("need >= 2 grid points, got {n}")));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::TableFormat("grid not strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        d[n - 1] = end_slope(
            h[n - 2],
            h.get(n.wrapping_sub(3)).copied().unwrap_or(h[n - 2]),
            delta[n - 2],
            *delta.get(n.wrapping_sub(3)).unwrap_or(&delta[n - 2]),
        );
        Ok(Pchip { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0].max(0.0);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1].max(0.0);
        }
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (h00 * self.y[i] + h * h10 * self.d[i] + h01 * self.y[i + 1] + h * h11 * self.d[i + 1])
            .max(0.0)
    }
}

/// Shape-preserving one-sided end slope.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

/// One-dimensional tabulated profile.
#[derive(Debug, Clone)]
pub struct Table1 {
    interp: Pchip,
}

impl Table1 {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let rows = parse_rows(&text, 2)?;
        let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        if y.iter().any(|&v| v < 0.0) {
            return Err(Error::TableFormat("negative profile value".into()));
        }
        Ok(Table1 { interp: Pchip::new(x, y)? })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.interp.eval(x)
    }
}

/// Two-dimensional tabulated profile on a rectangular `rho x speed` grid,
/// interpolated monotone-cubically along each axis in turn.
#[derive(Debug, Clone)]
pub struct Table2 {
    rho: Vec<f64>,
    rows: Vec<Pchip>,
}

impl Table2 {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let raw = parse_rows(&text, 3)?;
        let mut rho: Vec<f64> = Vec::new();
        for r in &raw {
            if rho.last() != Some(&r[0]) {
                rho.push(r[0]);
            }
        }
        let n_speed = raw.len() / rho.len();
        if n_speed * rho.len() != raw.len() {
            return Err(Error::TableFormat(format!(
                "grid not rectangular: {} rows over {} rho values",
                raw.len(),
                rho.len()
            )));
        }
        let mut rows = Vec::with_capacity(rho.len());
        for (i, &r0) in rho.iter().enumerate() {
            let block = &raw[i * n_speed..(i + 1) * n_speed];
            if block.iter().any(|r| r[0] != r0) {
                return Err(Error::TableFormat("rho blocks not contiguous and sorted".into()));
            }
            let speeds: Vec<f64> = block.iter().map(|r| r[1]).collect();
            let vals: Vec<f64> = block.iter().map(|r| r[2]).collect();
            if vals.iter().any(|&v| v < 0.0) {
                return Err(Error::TableFormat("negative profile value".into()));
            }
            rows.push(Pchip::new(speeds, vals)?);
        }
        if rho.len() < 2 {
            return Err(Error::TableFormat("need at least 2 rho values".into()));
        }
        Ok(Table2 { rho, rows })
    }

    pub fn eval(&self, rho: f64, speed: f64) -> f64 {
        let col: Vec<f64> = self.rows.iter().map(|p| p.eval(speed)).collect();
        match Pchip::new(self.rho.clone(), col) {
            Ok(p) => p.eval(rho),
            Err(_) => 0.0,
        }
    }
}

/// Splits delimited text into numeric rows, skipping the header line.
fn parse_rows(text: &str, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if lineno == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue; // header row naming the axes
        }
        if fields.len() != cols {
            return Err(Error::TableFormat(format!(
                "line {}: expected {cols} columns, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let row: Result<Vec<f64>> = fields
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::TableFormat(format!("line {}: bad number {f:?}", lineno + 1))
                })
            })
            .collect();
        out.push(row?);
    }
    if out.is_empty() {
        return Err(Error::TableFormat("no data rows".into()));
    }
    Ok(out)
}

/// Smooth bounded-radial preset: `f_in = (1 + cos(pi rho) bump(r)) M(r)`
/// scaled to stay within `[0, bound] * M`.
pub fn bounded_bump_preset() -> RadialInitialData {
    RadialInitialData::bounded_radial(bounded_bump_profile(), 2.0)
        .expect("preset satisfies its own bound")
}

/// The profile behind [`bounded_bump_preset`], usable with a custom bound.
pub fn bounded_bump_profile() -> RadialProfile {
    RadialProfile::from_fn(|rho: f64, r: f64| {
        let radial = 0.5 * (1.0 + (std::f64::consts::PI * rho).cos());
        let speed_mod = 1.0 + 0.8 * (-(r - 1.0) * (r - 1.0)).exp();
        (0.2 + radial * speed_mod) * maxwellian(r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive;
    use crate::HALF_SPACE_FLUX;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    #[test]
    fn equilibrium_source_matches_closed_form() {
        // mu == (2 pi)^{-1/2} forces S = (1 - F_K(t)) / sqrt(2 pi)
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let k = Kernel::gas_maxwellian();
        for t in [0.0, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let s = gas_source(&f, t).unwrap();
            let expect = k.survival(t) / SQRT_TWO_PI;
            assert_abs_diff_eq!(s, expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn initial_flux_is_half_space_flux() {
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        assert_abs_diff_eq!(gas_source(&f, 0.0).unwrap(), HALF_SPACE_FLUX, epsilon = 1e-10);
    }

    #[test]
    fn bounded_source_tail_bound() {
        // S(t) <= 4 pi ||f_in||_inf / t^4 for t >= 1
        let f = bounded_bump_preset();
        let c = f.sup_bound();
        for t in [1.0, 2.0, 5.0, 10.0, 20.0] {
            let s = gas_source(&f, t).unwrap();
            assert!(s <= 4.0 * std::f64::consts::PI * c / t.powi(4) * (1.0 + 1e-9));
            assert!(s >= 0.0);
        }
    }

    #[test]
    fn monotone_dominance() {
        let f1 = RadialInitialData::bounded_radial(
            RadialProfile::from_fn(|rho, r| (1.0 - rho) * maxwellian(r)),
            1.0,
        )
        .unwrap();
        let f2 = RadialInitialData::bounded_radial(
            RadialProfile::from_fn(|rho, r| (2.0 - rho) * maxwellian(r)),
            2.0,
        )
        .unwrap();
        for t in [0.0, 0.5, 1.5, 4.0] {
            assert!(gas_source(&f1, t).unwrap() <= gas_source(&f2, t).unwrap() + 1e-14);
        }
    }

    #[test]
    fn radiative_source_support() {
        let u = RadialInitialData::radial_shell_grey(ShellProfile::bump(0.2, 0.5).unwrap()).unwrap();
        assert_eq!(radiative_source(&u, 0.0).unwrap(), 0.0);
        assert_eq!(radiative_source(&u, 2.5).unwrap(), 0.0);
        // at t = 1.8 the argument stays >= (1 - t)^2 = 0.64, above the support
        assert_eq!(radiative_source(&u, 1.8).unwrap(), 0.0);
        assert!(radiative_source(&u, 0.9).unwrap() > 0.0);
    }

    #[test]
    fn radiative_source_against_adaptive() {
        let profile = ShellProfile::bump(0.1, 0.8).unwrap();
        let u = RadialInitialData::radial_shell_grey(profile.clone()).unwrap();
        for t in [0.2, 0.7, 1.3] {
            let expect =
                0.5 * adaptive(&|s: f64| profile.eval((1.0 + t * t - t * s).clamp(0.0, 1.0)) * s, t, 2.0, 1e-13);
            assert_abs_diff_eq!(radiative_source(&u, t).unwrap(), expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn source_integral_fubini() {
        // int_0^inf S = (2 pi)^{-1/2} * moment_1 for equilibrium data
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let m1 = Kernel::gas_maxwellian().moment(1).unwrap();
        let exact = m1 / SQRT_TWO_PI;
        let si = gas_source_integral(&f, 100.0).unwrap();
        assert_abs_diff_eq!(si.value, exact, epsilon = 1e-12);
        // the generic quadrature path agrees within its own error bar
        let s = |t: f64| gas_source(&f, t).unwrap();
        let generic = source_integral(&s, 60.0, Some(f.sup_bound()));
        assert!((generic.value - exact).abs() < generic.tail_bound + 1e-7);
    }

    #[test]
    fn radiative_integral_exact_at_horizon_two() {
        let u = RadialInitialData::radial_shell_grey(ShellProfile::bump(0.2, 0.6).unwrap()).unwrap();
        let s = |t: f64| radiative_source(&u, t).unwrap();
        let a = source_integral(&s, 2.0, None);
        let b = source_integral(&s, 10.0, None);
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-10);
    }

    #[test]
    fn concentrated_box_source() {
        let eps = 0.2;
        let f = RadialInitialData::concentrated_box(eps).unwrap();
        // support in t starts at (1 - eps) / eps = 4
        assert_eq!(gas_source(&f, 3.9).unwrap(), 0.0);
        assert!(gas_source(&f, 4.5).unwrap() > 0.0);
        assert_eq!(gas_source(&f, 0.0).unwrap(), 0.0);
        // oracle: brute-force Riemann evaluation of the double integral
        let t = 5.0;
        let n = 4000;
        let mut brute = 0.0;
        let r_hi = eps;
        for i in 0..n {
            let r = r_hi * (i as f64 + 0.5) / n as f64;
            let mut inner = 0.0;
            for j in 0..n {
                let y = (j as f64 + 0.5) / n as f64;
                if t * r < 2.0 * y {
                    let rho2 = 1.0 + t * t * r * r - 2.0 * t * r * y;
                    if rho2 <= eps * eps && r <= eps {
                        inner += y / n as f64;
                    }
                }
            }
            brute += inner * r.powi(3) * r_hi / n as f64;
        }
        brute *= 2.0 * std::f64::consts::PI * eps.powi(-6);
        let exact = gas_source(&f, t).unwrap();
        assert!((exact - brute).abs() / exact < 2e-3, "{exact} vs {brute}");
    }

    #[test]
    fn box_integral_decay() {
        // int_t^inf S = o(1/t): check t * tail decreasing over a dyadic grid
        let f = RadialInitialData::concentrated_box(0.2).unwrap();
        let s = |t: f64| gas_source(&f, t).unwrap();
        let mut last = f64::INFINITY;
        for t in [20.0, 40.0, 80.0, 160.0] {
            let tail = adaptive(&s, t, 2000.0, 1e-12) + s(2000.0) * 2000.0 / 3.0;
            let scaled = t * tail;
            assert!(scaled > 0.0 && scaled < last, "t = {t}: {scaled} vs {last}");
            last = scaled;
        }
    }

    #[test]
    fn masses() {
        let eq = RadialInitialData::equilibrium_multiple(1.5).unwrap();
        assert_abs_diff_eq!(eq.mass().unwrap(), 1.5 * BALL_VOLUME, epsilon = 1e-12);
        let boxy = RadialInitialData::concentrated_box(0.2).unwrap();
        assert_abs_diff_eq!(boxy.mass().unwrap(), BALL_VOLUME * BALL_VOLUME, epsilon = 1e-12);
        // bounded preset vs independent adaptive quadrature
        let f = bounded_bump_preset();
        let inner = |rho: f64| {
            adaptive(&|r: f64| f.eval_gas(rho, r).unwrap() * r * r, 0.0, SPEED_CUTOFF, 1e-13)
        };
        let expect = 16.0
            * std::f64::consts::PI
            * std::f64::consts::PI
            * adaptive(&|rho: f64| inner(rho) * rho * rho, 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(f.mass().unwrap(), expect, epsilon = 1e-8);
    }

    #[test]
    fn validation_rejects_bad_data() {
        assert!(RadialInitialData::equilibrium_multiple(0.0).is_err());
        assert!(RadialInitialData::concentrated_box(1.5).is_err());
        // profile exceeding C * M
        let fat = RadialProfile::from_fn(|_, r| 3.0 * maxwellian(r));
        assert!(RadialInitialData::bounded_radial(fat, 2.0).is_err());
        // shell profile not vanishing at the wall
        let bad = ShellProfile::from_fn(|_| 1.0);
        assert!(RadialInitialData::radial_shell_grey(bad).is_err());
    }

    #[test]
    fn pchip_reproduces_linear_data() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.3).collect();
        let p = Pchip::new(x, y).unwrap();
        for t in [0.05, 0.314, 0.77, 0.999] {
            assert_abs_diff_eq!(p.eval(t), 2.0 * t + 0.3, epsilon = 1e-13);
        }
    }

    #[test]
    fn pchip_stays_nonnegative_and_monotone() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.0, 1.0, 1.0, 0.0];
        let p = Pchip::new(x, y).unwrap();
        for i in 0..=400 {
            let t = 4.0 * i as f64 / 400.0;
            let v = p.eval(t);
            assert!((0.0..=1.0 + 1e-12).contains(&v), "overshoot {v} at {t}");
        }
    }

    #[test]
    fn table_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("shell.txt");
        let mut fh = std::fs::File::create(&p1).unwrap();
        writeln!(fh, "rho_squared value").unwrap();
        for i in 0..=20 {
            let q = i as f64 / 20.0;
            writeln!(fh, "{q} {}", (q * (1.0 - q)).powi(2)).unwrap();
        }
        drop(fh);
        let t1 = ShellProfile::from_path(&p1).unwrap();
        assert_abs_diff_eq!(t1.eval(0.5), 0.0625, epsilon = 1e-3);

        let p2 = dir.path().join("gas.txt");
        let mut fh = std::fs::File::create(&p2).unwrap();
        writeln!(fh, "rho speed value").unwrap();
        for i in 0..=8 {
            for j in 0..=16 {
                let rho = i as f64 / 8.0;
                let r = 12.0 * j as f64 / 16.0;
                writeln!(fh, "{rho},{r},{}", (1.0 + rho) * maxwellian(r)).unwrap();
            }
        }
        drop(fh);
        let t2 = RadialProfile::from_path(&p2).unwrap();
        assert_abs_diff_eq!(t2.eval(0.5, 0.75), 1.5 * maxwellian(0.75), epsilon = 2e-3);

        // ragged grid rejected
        let p3 = dir.path().join("bad.txt");
        std::fs::write(&p3, "rho speed value\n0 0 1\n0 1 1\n1 0 1\n").unwrap();
        assert!(RadialProfile::from_path(&p3).is_err());
        // malformed number rejected
        let p4 = dir.path().join("bad2.txt");
        std::fs::write(&p4, "a b\n0 1\n0.5 xyz\n").unwrap();
        assert!(ShellProfile::from_path(&p4).is_err());
    }
}
