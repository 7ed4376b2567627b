//! Gauss-Legendre quadrature, composite and adaptive drivers.

use once_cell::sync::Lazy;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (b - a);
        let d = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c * x + d))
            .sum::<f64>()
            * c
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (p0 - x * p1) / (1.0 - x * x);
    (p1, d)
}

pub static GL8: Lazy<GaussLegendre> = Lazy::new(|| GaussLegendre::new(8));
pub static GL16: Lazy<GaussLegendre> = Lazy::new(|| GaussLegendre::new(16));
pub static GL32: Lazy<GaussLegendre> = Lazy::new(|| GaussLegendre::new(32));
pub static GL64: Lazy<GaussLegendre> = Lazy::new(|| GaussLegendre::new(64));

/// Composite rule over consecutive panels given by `breaks`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    breaks: &[f64],
    mut f: F,
) -> f64 {
    breaks
        .windows(2)
        .map(|p| rule.integrate(p[0], p[1], &mut f))
        .sum()
}

/// Geometric panel breakpoints from `a` via `first` panel width up to `b`.
pub fn geometric_breaks(a: f64, b: f64, first: f64, ratio: f64) -> Vec<f64> {
    let mut v = vec![a];
    let mut w = first;
    let mut x = a;
    while x + w < b {
        x += w;
        v.push(x);
        w *= ratio;
    }
    v.push(b);
    v
}

/// Adaptive bisection driver: accept a panel when GL16 and GL32 agree.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn go<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, coarse: f64, depth: u32) -> f64 {
        let fine = GL32.integrate(a, b, f);
        // roundoff floor: below it the two rules only disagree by noise and
        // further bisection cannot converge
        let floor = 32.0 * f64::EPSILON * fine.abs();
        if (fine - coarse).abs() <= tol.max(floor) || depth >= 48 {
            return fine;
        }
        let m = 0.5 * (a + b);
        let left = GL16.integrate(a, m, f);
        let right = GL16.integrate(m, b, f);
        go(f, a, m, 0.5 * tol, left, depth + 1) + go(f, m, b, 0.5 * tol, right, depth + 1)
    }
    let coarse = GL16.integrate(a, b, f);
    go(f, a, b, tol, coarse, 0)
}
