//! Particle Monte Carlo for free-molecular flow with diffuse wall
//! reemission: an oracle for the renewal solution that shares no code path
//! with it.
//!
//! Every particle owns an independent ChaCha stream selected by its index,
//! so ensembles and tallies are bit-reproducible regardless of how the work
//! is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sources::RadialInitialData;

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub rng_seed: u64,
    /// Monokinetic reemission at unit speed instead of the wall Maxwellian.
    pub radiative: bool,
}

#[derive(Debug, Clone)]
pub struct FluxTally {
    pub bin_width: f64,
    /// Flux estimate per time bin, normalized per unit wall area and time.
    pub flux: Vec<f64>,
    /// Block-based standard error per bin.
    pub stderr: Vec<f64>,
    /// Weight of exactly-zero-speed particles that can never thermalize.
    pub never_hit_mass: f64,
    pub total_weight: f64,
    /// Histogram of wall-to-wall crossing intervals after reemission; the
    /// exit-time kernel is their exact law.
    pub interval_bin_width: f64,
    pub interval_counts: Vec<u64>,
    pub interval_total: u64,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

fn particle_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws the ensemble from a preset; deterministic in `(seed, n)`.
pub fn sample_initial(f_in: &RadialInitialData, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(Error::domain("need at least one particle"));
    }
    let mass = f_in.mass()?;
    if !(mass > 0.0) {
        return Err(Error::EmptyEnsemble);
    }
    let w = mass / n as f64;
    let radiative = !f_in.is_gas();
    let draws: Result<Vec<([f64; 3], [f64; 3])>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = particle_rng(seed, i);
            sample_one(f_in, &mut rng)
        })
        .collect();
    let draws = draws?;
    Ok(ParticleEnsemble {
        positions: draws.iter().map(|d| d.0).collect(),
        velocities: draws.iter().map(|d| d.1).collect(),
        weights: vec![w; n],
        rng_seed: seed,
        radiative,
    })
}

fn sample_one(f_in: &RadialInitialData, rng: &mut ChaCha8Rng) -> Result<([f64; 3], [f64; 3])> {
    match f_in {
        RadialInitialData::EquilibriumMultiple { .. } => {
            let rho = rng.gen::<f64>().cbrt();
            let u = unit_vector(rng);
            let x = [rho * u[0], rho * u[1], rho * u[2]];
            let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
            Ok((x, v))
        }
        RadialInitialData::ConcentratedBox { epsilon } => {
            let xr = epsilon * rng.gen::<f64>().cbrt();
            let vr = epsilon * rng.gen::<f64>().cbrt();
            let xu = unit_vector(rng);
            let vu = unit_vector(rng);
            Ok(([xr * xu[0], xr * xu[1], xr * xu[2]], [vr * vu[0], vr * vu[1], vr * vu[2]]))
        }
        RadialInitialData::BoundedRadial { bound_constant, .. } => {
            // rejection from the dominating density C M(|v|) rho^2 d rho
            loop {
                let rho = rng.gen::<f64>().cbrt();
                let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
                let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let accept = f_in.eval_gas(rho, speed)?
                    / (bound_constant * crate::sources::maxwellian(speed));
                if rng.gen::<f64>() < accept {
                    let u = unit_vector(rng);
                    return Ok(([rho * u[0], rho * u[1], rho * u[2]], v));
                }
            }
        }
        RadialInitialData::RadialShellGrey { .. } => {
            let sup = f_in.sup_bound().max(1e-300);
            loop {
                let rho = rng.gen::<f64>().cbrt();
                if rng.gen::<f64>() < f_in.eval_shell(rho * rho)? / sup {
                    let u = unit_vector(rng);
                    let omega = unit_vector(rng);
                    return Ok(([rho * u[0], rho * u[1], rho * u[2]], omega));
                }
            }
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Reemission velocity at a wall point with inward normal `m`: cosine-law
/// direction, speed from the flux-weighted Maxwellian `r^3 exp(-r^2/2) / 2`
/// (gas) or exactly 1 (radiative).
pub fn diffuse_resample(rng: &mut ChaCha8Rng, m: [f64; 3], radiative: bool) -> [f64; 3] {
    // tangent frame at the wall point
    let helper = if m[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * m[0] + helper[1] * m[1] + helper[2] * m[2];
    let mut e1 = [helper[0] - d * m[0], helper[1] - d * m[1], helper[2] - d * m[2]];
    let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / l, e1[1] / l, e1[2] / l];
    let e2 = [
        m[1] * e1[2] - m[2] * e1[1],
        m[2] * e1[0] - m[0] * e1[2],
        m[0] * e1[1] - m[1] * e1[0],
    ];
    let cos_theta = rng.gen::<f64>().sqrt();
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let speed = if radiative {
        1.0
    } else {
        // r^2/2 ~ Gamma(2, 1): r = sqrt(2 (E1 + E2))
        let e_1 = -rng.gen::<f64>().max(1e-300).ln();
        let e_2 = -rng.gen::<f64>().max(1e-300).ln();
        (2.0 * (e_1 + e_2)).sqrt()
    };
    let (cp, sp) = (phi.cos(), phi.sin());
    [
        speed * (cos_theta * m[0] + sin_theta * (cp * e1[0] + sp * e2[0])),
        speed * (cos_theta * m[1] + sin_theta * (cp * e1[1] + sp * e2[1])),
        speed * (cos_theta * m[2] + sin_theta * (cp * e1[2] + sp * e2[2])),
    ]
}

const INTERVAL_HIST_MAX: f64 = 10.0;
const BLOCKS: usize = 64;

struct BlockTally {
    counts: Vec<f64>,
    interval_counts: Vec<u64>,
    interval_total: u64,
    never_hit: f64,
}

/// Free flight plus wall resampling up to `horizon`, tallying wall-crossing
/// flux and the reemission crossing-interval histogram.
pub fn evolve(ens: &ParticleEnsemble, horizon: f64, bin_width: f64) -> Result<FluxTally> {
    if !(horizon > 0.0) || !(bin_width > 0.0) {
        return Err(Error::domain(format!(
            "need positive horizon and bin width, got {horizon}, {bin_width}"
        )));
    }
    let n = ens.positions.len();
    let n_bins = (horizon / bin_width).ceil() as usize;
    let interval_bin_width = if ens.radiative { 0.05 } else { 0.1 };
    let n_int_bins = (INTERVAL_HIST_MAX / interval_bin_width).ceil() as usize;
    let block_size = n.div_ceil(BLOCKS);

    let blocks: Vec<BlockTally> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let lo = b * block_size;
            let hi = ((b + 1) * block_size).min(n);
            let mut tally = BlockTally {
                counts: vec![0.0; n_bins],
                interval_counts: vec![0u64; n_int_bins],
                interval_total: 0,
                never_hit: 0.0,
            };
            for i in lo..hi {
                walk_particle(ens, i, horizon, bin_width, interval_bin_width, &mut tally);
            }
            tally
        })
        .collect();

    // fixed block order merge
    let mut counts = vec![0.0; n_bins];
    let mut interval_counts = vec![0u64; n_int_bins];
    let mut interval_total = 0u64;
    let mut never_hit = 0.0;
    for b in &blocks {
        for (c, v) in counts.iter_mut().zip(&b.counts) {
            *c += v;
        }
        for (c, v) in interval_counts.iter_mut().zip(&b.interval_counts) {
            *c += v;
        }
        interval_total += b.interval_total;
        never_hit += b.never_hit;
    }

    // flux per unit area per unit time; the radiative tally divides by the
    // extra pi from the angular flux integral over the hemisphere
    let area = 4.0 * std::f64::consts::PI;
    let norm = if ens.radiative { area * std::f64::consts::PI } else { area };
    let flux: Vec<f64> = counts.iter().map(|c| c / (norm * bin_width)).collect();
    let mut stderr = vec![0.0; n_bins];
    for i in 0..n_bins {
        let mean = counts[i] / BLOCKS as f64;
        let var = blocks
            .iter()
            .map(|b| (b.counts[i] - mean).powi(2))
            .sum::<f64>()
            / (BLOCKS as f64 - 1.0);
        stderr[i] = (var / BLOCKS as f64).sqrt() * BLOCKS as f64 / (norm * bin_width);
    }

    Ok(FluxTally {
        bin_width,
        flux,
        stderr,
        never_hit_mass: never_hit,
        total_weight: ens.weights.iter().sum(),
        interval_bin_width,
        interval_counts,
        interval_total,
    })
}

fn walk_particle(
    ens: &ParticleEnsemble,
    i: usize,
    horizon: f64,
    bin_width: f64,
    interval_bin_width: f64,
    tally: &mut BlockTally,
) {
    let w = ens.weights[i];
    let mut x = ens.positions[i];
    let mut v = ens.velocities[i];
    let speed2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if speed2 == 0.0 {
        tally.never_hit += w;
        return;
    }
    // particle streams: reemission draws continue the particle's own stream,
    // offset so they never overlap the sampling draws
    let mut rng = particle_rng(ens.rng_seed, ens.positions.len() as u64 + i as u64);
    let mut t = 0.0f64;
    let mut first_flight = true;
    loop {
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let xv = x[0] * v[0] + x[1] * v[1] + x[2] * v[2];
        let x2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        // forward exit: |x + tau v| = 1
        let disc = (xv * xv + v2 * (1.0 - x2)).max(0.0).sqrt();
        let tau = (disc - xv) / v2;
        let t_hit = t + tau;
        if !first_flight {
            // every reemitted flight length is a draw from the kernel; record
            // it before the horizon cut or long intervals get truncated away
            let bin = (tau / interval_bin_width) as usize;
            if bin < tally.interval_counts.len() {
                tally.interval_counts[bin] += 1;
            }
            tally.interval_total += 1;
        }
        if t_hit > horizon {
            return;
        }
        let bin = (t_hit / bin_width) as usize;
        if bin < tally.counts.len() {
            tally.counts[bin] += w;
        }
        // land exactly on the sphere
        let mut y = [x[0] + tau * v[0], x[1] + tau * v[1], x[2] + tau * v[2]];
        let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        y = [y[0] / r, y[1] / r, y[2] / r];
        let m = [-y[0], -y[1], -y[2]];
        v = diffuse_resample(&mut rng, m, ens.radiative);
        x = y;
        t = t_hit;
        first_flight = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use crate::sources::ShellProfile;
    use crate::HALF_SPACE_FLUX;

    #[test]
    fn equilibrium_sampling_moments() {
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let n = 100_000;
        let ens = sample_initial(&f, n, 11).unwrap();
        let mean_speed = ens
            .velocities
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .sum::<f64>()
            / n as f64;
        // E r = 2 sqrt(2/pi), Var r = 3 - 8/pi
        let expect = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        let sigma = ((3.0 - 8.0 / std::f64::consts::PI) / n as f64).sqrt();
        assert!((mean_speed - expect).abs() < 3.0 * sigma, "{mean_speed} vs {expect}");
        // weights carry the initial mass
        let total: f64 = ens.weights.iter().sum();
        assert!((total - crate::BALL_VOLUME).abs() < 1e-9);
    }

    #[test]
    fn box_support_and_determinism() {
        let f = RadialInitialData::concentrated_box(0.2).unwrap();
        let a = sample_initial(&f, 5000, 3).unwrap();
        for (x, v) in a.positions.iter().zip(&a.velocities) {
            assert!(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= 0.04 + 1e-12);
            assert!(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 0.04 + 1e-12);
        }
        let b = sample_initial(&f, 5000, 3).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.velocities, b.velocities);
    }

    #[test]
    fn diffuse_resample_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = [0.0, 0.0, 1.0];
        let n = 200_000;
        let mut speed_sum = 0.0;
        let mut cos_sum = 0.0;
        for _ in 0..n {
            let v = diffuse_resample(&mut rng, m, false);
            let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            speed_sum += s;
            cos_sum += v[2] / s;
        }
        // E r = (3/2) sqrt(pi/2), E r^2 = 4
        let expect_speed = 1.5 * (std::f64::consts::PI / 2.0).sqrt();
        let sd_speed = (4.0 - expect_speed * expect_speed).sqrt() / (n as f64).sqrt();
        assert!((speed_sum / n as f64 - expect_speed).abs() < 3.0 * sd_speed);
        // E cos = 2/3, E cos^2 = 1/2
        let sd_cos = (0.5f64 - 4.0 / 9.0).sqrt() / (n as f64).sqrt();
        assert!((cos_sum / n as f64 - 2.0 / 3.0).abs() < 3.0 * sd_cos);

        for _ in 0..100 {
            let v = diffuse_resample(&mut rng, m, true);
            let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(v[2] > 0.0); // inward
        }
    }

    #[test]
    fn equilibrium_flux_is_flat() {
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let ens = sample_initial(&f, 200_000, 17).unwrap();
        let tally = evolve(&ens, 10.0, 0.5).unwrap();
        assert_eq!(tally.never_hit_mass, 0.0);
        let mut violations = 0;
        for (f_est, se) in tally.flux.iter().zip(&tally.stderr) {
            if (f_est - HALF_SPACE_FLUX).abs() > 3.0 * se {
                violations += 1;
            }
        }
        assert!(
            violations * 100 <= 5 * tally.flux.len(),
            "{violations}/{} bins off",
            tally.flux.len()
        );
    }

    #[test]
    fn crossing_intervals_match_kernels() {
        let f = RadialInitialData::equilibrium_multiple(1.0).unwrap();
        let ens = sample_initial(&f, 100_000, 23).unwrap();
        let tally = evolve(&ens, 15.0, 0.5).unwrap();
        let k = Kernel::gas_maxwellian();
        let total = tally.interval_total as f64;
        let mut bad = 0;
        let mut bins = 0;
        for (i, &c) in tally.interval_counts.iter().enumerate() {
            let mid = (i as f64 + 0.5) * tally.interval_bin_width;
            let p = k.eval(mid).unwrap() * tally.interval_bin_width;
            if p * total < 20.0 {
                continue; // skip starved bins
            }
            bins += 1;
            let sigma = (p * (1.0 - p) * total).sqrt();
            if (c as f64 - p * total).abs() > 3.0 * sigma {
                bad += 1;
            }
        }
        assert!(bins > 30);
        assert!(bad * 100 <= 5 * bins, "{bad}/{bins} interval bins off");
    }

    #[test]
    fn radiative_intervals_within_diameter() {
        let u =
            RadialInitialData::radial_shell_grey(ShellProfile::bump(0.2, 0.6).unwrap()).unwrap();
        let ens = sample_initial(&u, 50_000, 31).unwrap();
        assert!(ens.radiative);
        let tally = evolve(&ens, 12.0, 0.5).unwrap();
        for (i, &c) in tally.interval_counts.iter().enumerate() {
            let lo = i as f64 * tally.interval_bin_width;
            if lo >= 2.0 {
                assert_eq!(c, 0, "interval beyond the diameter at bin {i}");
            }
        }
    }

    #[test]
    fn zero_speed_mass_is_reported() {
        let f = RadialInitialData::concentrated_box(0.2).unwrap();
        let mut ens = sample_initial(&f, 1000, 1).unwrap();
        ens.velocities[0] = [0.0; 3];
        ens.velocities[7] = [0.0; 3];
        let tally = evolve(&ens, 5.0, 0.5).unwrap();
        let w = ens.weights[0];
        assert!((tally.never_hit_mass - 2.0 * w).abs() < 1e-12);
        assert!((tally.total_weight - crate::BALL_VOLUME * crate::BALL_VOLUME).abs() < 1e-9);
    }

    #[test]
    fn empty_ensemble_is_an_error() {
        let prof = ShellProfile::from_fn(|q| if (0.4..0.6).contains(&q) { 0.0 } else { 0.0 });
        // a zero profile passes the support validation but has no mass
        let u = RadialInitialData::radial_shell_grey(prof).unwrap();
        assert!(matches!(sample_initial(&u, 10, 0), Err(Error::EmptyEnsemble)));
    }
}
