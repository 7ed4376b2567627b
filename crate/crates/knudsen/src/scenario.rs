//! TOML scenario configuration: everything a run needs, validated up front
//! with errors that name the offending field path.
//!
//! ```
//! use knudsen::scenario::preset;
//!
//! let cfg = preset("radiative-default").unwrap();
//! assert_eq!(cfg.solver.dt, 0.005);
//! assert!(preset("no-such-preset").is_err());
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelVariant;
use crate::sources::{RadialInitialData, RadialProfile, ShellProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Gas,
    Radiative,
}

/// Initial data selection. `variant` picks the family; the remaining fields
/// are family-specific and validated against it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    pub variant: String,
    /// equilibrium_multiple: multiple of the wall Maxwellian.
    pub constant: Option<f64>,
    /// concentrated_box: half-width of the phase-space box.
    pub epsilon: Option<f64>,
    /// bounded_radial: pointwise bound relative to the wall Maxwellian.
    pub bound_constant: Option<f64>,
    /// bounded_radial / radial_shell: tabulated profile, two columns for the
    /// grey shell, three for the gas.
    pub table: Option<PathBuf>,
    /// radial_shell without a table: C^1 bump supported on [a, b] in rho^2.
    pub bump_support: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// Lebesgue exponents for the error curves.
    pub norms: Vec<f64>,
    /// Fit window as a fraction (start, end) of the horizon.
    pub fit_window: [f64; 2],
    /// Compare against the square-root distance instead of the plain one.
    pub rooted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    /// Half-plane depth searched for zeros; the abscissa saturates here.
    pub strip_depth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub enabled: bool,
    pub particle_count: usize,
    pub seed: u64,
    pub bin_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub epsilon: f64,
    pub t_window: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub problem: ProblemKind,
    pub initial_data: InitialDataConfig,
    pub solver: SolverConfig,
    pub field: FieldConfig,
    pub spectral: SpectralConfig,
    pub monte_carlo: MonteCarloConfig,
    pub bounds: Option<BoundsConfig>,
    pub output_dir: PathBuf,
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(field, reason))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| Error::validation("<toml>", &e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn kernel_variant(&self) -> KernelVariant {
        match self.problem {
            ProblemKind::Gas => KernelVariant::GasMaxwellian,
            ProblemKind::Radiative => KernelVariant::Monokinetic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        check(s.horizon.is_finite() && s.horizon > 0.0, "solver.horizon", "must be positive")?;
        check(s.dt.is_finite() && s.dt > 0.0, "solver.dt", "must be positive")?;
        check(s.dt < s.horizon, "solver.dt", "must be smaller than solver.horizon")?;

        for (i, &p) in self.field.norms.iter().enumerate() {
            check(p >= 1.0, &format!("field.norms[{i}]"), "Lebesgue exponent must be >= 1")?;
        }
        let [a, b] = self.field.fit_window;
        check(
            (0.0..1.0).contains(&a) && a < b && b <= 1.0,
            "field.fit_window",
            "must satisfy 0 <= start < end <= 1",
        )?;

        check(
            self.spectral.strip_depth > 0.0,
            "spectral.strip_depth",
            "must be positive",
        )?;

        let mc = &self.monte_carlo;
        if mc.enabled {
            check(mc.particle_count > 0, "monte_carlo.particle_count", "must be positive")?;
            check(mc.bin_width > 0.0, "monte_carlo.bin_width", "must be positive")?;
        }

        if let Some(bd) = &self.bounds {
            check(
                bd.epsilon > 0.0 && bd.epsilon < 1.0,
                "bounds.epsilon",
                "must lie in (0, 1)",
            )?;
            check(bd.t_window > 0.0, "bounds.t_window", "must be positive")?;
            check(bd.p >= 1.0, "bounds.p", "must be >= 1")?;
        }

        self.validate_initial_data()
    }

    fn validate_initial_data(&self) -> Result<()> {
        let id = &self.initial_data;
        let gas = self.problem == ProblemKind::Gas;
        match id.variant.as_str() {
            "equilibrium_multiple" => {
                check(gas, "initial_data.variant", "equilibrium_multiple needs problem = \"gas\"")?;
                let c = id.constant.ok_or_else(|| {
                    Error::validation("initial_data.constant", "required for equilibrium_multiple")
                })?;
                check(c > 0.0, "initial_data.constant", "must be positive")
            }
            "concentrated_box" => {
                check(gas, "initial_data.variant", "concentrated_box needs problem = \"gas\"")?;
                let e = id.epsilon.ok_or_else(|| {
                    Error::validation("initial_data.epsilon", "required for concentrated_box")
                })?;
                check(e > 0.0 && e < 1.0, "initial_data.epsilon", "must lie in (0, 1)")
            }
            "bounded_radial" => {
                check(gas, "initial_data.variant", "bounded_radial needs problem = \"gas\"")?;
                let c = id.bound_constant.ok_or_else(|| {
                    Error::validation("initial_data.bound_constant", "required for bounded_radial")
                })?;
                check(c > 0.0, "initial_data.bound_constant", "must be positive")
            }
            "radial_shell" => {
                check(
                    !gas,
                    "initial_data.variant",
                    "radial_shell needs problem = \"radiative\"",
                )?;
                check(
                    id.table.is_some() || id.bump_support.is_some(),
                    "initial_data",
                    "radial_shell needs either a table or bump_support",
                )?;
                if let Some([a, b]) = id.bump_support {
                    check(
                        0.0 < a && a < b && b < 1.0,
                        "initial_data.bump_support",
                        "must satisfy 0 < a < b < 1",
                    )?;
                }
                Ok(())
            }
            other => Err(Error::validation(
                "initial_data.variant",
                &format!(
                    "unknown variant `{other}`; expected equilibrium_multiple, \
                     concentrated_box, bounded_radial or radial_shell"
                ),
            )),
        }
    }

    /// Materializes the configured initial data, loading tables if needed.
    pub fn build_initial_data(&self) -> Result<RadialInitialData> {
        let id = &self.initial_data;
        match id.variant.as_str() {
            "equilibrium_multiple" => {
                RadialInitialData::equilibrium_multiple(id.constant.unwrap())
            }
            "concentrated_box" => RadialInitialData::concentrated_box(id.epsilon.unwrap()),
            "bounded_radial" => {
                let profile = match &id.table {
                    Some(path) => RadialProfile::from_path(path)?,
                    None => crate::sources::bounded_bump_profile(),
                };
                RadialInitialData::bounded_radial(profile, id.bound_constant.unwrap())
            }
            "radial_shell" => {
                let profile = match &id.table {
                    Some(path) => ShellProfile::from_path(path)?,
                    None => {
                        let [a, b] = id.bump_support.unwrap();
                        ShellProfile::bump(a, b)?
                    }
                };
                RadialInitialData::radial_shell_grey(profile)
            }
            _ => unreachable!("validated"),
        }
    }
}

/// Bounded gas preset: bounded radial data, moderate resolution, Monte
/// Carlo off by default.
pub fn gas_bounded_default() -> ScenarioConfig {
    ScenarioConfig {
        problem: ProblemKind::Gas,
        initial_data: InitialDataConfig {
            variant: "bounded_radial".into(),
            constant: None,
            epsilon: None,
            bound_constant: Some(2.0),
            table: None,
            bump_support: None,
        },
        solver: SolverConfig { horizon: 40.0, dt: 0.01 },
        field: FieldConfig { norms: vec![1.0, 2.0], fit_window: [0.25, 0.95], rooted: false },
        spectral: SpectralConfig { strip_depth: 3.0 },
        monte_carlo: MonteCarloConfig {
            enabled: false,
            particle_count: 1_000_000,
            seed: 1,
            bin_width: 0.5,
        },
        bounds: Some(BoundsConfig { epsilon: 0.25, t_window: 1.0, p: 2.0 }),
        output_dir: PathBuf::from("out"),
    }
}

/// Radiative preset: grey shell bump, exact-support kernel.
pub fn radiative_default() -> ScenarioConfig {
    ScenarioConfig {
        problem: ProblemKind::Radiative,
        initial_data: InitialDataConfig {
            variant: "radial_shell".into(),
            constant: None,
            epsilon: None,
            bound_constant: None,
            table: None,
            bump_support: Some([0.2, 0.6]),
        },
        solver: SolverConfig { horizon: 40.0, dt: 0.005 },
        field: FieldConfig { norms: vec![1.0, 2.0], fit_window: [0.25, 0.95], rooted: false },
        spectral: SpectralConfig { strip_depth: 3.0 },
        monte_carlo: MonteCarloConfig {
            enabled: false,
            particle_count: 1_000_000,
            seed: 1,
            bin_width: 0.5,
        },
        bounds: None,
        output_dir: PathBuf::from("out"),
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "gas-bounded-default" => Ok(gas_bounded_default()),
        "radiative-default" => Ok(radiative_default()),
        other => Err(Error::validation(
            "preset",
            &format!("unknown preset `{other}`; expected gas-bounded-default or radiative-default"),
        )),
    }
}
