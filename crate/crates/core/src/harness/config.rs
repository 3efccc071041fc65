use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accounting::{default_alpha_grid, PrivacyBudget};
use crate::conversion::{DispMode, RunConfig, VariantConfig, VariantMode};
use crate::error::{Error, Result};
use crate::geometry::NoiseKind;
use crate::learners::LearnerKind;
use crate::problems::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Quadratic,
    Logistic,
}

/// Problem instance recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub dim: usize,
    /// Domain diameter `D`.
    pub diameter: f64,
    /// Smoothness `H` (quadratic family).
    #[serde(default = "one")]
    pub smoothness: f64,
    /// Gradient noise `sigma_G` (quadratic family).
    #[serde(default)]
    pub sigma_g: f64,
    /// Distance of `x*` from the center (quadratic family); `0.3 D` if absent.
    #[serde(default)]
    pub optimum_distance: Option<f64>,
    /// Feature norm bound `R` (logistic family).
    #[serde(default = "one")]
    pub feature_radius: f64,
    /// Pool size (logistic family).
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_pool() -> usize {
    4096
}

impl InstanceSpec {
    pub fn quadratic(dim: usize, diameter: f64, smoothness: f64, sigma_g: f64, seed: u64) -> Self {
        InstanceSpec {
            family: Family::Quadratic,
            dim,
            diameter,
            smoothness,
            sigma_g,
            optimum_distance: None,
            feature_radius: 1.0,
            pool_size: default_pool(),
            seed,
        }
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        match self.family {
            Family::Quadratic => match self.optimum_distance {
                Some(r) => ProblemInstance::quadratic_with_offset(
                    self.dim,
                    self.diameter,
                    self.smoothness,
                    self.sigma_g,
                    r,
                    self.seed,
                ),
                None => ProblemInstance::quadratic(self.dim, self.diameter, self.smoothness, self.sigma_g, self.seed),
            },
            Family::Logistic => {
                ProblemInstance::logistic_with(self.dim, self.diameter, self.feature_radius, self.pool_size, self.seed)
            }
        }
    }

    /// Same family, dimension, geometry and seed; the comparison axes
    /// (`sigma_g`, `optimum_distance`) may differ.
    pub fn same_base(&self, other: &InstanceSpec) -> bool {
        self.family == other.family
            && self.dim == other.dim
            && self.diameter == other.diameter
            && self.smoothness == other.smoothness
            && self.feature_radius == other.feature_radius
            && self.pool_size == other.pool_size
            && self.seed == other.seed
    }
}

/// Privacy settings; a missing `rho` means the non-private baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySpec {
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
}

fn default_delta() -> f64 {
    1e-5
}

fn default_noise() -> NoiseKind {
    NoiseKind::GaussianRdp
}

impl Default for PrivacySpec {
    fn default() -> Self {
        PrivacySpec {
            rho: None,
            delta: default_delta(),
            alpha_grid: default_alpha_grid(),
            noise: default_noise(),
        }
    }
}

impl PrivacySpec {
    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(f64::INFINITY)
    }

    pub fn budget(&self) -> PrivacyBudget {
        PrivacyBudget {
            rho: self.rho(),
            delta: self.delta,
            alpha_grid: self.alpha_grid.clone(),
        }
    }
}

/// One compared configuration in a `compare` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub label: String,
    #[serde(default)]
    pub variant: Option<VariantConfig>,
    #[serde(default)]
    pub learner: Option<LearnerKind>,
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
}

fn default_seeds() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub variant: VariantConfig,
    pub learner: LearnerKind,
    #[serde(default)]
    pub privacy: PrivacySpec,
    pub horizons: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub trace: bool,
    /// Record per-run wall time in `raw.csv`; off by default so the file is
    /// a pure function of the config.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default = "default_disp")]
    pub disp_mode: DispMode,
    /// Extra arms for `compare`; the base configuration is not implied.
    #[serde(default)]
    pub arms: Vec<ArmSpec>,
}

fn default_disp() -> DispMode {
    DispMode::Adaptive
}

fn field(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field before any run starts.
    pub fn validate(&self) -> Result<()> {
        validate_instance(&self.instance, "instance")?;
        validate_variant(&self.variant, self.learner, &self.instance, "variant")?;
        let p = &self.privacy;
        if let Some(rho) = p.rho {
            if !(rho > 0.0) {
                return Err(field("privacy.rho", format!("must be positive (omit for non-private), got {rho}")));
            }
        }
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return Err(field("privacy.delta", format!("must lie in (0, 1), got {}", p.delta)));
        }
        if p.alpha_grid.is_empty() || p.alpha_grid.iter().any(|a| !(*a > 1.0) || !a.is_finite()) {
            return Err(field("privacy.alpha_grid", "needs at least one finite order above 1"));
        }
        if self.horizons.is_empty() {
            return Err(field("horizons", "must list at least one horizon"));
        }
        if let Some(t) = self.horizons.iter().find(|&&t| t == 0) {
            return Err(field("horizons", format!("horizons must be positive, got {t}")));
        }
        let mut sorted = self.horizons.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.horizons.len() {
            return Err(field("horizons", "horizons must be distinct"));
        }
        if self.seeds == 0 {
            return Err(field("seeds", "must be at least 1"));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            let name = format!("arms[{i}]");
            if arm.label.is_empty() {
                return Err(field(&format!("{name}.label"), "must not be empty"));
            }
            let inst = arm.instance.as_ref().unwrap_or(&self.instance);
            validate_instance(inst, &format!("{name}.instance"))?;
            if !inst.same_base(&self.instance) {
                return Err(field(
                    &format!("{name}.instance"),
                    "arms may change only sigma_g and optimum_distance of the base instance",
                ));
            }
            validate_variant(
                arm.variant.as_ref().unwrap_or(&self.variant),
                arm.learner.unwrap_or(self.learner),
                inst,
                &format!("{name}.variant"),
            )?;
        }
        let mut labels: Vec<&str> = self.arms.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.arms.len() {
            return Err(field("arms", "labels must be distinct"));
        }
        Ok(())
    }

    pub fn run_config(&self) -> RunConfig {
        self.run_config_for(&self.variant)
    }

    pub(crate) fn run_config_for(&self, variant: &VariantConfig) -> RunConfig {
        RunConfig {
            variant: *variant,
            rho: self.privacy.rho(),
            noise: self.privacy.noise,
            disp_mode: self.disp_mode,
            oracle: self.instance.family == Family::Quadratic,
            record_trace: self.trace,
            check_invariants: true,
        }
    }

    /// Config of arm `i` as a standalone experiment.
    pub fn arm(&self, i: usize) -> ExperimentConfig {
        let arm = &self.arms[i];
        ExperimentConfig {
            instance: arm.instance.clone().unwrap_or_else(|| self.instance.clone()),
            variant: arm.variant.unwrap_or(self.variant),
            learner: arm.learner.unwrap_or(self.learner),
            arms: Vec::new(),
            output: None,
            ..self.clone()
        }
    }
}

fn validate_instance(spec: &InstanceSpec, name: &str) -> Result<()> {
    if spec.dim == 0 {
        return Err(field(&format!("{name}.dim"), "must be at least 1"));
    }
    if !(spec.diameter > 0.0) || !spec.diameter.is_finite() {
        return Err(field(&format!("{name}.diameter"), format!("must be positive, got {}", spec.diameter)));
    }
    if !(spec.smoothness > 0.0) {
        return Err(field(&format!("{name}.smoothness"), format!("must be positive, got {}", spec.smoothness)));
    }
    if !(spec.sigma_g >= 0.0) {
        return Err(field(&format!("{name}.sigma_g"), format!("must be non-negative, got {}", spec.sigma_g)));
    }
    if let Some(r) = spec.optimum_distance {
        if !(0.0..=spec.diameter / 2.0).contains(&r) {
            return Err(field(&format!("{name}.optimum_distance"), format!("must lie in [0, D/2], got {r}")));
        }
    }
    if spec.family == Family::Logistic && (spec.pool_size == 0 || !(spec.feature_radius > 0.0)) {
        return Err(field(&format!("{name}.pool_size"), "logistic pools need a positive size and radius"));
    }
    Ok(())
}

fn validate_variant(v: &VariantConfig, learner: LearnerKind, inst: &InstanceSpec, name: &str) -> Result<()> {
    v.validate().map_err(|e| field(name, e.to_string()))?;
    let needs = match v.mode {
        VariantMode::StronglyConvex => Some(LearnerKind::ScOsd),
        VariantMode::ParameterFree => Some(LearnerKind::ParameterFree),
        VariantMode::Optimistic => Some(LearnerKind::OptimisticOmd),
        VariantMode::Plain => None,
    };
    if let Some(kind) = needs {
        if learner != kind {
            return Err(field(
                "learner",
                format!("variant `{}` requires learner `{}`", v.mode.as_str(), kind.as_str()),
            ));
        }
    } else if matches!(learner, LearnerKind::ScOsd | LearnerKind::ParameterFree | LearnerKind::OptimisticOmd) {
        return Err(field("learner", format!("learner `{}` needs its own variant", learner.as_str())));
    }
    if v.mode == VariantMode::StronglyConvex && inst.family != Family::Quadratic {
        return Err(field(name, "strongly convex variant needs a strongly convex family (quadratic)"));
    }
    Ok(())
}
