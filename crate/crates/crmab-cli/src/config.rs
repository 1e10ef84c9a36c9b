//! Structured instance configuration: a schema-versioned TOML document
//! that round-trips losslessly and converts into a validated
//! [`BanditInstance`] plus run settings.
//!
//! Unknown keys are rejected everywhere so a typo cannot silently fall
//! back to a default.

use std::fmt;
use std::path::Path;

use crmab_core::index::{default_backward_horizon, IndexMethod};
use crmab_core::sim::{BanditInstance, InitialBeliefs, InitialConditions, RewardMode};
use crmab_core::{ArmParams, AvailabilityModel, UnavailableUpdate, ValidationWarning};
use serde::{Deserialize, Serialize};

/// The one supported document schema.
pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem: parse failure, schema mismatch, or instance
/// validation failure. Deliberately its own type — configuration
/// problems are usage errors, not numerical failures, and the process
/// exit code tells them apart.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub instance: InstanceSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub index: IndexSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(rename = "arm")]
    pub arms: Vec<ArmSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub plays_per_slot: usize,
    pub beta: f64,
    /// Slots per replication; when absent the horizon is chosen so the
    /// discounted tail falls below `1e-6`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub reward_mode: RewardModeDto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardModeDto {
    /// Pay the expected reward of the pre-observation belief.
    #[default]
    ExpectedBelief,
    /// Pay the sampled binary observation outcome.
    Realized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub replications: usize,
    pub seed: u64,
    pub policies: Vec<PolicyKind>,
    pub initial_beliefs: InitialBeliefsDto,
    /// Initial availability per arm; all available when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_available: Option<Vec<bool>>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            replications: 1000,
            seed: 0,
            policies: vec![
                PolicyKind::Whittle,
                PolicyKind::ModifiedWhittle,
                PolicyKind::Myopic,
                PolicyKind::Random,
            ],
            initial_beliefs: InitialBeliefsDto::Named(BeliefMode::UniformRandom),
            initial_available: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Whittle,
    ModifiedWhittle,
    Myopic,
    Random,
}

impl PolicyKind {
    /// Column label used across every CSV output.
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Whittle => "WI",
            PolicyKind::ModifiedWhittle => "MWI",
            PolicyKind::Myopic => "Myopic",
            PolicyKind::Random => "Random",
        }
    }
}

/// Either the name of a belief-drawing mode or explicit per-arm beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialBeliefsDto {
    Named(BeliefMode),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefMode {
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Belief-grid resolution for value tables.
    pub value_grid: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            value_grid: 1001,
            tolerance: crmab_core::DEFAULT_TOLERANCE,
            max_sweeps: crmab_core::DEFAULT_MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    /// Belief-grid resolution of the index tables themselves.
    pub grid: usize,
    pub method: IndexMethodDto,
    /// Certificate tolerance `h` for the fixed-point methods.
    pub tolerance: f64,
    /// Stages of the backward-recursion index; when absent, chosen so
    /// the discounted tail falls below `1e-6`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward_horizon: Option<usize>,
    /// Subsidy bracket for bisection; defaults to `[-1, eta1/(1-beta)]`
    /// per arm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
}

impl Default for IndexSection {
    fn default() -> Self {
        Self {
            grid: 101,
            method: IndexMethodDto::Sweep,
            tolerance: 1e-3,
            backward_horizon: None,
            bracket: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexMethodDto {
    /// One ascending subsidy sweep shared by every belief, then local
    /// refinement. The fast default.
    Sweep,
    /// Two-timescale stochastic approximation per belief.
    StochasticApproximation,
    /// Sign bisection per belief.
    Bisection,
    /// Finite-horizon backward recursion (the comparison heuristic).
    Backward,
}

impl IndexMethodDto {
    pub fn core(self) -> IndexMethod {
        match self {
            IndexMethodDto::Sweep => IndexMethod::SubsidySweep,
            IndexMethodDto::StochasticApproximation => IndexMethod::StochasticApproximation,
            IndexMethodDto::Bisection => IndexMethod::Bisection,
            IndexMethodDto::Backward => IndexMethod::FiniteHorizonBackward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lambda_lo: f64,
    /// Upper end of the charge scan; defaults to the largest good-state
    /// reward across arms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_hi: Option<f64>,
    pub lambda_steps: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            lambda_lo: 0.0,
            lambda_hi: None,
            lambda_steps: crmab_core::bounds::DEFAULT_LAMBDA_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSection {
    pub p00: f64,
    pub p10: f64,
    /// `[rho0, rho1]`: success probability in the bad and good state.
    pub rho: [f64; 2],
    /// `[eta0, eta1]`: expected reward in the bad and good state.
    pub eta: [f64; 2],
    pub availability: AvailabilityDto,
    #[serde(default)]
    pub unavailable_update: UpdateDto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AvailabilityDto {
    Stochastic {
        theta11: f64,
        theta01: f64,
        theta00: f64,
    },
    SemiDeterministic {
        theta11: f64,
        theta01: f64,
        outage: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateDto {
    #[default]
    NaturalEvolution,
    StationaryReset,
}

impl ArmSection {
    pub fn to_params(&self) -> ArmParams {
        ArmParams {
            p00: self.p00,
            p10: self.p10,
            rho0: self.rho[0],
            rho1: self.rho[1],
            eta0: self.eta[0],
            eta1: self.eta[1],
            availability: match self.availability {
                AvailabilityDto::Stochastic {
                    theta11,
                    theta01,
                    theta00,
                } => AvailabilityModel::Stochastic {
                    theta11,
                    theta01,
                    theta00,
                },
                AvailabilityDto::SemiDeterministic {
                    theta11,
                    theta01,
                    outage,
                } => AvailabilityModel::SemiDeterministic {
                    theta11,
                    theta01,
                    outage_len: outage,
                },
            },
            unavailable_update: match self.unavailable_update {
                UpdateDto::NaturalEvolution => UnavailableUpdate::NaturalEvolution,
                UpdateDto::StationaryReset => UnavailableUpdate::StationaryReset,
            },
        }
    }

    pub fn from_params(params: &ArmParams) -> Self {
        Self {
            p00: params.p00,
            p10: params.p10,
            rho: [params.rho0, params.rho1],
            eta: [params.eta0, params.eta1],
            availability: match params.availability {
                AvailabilityModel::Stochastic {
                    theta11,
                    theta01,
                    theta00,
                } => AvailabilityDto::Stochastic {
                    theta11,
                    theta01,
                    theta00,
                },
                AvailabilityModel::SemiDeterministic {
                    theta11,
                    theta01,
                    outage_len,
                } => AvailabilityDto::SemiDeterministic {
                    theta11,
                    theta01,
                    outage: outage_len,
                },
            },
            unavailable_update: match params.unavailable_update {
                UnavailableUpdate::NaturalEvolution => UpdateDto::NaturalEvolution,
                UnavailableUpdate::StationaryReset => UpdateDto::StationaryReset,
            },
        }
    }
}

impl ConfigFile {
    /// Parses and validates a document, returning it with any advisory
    /// warnings from instance validation.
    pub fn parse(text: &str) -> Result<(Self, Vec<ValidationWarning>), ConfigError> {
        let config: ConfigFile =
            toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(ConfigError(format!(
                "unsupported schema_version {} (this build reads {})",
                config.schema_version, SCHEMA_VERSION
            )));
        }
        let warnings = config.validate()?;
        Ok((config, warnings))
    }

    /// Reads a config file from disk.
    pub fn load(path: &Path) -> Result<(Self, Vec<ValidationWarning>), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Serializes the document back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<Vec<ValidationWarning>, ConfigError> {
        let instance = self.bandit_instance();
        let warnings = instance
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.simulation.replications == 0 {
            return Err(ConfigError("replications must be at least 1".into()));
        }
        if self.simulation.policies.is_empty() {
            return Err(ConfigError("at least one policy is required".into()));
        }
        if let InitialBeliefsDto::Fixed(beliefs) = &self.simulation.initial_beliefs {
            if beliefs.len() != self.arms.len() {
                return Err(ConfigError(format!(
                    "initial_beliefs lists {} values for {} arms",
                    beliefs.len(),
                    self.arms.len()
                )));
            }
            if beliefs.iter().any(|b| !(0.0..=1.0).contains(b)) {
                return Err(ConfigError(
                    "initial beliefs must lie in [0, 1]".into(),
                ));
            }
        }
        if let Some(avail) = &self.simulation.initial_available {
            if avail.len() != self.arms.len() {
                return Err(ConfigError(format!(
                    "initial_available lists {} values for {} arms",
                    avail.len(),
                    self.arms.len()
                )));
            }
        }
        if self.solver.value_grid < 2 || self.index.grid < 2 {
            return Err(ConfigError(
                "belief grids need at least two points".into(),
            ));
        }
        if !(self.solver.tolerance > 0.0) || !(self.index.tolerance > 0.0) {
            return Err(ConfigError("tolerances must be positive".into()));
        }
        if self.bounds.lambda_lo < 0.0 {
            return Err(ConfigError("lambda_lo must be nonnegative".into()));
        }
        if self.bounds.lambda_steps == 0 {
            return Err(ConfigError("lambda_steps must be at least 1".into()));
        }
        if let Some(hi) = self.bounds.lambda_hi {
            if self.bounds.lambda_steps > 1 && !(hi > self.bounds.lambda_lo) {
                return Err(ConfigError(
                    "lambda_hi must exceed lambda_lo when scanning".into(),
                ));
            }
        }
        Ok(warnings)
    }

    /// The core instance this document describes.
    pub fn bandit_instance(&self) -> BanditInstance {
        BanditInstance {
            arms: self.arms.iter().map(ArmSection::to_params).collect(),
            plays_per_slot: self.instance.plays_per_slot,
            beta: self.instance.beta,
            horizon: self.horizon(),
            reward_mode: match self.instance.reward_mode {
                RewardModeDto::ExpectedBelief => RewardMode::ExpectedBelief,
                RewardModeDto::Realized => RewardMode::Realized,
            },
        }
    }

    pub fn horizon(&self) -> usize {
        self.instance
            .horizon
            .unwrap_or_else(|| default_backward_horizon(self.instance.beta))
    }

    pub fn backward_horizon(&self) -> usize {
        self.index
            .backward_horizon
            .unwrap_or_else(|| default_backward_horizon(self.instance.beta))
    }

    pub fn initial_conditions(&self) -> InitialConditions {
        InitialConditions {
            beliefs: match &self.simulation.initial_beliefs {
                InitialBeliefsDto::Named(BeliefMode::UniformRandom) => {
                    InitialBeliefs::UniformRandom
                }
                InitialBeliefsDto::Fixed(v) => InitialBeliefs::Fixed(v.clone()),
            },
            available: self.simulation.initial_available.clone(),
        }
    }

    /// Largest good-state reward, the default top of the charge scan.
    pub fn max_eta1(&self) -> f64 {
        self.arms.iter().map(|a| a.eta[1]).fold(0.0, f64::max)
    }
}
