//! Random instance generation for large-scale policy comparisons.
//!
//! Generation is a pure function of the [`GeneratorSpec`]: the same spec
//! always produces the same configuration document. Arms are emitted in
//! generation order — the first half of the list is positively
//! correlated (`p00 > p10`, staying good is likelier than recovering),
//! the second half negatively correlated (`p00 < p10`).

use clap::ValueEnum;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{
    ArmSection, AvailabilityDto, BeliefMode, ConfigFile, IndexSection, InitialBeliefsDto,
    InstanceSection, RewardModeDto, SimulationSection, SolverSection, UpdateDto, SCHEMA_VERSION,
};

/// Minimum separation enforced between paired draws, keeping arms away
/// from degenerate (uninformative or constant-reward) corners.
const MIN_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RewardStructure {
    /// `eta0` uniform on `[0, 1)`, `eta1` uniform on `(eta0, 1]`: the
    /// two reward ranges overlap across arms.
    Contiguous,
    /// `eta0` uniform on `[0, 0.3]`, `eta1` uniform on `[0.5, 1]`: a gap
    /// separates bad-state from good-state rewards.
    Partitioned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvailabilityChoice {
    /// Every arm available in every slot (`theta = 1` everywhere).
    Unconstrained,
    /// Recovery and persistence probabilities drawn uniform on `[0, 1]`.
    Stochastic,
    /// Drawn `theta11`/`theta01`, and every outage lasts exactly
    /// `outage` slots.
    SemiDeterministic { outage: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoMode {
    /// Perfect observation of the hidden state: `rho = [0, 1]`.
    Binary,
    /// Observation probabilities equal the state rewards.
    MatchReward,
    /// Drawn uniform, sorted, with a minimum separation.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub arms: usize,
    pub structure: RewardStructure,
    pub availability: AvailabilityChoice,
    pub rho: RhoMode,
    pub plays_per_slot: usize,
    pub beta: f64,
    pub seed: u64,
    pub replications: usize,
}

/// Belief-grid resolution written into generated configs. Coarser than
/// the hand-written default because generated instances are large
/// (typically 100 arms) and solved per arm.
pub const GENERATED_VALUE_GRID: usize = 201;

fn gap_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        if (a - b).abs() >= MIN_GAP {
            return if a < b { (a, b) } else { (b, a) };
        }
    }
}

fn draw_arm(
    rng: &mut ChaCha8Rng,
    spec: &GeneratorSpec,
    positively_correlated: bool,
) -> ArmSection {
    let (p_lo, p_hi) = gap_pair(rng);
    let (p00, p10) = if positively_correlated {
        (p_hi, p_lo)
    } else {
        (p_lo, p_hi)
    };
    let eta = match spec.structure {
        RewardStructure::Contiguous => loop {
            let eta0: f64 = rng.gen();
            let span: f64 = rng.gen();
            let eta1 = eta0 + (1.0 - eta0) * span;
            if eta1 - eta0 >= MIN_GAP {
                break [eta0, eta1];
            }
        },
        RewardStructure::Partitioned => {
            let eta0 = 0.3 * rng.gen::<f64>();
            let eta1 = 0.5 + 0.5 * rng.gen::<f64>();
            [eta0, eta1]
        }
    };
    let rho = match spec.rho {
        RhoMode::Binary => [0.0, 1.0],
        RhoMode::MatchReward => eta,
        RhoMode::Random => {
            let (lo, hi) = gap_pair(rng);
            [lo, hi]
        }
    };
    let availability = match spec.availability {
        AvailabilityChoice::Unconstrained => AvailabilityDto::Stochastic {
            theta11: 1.0,
            theta01: 1.0,
            theta00: 1.0,
        },
        AvailabilityChoice::Stochastic => AvailabilityDto::Stochastic {
            theta11: rng.gen(),
            theta01: rng.gen(),
            theta00: rng.gen(),
        },
        AvailabilityChoice::SemiDeterministic { outage } => AvailabilityDto::SemiDeterministic {
            theta11: rng.gen(),
            theta01: rng.gen(),
            outage,
        },
    };
    ArmSection {
        p00,
        p10,
        rho,
        eta,
        availability,
        unavailable_update: UpdateDto::NaturalEvolution,
    }
}

/// Generates a full configuration document from the generator settings.
pub fn generate(spec: &GeneratorSpec) -> ConfigFile {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let positive_count = spec.arms.div_ceil(2);
    let mut arms = Vec::with_capacity(spec.arms);
    for n in 0..spec.arms {
        loop {
            let arm = draw_arm(&mut rng, spec, n < positive_count);
            if arm.to_params().validate(n).is_ok() {
                arms.push(arm);
                break;
            }
        }
    }
    ConfigFile {
        schema_version: SCHEMA_VERSION,
        instance: InstanceSection {
            plays_per_slot: spec.plays_per_slot,
            beta: spec.beta,
            horizon: None,
            reward_mode: RewardModeDto::ExpectedBelief,
        },
        simulation: SimulationSection {
            replications: spec.replications,
            seed: spec.seed,
            initial_beliefs: InitialBeliefsDto::Named(BeliefMode::UniformRandom),
            ..SimulationSection::default()
        },
        solver: SolverSection {
            value_grid: GENERATED_VALUE_GRID,
            ..SolverSection::default()
        },
        index: IndexSection::default(),
        bounds: Default::default(),
        arms,
    }
}
