//! Monte-Carlo simulation of the constrained bandit: hidden two-state
//! chains, action-dependent availability, Bayesian belief tracking, and
//! discounted reward accrual, aggregated over replications.
//!
//! # Randomness discipline
//!
//! Replication `r` of a run seeded with `s` uses a counter-based stream:
//! `ChaCha8Rng` seeded with `s` on stream `r`. Within a replication the
//! draw order is fixed:
//!
//! 1. per arm, in id order: the initial belief (uniform mode only), then
//!    one draw for the initial hidden state;
//! 2. each slot: the policy's own draws (only the random policy has any),
//!    then per arm in id order *exactly three* draws — observation,
//!    state transition, availability — whether or not the arm was played.
//!
//! Because idle arms burn the same three draws as played arms, every
//! deterministic policy sees identical hidden-state trajectories on the
//! same seed: policies are compared under common random numbers.
//!
//! # Deterministic aggregation
//!
//! Replications are aggregated in fixed chunks of [`CHUNK_SIZE`] and the
//! chunks reduced pairwise, so a report is bit-identical no matter how
//! many threads computed the chunks.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arm::{ArmParams, AvailabilityModel, PerceivedState};
use crate::error::{Error, ValidationWarning};
use crate::index::IndexTable;
use crate::num::{pairwise_sum, pairwise_vec_sum};
use crate::policy::{
    select_mwi, select_myopic, select_random, select_whittle, PolicyDecision,
};

/// Replications per aggregation chunk.
pub const CHUNK_SIZE: usize = 64;

/// What a played arm pays into the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardMode {
    /// The expected reward at the current belief — the filter's estimate,
    /// deterministic given the belief trajectory.
    #[default]
    ExpectedBelief,
    /// The reward of the true hidden state.
    Realized,
}

/// A complete constrained-bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    pub arms: Vec<ArmParams>,
    /// Arms played per slot (`M`).
    pub plays_per_slot: usize,
    pub beta: f64,
    pub horizon: usize,
    pub reward_mode: RewardMode,
}

/// Horizon at which the discounted tail falls below `1e-6`.
pub fn default_horizon(beta: f64) -> usize {
    crate::index::default_backward_horizon(beta)
}

impl BanditInstance {
    /// Validates every arm and the instance-level constraints, returning
    /// accumulated non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<ValidationWarning>, Error> {
        if self.arms.is_empty() {
            return Err(Error::InvalidInstance {
                reason: "an instance needs at least one arm",
            });
        }
        if self.plays_per_slot < 1 || self.plays_per_slot > self.arms.len() {
            return Err(Error::InvalidInstance {
                reason: "plays per slot must be between 1 and the number of arms",
            });
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                requirement: "a discount factor strictly between 0 and 1",
            });
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: 0.0,
                requirement: "at least one slot",
            });
        }
        let mut warnings = Vec::new();
        for (n, arm) in self.arms.iter().enumerate() {
            warnings.extend(arm.validate(n)?);
        }
        Ok(warnings)
    }
}

/// How each replication's initial beliefs are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialBeliefs {
    /// Independent uniform draw per arm per replication.
    UniformRandom,
    /// The same fixed beliefs every replication.
    Fixed(Vec<f64>),
}

/// Initial beliefs plus optional initial availabilities (all available
/// when absent; fixed-length-outage arms that start unavailable start a
/// full countdown).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    pub beliefs: InitialBeliefs,
    pub available: Option<Vec<bool>>,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            beliefs: InitialBeliefs::UniformRandom,
            available: None,
        }
    }
}

/// Ground truth of one arm during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmTruth {
    pub bad: bool,
    pub available: bool,
    /// Outage slots left, meaningful only for an unavailable
    /// fixed-length-outage arm.
    pub remaining: u32,
}

/// Arm-selection rule to simulate. Index policies borrow their
/// precomputed per-arm tables.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    WhittleIndex(&'a [IndexTable]),
    ModifiedWhittle(&'a [IndexTable]),
    Myopic,
    Random,
}

impl Policy<'_> {
    /// Short, stable name for report columns.
    pub fn label(&self) -> &'static str {
        match self {
            Policy::WhittleIndex(_) => "WI",
            Policy::ModifiedWhittle(_) => "MWI",
            Policy::Myopic => "Myopic",
            Policy::Random => "Random",
        }
    }

    fn check(&self, instance: &BanditInstance) -> Result<(), Error> {
        let tables = match self {
            Policy::WhittleIndex(t) | Policy::ModifiedWhittle(t) => t.len(),
            _ => return Ok(()),
        };
        if tables != instance.arms.len() {
            return Err(Error::InvalidInstance {
                reason: "index table count does not match the number of arms",
            });
        }
        Ok(())
    }

    /// One slot's selection given the perceived states.
    pub fn decide(
        &self,
        arms: &[ArmParams],
        state: &[PerceivedState],
        m: usize,
        rng: &mut impl Rng,
    ) -> PolicyDecision {
        match self {
            Policy::WhittleIndex(tables) => select_whittle(tables, state, m),
            Policy::ModifiedWhittle(tables) => select_mwi(tables, state, m),
            Policy::Myopic => select_myopic(arms, state, m),
            Policy::Random => select_random(state, m, rng),
        }
    }
}

/// Per-played-arm outcome recorder used by traced replications.
struct SlotRecord {
    success: Vec<Option<bool>>,
}

fn step_impl(
    instance: &BanditInstance,
    truth: &mut [ArmTruth],
    beliefs: &mut [f64],
    decision: &PolicyDecision,
    rng: &mut impl Rng,
    mut record: Option<&mut SlotRecord>,
) -> f64 {
    let mut reward = 0.0;
    let mut next_chosen = decision.chosen.iter().copied().peekable();
    for n in 0..instance.arms.len() {
        let params = &instance.arms[n];
        let u_obs: f64 = rng.gen();
        let u_state: f64 = rng.gen();
        let u_avail: f64 = rng.gen();
        let played = next_chosen.peek() == Some(&n);
        if played {
            next_chosen.next();
        }
        let pi = beliefs[n];

        if played {
            debug_assert!(truth[n].available, "an unavailable arm was played");
            let rho_truth = if truth[n].bad { params.rho0 } else { params.rho1 };
            let success = u_obs < rho_truth;
            reward += match instance.reward_mode {
                RewardMode::ExpectedBelief => params.expected_reward(pi),
                RewardMode::Realized => {
                    if truth[n].bad {
                        params.eta0
                    } else {
                        params.eta1
                    }
                }
            };
            beliefs[n] = if success {
                params
                    .belief_after_success(pi)
                    .expect("a success was observed from a belief that forbids success")
            } else {
                params
                    .belief_after_failure(pi)
                    .expect("a failure was observed from a belief that forbids failure")
            };
            if let Some(rec) = record.as_deref_mut() {
                rec.success[n] = Some(success);
            }
        } else if truth[n].available {
            beliefs[n] = params.belief_when_idle(pi);
        } else {
            beliefs[n] = params
                .belief_when_unavailable(pi)
                .expect("a validated instance has a well-defined unavailable update");
        }

        // Hidden-state transition — restless, independent of the action.
        let to_bad = if truth[n].bad { params.p00 } else { params.p10 };
        truth[n].bad = u_state < to_bad;

        // Availability transition driven by this slot's action.
        match params.availability {
            AvailabilityModel::Stochastic {
                theta11,
                theta01,
                theta00,
            } => {
                let available_next = if truth[n].available {
                    if played {
                        theta11
                    } else {
                        theta01
                    }
                } else {
                    theta00
                };
                truth[n].available = u_avail < available_next;
            }
            AvailabilityModel::SemiDeterministic {
                theta11,
                theta01,
                outage_len,
            } => {
                if truth[n].available {
                    let stay = if played { theta11 } else { theta01 };
                    if u_avail >= stay {
                        truth[n].available = false;
                        truth[n].remaining = outage_len;
                    }
                } else {
                    truth[n].remaining -= 1;
                    if truth[n].remaining == 0 {
                        truth[n].available = true;
                    }
                }
            }
        }
    }
    reward
}

/// Advances every arm one slot: played arms emit an observation and pay
/// out, beliefs update through the matching map, hidden states and
/// availabilities transition. Returns the slot reward. `decision` must
/// only choose available arms.
pub fn step(
    instance: &BanditInstance,
    truth: &mut [ArmTruth],
    beliefs: &mut [f64],
    decision: &PolicyDecision,
    rng: &mut impl Rng,
) -> f64 {
    step_impl(instance, truth, beliefs, decision, rng, None)
}

fn initial_truth(
    instance: &BanditInstance,
    initial: &InitialConditions,
    beliefs: &mut Vec<f64>,
    rng: &mut impl Rng,
) -> Vec<ArmTruth> {
    beliefs.clear();
    let mut truth = Vec::with_capacity(instance.arms.len());
    for (n, params) in instance.arms.iter().enumerate() {
        let pi = match &initial.beliefs {
            InitialBeliefs::UniformRandom => rng.gen::<f64>(),
            InitialBeliefs::Fixed(v) => v[n],
        };
        beliefs.push(pi);
        let bad = rng.gen::<f64>() < pi;
        let available = initial.available.as_ref().is_none_or(|a| a[n]);
        let remaining = match (available, params.availability) {
            (false, AvailabilityModel::SemiDeterministic { outage_len, .. }) => outage_len,
            _ => 0,
        };
        truth.push(ArmTruth {
            bad,
            available,
            remaining,
        });
    }
    truth
}

fn perceived(instance: &BanditInstance, truth: &[ArmTruth], beliefs: &[f64]) -> Vec<PerceivedState> {
    truth
        .iter()
        .zip(beliefs)
        .zip(&instance.arms)
        .map(|((t, &pi), params)| {
            if t.available {
                PerceivedState::available(pi)
            } else {
                match params.availability {
                    AvailabilityModel::Stochastic { .. } => PerceivedState::unavailable(pi),
                    AvailabilityModel::SemiDeterministic { .. } => {
                        PerceivedState::in_outage(pi, t.remaining)
                    }
                }
            }
        })
        .collect()
}

struct ReplicationOutcome {
    total: f64,
    /// Discounted cumulative reward after each slot.
    cumulative: Vec<f64>,
    plays: Vec<u64>,
}

fn replicate(
    instance: &BanditInstance,
    policy: &Policy<'_>,
    initial: &InitialConditions,
    seed: u64,
    replication: u64,
    mut trace: Option<&mut Trace>,
) -> ReplicationOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    let mut beliefs = Vec::new();
    let mut truth = initial_truth(instance, initial, &mut beliefs, &mut rng);
    if let Some(t) = trace.as_deref_mut() {
        t.initial_beliefs = beliefs.clone();
    }
    let n = instance.arms.len();
    let mut cumulative = Vec::with_capacity(instance.horizon);
    let mut plays = vec![0u64; n];
    let mut total = 0.0;
    let mut discount = 1.0;
    for _slot in 0..instance.horizon {
        let state = perceived(instance, &truth, &beliefs);
        let decision = policy.decide(&instance.arms, &state, instance.plays_per_slot, &mut rng);
        for &chosen in &decision.chosen {
            plays[chosen] += 1;
        }
        let mut record = trace.as_deref_mut().map(|_| SlotRecord {
            success: vec![None; n],
        });
        let before_beliefs = trace.as_deref_mut().map(|_| beliefs.clone());
        let before_truth = trace.as_deref_mut().map(|_| truth.clone());
        let reward = step_impl(
            instance,
            &mut truth,
            &mut beliefs,
            &decision,
            &mut rng,
            record.as_mut(),
        );
        total += discount * reward;
        discount *= instance.beta;
        cumulative.push(total);
        if let Some(t) = trace.as_deref_mut() {
            let before_truth = before_truth.unwrap();
            t.slots.push(SlotTrace {
                beliefs: before_beliefs.unwrap(),
                bad: before_truth.iter().map(|x| x.bad).collect(),
                available: before_truth.iter().map(|x| x.available).collect(),
                remaining: before_truth.iter().map(|x| x.remaining).collect(),
                chosen: decision.chosen.clone(),
                success: record.unwrap().success,
                reward,
            });
        }
    }
    ReplicationOutcome {
        total,
        cumulative,
        plays,
    }
}

/// One slot of a traced replication: the state *entering* the slot, the
/// decision, the per-played-arm observations, and the undiscounted slot
/// reward.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTrace {
    pub beliefs: Vec<f64>,
    pub bad: Vec<bool>,
    pub available: Vec<bool>,
    pub remaining: Vec<u32>,
    pub chosen: Vec<usize>,
    pub success: Vec<Option<bool>>,
    pub reward: f64,
}

/// A fully recorded replication for replay and calibration checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub initial_beliefs: Vec<f64>,
    pub slots: Vec<SlotTrace>,
}

/// Runs one replication with full state recording. The recorded
/// replication is draw-for-draw identical to the same replication inside
/// [`run`].
pub fn run_replication_traced(
    instance: &BanditInstance,
    policy: &Policy<'_>,
    initial: &InitialConditions,
    seed: u64,
    replication: u64,
) -> Result<Trace, Error> {
    instance.validate()?;
    policy.check(instance)?;
    check_initial(instance, initial)?;
    let mut trace = Trace::default();
    replicate(instance, policy, initial, seed, replication, Some(&mut trace));
    Ok(trace)
}

/// Aggregated results of one contiguous block of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimChunk {
    pub rep_start: usize,
    pub totals: Vec<f64>,
    /// Per-slot sums over the chunk's replications of the discounted
    /// cumulative reward.
    pub trajectory_sum: Vec<f64>,
    pub plays: Vec<u64>,
}

/// Simulates replications `rep_start .. rep_start + count` and aggregates
/// them. Chunks are independent, so a fixed partition of the replication
/// range (the standard one tiles it in [`CHUNK_SIZE`] blocks) can be
/// computed in any order, on any number of threads, and combines to the
/// same report bit for bit.
pub fn simulate_chunk(
    instance: &BanditInstance,
    policy: &Policy<'_>,
    initial: &InitialConditions,
    seed: u64,
    rep_start: usize,
    count: usize,
) -> Result<SimChunk, Error> {
    instance.validate()?;
    policy.check(instance)?;
    check_initial(instance, initial)?;
    let mut totals = Vec::with_capacity(count);
    let mut trajectory_sum = vec![0.0; instance.horizon];
    let mut plays = vec![0u64; instance.arms.len()];
    for r in 0..count {
        let outcome = replicate(instance, policy, initial, seed, (rep_start + r) as u64, None);
        totals.push(outcome.total);
        for (acc, c) in trajectory_sum.iter_mut().zip(&outcome.cumulative) {
            *acc += c;
        }
        for (acc, p) in plays.iter_mut().zip(&outcome.plays) {
            *acc += p;
        }
    }
    Ok(SimChunk {
        rep_start,
        totals,
        trajectory_sum,
        plays,
    })
}

/// Full aggregate of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    /// Discounted total of every replication, in replication order.
    pub totals: Vec<f64>,
    pub mean: f64,
    /// Standard error of the mean (zero for a single replication).
    pub std_error: f64,
    /// Mean discounted cumulative reward after each slot.
    pub trajectory: Vec<f64>,
    /// Fraction of all plays each arm received.
    pub arm_choice_fraction: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

/// Combines chunks (any order) into the final report. The reduction is
/// pairwise and ordered by replication, so the result does not depend on
/// how the chunks were scheduled.
pub fn combine_chunks(
    instance: &BanditInstance,
    seed: u64,
    mut chunks: Vec<SimChunk>,
) -> SimulationReport {
    chunks.sort_by_key(|c| c.rep_start);
    let mut totals = Vec::new();
    for c in &chunks {
        debug_assert_eq!(c.rep_start, totals.len(), "chunks must tile the range");
        totals.extend_from_slice(&c.totals);
    }
    let replications = totals.len();
    let trajectories: Vec<Vec<f64>> = chunks.iter().map(|c| c.trajectory_sum.clone()).collect();
    let mut trajectory = pairwise_vec_sum(&trajectories);
    let mut plays = vec![0u64; instance.arms.len()];
    for c in &chunks {
        for (acc, p) in plays.iter_mut().zip(&c.plays) {
            *acc += p;
        }
    }
    let reps = replications as f64;
    let mean = if replications > 0 {
        pairwise_sum(&totals) / reps
    } else {
        0.0
    };
    let std_error = if replications > 1 {
        let sq: Vec<f64> = totals.iter().map(|&x| (x - mean) * (x - mean)).collect();
        libm::sqrt(pairwise_sum(&sq) / (reps - 1.0) / reps)
    } else {
        0.0
    };
    for v in trajectory.iter_mut() {
        *v /= reps;
    }
    let slots = (replications * instance.horizon * instance.plays_per_slot) as f64;
    let arm_choice_fraction = plays
        .iter()
        .map(|&p| if slots > 0.0 { p as f64 / slots } else { 0.0 })
        .collect();
    SimulationReport {
        totals,
        mean,
        std_error,
        trajectory,
        arm_choice_fraction,
        replications,
        seed,
    }
}

fn check_initial(instance: &BanditInstance, initial: &InitialConditions) -> Result<(), Error> {
    if let InitialBeliefs::Fixed(v) = &initial.beliefs {
        if v.len() != instance.arms.len() {
            return Err(Error::InvalidInstance {
                reason: "fixed initial beliefs must cover every arm",
            });
        }
        for &pi in v {
            if !(0.0..=1.0).contains(&pi) {
                return Err(Error::InvalidParameter {
                    name: "initial belief",
                    value: pi,
                    requirement: "a probability in [0, 1]",
                });
            }
        }
    }
    if let Some(a) = &initial.available {
        if a.len() != instance.arms.len() {
            return Err(Error::InvalidInstance {
                reason: "initial availabilities must cover every arm",
            });
        }
    }
    Ok(())
}

/// Simulates `replications` independent replications of `policy` on
/// `instance` and aggregates them deterministically: the report is a pure
/// function of `(instance, policy, initial, replications, seed)`.
pub fn run(
    instance: &BanditInstance,
    policy: &Policy<'_>,
    initial: &InitialConditions,
    replications: usize,
    seed: u64,
) -> Result<SimulationReport, Error> {
    if replications == 0 {
        return Err(Error::InvalidParameter {
            name: "replications",
            value: 0.0,
            requirement: "at least one replication",
        });
    }
    let mut chunks = Vec::new();
    let mut rep = 0;
    while rep < replications {
        let count = CHUNK_SIZE.min(replications - rep);
        chunks.push(simulate_chunk(instance, policy, initial, seed, rep, count)?);
        rep += count;
    }
    Ok(combine_chunks(instance, seed, chunks))
}
