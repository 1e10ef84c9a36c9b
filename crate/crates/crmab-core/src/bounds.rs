//! Upper bounds on the constrained problem's optimal value.
//!
//! Two relaxations are computed:
//!
//! * an availability-blind single-arm value ([`solve_unconstrained`]) in
//!   which the arm may always be played — an upper bound on the
//!   availability-aware value everywhere under natural evolution, and on
//!   a computable belief region ([`stationary_reset_safe_set`]) under stationary
//!   reset;
//! * a per-play-charge relaxation ([`solve_lambda_arm`],
//!   [`lagrangian_bound`]): drop the per-slot play budget, charge
//!   `lambda` per play instead, and refund `M * lambda` per slot outside
//!   the sum. The total is an upper bound for every `lambda >= 0` and is
//!   convex in `lambda`, so a coarse scan plus golden-section refinement
//!   finds the tightest one.
//!
//! [`joint_dp_oracle`] solves the charged problem on the *product* state
//! space for one or two arms without assuming it separates across arms,
//! which lets tests validate the per-arm decomposition independently.

use alloc::vec;
use alloc::vec::Vec;

use crate::arm::{ArmParams, AvailabilityModel, PerceivedState};
use crate::error::Error;
use crate::grid::BeliefGrid;
use crate::sim::BanditInstance;
use crate::solver::{
    effective_tolerance, solve_availability_aware, solve_no_availability, UnavailableValues,
    ValueTable,
};

/// Hard cap on joint-oracle product states (beliefs times availability
/// sub-states, multiplied across arms).
pub const DEFAULT_STATE_CAP: usize = 2_000_000;
/// Coarse scan points of the default charge search.
pub const DEFAULT_LAMBDA_STEPS: usize = 17;
/// Golden-section iterations used to refine the charge after the scan.
const GOLDEN_ITERATIONS: usize = 40;

/// Availability-blind single-arm value: the arm can always be played,
/// idling pays the subsidy `w`. Upper-bounds the availability-aware value
/// (everywhere under natural evolution). The returned table's `play` and
/// `idle` arrays hold the two branch values; `available` holds their max.
pub fn solve_unconstrained(
    params: &ArmParams,
    subsidy: f64,
    beta: f64,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<ValueTable, Error> {
    solve_no_availability(params, subsidy, 0.0, beta, grid, tolerance, max_sweeps, None)
}

/// Marks the grid beliefs on which the availability-blind bound is known
/// to dominate under the stationary-reset unavailable update: those whose
/// idle-branch value at the stationary belief is no better than at the
/// belief itself and at both of its observation successors.
///
/// `blind` must come from [`solve_unconstrained`] on the same `params`.
pub fn stationary_reset_safe_set(blind: &ValueTable, params: &ArmParams) -> Result<Vec<bool>, Error> {
    let q = params.stationary_belief()?;
    let idle_at = |belief: f64| blind.grid.interp(&blind.idle, belief);
    let at_q = idle_at(q);
    let eps = 1e-12;
    let mut members = Vec::with_capacity(blind.grid.len());
    for &pi in blind.grid.points() {
        let rho = params.success_prob(pi);
        let mut ok = at_q <= idle_at(pi) + eps;
        // Skip an observation branch that has probability zero at this
        // belief: its successor is undefined and never reached.
        if ok && rho > 0.0 {
            ok = at_q <= idle_at(params.belief_after_success(pi)?) + eps;
        }
        if ok && rho < 1.0 {
            ok = at_q <= idle_at(params.belief_after_failure(pi)?) + eps;
        }
        members.push(ok);
    }
    Ok(members)
}

/// Single-arm value of the charged relaxation: playing yields the
/// expected reward minus `lambda`, idling yields nothing. With
/// `constrained` set the arm keeps its availability dynamics (value
/// depends on the availability state); without it the arm is always
/// playable (the coarser bound used for dominance checks).
#[allow(clippy::too_many_arguments)]
pub fn solve_lambda_arm(
    params: &ArmParams,
    lambda: f64,
    beta: f64,
    grid: &BeliefGrid,
    constrained: bool,
    tolerance: f64,
    max_sweeps: usize,
    warm: Option<&ValueTable>,
) -> Result<ValueTable, Error> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            requirement: "a nonnegative play charge",
        });
    }
    if constrained {
        solve_availability_aware(params, 0.0, lambda, beta, grid, tolerance, max_sweeps, warm)
    } else {
        solve_no_availability(params, 0.0, lambda, beta, grid, tolerance, max_sweeps, warm)
    }
}

/// Charge search range: `steps` evenly spaced charges over `[lo, hi]`
/// scanned coarsely, then refined by golden section (the total is convex
/// in the charge). `steps == 1` evaluates the single charge `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearch {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl LambdaSearch {
    /// Default search for an instance: `[0, max_n eta1]` with
    /// [`DEFAULT_LAMBDA_STEPS`] scan points.
    pub fn standard(instance: &BanditInstance) -> Self {
        let hi = instance
            .arms
            .iter()
            .map(|a| a.eta1)
            .fold(0.0f64, f64::max);
        Self {
            lo: 0.0,
            hi,
            steps: DEFAULT_LAMBDA_STEPS,
        }
    }
}

/// A decoupled upper bound on the constrained value from one arm-set,
/// query state, and charge search.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianBound {
    /// Charge at which `per_arm` and `total` are reported (the best
    /// found).
    pub lambda: f64,
    /// Same value, kept explicit: the minimizer over the searched set.
    pub lambda_optimal: f64,
    /// Per-arm charged values at the query state.
    pub per_arm: Vec<f64>,
    /// `M * lambda / (1 - beta)` plus the sum of `per_arm` — an upper
    /// bound on the constrained value at the query state.
    pub total: f64,
    /// Per-slot play budget `M` the refund term uses.
    pub plays_per_slot: usize,
    pub beta: f64,
    /// Every coarsely scanned `(lambda, total)` pair; each total is
    /// itself a valid upper bound.
    pub scanned: Vec<(f64, f64)>,
}

/// Minimizes `M * lambda / (1 - beta) + sum_n J_lambda(state_n)` over the
/// charge search and reports the tightest bound with its per-arm split.
pub fn lagrangian_bound(
    instance: &BanditInstance,
    state: &[PerceivedState],
    search: LambdaSearch,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<LagrangianBound, Error> {
    instance.validate()?;
    if state.len() != instance.arms.len() {
        return Err(Error::InvalidInstance {
            reason: "query state length does not match the number of arms",
        });
    }
    minimize_charge(instance, search, grid, tolerance, max_sweeps, |n, solved| {
        solved.value_at(&state[n])
    })
}

/// Like [`lagrangian_bound`], but averaged over an independent uniform
/// initial belief per arm, matching a simulation run started from
/// [`crate::sim::InitialBeliefs::UniformRandom`]. Each arm contributes
/// the trapezoid mean of its charged value over the grid; linear
/// interpolation of a convex value overshoots it, so the reported total
/// still bounds the expected constrained value from above (up to solver
/// tolerance). `available[n]` gives arm `n`'s initial availability; an
/// unavailable fixed-outage arm is taken at a full countdown, as the
/// simulator starts it.
pub fn lagrangian_bound_uniform(
    instance: &BanditInstance,
    available: &[bool],
    search: LambdaSearch,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<LagrangianBound, Error> {
    instance.validate()?;
    if available.len() != instance.arms.len() {
        return Err(Error::InvalidInstance {
            reason: "initial availability length does not match the number of arms",
        });
    }
    minimize_charge(instance, search, grid, tolerance, max_sweeps, |n, solved| {
        if available[n] {
            uniform_mean(&solved.available)
        } else {
            match &solved.unavailable {
                UnavailableValues::Stochastic(v) => uniform_mean(v),
                UnavailableValues::SemiDeterministic(tables) => {
                    uniform_mean(tables.last().expect("outage tables are nonempty"))
                }
                UnavailableValues::Absent => uniform_mean(&solved.available),
            }
        }
    })
}

/// Trapezoid mean of grid values over a uniformly distributed belief.
fn uniform_mean(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return values.first().copied().unwrap_or(0.0);
    }
    let sum = crate::num::pairwise_sum(values);
    (sum - 0.5 * (values[0] + values[values.len() - 1])) / (values.len() - 1) as f64
}

/// Shared charge minimization: coarse scan plus golden-section
/// refinement, with `contribution` mapping each arm's solved charged
/// table to its term in the total.
fn minimize_charge(
    instance: &BanditInstance,
    search: LambdaSearch,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
    contribution: impl Fn(usize, &ValueTable) -> f64,
) -> Result<LagrangianBound, Error> {
    if !(search.lo >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "search.lo",
            value: search.lo,
            requirement: "a nonnegative charge",
        });
    }
    if search.steps == 0 {
        return Err(Error::InvalidParameter {
            name: "search.steps",
            value: 0.0,
            requirement: "at least one scan point",
        });
    }
    if search.steps > 1 && !(search.hi > search.lo) {
        return Err(Error::InvalidParameter {
            name: "search.hi",
            value: search.hi,
            requirement: "strictly above search.lo when scanning",
        });
    }

    let beta = instance.beta;
    let refund = instance.plays_per_slot as f64 / (1.0 - beta);
    let mut caches: Vec<Option<ValueTable>> = vec![None; instance.arms.len()];
    let evaluate = |lambda: f64,
                        caches: &mut Vec<Option<ValueTable>>|
     -> Result<(Vec<f64>, f64), Error> {
        let mut per_arm = Vec::with_capacity(instance.arms.len());
        for (n, params) in instance.arms.iter().enumerate() {
            let solved = solve_lambda_arm(
                params,
                lambda,
                beta,
                grid,
                true,
                tolerance,
                max_sweeps,
                caches[n].as_ref(),
            )?;
            per_arm.push(contribution(n, &solved));
            caches[n] = Some(solved);
        }
        let total = refund * lambda + crate::num::pairwise_sum(&per_arm);
        Ok((per_arm, total))
    };

    let mut scanned = Vec::with_capacity(search.steps);
    let mut best_k = 0usize;
    for k in 0..search.steps {
        let lambda = if search.steps == 1 {
            search.lo
        } else {
            search.lo + (search.hi - search.lo) * k as f64 / (search.steps - 1) as f64
        };
        let (_, total) = evaluate(lambda, &mut caches)?;
        scanned.push((lambda, total));
        if total < scanned[best_k].1 {
            best_k = k;
        }
    }

    let (mut best_lambda, mut best_total) = scanned[best_k];
    if search.steps > 1 {
        // Golden-section refinement on the bracket around the scan
        // minimum (the total is convex in the charge).
        let mut a = scanned[best_k.saturating_sub(1)].0;
        let mut b = scanned[(best_k + 1).min(search.steps - 1)].0;
        let inv_phi = 0.618_033_988_749_894_9;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = evaluate(x1, &mut caches)?.1;
        let mut f2 = evaluate(x2, &mut caches)?.1;
        for _ in 0..GOLDEN_ITERATIONS {
            if b - a < 1e-6 * (1.0 + b.abs()) {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = evaluate(x1, &mut caches)?.1;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = evaluate(x2, &mut caches)?.1;
            }
            let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if f < best_total {
                best_total = f;
                best_lambda = x;
            }
        }
    }

    let (per_arm, total) = evaluate(best_lambda, &mut caches)?;
    Ok(LagrangianBound {
        lambda: best_lambda,
        lambda_optimal: best_lambda,
        per_arm,
        total,
        plays_per_slot: instance.plays_per_slot,
        beta,
        scanned,
    })
}

/// One weighted outcome of a joint-oracle transition: `(probability,
/// next availability sub-state, interpolation handle into the grid)`.
type Branch = (f64, usize, (usize, f64));
/// Outcome lists indexed `[availability sub-state][grid point][action]`.
type BranchTable = Vec<Vec<[Vec<Branch>; 2]>>;

/// One arm's compiled transition data for the joint oracle.
struct OracleArm {
    grid: BeliefGrid,
    /// Availability sub-states: index 0 is available; for stochastic
    /// outages index 1 is unavailable; for fixed-length outages index k
    /// (1..=T0) means k slots remain.
    avail_dim: usize,
    eta: Vec<f64>,
    /// Unavailable sub-states only carry `action == 0`.
    branches: BranchTable,
}

fn compile_oracle_arm(params: &ArmParams, grid: &BeliefGrid) -> Result<OracleArm, Error> {
    let n = grid.len();
    let (theta11, theta01) = (params.availability.theta11(), params.availability.theta01());
    let avail_dim = match params.availability {
        AvailabilityModel::Stochastic { .. } => 2,
        AvailabilityModel::SemiDeterministic { outage_len, .. } => 1 + outage_len as usize,
    };
    let outage_entry = avail_dim - 1; // stochastic: 1; fixed-length: T0
    let mut eta = Vec::with_capacity(n);
    let mut branches: BranchTable = vec![Vec::with_capacity(n); avail_dim];
    for j in 0..n {
        let pi = grid.point(j);
        eta.push(params.expected_reward(pi));
        let rho = params.success_prob(pi);
        let idle_next = grid.locate(params.belief_when_idle(pi));
        let away_next = grid.locate(params.belief_when_unavailable(pi)?);

        // Available sub-state, idle.
        let mut avail_idle = Vec::new();
        push_avail_split(&mut avail_idle, 1.0, theta01, idle_next, outage_entry);
        // Available sub-state, play.
        let mut avail_play = Vec::new();
        if rho > 0.0 {
            let succ = grid.locate(params.belief_after_success(pi)?);
            push_avail_split(&mut avail_play, rho, theta11, succ, outage_entry);
        }
        if rho < 1.0 {
            let fail = grid.locate(params.belief_after_failure(pi)?);
            push_avail_split(&mut avail_play, 1.0 - rho, theta11, fail, outage_entry);
        }
        branches[0].push([avail_idle, avail_play]);

        // Unavailable sub-states: idle only.
        match params.availability {
            AvailabilityModel::Stochastic { theta00, .. } => {
                let mut back = Vec::new();
                if theta00 > 0.0 {
                    back.push((theta00, 0, away_next));
                }
                if theta00 < 1.0 {
                    back.push((1.0 - theta00, 1, away_next));
                }
                branches[1].push([back, Vec::new()]);
            }
            AvailabilityModel::SemiDeterministic { .. } => {
                for (k, row) in branches.iter_mut().enumerate().skip(1) {
                    let next_avail = k - 1; // 0 means available again
                    row.push([vec![(1.0, next_avail, away_next)], Vec::new()]);
                }
            }
        }
    }
    Ok(OracleArm {
        grid: grid.clone(),
        avail_dim,
        eta,
        branches,
    })
}

/// Splits an already-weighted outcome across next-slot availability.
fn push_avail_split(
    out: &mut Vec<Branch>,
    weight: f64,
    stay_prob: f64,
    next: (usize, f64),
    outage_entry: usize,
) {
    if stay_prob > 0.0 {
        out.push((weight * stay_prob, 0, next));
    }
    if stay_prob < 1.0 {
        out.push((weight * (1.0 - stay_prob), outage_entry, next));
    }
}

/// Charged-relaxation value computed on the joint product state space of
/// one or two arms (beliefs x availability sub-states), with every
/// available arm independently free to play.
///
/// Deliberately ignores that the problem separates across arms, so its
/// result can validate the per-arm decomposition. `state_cap` guards the
/// product size (use [`DEFAULT_STATE_CAP`]).
#[allow(clippy::too_many_arguments)]
pub fn joint_dp_oracle(
    arms: &[ArmParams],
    lambda: f64,
    beta: f64,
    grids: &[BeliefGrid],
    query: &[PerceivedState],
    tolerance: f64,
    max_sweeps: usize,
    state_cap: usize,
) -> Result<f64, Error> {
    if arms.is_empty() || arms.len() > 2 {
        return Err(Error::InvalidInstance {
            reason: "the joint oracle handles one or two arms",
        });
    }
    if grids.len() != arms.len() || query.len() != arms.len() {
        return Err(Error::InvalidInstance {
            reason: "need one grid and one query state per arm",
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            requirement: "a nonnegative play charge",
        });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            requirement: "a discount factor strictly between 0 and 1",
        });
    }
    for (n, params) in arms.iter().enumerate() {
        params.validate(n)?;
    }
    let compiled: Vec<OracleArm> = arms
        .iter()
        .zip(grids)
        .map(|(p, g)| compile_oracle_arm(p, g))
        .collect::<Result<_, _>>()?;
    let dims: Vec<usize> = compiled
        .iter()
        .map(|c| c.grid.len() * c.avail_dim)
        .collect();
    let states: usize = dims.iter().product();
    if states > state_cap {
        return Err(Error::StateSpaceTooLarge {
            states,
            cap: state_cap,
        });
    }

    // Flat layout: ((a1 * g1 + j1) * dim2 + (a2 * g2 + j2)), second factor
    // absent for a single arm.
    let stride = if compiled.len() == 2 { dims[1] } else { 1 };
    let mut value = vec![0.0f64; states];
    let mut next = vec![0.0f64; states];
    let stop = effective_tolerance(tolerance, beta);

    fn single(c: &OracleArm, a: usize, j: usize, action: usize) -> &[Branch] {
        &c.branches[a][j][action]
    }

    let mut residual = f64::INFINITY;
    let mut sweeps = 0usize;
    while residual > stop {
        if sweeps >= max_sweeps {
            return Err(Error::NonConvergence {
                iterations: sweeps,
                residual,
            });
        }
        residual = 0.0;
        for (s, slot) in next.iter_mut().enumerate() {
            let (first, second) = (s / stride, s % stride);
            let (a1, j1) = (first / compiled[0].grid.len(), first % compiled[0].grid.len());
            let mut best = f64::NEG_INFINITY;
            let actions1: &[usize] = if a1 == 0 { &[0, 1] } else { &[0] };
            match compiled.len() {
                1 => {
                    for &act1 in actions1 {
                        let reward = if act1 == 1 {
                            compiled[0].eta[j1] - lambda
                        } else {
                            0.0
                        };
                        let mut cont = 0.0;
                        for &(p, na, (i, t)) in single(&compiled[0], a1, j1, act1) {
                            let base = na * compiled[0].grid.len();
                            cont += p * ((1.0 - t) * value[base + i] + t * value[base + i + 1]);
                        }
                        best = best.max(reward + beta * cont);
                    }
                }
                _ => {
                    let (a2, j2) = (
                        second / compiled[1].grid.len(),
                        second % compiled[1].grid.len(),
                    );
                    let actions2: &[usize] = if a2 == 0 { &[0, 1] } else { &[0] };
                    for &act1 in actions1 {
                        let r1 = if act1 == 1 {
                            compiled[0].eta[j1] - lambda
                        } else {
                            0.0
                        };
                        for &act2 in actions2 {
                            let r2 = if act2 == 1 {
                                compiled[1].eta[j2] - lambda
                            } else {
                                0.0
                            };
                            let mut cont = 0.0;
                            for &(p1, na1, (i1, t1)) in single(&compiled[0], a1, j1, act1) {
                                let base1 = (na1 * compiled[0].grid.len() + i1) * stride;
                                let base1n = (na1 * compiled[0].grid.len() + i1 + 1) * stride;
                                for &(p2, na2, (i2, t2)) in single(&compiled[1], a2, j2, act2) {
                                    let off = na2 * compiled[1].grid.len() + i2;
                                    let v00 = value[base1 + off];
                                    let v01 = value[base1 + off + 1];
                                    let v10 = value[base1n + off];
                                    let v11 = value[base1n + off + 1];
                                    let low = (1.0 - t2) * v00 + t2 * v01;
                                    let high = (1.0 - t2) * v10 + t2 * v11;
                                    cont += p1 * p2 * ((1.0 - t1) * low + t1 * high);
                                }
                            }
                            best = best.max(r1 + r2 + beta * cont);
                        }
                    }
                }
            }
            residual = residual.max((best - *slot).abs());
            *slot = best;
        }
        core::mem::swap(&mut value, &mut next);
        sweeps += 1;
    }

    // Interpolate the query state.
    let handles: Vec<(usize, (usize, f64))> = query
        .iter()
        .zip(&compiled)
        .map(|(st, c)| {
            let a = if st.available {
                0
            } else if c.avail_dim == 2 {
                1
            } else {
                let t0 = c.avail_dim - 1;
                st.remaining
                    .map(|r| (r as usize).clamp(1, t0))
                    .unwrap_or(t0)
            };
            (a, c.grid.locate(st.belief))
        })
        .collect();
    let value_at = |s1: usize, s2: usize| value[s1 * stride + s2];
    let (a1, (i1, t1)) = handles[0];
    let g1 = compiled[0].grid.len();
    let lerp1 = |s2: usize| -> f64 {
        (1.0 - t1) * value_at(a1 * g1 + i1, s2) + t1 * value_at(a1 * g1 + i1 + 1, s2)
    };
    Ok(match compiled.len() {
        1 => lerp1(0),
        _ => {
            let (a2, (i2, t2)) = handles[1];
            let g2 = compiled[1].grid.len();
            (1.0 - t2) * lerp1(a2 * g2 + i2) + t2 * lerp1(a2 * g2 + i2 + 1)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::UnavailableUpdate;
    use crate::sim::RewardMode;
    use crate::solver::{solve_arm, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE};

    fn flaky_arm() -> ArmParams {
        ArmParams {
            p00: 0.2,
            p10: 0.8,
            rho0: 0.1,
            rho1: 0.9,
            eta0: 0.1,
            eta1: 0.9,
            availability: AvailabilityModel::Stochastic {
                theta11: 0.25,
                theta01: 0.8,
                theta00: 0.9,
            },
            unavailable_update: UnavailableUpdate::NaturalEvolution,
        }
    }

    fn steady_arm() -> ArmParams {
        ArmParams {
            p00: 0.55,
            p10: 0.45,
            rho0: 0.3,
            rho1: 0.8,
            eta0: 0.3,
            eta1: 0.8,
            availability: AvailabilityModel::always_available(),
            unavailable_update: UnavailableUpdate::NaturalEvolution,
        }
    }

    fn grid(n: usize) -> BeliefGrid {
        BeliefGrid::uniform(n).unwrap()
    }

    #[test]
    fn unconstrained_single_stage_is_the_best_of_reward_and_subsidy() {
        let g = grid(41);
        let arm = steady_arm();
        let table =
            solve_unconstrained(&arm, 0.55, 1e-9, &g, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)
                .unwrap();
        for (j, &pi) in g.points().iter().enumerate() {
            let expect = arm.expected_reward(pi).max(0.55);
            assert!((table.available[j] - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn unconstrained_collapses_when_the_subsidy_dominates() {
        let g = grid(21);
        let arm = steady_arm();
        let beta = 0.9;
        let table =
            solve_unconstrained(&arm, 0.85, beta, &g, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)
                .unwrap();
        for &v in &table.available {
            assert!((v - 0.85 / (1.0 - beta)).abs() < 1e-6);
        }
    }

    #[test]
    fn blind_value_dominates_the_availability_aware_value() {
        let g = grid(101);
        let arm = flaky_arm();
        let (w, beta) = (0.4, 0.95);
        let blind =
            solve_unconstrained(&arm, w, beta, &g, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let aware = solve_arm(&arm, w, beta, &g, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        for (j, &pi) in g.points().iter().enumerate() {
            assert!(blind.available[j] >= aware.available[j] - 1e-6);
            assert!(blind.available[j] >= aware.value_unavailable(pi, None) - 1e-6);
        }
    }

    #[test]
    fn constant_idle_value_admits_every_belief() {
        // With p00 = p10 every belief relaxes to the same next belief, so
        // the idle branch is flat and the three inequalities are ties.
        let g = grid(31);
        let arm = ArmParams {
            p00: 0.5,
            p10: 0.5,
            ..steady_arm()
        };
        let blind =
            solve_unconstrained(&arm, 0.3, 0.9, &g, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let members = stationary_reset_safe_set(&blind, &arm).unwrap();
        assert!(members.iter().all(|&m| m));
    }

    #[test]
    fn zero_charge_on_an_always_available_arm_pays_at_least_always_playing() {
        let g = grid(101);
        let arm = steady_arm();
        let beta = 0.9;
        let table = solve_lambda_arm(
            &arm,
            0.0,
            beta,
            &g,
            true,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();
        for &v in &table.available {
            assert!(v >= arm.eta0 / (1.0 - beta) - 1e-6);
        }
    }

    #[test]
    fn charge_above_any_reward_makes_the_arm_worthless() {
        let g = grid(51);
        let arm = flaky_arm();
        let table = solve_lambda_arm(
            &arm,
            0.95,
            0.9,
            &g,
            true,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();
        for (j, &pi) in g.points().iter().enumerate() {
            assert!(table.available[j].abs() < 1e-9);
            assert!(table.value_unavailable(pi, None).abs() < 1e-9);
        }
    }

    #[test]
    fn charged_blind_value_dominates_charged_aware_value() {
        let g = grid(101);
        let arm = flaky_arm();
        let (lambda, beta) = (0.5, 0.95);
        let aware = solve_lambda_arm(
            &arm,
            lambda,
            beta,
            &g,
            true,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();
        let blind = solve_lambda_arm(
            &arm,
            lambda,
            beta,
            &g,
            false,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();
        for (j, &pi) in g.points().iter().enumerate() {
            assert!(blind.available[j] >= aware.available[j] - 1e-6);
            assert!(blind.available[j] >= aware.value_unavailable(pi, None) - 1e-6);
        }
    }

    fn two_arm_instance(arms: Vec<ArmParams>, m: usize, beta: f64) -> BanditInstance {
        BanditInstance {
            arms,
            plays_per_slot: m,
            beta,
            horizon: 100,
            reward_mode: RewardMode::ExpectedBelief,
        }
    }

    #[test]
    fn bound_is_tight_when_every_arm_can_always_be_played() {
        let beta = 0.9;
        let instance = two_arm_instance(vec![steady_arm(), steady_arm()], 2, beta);
        let g = grid(101);
        let state = vec![PerceivedState::available(0.4), PerceivedState::available(0.7)];
        let search = LambdaSearch {
            lo: 0.0,
            hi: 0.8,
            steps: 9,
        };
        let bound = lagrangian_bound(
            &instance,
            &state,
            search,
            &g,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
        )
        .unwrap();
        // The budget never binds, so the total is flat in the charge near
        // zero (the refund exactly cancels the charged plays): any charge
        // in that region minimizes, and the bound equals the sum of
        // uncharged single-arm values.
        assert!(bound.lambda_optimal <= 0.1 + 1e-9);
        let direct: f64 = state
            .iter()
            .zip(&instance.arms)
            .map(|(st, arm)| {
                solve_lambda_arm(
                    arm,
                    0.0,
                    beta,
                    &g,
                    true,
                    DEFAULT_TOLERANCE,
                    DEFAULT_MAX_SWEEPS,
                    None,
                )
                .unwrap()
                .value_at(st)
            })
            .sum();
        assert!(
            (bound.total - direct).abs() < 1e-4,
            "total {} vs direct sum {direct}",
            bound.total
        );
        assert_eq!(bound.scanned.len(), 9);
        for &(_, t) in &bound.scanned {
            assert!(t >= bound.total - 1e-6);
        }
    }

    #[test]
    fn single_charge_with_no_budget_is_the_plain_sum() {
        let beta = 0.9;
        let instance = two_arm_instance(vec![steady_arm(), flaky_arm()], 1, beta);
        let mut no_budget = instance.clone();
        no_budget.plays_per_slot = 0;
        // A zero budget is rejected by validation, so bypass it through
        // the search with lambda fixed at zero where the refund vanishes.
        let g = grid(51);
        let state = vec![PerceivedState::available(0.2), PerceivedState::unavailable(0.6)];
        let bound = lagrangian_bound(
            &instance,
            &state,
            LambdaSearch {
                lo: 0.0,
                hi: 0.0,
                steps: 1,
            },
            &g,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
        )
        .unwrap();
        let direct: f64 = state
            .iter()
            .zip(&instance.arms)
            .map(|(st, arm)| {
                solve_lambda_arm(
                    arm,
                    0.0,
                    beta,
                    &g,
                    true,
                    DEFAULT_TOLERANCE,
                    DEFAULT_MAX_SWEEPS,
                    None,
                )
                .unwrap()
                .value_at(st)
            })
            .sum();
        assert!((bound.total - direct).abs() < 1e-9);
        assert_eq!(bound.lambda, 0.0);
    }

    #[test]
    fn joint_oracle_decomposes_across_arms() {
        let beta = 0.9;
        let lambda = 0.3;
        let arms = [flaky_arm(), steady_arm()];
        let g = grid(21);
        let grids = [g.clone(), g.clone()];
        let query = [PerceivedState::available(0.35), PerceivedState::available(0.65)];
        let joint = joint_dp_oracle(
            &arms,
            lambda,
            beta,
            &grids,
            &query,
            1e-8,
            DEFAULT_MAX_SWEEPS,
            DEFAULT_STATE_CAP,
        )
        .unwrap();
        let split: f64 = arms
            .iter()
            .zip(&query)
            .map(|(arm, st)| {
                solve_lambda_arm(arm, lambda, beta, &g, true, 1e-8, DEFAULT_MAX_SWEEPS, None)
                    .unwrap()
                    .value_at(st)
            })
            .sum();
        assert!(
            (joint - split).abs() <= 5e-3 * joint.abs().max(1.0),
            "joint {joint} vs per-arm sum {split}"
        );
    }

    #[test]
    fn joint_oracle_with_a_prohibitive_charge_is_worthless() {
        let arms = [flaky_arm(), flaky_arm()];
        let g = grid(11);
        let grids = [g.clone(), g.clone()];
        let query = [PerceivedState::available(0.5), PerceivedState::unavailable(0.5)];
        let joint = joint_dp_oracle(
            &arms,
            0.95,
            0.9,
            &grids,
            &query,
            1e-9,
            DEFAULT_MAX_SWEEPS,
            DEFAULT_STATE_CAP,
        )
        .unwrap();
        assert!(joint.abs() < 1e-9);
    }

    #[test]
    fn joint_oracle_guards_the_product_size() {
        let arms = [flaky_arm(), flaky_arm()];
        let g = grid(51);
        let grids = [g.clone(), g.clone()];
        let query = [PerceivedState::available(0.5), PerceivedState::available(0.5)];
        let err = joint_dp_oracle(
            &arms,
            0.3,
            0.9,
            &grids,
            &query,
            1e-8,
            DEFAULT_MAX_SWEEPS,
            100,
        )
        .unwrap_err();
        match err {
            Error::StateSpaceTooLarge { states, cap } => {
                assert_eq!(states, (51 * 2) * (51 * 2));
                assert_eq!(cap, 100);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn uniform_bound_has_a_closed_form_for_flat_updates() {
        // With p00 = p10 the belief jumps to 0.5 after one slot whatever
        // happens, and playing dominates at zero charge, so the value
        // from belief pi is eta(pi) + beta * eta(0.5) / (1 - beta) —
        // affine in pi, which the trapezoid mean integrates exactly to
        // eta(0.5) / (1 - beta).
        let arm = ArmParams {
            p00: 0.5,
            p10: 0.5,
            rho0: 0.2,
            rho1: 0.8,
            eta0: 0.2,
            eta1: 0.8,
            availability: AvailabilityModel::always_available(),
            unavailable_update: UnavailableUpdate::NaturalEvolution,
        };
        let beta = 0.9;
        let instance = BanditInstance {
            arms: vec![arm],
            plays_per_slot: 1,
            beta,
            horizon: 1,
            reward_mode: RewardMode::ExpectedBelief,
        };
        let g = grid(101);
        let search = LambdaSearch {
            lo: 0.0,
            hi: 0.0,
            steps: 1,
        };
        let bound = lagrangian_bound_uniform(
            &instance,
            &[true],
            search,
            &g,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
        )
        .unwrap();
        let expect = 0.5 / (1.0 - beta);
        assert!(
            (bound.total - expect).abs() < 1e-6,
            "uniform total {} vs closed form {expect}",
            bound.total
        );
    }

    #[test]
    fn uniform_bound_starts_unavailable_arms_at_a_full_outage() {
        let mut arm = flaky_arm();
        arm.availability = AvailabilityModel::SemiDeterministic {
            theta11: 0.4,
            theta01: 0.75,
            outage_len: 2,
        };
        let beta = 0.9;
        let lambda = 0.3;
        let instance = BanditInstance {
            arms: vec![arm.clone()],
            plays_per_slot: 1,
            beta,
            horizon: 1,
            reward_mode: RewardMode::ExpectedBelief,
        };
        let g = grid(81);
        let search = LambdaSearch {
            lo: lambda,
            hi: lambda,
            steps: 1,
        };
        let bound = lagrangian_bound_uniform(
            &instance,
            &[false],
            search,
            &g,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
        )
        .unwrap();
        let solved = solve_lambda_arm(
            &arm,
            lambda,
            beta,
            &g,
            true,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();
        let row = match &solved.unavailable {
            UnavailableValues::SemiDeterministic(tables) => tables.last().unwrap().clone(),
            other => panic!("expected outage tables, got {other:?}"),
        };
        let direct = lambda / (1.0 - beta) + uniform_mean(&row);
        assert!(
            (bound.total - direct).abs() < 1e-9,
            "uniform total {} vs direct {direct}",
            bound.total
        );
    }
}
