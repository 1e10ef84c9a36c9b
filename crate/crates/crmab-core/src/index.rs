//! Subsidy indices for arms: the subsidy that makes idling exactly as
//! attractive as playing at a given belief.
//!
//! Three routes to the same object, plus one deliberately different
//! heuristic:
//!
//! * [`whittle_sa`] — two-timescale stochastic approximation: a slow
//!   subsidy iterate `w <- w + alpha_t * (play - idle)` around a fast,
//!   warm-started value re-solve;
//! * [`whittle_bisect`] — sign bisection of the play advantage in the
//!   subsidy, for one belief at a time;
//! * [`whittle_table_sweep`] — the production table builder: one
//!   warm-started pass over an ascending subsidy grid (every belief shares
//!   every solve), then a few per-belief secant refinements until the
//!   fixed-point certificate `|play - idle| <= h` holds;
//! * [`modified_whittle`] — a backward finite-horizon recursion that
//!   couples the subsidy to the previous stage's index pointwise in
//!   belief. Cheap, index-like, and *not* equal to the subsidy index: it
//!   is the comparison heuristic, not a third solver for the same number.
//!
//! Every returned table records per-belief diagnostics: the advantage
//! residual at the returned subsidy and the number of iterations spent.

use alloc::vec;
use alloc::vec::Vec;

use crate::arm::{ArmParams, AvailabilityModel};
use crate::error::Error;
use crate::grid::{lerp, BeliefGrid};
use crate::num::powi;
use crate::solver::{solve_arm_warm, Maps, ValueTable, DEFAULT_MAX_SWEEPS};

/// Advantage residual below which a subsidy iterate counts as converged.
pub const DEFAULT_SA_TOLERANCE: f64 = 1e-4;
/// Subsidy-update budget for the stochastic approximation.
pub const DEFAULT_SA_BUDGET: usize = 5_000;
/// Tolerance of the warm inner value re-solves inside index iterations.
pub const INNER_SOLVE_TOLERANCE: f64 = 1e-6;
/// Default subsidy-axis tolerance for bisection.
pub const DEFAULT_BISECT_TOLERANCE: f64 = 1e-6;
/// Subsidy grid size of the sweep table builder.
const SWEEP_STEPS: usize = 129;
/// Refinement probe budget per belief in the sweep table builder.
const SWEEP_REFINE_BUDGET: usize = 60;

/// How an index table was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMethod {
    StochasticApproximation,
    Bisection,
    SubsidySweep,
    FiniteHorizonBackward,
}

/// Index values over a belief grid, with per-belief diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTable {
    pub grid: BeliefGrid,
    pub values: Vec<f64>,
    pub method: IndexMethod,
    /// Advantage residual `|play - idle|` at the returned subsidy (for
    /// [`IndexMethod::FiniteHorizonBackward`]: the change between the last
    /// two stages).
    pub residuals: Vec<f64>,
    /// Subsidy updates (SA), solve probes (bisection/sweep), or backward
    /// stages (finite horizon) spent per belief.
    pub iterations: Vec<usize>,
}

impl IndexTable {
    /// Linearly interpolated index at `belief`.
    pub fn index_at(&self, belief: f64) -> f64 {
        self.grid.interp(&self.values, belief)
    }

    /// Largest increase of the index between consecutive grid beliefs
    /// (zero for a nonincreasing table). A diagnostic, not an error: the
    /// index of a threshold-structured arm should not increase in the
    /// belief of the bad state.
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max)
    }
}

/// Step-size schedule `alpha_t = scale / (1 + t / halflife)` for the
/// stochastic approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub scale: f64,
    pub halflife: f64,
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        self.scale / (1.0 + t as f64 / self.halflife)
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            scale: 1.0,
            halflife: 50.0,
        }
    }
}

/// Default subsidy bracket: below `-1` idling is paid worse than the worst
/// play reward forever; above `eta1 / (1 - beta)` one idle slot already
/// beats any play stream.
pub fn default_bracket(params: &ArmParams, beta: f64) -> (f64, f64) {
    (-1.0, params.eta1 / (1.0 - beta))
}

/// Horizon at which discounted tails fall below `1e-6`.
pub fn default_backward_horizon(beta: f64) -> usize {
    if beta <= 0.0 || beta >= 1.0 {
        return 1;
    }
    let h = libm::ceil(libm::log(1e-6) / libm::log(beta));
    (h as usize).max(1)
}

/// Subsidy index over `index_grid` by two-timescale stochastic
/// approximation, re-solving the value table (warm-started, tolerance
/// [`INNER_SOLVE_TOLERANCE`]) after every subsidy update.
///
/// The search at each belief starts from the previous belief's index
/// (`w0` at the first) and stops once the advantage residual is at most
/// `h`, failing with [`Error::IterationBudgetExceeded`] — best iterate
/// attached — after [`DEFAULT_SA_BUDGET`] updates.
pub fn whittle_sa(
    params: &ArmParams,
    beta: f64,
    index_grid: &BeliefGrid,
    value_grid: &BeliefGrid,
    w0: f64,
    h: f64,
    schedule: StepSchedule,
) -> Result<IndexTable, Error> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            requirement: "a strictly positive advantage tolerance",
        });
    }
    let inner_tol = INNER_SOLVE_TOLERANCE.min(h / 20.0);
    let mut cache: Option<ValueTable> = None;
    let mut values = Vec::with_capacity(index_grid.len());
    let mut residuals = Vec::with_capacity(index_grid.len());
    let mut iterations = Vec::with_capacity(index_grid.len());
    let mut w_start = w0;

    for j in 0..index_grid.len() {
        let pi = index_grid.point(j);
        let mut w = w_start;
        let mut best_residual = f64::INFINITY;
        let mut best_w = w;
        let mut t = 0usize;
        loop {
            let solved = solve_arm_warm(
                params,
                w,
                beta,
                value_grid,
                inner_tol,
                DEFAULT_MAX_SWEEPS,
                cache.as_ref(),
            )?;
            let d = solved.advantage_at(pi);
            cache = Some(solved);
            if d.abs() < best_residual {
                best_residual = d.abs();
                best_w = w;
            }
            if d.abs() <= h {
                values.push(w);
                residuals.push(d.abs());
                iterations.push(t);
                break;
            }
            if t >= DEFAULT_SA_BUDGET {
                return Err(Error::IterationBudgetExceeded {
                    belief: pi,
                    budget: DEFAULT_SA_BUDGET,
                    best_subsidy: best_w,
                    residual: best_residual,
                });
            }
            w += schedule.at(t) * d;
            t += 1;
        }
        w_start = w;
    }

    Ok(IndexTable {
        grid: index_grid.clone(),
        values,
        method: IndexMethod::StochasticApproximation,
        residuals,
        iterations,
    })
}

struct BisectOutcome {
    subsidy: f64,
    residual: f64,
    probes: usize,
}

fn bisect_point(
    params: &ArmParams,
    beta: f64,
    belief: f64,
    value_grid: &BeliefGrid,
    (mut lo, mut hi): (f64, f64),
    tol: f64,
    cache: &mut Option<ValueTable>,
) -> Result<BisectOutcome, Error> {
    let probe = |w: f64, cache: &mut Option<ValueTable>| -> Result<f64, Error> {
        let solved = solve_arm_warm(
            params,
            w,
            beta,
            value_grid,
            crate::solver::DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            cache.as_ref(),
        )?;
        let d = solved.advantage_at(belief);
        *cache = Some(solved);
        Ok(d)
    };
    let d_lo = probe(lo, cache)?;
    let d_hi = probe(hi, cache)?;
    let mut probes = 2usize;
    if !(d_lo > 0.0 && d_hi < 0.0) {
        return Err(Error::BracketInvalid {
            lo,
            hi,
            d_lo,
            d_hi,
        });
    }
    let mut d_mid = d_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        d_mid = probe(mid, cache)?;
        probes += 1;
        if d_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BisectOutcome {
        subsidy: 0.5 * (lo + hi),
        residual: d_mid.abs(),
        probes,
    })
}

/// Subsidy index at a single `belief` by bisection on the sign of the play
/// advantage over `[lo, hi]`.
///
/// Requires a valid bracket: advantage positive at `lo` and negative at
/// `hi` (see [`default_bracket`]); fails with [`Error::BracketInvalid`]
/// otherwise. Stops when the bracket is narrower than `tol`.
pub fn whittle_bisect(
    params: &ArmParams,
    beta: f64,
    belief: f64,
    value_grid: &BeliefGrid,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, Error> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            requirement: "a strictly positive bracket tolerance",
        });
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "lo",
            value: lo,
            requirement: "strictly below hi",
        });
    }
    let mut cache = None;
    Ok(bisect_point(params, beta, belief, value_grid, (lo, hi), tol, &mut cache)?.subsidy)
}

/// Index table built by per-belief bisection with the default bracket.
/// Exact but slow; prefer [`whittle_table_sweep`] for large tables.
pub fn whittle_table_bisect(
    params: &ArmParams,
    beta: f64,
    index_grid: &BeliefGrid,
    value_grid: &BeliefGrid,
    tol: f64,
) -> Result<IndexTable, Error> {
    let bracket = default_bracket(params, beta);
    let mut cache = None;
    let mut values = Vec::with_capacity(index_grid.len());
    let mut residuals = Vec::with_capacity(index_grid.len());
    let mut iterations = Vec::with_capacity(index_grid.len());
    for j in 0..index_grid.len() {
        let out = bisect_point(
            params,
            beta,
            index_grid.point(j),
            value_grid,
            bracket,
            tol,
            &mut cache,
        )?;
        values.push(out.subsidy);
        residuals.push(out.residual);
        iterations.push(out.probes);
    }
    Ok(IndexTable {
        grid: index_grid.clone(),
        values,
        method: IndexMethod::Bisection,
        residuals,
        iterations,
    })
}

/// Index table from one ascending subsidy sweep plus per-belief secant
/// refinement.
///
/// The sweep solves the value table at [`SWEEP_STEPS`] subsidies over the
/// default bracket (warm-started, so each step is cheap) and records the
/// play advantage at every grid belief. Each belief's index is then pinned
/// between the sweep step where its advantage changes sign and polished
/// with secant steps until `|play - idle| <= h`.
pub fn whittle_table_sweep(
    params: &ArmParams,
    beta: f64,
    index_grid: &BeliefGrid,
    value_grid: &BeliefGrid,
    h: f64,
) -> Result<IndexTable, Error> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            requirement: "a strictly positive advantage tolerance",
        });
    }
    let inner_tol = INNER_SOLVE_TOLERANCE.min(h / 20.0);
    let (lo, hi) = default_bracket(params, beta);
    let n = index_grid.len();
    let step = (hi - lo) / (SWEEP_STEPS - 1) as f64;
    let mut cache: Option<ValueTable> = None;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(SWEEP_STEPS);
    let mut subsidies = Vec::with_capacity(SWEEP_STEPS);
    for k in 0..SWEEP_STEPS {
        let w = lo + step * k as f64;
        let solved = solve_arm_warm(
            params,
            w,
            beta,
            value_grid,
            inner_tol,
            DEFAULT_MAX_SWEEPS,
            cache.as_ref(),
        )?;
        let row = (0..n)
            .map(|j| solved.advantage_at(index_grid.point(j)))
            .collect();
        cache = Some(solved);
        rows.push(row);
        subsidies.push(w);
    }

    // Bracket each belief's sign change along the subsidy axis.
    let mut pos: Vec<(f64, f64)> = vec![(lo, 0.0); n]; // (subsidy, advantage > 0)
    let mut neg: Vec<(f64, f64)> = vec![(hi, 0.0); n];
    let mut estimate = vec![lo; n];
    let mut clamped_low = vec![false; n];
    for j in 0..n {
        let column = || rows.iter().map(move |r| r[j]);
        let first_nonpositive = column().position(|d| d <= 0.0);
        match first_nonpositive {
            None => {
                return Err(Error::BracketInvalid {
                    lo,
                    hi,
                    d_lo: rows[0][j],
                    d_hi: rows[SWEEP_STEPS - 1][j],
                });
            }
            Some(0) => {
                // Idling already weakly optimal at the bottom of the
                // bracket: report the bracket edge.
                estimate[j] = lo;
                clamped_low[j] = true;
            }
            Some(k) => {
                let d0 = rows[k - 1][j];
                let d1 = rows[k][j];
                pos[j] = (subsidies[k - 1], d0);
                neg[j] = (subsidies[k], d1);
                estimate[j] = subsidies[k - 1] + step * d0 / (d0 - d1);
            }
        }
    }

    // Refine in ascending order of the estimates so the warm-start chain
    // stays local on the subsidy axis.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| estimate[a].total_cmp(&estimate[b]));
    let mut values = vec![0.0; n];
    let mut residuals = vec![0.0; n];
    let mut iterations = vec![0usize; n];
    for &j in &order {
        if clamped_low[j] {
            values[j] = lo;
            residuals[j] = rows[0][j].abs();
            iterations[j] = 0;
            continue;
        }
        let pi = index_grid.point(j);
        let (mut wp, mut dp) = pos[j];
        let (mut wn, mut dn) = neg[j];
        let mut w = estimate[j];
        let mut probes = 0usize;
        let mut best_residual = f64::INFINITY;
        let mut best_w = w;
        loop {
            let solved = solve_arm_warm(
                params,
                w,
                beta,
                value_grid,
                inner_tol,
                DEFAULT_MAX_SWEEPS,
                cache.as_ref(),
            )?;
            let d = solved.advantage_at(pi);
            cache = Some(solved);
            probes += 1;
            if d.abs() < best_residual {
                best_residual = d.abs();
                best_w = w;
            }
            if d.abs() <= h {
                values[j] = w;
                residuals[j] = d.abs();
                iterations[j] = probes;
                break;
            }
            if probes >= SWEEP_REFINE_BUDGET {
                return Err(Error::IterationBudgetExceeded {
                    belief: pi,
                    budget: SWEEP_REFINE_BUDGET,
                    best_subsidy: best_w,
                    residual: best_residual,
                });
            }
            if d > 0.0 {
                wp = w;
                dp = d;
            } else {
                wn = w;
                dn = d;
            }
            let secant = wp + (wn - wp) * dp / (dp - dn);
            let margin = 1e-12 * (1.0 + wn.abs().max(wp.abs()));
            w = if secant <= wp + margin || secant >= wn - margin {
                0.5 * (wp + wn) // secant stagnated at an endpoint; bisect
            } else {
                secant
            };
        }
    }

    Ok(IndexTable {
        grid: index_grid.clone(),
        values,
        method: IndexMethod::SubsidySweep,
        residuals,
        iterations,
    })
}

/// Finite-horizon backward index: at each stage the idle subsidy of every
/// belief is the *next* stage's index at that same belief, starting from a
/// zero index and zero value at the horizon. Returns the stage-1 index.
///
/// This is a genuinely different object from the subsidy index — one
/// backward pass, no fixed-point search — and is used as the cheap
/// comparison heuristic.
pub fn modified_whittle(
    params: &ArmParams,
    beta: f64,
    grid: &BeliefGrid,
    horizon: usize,
) -> Result<IndexTable, Error> {
    params.validate(0)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            requirement: "a discount factor strictly between 0 and 1",
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: 0.0,
            requirement: "at least one stage",
        });
    }
    let maps = Maps::build(params, grid)?;
    let n = grid.len();
    let (theta11, theta01) = (params.availability.theta11(), params.availability.theta01());
    let stochastic_return = match params.availability {
        AvailabilityModel::Stochastic { theta00, .. } => Some(theta00),
        AvailabilityModel::SemiDeterministic { .. } => None,
    };
    let (beta_t0, t0_weight) = match params.availability.outage_len() {
        Some(t0) => {
            let b = powi(beta, t0);
            (b, (1.0 - b) / (1.0 - beta))
        }
        None => (0.0, 0.0),
    };
    let full_outage = maps.outage.last().expect("at least one outage map");
    let one_step_outage = &maps.outage[0];

    let mut m = vec![0.0; n];
    let mut v1 = vec![0.0; n];
    let mut v0 = vec![0.0; n];
    let mut new_m = vec![0.0; n];
    let mut new_v1 = vec![0.0; n];
    let mut new_v0 = vec![0.0; n];
    let mut last_change = vec![0.0; n];

    for _stage in 0..horizon {
        for j in 0..n {
            let w = m[j];
            let cont_succ =
                theta11 * lerp(&v1, maps.succ[j]) + (1.0 - theta11) * lerp(&v0, maps.succ[j]);
            let cont_fail =
                theta11 * lerp(&v1, maps.fail[j]) + (1.0 - theta11) * lerp(&v0, maps.fail[j]);
            let l1 = maps.eta[j]
                + beta * (maps.rho[j] * cont_succ + (1.0 - maps.rho[j]) * cont_fail);
            let l0 = w
                + beta
                    * (theta01 * lerp(&v1, maps.idle[j])
                        + (1.0 - theta01) * lerp(&v0, maps.idle[j]));
            new_m[j] = l1 - l0;
            new_v1[j] = l1.max(l0);
            new_v0[j] = match stochastic_return {
                Some(theta00) => {
                    w + beta
                        * (theta00 * lerp(&v1, one_step_outage[j])
                            + (1.0 - theta00) * lerp(&v0, one_step_outage[j]))
                }
                None => w * t0_weight + beta_t0 * lerp(&v1, full_outage[j]),
            };
            last_change[j] = (new_m[j] - m[j]).abs();
        }
        core::mem::swap(&mut m, &mut new_m);
        core::mem::swap(&mut v1, &mut new_v1);
        core::mem::swap(&mut v0, &mut new_v0);
    }

    Ok(IndexTable {
        grid: grid.clone(),
        values: m,
        method: IndexMethod::FiniteHorizonBackward,
        residuals: last_change,
        iterations: vec![horizon; n],
    })
}

/// Threshold beliefs across an ascending subsidy grid, with the largest
/// positive jump between consecutive subsidies. A (near-)zero
/// `max_increase` is the numerical signature of indexability: the idle
/// region only grows as idling pays more.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexabilityReport {
    pub subsidies: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub max_increase: f64,
}

/// Sweeps `steps` subsidies over `[lo, hi]` (warm-started, ascending),
/// extracts each solve's threshold belief, and reports how far the
/// threshold ever moves *up* as the subsidy grows.
pub fn indexability_check(
    params: &ArmParams,
    beta: f64,
    value_grid: &BeliefGrid,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<IndexabilityReport, Error> {
    if steps < 2 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: steps as f64,
            requirement: "at least two subsidy steps",
        });
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "lo",
            value: lo,
            requirement: "strictly below hi",
        });
    }
    let mut cache: Option<ValueTable> = None;
    let mut subsidies = Vec::with_capacity(steps);
    let mut thresholds = Vec::with_capacity(steps);
    let step = (hi - lo) / (steps - 1) as f64;
    for k in 0..steps {
        let w = lo + step * k as f64;
        let solved = solve_arm_warm(
            params,
            w,
            beta,
            value_grid,
            crate::solver::DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            cache.as_ref(),
        )?;
        thresholds.push(solved.threshold()?);
        subsidies.push(w);
        cache = Some(solved);
    }
    let max_increase = thresholds
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    Ok(IndexabilityReport {
        subsidies,
        thresholds,
        max_increase,
    })
}
