//! Discounted value iteration for a single arm with a per-slot idle
//! subsidy, optionally charged per play.
//!
//! The solver works on the belief grid and tracks the availability state of
//! the arm. For an available arm it evaluates both actions:
//!
//! * play:  expected reward now, then the belief splits through the
//!   success/failure Bayes updates and the arm stays available with
//!   probability `theta11`;
//! * idle:  the subsidy now, belief drifts one chain step, availability
//!   follows `theta01`.
//!
//! An unavailable arm always collects the subsidy. Under the stochastic
//! availability model it returns next slot with probability `theta00`;
//! under the semi-deterministic model it sits out exactly `outage_len`
//! slots, which collapses to the closed form
//! `V(pi, 0, k) = w*(1 - beta^k)/(1 - beta) + beta^k * V(drift^k(pi), 1)`
//! for `k` remaining outage slots.
//!
//! Convergence: iteration stops once the sup-norm change guarantees the
//! table is within `tolerance` of the fixed point of the discretized
//! operator (the raw change threshold is scaled by `(1 - beta)/beta` when
//! `beta > 1/2`), so the recorded residual is always at or below
//! `tolerance`.

use alloc::vec;
use alloc::vec::Vec;

use crate::arm::{ArmParams, AvailabilityModel, PerceivedState};
use crate::error::Error;
use crate::grid::{lerp, BeliefGrid};

/// Default sup-norm convergence tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Default sweep budget for value iteration.
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Sign slack used when classifying play-advantage values for the
/// threshold scan; comfortably above solver error, far below any real
/// advantage scale.
const SIGN_EPS: f64 = 1e-8;

/// Value arrays for the unavailable side of a solved table.
#[derive(Debug, Clone, PartialEq)]
pub enum UnavailableValues {
    /// One value array: availability returns stochastically.
    Stochastic(Vec<f64>),
    /// One value array per remaining outage length `k = 1..=outage_len`,
    /// stored at index `k - 1`.
    SemiDeterministic(Vec<Vec<f64>>),
    /// The table was solved without an availability dimension.
    Absent,
}

/// A converged value table for one arm at a fixed subsidy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    /// Idle subsidy `w`.
    pub subsidy: f64,
    /// Per-play charge (zero for the plain subsidy problem).
    pub play_charge: f64,
    pub beta: f64,
    pub grid: BeliefGrid,
    /// Action value of playing while available.
    pub play: Vec<f64>,
    /// Action value of idling while available.
    pub idle: Vec<f64>,
    /// `V(pi, 1) = max(play, idle)` pointwise.
    pub available: Vec<f64>,
    pub unavailable: UnavailableValues,
    /// Sweeps performed.
    pub iterations: usize,
    /// Final sup-norm change between sweeps.
    pub residual: f64,
}

impl ValueTable {
    /// Value of an available arm at `belief`.
    pub fn value_available(&self, belief: f64) -> f64 {
        self.grid.interp(&self.available, belief)
    }

    /// Value of an unavailable arm at `belief`. For semi-deterministic
    /// tables, `remaining` selects the outage countdown (clamped to the
    /// stored range; `None` means a full outage).
    pub fn value_unavailable(&self, belief: f64, remaining: Option<u32>) -> f64 {
        match &self.unavailable {
            UnavailableValues::Stochastic(v) => self.grid.interp(v, belief),
            UnavailableValues::SemiDeterministic(tables) => {
                let t0 = tables.len() as u32;
                let k = remaining.unwrap_or(t0).clamp(1, t0);
                self.grid.interp(&tables[(k - 1) as usize], belief)
            }
            UnavailableValues::Absent => self.grid.interp(&self.available, belief),
        }
    }

    /// Value at a perceived state.
    pub fn value_at(&self, state: &PerceivedState) -> f64 {
        if state.available {
            self.value_available(state.belief)
        } else {
            self.value_unavailable(state.belief, state.remaining)
        }
    }

    /// Play action value at `belief` (available arm).
    pub fn play_value(&self, belief: f64) -> f64 {
        self.grid.interp(&self.play, belief)
    }

    /// Idle action value at `belief` (available arm).
    pub fn idle_value(&self, belief: f64) -> f64 {
        self.grid.interp(&self.idle, belief)
    }

    /// Play-minus-idle advantage per grid point.
    pub fn advantage(&self) -> Vec<f64> {
        self.play
            .iter()
            .zip(&self.idle)
            .map(|(p, i)| p - i)
            .collect()
    }

    /// Play-minus-idle advantage at `belief`.
    pub fn advantage_at(&self, belief: f64) -> f64 {
        self.play_value(belief) - self.idle_value(belief)
    }

    /// The smallest belief at which idling becomes (weakly) optimal,
    /// linearly interpolated between the bracketing grid points.
    ///
    /// Returns `1.0` when playing is strictly better everywhere and `0.0`
    /// when idling is weakly better already at belief zero. Fails with
    /// [`Error::MultipleCrossings`] when the advantage does not have the
    /// one-crossing shape (positive region followed by a non-positive one).
    pub fn threshold(&self) -> Result<f64, Error> {
        let d = self.advantage();

        // Classify with a sign slack, squeeze out near-zero entries, and
        // demand the pattern "+ ... + <= 0 ... <= 0".
        let mut transitions = 0usize;
        let mut last_sign = 0i8;
        let mut shape_ok = true;
        for &v in &d {
            let s = if v > SIGN_EPS {
                1
            } else if v < -SIGN_EPS {
                -1
            } else {
                0
            };
            if s != 0 {
                if last_sign != 0 && s != last_sign {
                    transitions += 1;
                    if s > 0 {
                        shape_ok = false; // play resumes above an idle region
                    }
                }
                last_sign = s;
            }
        }
        if transitions > 1 || !shape_ok {
            return Err(Error::MultipleCrossings {
                crossings: transitions,
            });
        }

        let first_nonpositive = d.iter().position(|&v| v <= SIGN_EPS);
        match first_nonpositive {
            None => Ok(1.0),
            Some(0) => Ok(0.0),
            Some(k) => {
                let x0 = self.grid.point(k - 1);
                let x1 = self.grid.point(k);
                let d0 = d[k - 1];
                let d1 = d[k];
                let denom = d0 - d1;
                if denom <= 0.0 {
                    return Ok(x1);
                }
                Ok((x0 + (x1 - x0) * d0 / denom).clamp(x0, x1))
            }
        }
    }
}

/// Pre-located belief updates for every grid point: the solver's inner
/// loops are pure table lookups.
pub(crate) struct Maps {
    pub eta: Vec<f64>,
    pub rho: Vec<f64>,
    pub succ: Vec<(usize, f64)>,
    pub fail: Vec<(usize, f64)>,
    pub idle: Vec<(usize, f64)>,
    /// Unavailable drift: one step (stochastic model), or the k-step
    /// compositions for `k = 1..=outage_len` (semi-deterministic model).
    pub outage: Vec<Vec<(usize, f64)>>,
}

impl Maps {
    pub fn build(params: &ArmParams, grid: &BeliefGrid) -> Result<Self, Error> {
        let n = grid.len();
        let mut eta = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        let mut succ = Vec::with_capacity(n);
        let mut fail = Vec::with_capacity(n);
        let mut idle = Vec::with_capacity(n);
        let outage_steps = params.availability.outage_len().unwrap_or(1) as usize;
        let mut outage = vec![Vec::with_capacity(n); outage_steps];
        for i in 0..n {
            let x = grid.point(i);
            eta.push(params.expected_reward(x));
            rho.push(params.success_prob(x));
            // A degenerate update can only occur where the observation has
            // probability zero, in which case its weight in the Bellman
            // backup is exactly zero; park the lookup at the origin.
            succ.push(match params.belief_after_success(x) {
                Ok(b) => grid.locate(b),
                Err(_) => (0, 0.0),
            });
            fail.push(match params.belief_after_failure(x) {
                Ok(b) => grid.locate(b),
                Err(_) => (0, 0.0),
            });
            idle.push(grid.locate(params.belief_when_idle(x)));
            let mut drifted = x;
            for table in outage.iter_mut() {
                drifted = params.belief_when_unavailable(drifted)?;
                table.push(grid.locate(drifted));
            }
        }
        Ok(Self {
            eta,
            rho,
            succ,
            fail,
            idle,
            outage,
        })
    }
}

fn check_common(beta: f64, tolerance: f64, max_sweeps: usize) -> Result<(), Error> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            requirement: "a discount factor strictly between 0 and 1",
        });
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: tolerance,
            requirement: "strictly positive",
        });
    }
    if max_sweeps == 0 {
        return Err(Error::InvalidParameter {
            name: "max_sweeps",
            value: 0.0,
            requirement: "at least one sweep",
        });
    }
    Ok(())
}

/// Raw change threshold that guarantees the final table is within
/// `tolerance` of the fixed point (contraction modulus `beta`).
pub(crate) fn effective_tolerance(tolerance: f64, beta: f64) -> f64 {
    if beta > 0.5 {
        tolerance * (1.0 - beta) / beta
    } else {
        tolerance
    }
}

/// Solves the availability-aware subsidy problem for one arm.
///
/// Equivalent to [`solve_arm_warm`] without a warm start.
pub fn solve_arm(
    params: &ArmParams,
    subsidy: f64,
    beta: f64,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<ValueTable, Error> {
    solve_arm_warm(params, subsidy, beta, grid, tolerance, max_sweeps, None)
}

/// Solves the availability-aware subsidy problem, optionally warm-starting
/// from a previously solved table (used heavily by index computations,
/// where the subsidy moves in small steps).
pub fn solve_arm_warm(
    params: &ArmParams,
    subsidy: f64,
    beta: f64,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
    warm: Option<&ValueTable>,
) -> Result<ValueTable, Error> {
    solve_availability_aware(
        params, subsidy, 0.0, beta, grid, tolerance, max_sweeps, warm,
    )
}

/// Availability-aware solve with both an idle subsidy and a per-play
/// charge. This is the shared kernel behind the subsidy problem
/// (`charge = 0`) and the play-charged relaxation (`subsidy = 0`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_availability_aware(
    params: &ArmParams,
    subsidy: f64,
    play_charge: f64,
    beta: f64,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
    warm: Option<&ValueTable>,
) -> Result<ValueTable, Error> {
    params.validate(0)?;
    check_common(beta, tolerance, max_sweeps)?;
    let maps = Maps::build(params, grid)?;
    match params.availability {
        AvailabilityModel::Stochastic {
            theta11,
            theta01,
            theta00,
        } => solve_stochastic(
            subsidy,
            play_charge,
            beta,
            grid,
            &maps,
            (theta11, theta01, theta00),
            tolerance,
            max_sweeps,
            warm,
        ),
        AvailabilityModel::SemiDeterministic {
            theta11,
            theta01,
            outage_len,
        } => solve_semi_deterministic(
            subsidy,
            play_charge,
            beta,
            grid,
            &maps,
            (theta11, theta01),
            outage_len,
            tolerance,
            max_sweeps,
            warm,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_stochastic(
    subsidy: f64,
    play_charge: f64,
    beta: f64,
    grid: &BeliefGrid,
    maps: &Maps,
    (theta11, theta01, theta00): (f64, f64, f64),
    tolerance: f64,
    max_sweeps: usize,
    warm: Option<&ValueTable>,
) -> Result<ValueTable, Error> {
    let n = grid.len();
    let (mut v1, mut v0) = match warm {
        Some(t) if t.grid.len() == n && t.beta == beta => {
            let v0 = match &t.unavailable {
                UnavailableValues::Stochastic(v) => v.clone(),
                _ => t.available.clone(),
            };
            (t.available.clone(), v0)
        }
        _ => (vec![0.0; n], vec![0.0; n]),
    };
    let mut new_v1 = vec![0.0; n];
    let mut new_v0 = vec![0.0; n];
    let tol_eff = effective_tolerance(tolerance, beta);
    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;
    let outage = &maps.outage[0];

    while residual > tol_eff {
        if iterations == max_sweeps {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        residual = 0.0;
        for i in 0..n {
            let cont_succ = theta11 * lerp(&v1, maps.succ[i]) + (1.0 - theta11) * lerp(&v0, maps.succ[i]);
            let cont_fail = theta11 * lerp(&v1, maps.fail[i]) + (1.0 - theta11) * lerp(&v0, maps.fail[i]);
            let play = maps.eta[i] - play_charge
                + beta * (maps.rho[i] * cont_succ + (1.0 - maps.rho[i]) * cont_fail);
            let idle = subsidy
                + beta
                    * (theta01 * lerp(&v1, maps.idle[i])
                        + (1.0 - theta01) * lerp(&v0, maps.idle[i]));
            let va = play.max(idle);
            let vu = subsidy
                + beta
                    * (theta00 * lerp(&v1, outage[i]) + (1.0 - theta00) * lerp(&v0, outage[i]));
            residual = residual.max((va - v1[i]).abs()).max((vu - v0[i]).abs());
            new_v1[i] = va;
            new_v0[i] = vu;
        }
        core::mem::swap(&mut v1, &mut new_v1);
        core::mem::swap(&mut v0, &mut new_v0);
        iterations += 1;
    }

    // One more evaluation pass so the stored action values are exactly
    // consistent with the stored state values.
    let mut play_arr = vec![0.0; n];
    let mut idle_arr = vec![0.0; n];
    let mut avail = vec![0.0; n];
    let mut unavail = vec![0.0; n];
    for i in 0..n {
        let cont_succ = theta11 * lerp(&v1, maps.succ[i]) + (1.0 - theta11) * lerp(&v0, maps.succ[i]);
        let cont_fail = theta11 * lerp(&v1, maps.fail[i]) + (1.0 - theta11) * lerp(&v0, maps.fail[i]);
        play_arr[i] = maps.eta[i] - play_charge
            + beta * (maps.rho[i] * cont_succ + (1.0 - maps.rho[i]) * cont_fail);
        idle_arr[i] = subsidy
            + beta
                * (theta01 * lerp(&v1, maps.idle[i]) + (1.0 - theta01) * lerp(&v0, maps.idle[i]));
        avail[i] = play_arr[i].max(idle_arr[i]);
        unavail[i] = subsidy
            + beta * (theta00 * lerp(&v1, outage[i]) + (1.0 - theta00) * lerp(&v0, outage[i]));
    }

    Ok(ValueTable {
        subsidy,
        play_charge,
        beta,
        grid: grid.clone(),
        play: play_arr,
        idle: idle_arr,
        available: avail,
        unavailable: UnavailableValues::Stochastic(unavail),
        iterations,
        residual,
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_semi_deterministic(
    subsidy: f64,
    play_charge: f64,
    beta: f64,
    grid: &BeliefGrid,
    maps: &Maps,
    (theta11, theta01): (f64, f64),
    outage_len: u32,
    tolerance: f64,
    max_sweeps: usize,
    warm: Option<&ValueTable>,
) -> Result<ValueTable, Error> {
    let n = grid.len();
    let t0 = outage_len as usize;
    // Each outage slot pays the subsidy, advances the belief one step, and
    // decrements the countdown; the countdown rows are iterated alongside
    // the available-state values so every continuation passes through the
    // grid exactly once per slot, matching the stochastic branch.
    let away = &maps.outage[0];

    let (mut v1, mut rows) = match warm {
        Some(t) if t.grid.len() == n && t.beta == beta => {
            let rows = match &t.unavailable {
                UnavailableValues::SemiDeterministic(r) if r.len() == t0 => r.clone(),
                _ => vec![vec![0.0; n]; t0],
            };
            (t.available.clone(), rows)
        }
        _ => (vec![0.0; n], vec![vec![0.0; n]; t0]),
    };
    let mut new_v1 = vec![0.0; n];
    let mut new_rows = vec![vec![0.0; n]; t0];
    let tol_eff = effective_tolerance(tolerance, beta);
    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;

    while residual > tol_eff {
        if iterations == max_sweeps {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        residual = 0.0;
        {
            // A lost availability (after playing or idling) starts a full
            // outage of `t0` slots.
            let entry = &rows[t0 - 1];
            for i in 0..n {
                let cont_succ =
                    theta11 * lerp(&v1, maps.succ[i]) + (1.0 - theta11) * lerp(entry, maps.succ[i]);
                let cont_fail =
                    theta11 * lerp(&v1, maps.fail[i]) + (1.0 - theta11) * lerp(entry, maps.fail[i]);
                let play = maps.eta[i] - play_charge
                    + beta * (maps.rho[i] * cont_succ + (1.0 - maps.rho[i]) * cont_fail);
                let idle = subsidy
                    + beta
                        * (theta01 * lerp(&v1, maps.idle[i])
                            + (1.0 - theta01) * lerp(entry, maps.idle[i]));
                let va = play.max(idle);
                residual = residual.max((va - v1[i]).abs());
                new_v1[i] = va;
            }
            for k in 1..=t0 {
                let source: &[f64] = if k == 1 { &v1 } else { &rows[k - 2] };
                for i in 0..n {
                    let vu = subsidy + beta * lerp(source, away[i]);
                    residual = residual.max((vu - rows[k - 1][i]).abs());
                    new_rows[k - 1][i] = vu;
                }
            }
        }
        core::mem::swap(&mut v1, &mut new_v1);
        core::mem::swap(&mut rows, &mut new_rows);
        iterations += 1;
    }

    // One more evaluation pass so the stored action values and countdown
    // rows are exactly consistent with the stored state values.
    let mut play_arr = vec![0.0; n];
    let mut idle_arr = vec![0.0; n];
    let mut avail = vec![0.0; n];
    let entry = &rows[t0 - 1];
    for i in 0..n {
        let cont_succ =
            theta11 * lerp(&v1, maps.succ[i]) + (1.0 - theta11) * lerp(entry, maps.succ[i]);
        let cont_fail =
            theta11 * lerp(&v1, maps.fail[i]) + (1.0 - theta11) * lerp(entry, maps.fail[i]);
        play_arr[i] = maps.eta[i] - play_charge
            + beta * (maps.rho[i] * cont_succ + (1.0 - maps.rho[i]) * cont_fail);
        idle_arr[i] = subsidy
            + beta
                * (theta01 * lerp(&v1, maps.idle[i]) + (1.0 - theta01) * lerp(entry, maps.idle[i]));
        avail[i] = play_arr[i].max(idle_arr[i]);
    }
    let mut unavail: Vec<Vec<f64>> = Vec::with_capacity(t0);
    for k in 1..=t0 {
        let source: &[f64] = if k == 1 { &avail } else { &unavail[k - 2] };
        let row = away
            .iter()
            .map(|&b| subsidy + beta * lerp(source, b))
            .collect();
        unavail.push(row);
    }

    Ok(ValueTable {
        subsidy,
        play_charge,
        beta,
        grid: grid.clone(),
        play: play_arr,
        idle: idle_arr,
        available: avail,
        unavailable: UnavailableValues::SemiDeterministic(unavail),
        iterations,
        residual,
    })
}

/// Solve with the availability dimension removed: the arm can always be
/// played, and idling pays the subsidy. Used for the relaxation bounds.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_no_availability(
    params: &ArmParams,
    subsidy: f64,
    play_charge: f64,
    beta: f64,
    grid: &BeliefGrid,
    tolerance: f64,
    max_sweeps: usize,
    warm: Option<&ValueTable>,
) -> Result<ValueTable, Error> {
    params.validate(0)?;
    check_common(beta, tolerance, max_sweeps)?;
    let maps = Maps::build(params, grid)?;
    let n = grid.len();
    let mut u = match warm {
        Some(t) if t.grid.len() == n && t.beta == beta => t.available.clone(),
        _ => vec![0.0; n],
    };
    let mut new_u = vec![0.0; n];
    let tol_eff = effective_tolerance(tolerance, beta);
    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;

    while residual > tol_eff {
        if iterations == max_sweeps {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        residual = 0.0;
        for i in 0..n {
            let play = maps.eta[i] - play_charge
                + beta
                    * (maps.rho[i] * lerp(&u, maps.succ[i])
                        + (1.0 - maps.rho[i]) * lerp(&u, maps.fail[i]));
            let idle = subsidy + beta * lerp(&u, maps.idle[i]);
            let v = play.max(idle);
            residual = residual.max((v - u[i]).abs());
            new_u[i] = v;
        }
        core::mem::swap(&mut u, &mut new_u);
        iterations += 1;
    }

    let mut play_arr = vec![0.0; n];
    let mut idle_arr = vec![0.0; n];
    let mut avail = vec![0.0; n];
    for i in 0..n {
        play_arr[i] = maps.eta[i] - play_charge
            + beta
                * (maps.rho[i] * lerp(&u, maps.succ[i])
                    + (1.0 - maps.rho[i]) * lerp(&u, maps.fail[i]));
        idle_arr[i] = subsidy + beta * lerp(&u, maps.idle[i]);
        avail[i] = play_arr[i].max(idle_arr[i]);
    }

    Ok(ValueTable {
        subsidy,
        play_charge,
        beta,
        grid: grid.clone(),
        play: play_arr,
        idle: idle_arr,
        available: avail,
        unavailable: UnavailableValues::Absent,
        iterations,
        residual,
    })
}
