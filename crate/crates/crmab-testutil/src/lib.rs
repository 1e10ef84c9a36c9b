//! Test support for the workspace: an independently written
//! finite-horizon dynamic program that cross-checks the production value
//! iteration, and seeded random instance generators for property suites.
//!
//! The oracle here deliberately shares no numerical code with the main
//! crate: it reads raw `ArmParams` fields, carries its own Bayes updates
//! and its own interpolation, and steps outage countdowns slot by slot
//! instead of using any closed form. Agreement between the two paths is
//! therefore evidence, not tautology.

use crmab_core::{ArmParams, AvailabilityModel, UnavailableUpdate};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Finite-horizon values on a uniform belief grid.
#[derive(Debug, Clone)]
pub struct OracleTables {
    /// Grid beliefs, ascending, endpoints included.
    pub points: Vec<f64>,
    /// Value when the arm is available.
    pub available: Vec<f64>,
    /// Value when unavailable. One row for stochastic outages; for
    /// fixed-length outages, row `k - 1` is the value with `k` slots
    /// remaining.
    pub unavailable: Vec<Vec<f64>>,
}

fn lerp(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let pos = x.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 2);
    let t = pos - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// Backward induction over `horizon` stages from a zero terminal value.
/// Playing pays the expected reward minus `play_charge`; not playing
/// (idle or unavailable) pays `subsidy`.
pub fn backward_value(
    params: &ArmParams,
    subsidy: f64,
    play_charge: f64,
    beta: f64,
    grid_points: usize,
    horizon: usize,
) -> OracleTables {
    let n = grid_points;
    let points: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
    let (p00, p10) = (params.p00, params.p10);
    let (rho0, rho1) = (params.rho0, params.rho1);
    let (eta0, eta1) = (params.eta0, params.eta1);
    let stationary = {
        let p01 = 1.0 - p00;
        let denom = p01 + p10;
        if denom > 0.0 {
            p10 / denom
        } else {
            f64::NAN // unused unless the reset variant is configured
        }
    };
    let away_map = |pi: f64| -> f64 {
        match params.unavailable_update {
            UnavailableUpdate::NaturalEvolution => pi * p00 + (1.0 - pi) * p10,
            UnavailableUpdate::StationaryReset => stationary,
        }
    };
    let (theta11, theta01) = (params.availability.theta11(), params.availability.theta01());
    let outage_rows = match params.availability {
        AvailabilityModel::Stochastic { .. } => 1,
        AvailabilityModel::SemiDeterministic { outage_len, .. } => outage_len as usize,
    };

    let mut v1 = vec![0.0f64; n];
    let mut v0 = vec![vec![0.0f64; n]; outage_rows];
    for _stage in 0..horizon {
        let mut n1 = vec![0.0f64; n];
        let mut n0 = vec![vec![0.0f64; n]; outage_rows];
        // Where a freshly started outage lands.
        let entry_row = &v0[outage_rows - 1];
        for j in 0..n {
            let pi = points[j];
            let rho_pi = pi * rho0 + (1.0 - pi) * rho1;
            let eta_pi = pi * eta0 + (1.0 - pi) * eta1;
            let idle_next = pi * p00 + (1.0 - pi) * p10;

            let mix_play = |x: f64| theta11 * lerp(&v1, x) + (1.0 - theta11) * lerp(entry_row, x);
            let mut play_cont = 0.0;
            if rho_pi > 0.0 {
                let g1 = (pi * rho0 * p00 + (1.0 - pi) * rho1 * p10) / rho_pi;
                play_cont += rho_pi * mix_play(g1);
            }
            if rho_pi < 1.0 {
                let g0 = (pi * (1.0 - rho0) * p00 + (1.0 - pi) * (1.0 - rho1) * p10)
                    / (1.0 - rho_pi);
                play_cont += (1.0 - rho_pi) * mix_play(g0);
            }
            let play = eta_pi - play_charge + beta * play_cont;
            let idle_cont =
                theta01 * lerp(&v1, idle_next) + (1.0 - theta01) * lerp(entry_row, idle_next);
            let idle = subsidy + beta * idle_cont;
            n1[j] = play.max(idle);

            let away = away_map(pi);
            match params.availability {
                AvailabilityModel::Stochastic { theta00, .. } => {
                    n0[0][j] = subsidy
                        + beta
                            * (theta00 * lerp(&v1, away)
                                + (1.0 - theta00) * lerp(&v0[0], away));
                }
                AvailabilityModel::SemiDeterministic { .. } => {
                    for k in 1..=outage_rows {
                        let cont = if k == 1 {
                            lerp(&v1, away)
                        } else {
                            lerp(&v0[k - 2], away)
                        };
                        n0[k - 1][j] = subsidy + beta * cont;
                    }
                }
            }
        }
        v1 = n1;
        v0 = n0;
    }
    OracleTables {
        points,
        available: v1,
        unavailable: v0,
    }
}

/// Deterministic RNG for test suites.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which availability model to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleModel {
    Stochastic,
    SemiDeterministic,
}

fn sorted_pair(rng: &mut impl Rng, min_gap: f64) -> (f64, f64) {
    loop {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi - lo >= min_gap {
            return (lo, hi);
        }
    }
}

fn availability(rng: &mut impl Rng, model: SampleModel) -> AvailabilityModel {
    match model {
        SampleModel::Stochastic => AvailabilityModel::Stochastic {
            theta11: rng.gen(),
            theta01: rng.gen(),
            theta00: rng.gen(),
        },
        SampleModel::SemiDeterministic => AvailabilityModel::SemiDeterministic {
            theta11: rng.gen(),
            theta01: rng.gen(),
            outage_len: rng.gen_range(1..=4),
        },
    }
}

/// Broad random arm: transition, observation, and reward parameters drawn
/// independently; either unavailable-belief variant. Always valid.
pub fn random_arm(rng: &mut impl Rng, model: SampleModel) -> ArmParams {
    let p00: f64 = rng.gen();
    let p10: f64 = rng.gen();
    let (rho0, rho1) = sorted_pair(rng, 1e-3);
    let (eta0, eta1) = sorted_pair(rng, 1e-3);
    let has_stationary = (1.0 - p00) + p10 > 1e-9;
    let unavailable_update = if has_stationary && rng.gen::<bool>() {
        UnavailableUpdate::StationaryReset
    } else {
        UnavailableUpdate::NaturalEvolution
    };
    ArmParams {
        p00,
        p10,
        rho0,
        rho1,
        eta0,
        eta1,
        availability: availability(rng, model),
        unavailable_update,
    }
}

/// Random arm satisfying the persistent-chain conditions under which the
/// play advantage is known to have threshold structure and the idle
/// region to grow with the subsidy: either `0 < p00 - p10 < 1/5` or
/// `0 < p10 - p00 < 1/3`, with the reward of each state equal to its
/// success probability.
pub fn conforming_arm(rng: &mut impl Rng, model: SampleModel) -> ArmParams {
    let (p00, p10) = if rng.gen::<bool>() {
        let p10: f64 = rng.gen_range(0.0..0.79);
        let gap: f64 = rng.gen_range(0.01..0.19);
        (p10 + gap, p10)
    } else {
        let p00: f64 = rng.gen_range(0.0..0.66);
        let gap: f64 = rng.gen_range(0.01..0.32);
        (p00, p00 + gap)
    };
    let (rho0, rho1) = sorted_pair(rng, 0.05);
    ArmParams {
        p00,
        p10,
        rho0,
        rho1,
        eta0: rho0,
        eta1: rho1,
        availability: availability(rng, model),
        unavailable_update: UnavailableUpdate::NaturalEvolution,
    }
}

/// Discount factor in a range where grids and horizons used by the test
/// suites stay accurate.
pub fn random_beta(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0.3..0.95)
}

/// The fifteen-arm benchmark instance bundled with the CLI: five
/// always-available, perfectly observed arms rewarding only the good
/// state, then ten partially observed arms with action-dependent
/// availability whose state rewards equal their success probabilities.
/// Row order: `(p00, p10, rho0, rho1, eta0, eta1, theta11, theta01,
/// theta00)`.
pub fn benchmark_arms() -> Vec<ArmParams> {
    type Row = (f64, f64, f64, f64, f64, f64, f64, f64, f64);
    const ROWS: [Row; 15] = [
        (0.2, 0.5, 0.0, 1.0, 0.0, 0.65, 1.0, 1.0, 1.0),
        (0.3, 0.5, 0.0, 1.0, 0.0, 0.70, 1.0, 1.0, 1.0),
        (0.4, 0.3, 0.0, 1.0, 0.0, 0.75, 1.0, 1.0, 1.0),
        (0.5, 0.4, 0.0, 1.0, 0.0, 0.80, 1.0, 1.0, 1.0),
        (0.3, 0.3, 0.0, 1.0, 0.0, 0.85, 1.0, 1.0, 1.0),
        (0.2, 0.8, 0.1, 0.9, 0.1, 0.9, 0.25, 0.8, 0.9),
        (0.3, 0.7, 0.1, 0.7, 0.1, 0.7, 0.3, 0.9, 0.8),
        (0.4, 0.6, 0.1, 0.8, 0.1, 0.8, 0.4, 0.75, 0.7),
        (0.5, 0.5, 0.2, 0.7, 0.2, 0.7, 0.5, 0.7, 0.4),
        (0.3, 0.5, 0.1, 0.7, 0.1, 0.7, 0.6, 0.8, 0.8),
        (0.3, 0.3, 0.2, 0.6, 0.2, 0.6, 0.7, 0.8, 0.7),
        (0.6, 0.4, 0.2, 0.8, 0.2, 0.8, 0.5, 0.5, 0.5),
        (0.7, 0.3, 0.3, 0.9, 0.3, 0.9, 0.8, 0.3, 0.4),
        (0.8, 0.2, 0.2, 0.9, 0.2, 0.9, 0.8, 0.4, 0.2),
        (0.9, 0.2, 0.3, 0.95, 0.3, 0.95, 0.7, 0.6, 0.6),
    ];
    ROWS.iter()
        .map(
            |&(p00, p10, rho0, rho1, eta0, eta1, theta11, theta01, theta00)| ArmParams {
                p00,
                p10,
                rho0,
                rho1,
                eta0,
                eta1,
                availability: AvailabilityModel::Stochastic {
                    theta11,
                    theta01,
                    theta00,
                },
                unavailable_update: UnavailableUpdate::NaturalEvolution,
            },
        )
        .collect()
}
