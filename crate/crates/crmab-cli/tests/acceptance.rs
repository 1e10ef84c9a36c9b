//! Acceptance gate: eight end-to-end checks covering the solver, the
//! structural properties, the index methods, the decoupled bound, the
//! benchmark policy ordering, simgreen calibration, and large generated
//! instances. Each test prints one `[criterion N] ...: PASS` line;
//! every tolerance is pinned as a named constant.
//!
//! Run with output visible:
//!
//! ```text
//! cargo test -p crmab-cli --test acceptance -- --nocapture
//! ```
//!
//! The tests serialize on a shared lock so the per-criterion runtime
//! caps measure one criterion at a time.

use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use crmab_core::bounds::{
    joint_dp_oracle, lagrangian_bound, solve_lambda_arm, solve_unconstrained,
    stationary_reset_safe_set, LambdaSearch, DEFAULT_STATE_CAP,
};
use crmab_core::index::{
    indexability_check, whittle_sa, whittle_table_bisect, StepSchedule,
};
use crmab_core::sim::{run, run_replication_traced, BanditInstance, InitialConditions, Policy};
use crmab_core::{
    solve_arm, ArmParams, AvailabilityModel, BeliefGrid, PerceivedState, UnavailableUpdate,
    ValueTable, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE,
};
use crmab_cli::config::{ConfigFile, PolicyKind};
use crmab_cli::experiments::BENCHMARK_CONFIG;
use crmab_cli::generate::{generate, AvailabilityChoice, GeneratorSpec, RewardStructure, RhoMode};
use crmab_cli::run::{build_pool, compute_bound, required_tables, simulate_policies};
use crmab_testutil::{
    backward_value, benchmark_arms, conforming_arm, random_arm, random_beta, seeded, SampleModel,
};
use rand::Rng;

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn model_for(i: usize) -> SampleModel {
    if i.is_multiple_of(2) {
        SampleModel::Stochastic
    } else {
        SampleModel::SemiDeterministic
    }
}

fn unavailable_rows(table: &ValueTable) -> Vec<Vec<f64>> {
    use crmab_core::solver::UnavailableValues;
    match &table.unavailable {
        UnavailableValues::Stochastic(row) => vec![row.clone()],
        UnavailableValues::SemiDeterministic(rows) => rows.clone(),
        UnavailableValues::Absent => Vec::new(),
    }
}

// ---------------------------------------------------------------- 1 ---

/// Instances checked per availability model.
const C1_INSTANCES: usize = 20;
/// Oracle backward-induction stages.
const C1_HORIZON: usize = 600;
/// Shared belief-grid resolution.
const C1_GRID: usize = 101;
const C1_CAP_SECONDS: f64 = 60.0;

#[test]
fn criterion_1_solver_agrees_with_an_independent_backward_oracle() {
    let _g = gate();
    let clock = Instant::now();
    let grid = BeliefGrid::uniform(C1_GRID).unwrap();
    let mut rng = seeded(9101);
    let mut max_dev = 0.0f64;
    for model in [SampleModel::Stochastic, SampleModel::SemiDeterministic] {
        for i in 0..C1_INSTANCES {
            let arm = random_arm(&mut rng, model);
            let beta = random_beta(&mut rng);
            let w = rng.gen_range(0.0..1.0);
            let solved = solve_arm(&arm, w, beta, &grid, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)
                .unwrap_or_else(|e| panic!("[criterion 1] {model:?} #{i}: {e}"));
            let oracle = backward_value(&arm, w, 0.0, beta, C1_GRID, C1_HORIZON);
            // The oracle truncates at C1_HORIZON stages (per-slot payoffs
            // are below 1), the solver stops within DEFAULT_TOLERANCE,
            // and the comparison itself is exact on the shared grid.
            let allowed =
                beta.powi(C1_HORIZON as i32) / (1.0 - beta) + 2.0 * DEFAULT_TOLERANCE;
            for j in 0..grid.len() {
                let d = (solved.available[j] - oracle.available[j]).abs();
                assert!(
                    d <= allowed,
                    "[criterion 1] {model:?} #{i}: available[{j}] off by {d:e} (allowed {allowed:e})"
                );
                max_dev = max_dev.max(d);
            }
            let solved_rows = unavailable_rows(&solved);
            assert_eq!(solved_rows.len(), oracle.unavailable.len());
            for (r, (srow, orow)) in solved_rows.iter().zip(&oracle.unavailable).enumerate() {
                for j in 0..grid.len() {
                    let d = (srow[j] - orow[j]).abs();
                    assert!(
                        d <= allowed,
                        "[criterion 1] {model:?} #{i}: unavailable[{r}][{j}] off by {d:e}"
                    );
                    max_dev = max_dev.max(d);
                }
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C1_CAP_SECONDS, "[criterion 1] took {secs:.1}s");
    println!(
        "[criterion 1] solver vs independent {C1_HORIZON}-stage oracle on {} instances: \
         PASS (max deviation {max_dev:.2e}, {secs:.1}s)",
        2 * C1_INSTANCES
    );
}

// ---------------------------------------------------------------- 2 ---

/// Instances per structural property suite.
const C2_INSTANCES: usize = 50;
/// Slack for convexity midpoint checks.
const C2_CONVEXITY_TOL: f64 = 1e-6;
/// Slack for Lipschitz slope checks.
const C2_SLOPE_TOL: f64 = 1e-4;
const C2_CAP_SECONDS: f64 = 180.0;

fn assert_convex(values: &[f64], what: &str) {
    for j in 1..values.len() - 1 {
        let excess = values[j] - 0.5 * (values[j - 1] + values[j + 1]);
        assert!(
            excess <= C2_CONVEXITY_TOL,
            "[criterion 2] {what}: point {j} above chord by {excess:e}"
        );
    }
}

#[test]
fn criterion_2_structural_properties_hold_on_conforming_instances() {
    let _g = gate();
    let clock = Instant::now();

    // Convexity in the belief.
    let grid = BeliefGrid::uniform(101).unwrap();
    let mut rng = seeded(9201);
    for i in 0..C2_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let w = rng.gen_range(0.0..1.0);
        let t = solve_arm(&arm, w, beta, &grid, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        assert_convex(&t.available, "available value in belief");
        for row in unavailable_rows(&t) {
            assert_convex(&row, "unavailable value in belief");
        }
    }

    // Convexity in the subsidy.
    let small = BeliefGrid::uniform(51).unwrap();
    let mut rng = seeded(9202);
    for i in 0..C2_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let w1 = rng.gen_range(-0.3..0.3);
        let w2 = w1 + rng.gen_range(0.2..0.8);
        let wm = 0.5 * (w1 + w2);
        let v1 = solve_arm(&arm, w1, beta, &small, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let v2 = solve_arm(&arm, w2, beta, &small, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let vm = solve_arm(&arm, wm, beta, &small, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        for j in 0..small.len() {
            let excess = vm.available[j] - 0.5 * (v1.available[j] + v2.available[j]);
            assert!(
                excess <= C2_CONVEXITY_TOL,
                "[criterion 2] instance {i}: subsidy midpoint above chord by {excess:e}"
            );
        }
    }

    // Belief-sensitivity bound kappa * (rho1 - rho0).
    let fine = BeliefGrid::uniform(201).unwrap();
    let mut rng = seeded(9203);
    for i in 0..C2_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let w = rng.gen_range(0.0..1.0);
        let t = solve_arm(&arm, w, beta, &fine, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let kappa = 1.0 / (1.0 - beta * (arm.p00 - arm.p10).abs());
        let bound = kappa * (arm.rho1 - arm.rho0) + C2_SLOPE_TOL;
        let h = fine.spacing();
        for j in 0..fine.len() - 1 {
            let slope = (t.available[j + 1] - t.available[j]).abs() / h;
            assert!(
                slope <= bound,
                "[criterion 2] instance {i}: belief slope {slope} exceeds {bound}"
            );
        }
    }

    // Subsidy-sensitivity within [0, 1/(1-beta)].
    let mut rng = seeded(9204);
    let delta = 0.05;
    for i in 0..C2_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let w = rng.gen_range(-0.2..0.8);
        let lo = solve_arm(&arm, w, beta, &small, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let hi = solve_arm(&arm, w + delta, beta, &small, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)
            .unwrap();
        let cap = 1.0 / (1.0 - beta) + C2_SLOPE_TOL;
        for j in 0..small.len() {
            let slope = (hi.available[j] - lo.available[j]) / delta;
            assert!(
                (-C2_CONVEXITY_TOL..=cap).contains(&slope),
                "[criterion 2] instance {i}: subsidy slope {slope} outside [0, {cap}]"
            );
        }
    }

    // At most one sign change of the play advantage.
    let mut rng = seeded(9205);
    for i in 0..C2_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let w = rng.gen_range(0.0..1.0);
        let t = solve_arm(&arm, w, beta, &fine, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        let threshold = t
            .threshold()
            .unwrap_or_else(|e| panic!("[criterion 2] instance {i}: {e}"));
        assert!((0.0..=1.0).contains(&threshold));
    }

    // Idle region grows with the subsidy.
    let mut rng = seeded(9206);
    for i in 0..C2_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let hi = arm.eta1 / (1.0 - beta);
        let report = indexability_check(&arm, beta, &grid, 0.0, hi, 11).unwrap();
        assert!(
            report.max_increase <= 2.0 * grid.spacing() + 1e-12,
            "[criterion 2] instance {i}: threshold rose by {}",
            report.max_increase
        );
    }

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C2_CAP_SECONDS, "[criterion 2] took {secs:.1}s");
    println!(
        "[criterion 2] six structural property suites x {C2_INSTANCES} conforming instances: \
         PASS ({secs:.1}s)"
    );
}

// ---------------------------------------------------------------- 3 ---

/// Instances compared between the two index methods.
const C3_INSTANCES: usize = 10;
/// Certificate tolerance: methods must agree within twice this.
const C3_H: f64 = 1e-4;
/// Index-grid resolution.
const C3_INDEX_GRID: usize = 11;
/// Tolerance on the information-free closed form.
const C3_INFO_FREE_TOL: f64 = 1e-4;
const C3_CAP_SECONDS: f64 = 120.0;

#[test]
fn criterion_3_stochastic_approximation_matches_bisection() {
    let _g = gate();
    let clock = Instant::now();
    let index_grid = BeliefGrid::uniform(C3_INDEX_GRID).unwrap();
    let value_grid = BeliefGrid::uniform(201).unwrap();
    let mut rng = seeded(9301);
    let mut max_gap = 0.0f64;
    for i in 0..C3_INSTANCES {
        let arm = conforming_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let sa = whittle_sa(
            &arm,
            beta,
            &index_grid,
            &value_grid,
            0.0,
            C3_H,
            StepSchedule::default(),
        )
        .unwrap_or_else(|e| panic!("[criterion 3] instance {i}: {e}"));
        let bisect = whittle_table_bisect(&arm, beta, &index_grid, &value_grid, 1e-6).unwrap();
        for j in 0..index_grid.len() {
            let gap = (sa.values[j] - bisect.values[j]).abs();
            assert!(
                gap <= 2.0 * C3_H,
                "[criterion 3] instance {i}, belief {}: methods differ by {gap:e}",
                index_grid.point(j)
            );
            max_gap = max_gap.max(gap);
        }
    }

    // Information-free arm: iid chain, action-insensitive availability;
    // the index is exactly the expected one-slot reward.
    let info_free = ArmParams {
        p00: 0.5,
        p10: 0.5,
        rho0: 0.2,
        rho1: 0.8,
        eta0: 0.2,
        eta1: 0.8,
        availability: AvailabilityModel::Stochastic {
            theta11: 0.9,
            theta01: 0.9,
            theta00: 0.5,
        },
        unavailable_update: UnavailableUpdate::NaturalEvolution,
    };
    let table = whittle_sa(
        &info_free,
        0.95,
        &index_grid,
        &value_grid,
        0.0,
        C3_H,
        StepSchedule::default(),
    )
    .unwrap();
    for j in 0..index_grid.len() {
        let pi = index_grid.point(j);
        let eta = info_free.expected_reward(pi);
        assert!(
            (table.values[j] - eta).abs() <= C3_INFO_FREE_TOL,
            "[criterion 3] information-free index at {pi}: {} vs {eta}",
            table.values[j]
        );
    }

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C3_CAP_SECONDS, "[criterion 3] took {secs:.1}s");
    println!(
        "[criterion 3] stochastic approximation vs bisection on {C3_INSTANCES} instances \
         plus the information-free closed form: PASS (max gap {max_gap:.2e}, {secs:.1}s)"
    );
}

// ---------------------------------------------------------------- 4 ---

/// (instance, charge) pairs checked against the joint oracle.
const C4_PAIRS: usize = 5;
/// Relative agreement between the joint value and the per-arm split.
const C4_REL_TOL: f64 = 5e-3;
/// Belief-grid resolution per arm.
const C4_GRID: usize = 51;
const C4_CAP_SECONDS: f64 = 120.0;

#[test]
fn criterion_4_joint_oracle_validates_the_per_arm_decomposition() {
    let _g = gate();
    let clock = Instant::now();
    let grid = BeliefGrid::uniform(C4_GRID).unwrap();
    let bench = benchmark_arms();
    let mut rng = seeded(9401);
    let mut cases: Vec<([ArmParams; 2], f64, f64, [PerceivedState; 2])> = vec![(
        // Two benchmark arms: one perfectly observed, one partially.
        [bench[3].clone(), bench[5].clone()],
        0.5,
        0.95,
        [
            PerceivedState::available(0.4),
            PerceivedState::available(0.7),
        ],
    )];
    while cases.len() < C4_PAIRS {
        let i = cases.len();
        let a = random_arm(&mut rng, model_for(i));
        let b = random_arm(&mut rng, model_for(i + 1));
        let lambda = rng.gen_range(0.0..0.6);
        let beta = rng.gen_range(0.3..0.9);
        let qa = PerceivedState::available(rng.gen_range(0.0..1.0));
        let qb = if i == 2 {
            PerceivedState::unavailable(rng.gen_range(0.0..1.0))
        } else {
            PerceivedState::available(rng.gen_range(0.0..1.0))
        };
        cases.push(([a, b], lambda, beta, [qa, qb]));
    }

    let mut max_rel = 0.0f64;
    for (idx, (arms, lambda, beta, query)) in cases.iter().enumerate() {
        let refund = 2.0 * lambda / (1.0 - beta);
        let joint = joint_dp_oracle(
            arms,
            *lambda,
            *beta,
            &[grid.clone(), grid.clone()],
            query,
            1e-8,
            DEFAULT_MAX_SWEEPS,
            DEFAULT_STATE_CAP,
        )
        .unwrap_or_else(|e| panic!("[criterion 4] pair {idx}: {e}"));
        let instance = BanditInstance {
            arms: arms.to_vec(),
            plays_per_slot: 2,
            beta: *beta,
            horizon: 1,
            reward_mode: Default::default(),
        };
        let split = lagrangian_bound(
            &instance,
            query,
            LambdaSearch {
                lo: *lambda,
                hi: *lambda,
                steps: 1,
            },
            &grid,
            1e-8,
            DEFAULT_MAX_SWEEPS,
        )
        .unwrap();
        let lhs = refund + joint;
        let rel = (lhs - split.total).abs() / lhs.abs().max(1.0);
        assert!(
            rel <= C4_REL_TOL,
            "[criterion 4] pair {idx}: joint {lhs} vs decomposed {} (relative {rel:e})",
            split.total
        );
        max_rel = max_rel.max(rel);
    }

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C4_CAP_SECONDS, "[criterion 4] took {secs:.1}s");
    println!(
        "[criterion 4] joint two-arm oracle vs per-arm decomposition on {C4_PAIRS} pairs: \
         PASS (max relative gap {max_rel:.2e}, {secs:.1}s)"
    );
}

// ---------------------------------------------------------------- 5 ---

/// Instances checked for bound dominance.
const C5_INSTANCES: usize = 20;
/// Pointwise dominance slack.
const C5_TOL: f64 = 1e-6;
const C5_CAP_SECONDS: f64 = 60.0;

#[test]
fn criterion_5_availability_blind_values_dominate_aware_ones() {
    let _g = gate();
    let clock = Instant::now();
    let grid = BeliefGrid::uniform(101).unwrap();
    let mut rng = seeded(9501);
    let mut reset_checked = 0usize;
    for i in 0..C5_INSTANCES {
        let mut arm = random_arm(&mut rng, model_for(i));
        let beta = random_beta(&mut rng);
        let w = rng.gen_range(0.0..0.8);
        let lambda = rng.gen_range(0.0..0.5);
        // Alternate the unavailable-belief variant deliberately.
        arm.unavailable_update = if i % 3 == 0 {
            UnavailableUpdate::StationaryReset
        } else {
            UnavailableUpdate::NaturalEvolution
        };
        if arm.unavailable_update == UnavailableUpdate::StationaryReset
            && arm.stationary_belief().is_err()
        {
            arm.unavailable_update = UnavailableUpdate::NaturalEvolution;
        }

        // Subsidy problem: blind vs availability-aware.
        let blind =
            solve_unconstrained(&arm, w, beta, &grid, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)
                .unwrap();
        let aware = solve_arm(&arm, w, beta, &grid, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS).unwrap();
        // Charged problem: blind vs availability-aware.
        let blind_l = solve_lambda_arm(
            &arm,
            lambda,
            beta,
            &grid,
            false,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();
        let aware_l = solve_lambda_arm(
            &arm,
            lambda,
            beta,
            &grid,
            true,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
            None,
        )
        .unwrap();

        for (blind_t, aware_t, tag) in
            [(&blind, &aware, "subsidy"), (&blind_l, &aware_l, "charge")]
        {
            let members = match arm.unavailable_update {
                UnavailableUpdate::NaturalEvolution => vec![true; grid.len()],
                UnavailableUpdate::StationaryReset => {
                    reset_checked += 1;
                    stationary_reset_safe_set(blind_t, &arm).unwrap()
                }
            };
            let rows = unavailable_rows(aware_t);
            for j in 0..grid.len() {
                if !members[j] {
                    continue;
                }
                let u = blind_t.available[j];
                assert!(
                    u >= aware_t.available[j] - C5_TOL,
                    "[criterion 5] instance {i} ({tag}): blind {u} below available {}",
                    aware_t.available[j]
                );
                for (r, row) in rows.iter().enumerate() {
                    assert!(
                        u >= row[j] - C5_TOL,
                        "[criterion 5] instance {i} ({tag}): blind {u} below unavailable[{r}] {}",
                        row[j]
                    );
                }
            }
        }
    }

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C5_CAP_SECONDS, "[criterion 5] took {secs:.1}s");
    println!(
        "[criterion 5] availability-blind dominance on {C5_INSTANCES} instances \
         ({reset_checked} reset-variant checks on their safe sets): PASS ({secs:.1}s)"
    );
}

// ---------------------------------------------------------------- 6 ---

/// Replications simulated per policy on the benchmark.
const C6_REPLICATIONS: usize = 1000;
/// The subsidy-index policy must reach this fraction of the bound.
const C6_EFFICIENCY: f64 = 0.9;
const C6_CAP_SECONDS: f64 = 300.0;

#[test]
fn criterion_6_benchmark_policy_ordering() {
    let _g = gate();
    let clock = Instant::now();
    let (mut config, _) = ConfigFile::parse(BENCHMARK_CONFIG).unwrap();
    config.simulation.replications = C6_REPLICATIONS;
    assert_eq!(config.instance.plays_per_slot, 4);
    assert_eq!(config.instance.beta, 0.95);
    // The bundled document and the test-support tables must describe the
    // same fifteen arms.
    assert_eq!(config.bandit_instance().arms, benchmark_arms());

    let pool = build_pool(0).unwrap();
    let tables = required_tables(&pool, &config).unwrap();
    let results = simulate_policies(&pool, &config, &tables).unwrap();
    let bound = compute_bound(&config).unwrap();

    let get = |kind: PolicyKind| -> (f64, f64) {
        results
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, r)| (r.mean, r.std_error))
            .expect("policy simulated")
    };
    let (wi, wi_se) = get(PolicyKind::Whittle);
    let (mwi, mwi_se) = get(PolicyKind::ModifiedWhittle);
    let (myopic, myopic_se) = get(PolicyKind::Myopic);
    let (random, random_se) = get(PolicyKind::Random);
    let lb = bound.total;

    assert!(lb >= wi, "[criterion 6] bound {lb} below subsidy-index mean {wi}");
    assert!(lb >= myopic, "[criterion 6] bound {lb} below myopic mean {myopic}");
    assert!(
        (wi - myopic).abs() <= 1.96 * (wi_se + myopic_se),
        "[criterion 6] subsidy-index {wi}±{wi_se} and myopic {myopic}±{myopic_se} separated"
    );
    assert!(
        mwi < wi.min(myopic) - 2.0 * mwi_se.max(wi_se).max(myopic_se),
        "[criterion 6] backward-recursion index {mwi} not clearly below {}",
        wi.min(myopic)
    );
    assert!(
        random < mwi - 2.0 * random_se.max(mwi_se),
        "[criterion 6] random {random} not clearly below backward-recursion index {mwi}"
    );
    assert!(
        wi >= C6_EFFICIENCY * lb,
        "[criterion 6] subsidy-index mean {wi} below {C6_EFFICIENCY} x bound {lb}"
    );

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C6_CAP_SECONDS, "[criterion 6] took {secs:.1}s");
    println!(
        "[criterion 6] benchmark ordering at {C6_REPLICATIONS} replications: PASS \
         (bound {lb:.1}, WI {wi:.1}, MWI {mwi:.1}, Myopic {myopic:.1}, Random {random:.1}, {secs:.1}s)"
    );
}

// ---------------------------------------------------------------- 7 ---

/// Replications of the calibration run.
const C7_REPLICATIONS: usize = 100_000;
/// Slots per replication.
const C7_HORIZON: usize = 40;
/// Belief buckets across [0, 1].
const C7_BUCKETS: usize = 20;
/// Minimum samples before a bucket is judged.
const C7_MIN_SAMPLES: usize = 10_000;
/// Allowed gap between bucket mean belief and empirical frequency.
const C7_TOL: f64 = 0.02;
const C7_CAP_SECONDS: f64 = 60.0;

#[test]
fn criterion_7_beliefs_are_calibrated_probabilities() {
    let _g = gate();
    let clock = Instant::now();
    // Natural evolution keeps the belief an exact posterior, so within
    // any belief bucket the empirical bad-state frequency must match the
    // mean belief. (The stationary-reset variant is deliberately
    // approximate while unavailable and would not calibrate.)
    let instance = BanditInstance {
        arms: vec![ArmParams {
            p00: 0.6,
            p10: 0.3,
            rho0: 0.3,
            rho1: 0.8,
            eta0: 0.3,
            eta1: 0.8,
            availability: AvailabilityModel::Stochastic {
                theta11: 0.7,
                theta01: 0.8,
                theta00: 0.6,
            },
            unavailable_update: UnavailableUpdate::NaturalEvolution,
        }],
        plays_per_slot: 1,
        beta: 0.95,
        horizon: C7_HORIZON,
        reward_mode: Default::default(),
    };
    let initial = InitialConditions::default();
    let policy = Policy::Myopic;
    let seed = 4077;

    let mut count = [0usize; C7_BUCKETS];
    let mut belief_sum = [0.0f64; C7_BUCKETS];
    let mut bad_count = [0usize; C7_BUCKETS];
    for rep in 0..C7_REPLICATIONS {
        let trace = run_replication_traced(&instance, &policy, &initial, seed, rep as u64).unwrap();
        for slot in &trace.slots {
            let pi = slot.beliefs[0];
            let b = ((pi * C7_BUCKETS as f64) as usize).min(C7_BUCKETS - 1);
            count[b] += 1;
            belief_sum[b] += pi;
            bad_count[b] += slot.bad[0] as usize;
        }
    }
    let mut judged = 0usize;
    let mut judged_samples = 0usize;
    let mut max_gap = 0.0f64;
    for b in 0..C7_BUCKETS {
        if count[b] < C7_MIN_SAMPLES {
            continue;
        }
        judged += 1;
        judged_samples += count[b];
        let mean_belief = belief_sum[b] / count[b] as f64;
        let freq = bad_count[b] as f64 / count[b] as f64;
        let gap = (mean_belief - freq).abs();
        assert!(
            gap <= C7_TOL,
            "[criterion 7] bucket {b}: mean belief {mean_belief:.4} vs frequency {freq:.4} \
             over {} samples",
            count[b]
        );
        max_gap = max_gap.max(gap);
    }
    // The belief trajectory concentrates on the posterior-update orbit, so
    // not every bucket fills; require that the judged buckets carry the
    // bulk of the evidence rather than a fixed bucket count.
    let total: usize = count.iter().sum();
    assert!(
        judged >= 4 && 2 * judged_samples >= total,
        "[criterion 7] judged {judged} buckets holding {judged_samples} of {total} samples"
    );

    // The same seed reproduces the run bit for bit.
    let a = run(&instance, &policy, &initial, 500, seed).unwrap();
    let b = run(&instance, &policy, &initial, 500, seed).unwrap();
    assert_eq!(a.totals, b.totals, "[criterion 7] rerun diverged");
    let t1 = run_replication_traced(&instance, &policy, &initial, seed, 777).unwrap();
    let t2 = run_replication_traced(&instance, &policy, &initial, seed, 777).unwrap();
    assert_eq!(t1, t2, "[criterion 7] traced rerun diverged");

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C7_CAP_SECONDS, "[criterion 7] took {secs:.1}s");
    println!(
        "[criterion 7] belief calibration over {C7_REPLICATIONS} replications, \
         {judged} buckets judged: PASS (max gap {max_gap:.4}, {secs:.1}s)"
    );
}

// ---------------------------------------------------------------- 8 ---

/// Generated-instance seeds checked.
const C8_SEEDS: usize = 5;
/// Arms per generated instance.
const C8_ARMS: usize = 100;
/// Replications per policy per instance.
const C8_REPLICATIONS: usize = 200;
const C8_CAP_SECONDS: f64 = 300.0;

#[test]
fn criterion_8_perfect_observation_closes_the_index_myopic_gap() {
    let _g = gate();
    let clock = Instant::now();
    // With perfect observation and no availability constraint the two
    // rankings coincide often enough that the policies are statistically
    // indistinguishable.
    let pool = build_pool(0).unwrap();
    let mut details = String::new();
    for k in 0..C8_SEEDS {
        let spec = GeneratorSpec {
            arms: C8_ARMS,
            structure: RewardStructure::Contiguous,
            availability: AvailabilityChoice::Unconstrained,
            rho: RhoMode::Binary,
            plays_per_slot: 4,
            beta: 0.95,
            seed: 4200 + k as u64,
            replications: C8_REPLICATIONS,
        };
        let mut config = generate(&spec);
        config.simulation.policies = vec![PolicyKind::Whittle, PolicyKind::Myopic];
        let tables = required_tables(&pool, &config).unwrap();
        let results = simulate_policies(&pool, &config, &tables).unwrap();
        let (wi, wi_se) = (results[0].1.mean, results[0].1.std_error);
        let (myopic, myopic_se) = (results[1].1.mean, results[1].1.std_error);
        assert!(
            (wi - myopic).abs() <= 1.96 * (wi_se + myopic_se),
            "[criterion 8] seed {}: subsidy-index {wi}±{wi_se} vs myopic {myopic}±{myopic_se}",
            spec.seed
        );
        details.push_str(&format!(" {:.2}/{:.2}", wi, myopic));
    }

    let secs = clock.elapsed().as_secs_f64();
    assert!(secs < C8_CAP_SECONDS, "[criterion 8] took {secs:.1}s");
    println!(
        "[criterion 8] {C8_SEEDS} generated {C8_ARMS}-arm instances, index vs myopic \
         (means{details}): PASS ({secs:.1}s)"
    );
}
