//! Pipeline steps shared by the subcommands: index-table construction,
//! parallel simulation, and bound computation.
//!
//! Everything here is deterministic given the configuration document:
//! simulations tile the replication range in fixed blocks that combine
//! in replication order, so results are identical on any thread count.

use anyhow::{Context, Result};
use crmab_core::bounds::{
    lagrangian_bound, lagrangian_bound_uniform, LagrangianBound, LambdaSearch,
};
use crmab_core::index::{
    modified_whittle, whittle_sa, whittle_table_bisect, whittle_table_sweep, IndexTable,
    StepSchedule,
};
use crmab_core::sim::{
    combine_chunks, simulate_chunk, BanditInstance, InitialConditions, Policy, SimulationReport,
    CHUNK_SIZE,
};
use crmab_core::{ArmParams, BeliefGrid, Error, PerceivedState};
use rayon::prelude::*;

use crate::config::{ConfigFile, IndexMethodDto, InitialBeliefsDto, PolicyKind};

/// Environment variable read for the default worker-thread count.
pub const THREADS_ENV: &str = "CRMAB_THREADS";

/// Worker threads: explicit flag, else [`THREADS_ENV`], else one per
/// core (`0` lets the pool decide).
pub fn resolve_threads(flag: Option<usize>) -> usize {
    if let Some(n) = flag {
        return n;
    }
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

pub fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot build the worker thread pool")
}

fn index_grids(config: &ConfigFile) -> Result<(BeliefGrid, BeliefGrid), Error> {
    Ok((
        BeliefGrid::uniform(config.index.grid)?,
        BeliefGrid::uniform(config.solver.value_grid)?,
    ))
}

fn whittle_table_for(
    config: &ConfigFile,
    params: &ArmParams,
    index_grid: &BeliefGrid,
    value_grid: &BeliefGrid,
) -> Result<IndexTable, Error> {
    let beta = config.instance.beta;
    let h = config.index.tolerance;
    match config.index.method {
        IndexMethodDto::Sweep => whittle_table_sweep(params, beta, index_grid, value_grid, h),
        IndexMethodDto::StochasticApproximation => whittle_sa(
            params,
            beta,
            index_grid,
            value_grid,
            0.0,
            h,
            StepSchedule::default(),
        ),
        IndexMethodDto::Bisection => {
            whittle_table_bisect(params, beta, index_grid, value_grid, h)
        }
        IndexMethodDto::Backward => {
            modified_whittle(params, beta, index_grid, config.backward_horizon())
        }
    }
}

/// Subsidy-index table per arm, by the configured method.
pub fn whittle_tables(pool: &rayon::ThreadPool, config: &ConfigFile) -> Result<Vec<IndexTable>, Error> {
    let (index_grid, value_grid) = index_grids(config)?;
    let instance = config.bandit_instance();
    pool.install(|| {
        instance
            .arms
            .par_iter()
            .map(|params| whittle_table_for(config, params, &index_grid, &value_grid))
            .collect()
    })
}

/// Backward-recursion comparison table per arm (always the
/// finite-horizon method, whatever `[index].method` says).
pub fn backward_tables(
    pool: &rayon::ThreadPool,
    config: &ConfigFile,
) -> Result<Vec<IndexTable>, Error> {
    let (index_grid, _) = index_grids(config)?;
    let instance = config.bandit_instance();
    let horizon = config.backward_horizon();
    pool.install(|| {
        instance
            .arms
            .par_iter()
            .map(|params| modified_whittle(params, config.instance.beta, &index_grid, horizon))
            .collect()
    })
}

/// Runs `replications` independent replications on the pool and combines
/// them in replication order.
pub fn simulate(
    pool: &rayon::ThreadPool,
    instance: &BanditInstance,
    policy: &Policy<'_>,
    initial: &InitialConditions,
    replications: usize,
    seed: u64,
) -> Result<SimulationReport, Error> {
    let starts: Vec<usize> = (0..replications).step_by(CHUNK_SIZE).collect();
    let chunks: Result<Vec<_>, Error> = pool.install(|| {
        starts
            .par_iter()
            .map(|&start| {
                let count = CHUNK_SIZE.min(replications - start);
                simulate_chunk(instance, policy, initial, seed, start, count)
            })
            .collect()
    });
    Ok(combine_chunks(instance, seed, chunks?))
}

/// Index tables the configured policy set needs.
pub struct PolicyTables {
    pub whittle: Option<Vec<IndexTable>>,
    pub backward: Option<Vec<IndexTable>>,
}

pub fn required_tables(
    pool: &rayon::ThreadPool,
    config: &ConfigFile,
) -> Result<PolicyTables, Error> {
    let policies = &config.simulation.policies;
    let whittle = if policies.contains(&PolicyKind::Whittle) {
        Some(whittle_tables(pool, config)?)
    } else {
        None
    };
    let backward = if policies.contains(&PolicyKind::ModifiedWhittle) {
        Some(backward_tables(pool, config)?)
    } else {
        None
    };
    Ok(PolicyTables { whittle, backward })
}

impl PolicyTables {
    /// The runtime policy for `kind`; tables must have been built.
    pub fn policy(&self, kind: PolicyKind) -> Policy<'_> {
        match kind {
            PolicyKind::Whittle => {
                Policy::WhittleIndex(self.whittle.as_deref().expect("tables built"))
            }
            PolicyKind::ModifiedWhittle => {
                Policy::ModifiedWhittle(self.backward.as_deref().expect("tables built"))
            }
            PolicyKind::Myopic => Policy::Myopic,
            PolicyKind::Random => Policy::Random,
        }
    }
}

/// Simulates every configured policy under common random numbers: the
/// same seed drives each policy, so hidden state and availability paths
/// coincide across the deterministic policies and differences reflect
/// the policies alone.
pub fn simulate_policies(
    pool: &rayon::ThreadPool,
    config: &ConfigFile,
    tables: &PolicyTables,
) -> Result<Vec<(PolicyKind, SimulationReport)>, Error> {
    let instance = config.bandit_instance();
    let initial = config.initial_conditions();
    let mut out = Vec::new();
    for &kind in &config.simulation.policies {
        let policy = tables.policy(kind);
        let report = simulate(
            pool,
            &instance,
            &policy,
            &initial,
            config.simulation.replications,
            config.simulation.seed,
        )?;
        out.push((kind, report));
    }
    Ok(out)
}

/// Decoupled upper bound matching the configured initial conditions:
/// averaged over uniform initial beliefs when the simulation draws them,
/// or at the fixed initial state otherwise.
pub fn compute_bound(config: &ConfigFile) -> Result<LagrangianBound, Error> {
    let instance = config.bandit_instance();
    let grid = BeliefGrid::uniform(config.solver.value_grid)?;
    let search = LambdaSearch {
        lo: config.bounds.lambda_lo,
        hi: config.bounds.lambda_hi.unwrap_or_else(|| config.max_eta1()),
        steps: config.bounds.lambda_steps,
    };
    let available: Vec<bool> = config
        .simulation
        .initial_available
        .clone()
        .unwrap_or_else(|| vec![true; config.arms.len()]);
    match &config.simulation.initial_beliefs {
        InitialBeliefsDto::Named(_) => lagrangian_bound_uniform(
            &instance,
            &available,
            search,
            &grid,
            config.solver.tolerance,
            config.solver.max_sweeps,
        ),
        InitialBeliefsDto::Fixed(beliefs) => {
            let state: Vec<PerceivedState> = beliefs
                .iter()
                .zip(&available)
                .map(|(&belief, &avail)| PerceivedState {
                    belief,
                    available: avail,
                    remaining: None,
                })
                .collect();
            lagrangian_bound(
                &instance,
                &state,
                search,
                &grid,
                config.solver.tolerance,
                config.solver.max_sweeps,
            )
        }
    }
}
