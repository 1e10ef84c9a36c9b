//! Solvers, index heuristics, performance bounds, and a discrete-event
//! simulator for constrained restless multi-armed bandits whose arms are
//! partially observable two-state Markov chains with time-varying
//! availability.
//!
//! A decision maker plays at most `M` of `N` arms per slot. Each arm hides
//! a good/bad state behind Bernoulli success observations that are only
//! produced when the arm is played, and each arm may drop out of the
//! playable set according to a stochastic or semi-deterministic
//! availability process. The crate provides:
//!
//! * [`arm`] — the single-arm model: belief updates, rewards, availability;
//! * [`grid`] — the belief discretization used by every solver;
//! * [`solver`] — discounted value iteration for the single-arm subsidy
//!   problem;
//! * [`index`] — subsidy (Whittle-style) indices by stochastic
//!   approximation, bisection, a fast subsidy-sweep table builder, and a
//!   finite-horizon modified index;
//! * [`bounds`] — upper bounds through an availability-blind relaxation
//!   and a play-charged decoupling, plus a small joint dynamic program
//!   that validates the decoupling on product instances;
//! * [`policy`] — per-slot arm selection rules built from index tables,
//!   myopic rewards, or uniform random choice;
//! * [`sim`] — a reproducible simulator with deterministic parallel-ready
//!   aggregation.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion
//! command-line crate.

#![cfg_attr(not(test), no_std)]
// Validation guards are written as negated comparisons (`!(x > 0.0)`)
// on purpose: they reject NaN parameters along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod arm;
pub mod bounds;
pub mod error;
pub mod grid;
pub mod index;
mod num;
pub mod policy;
pub mod sim;
pub mod solver;

pub use arm::{ArmParams, AvailabilityModel, PerceivedState, UnavailableUpdate};
pub use error::{Error, ValidationWarning};
pub use grid::BeliefGrid;
pub use num::pairwise_sum;
pub use solver::{solve_arm, solve_arm_warm, ValueTable, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE};
