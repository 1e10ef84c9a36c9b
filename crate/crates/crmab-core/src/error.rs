//! Error taxonomy shared by every module in the crate.
//!
//! All errors are data: variants carry the quantities a caller needs to
//! diagnose the failure (or, for budget exhaustion, to recover the best
//! iterate found so far).

/// Errors produced by model validation, solvers, index computations,
/// bounds, and the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("parameter `{name}` = {value} violates requirement: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// An instance-level structural requirement does not hold.
    #[error("invalid instance: {reason}")]
    InvalidInstance { reason: &'static str },

    /// A Bayes observation update was requested for an observation that has
    /// probability zero at the given belief.
    #[error("observation update undefined at belief {belief}: the conditioning observation has probability zero")]
    DegenerateObservation { belief: f64 },

    /// The two-state chain has `p01 + p10 = 0`, so no unique stationary
    /// distribution exists and the stationary-reset update is undefined.
    #[error("state chain has no unique stationary distribution (p01 + p10 = 0)")]
    NoStationaryDistribution,

    /// Value iteration exhausted its sweep budget before the convergence
    /// test was met.
    #[error("value iteration stopped after {iterations} sweeps with sup-norm change {residual:e} still above tolerance")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The play advantage changes sign more than once over the belief grid,
    /// so no single threshold belief exists.
    #[error("play advantage changes sign {crossings} times across the belief grid; no single threshold exists")]
    MultipleCrossings { crossings: usize },

    /// An iterative subsidy search ran out of steps. The best iterate seen
    /// so far and its advantage residual are attached.
    #[error("subsidy search budget of {budget} steps exhausted at belief {belief}; best subsidy {best_subsidy} has advantage residual {residual:e}")]
    IterationBudgetExceeded {
        belief: f64,
        budget: usize,
        best_subsidy: f64,
        residual: f64,
    },

    /// A bisection bracket does not straddle the sign change of the play
    /// advantage.
    #[error("subsidy bracket [{lo}, {hi}] invalid: advantage must be positive at the lower end and negative at the upper end (got {d_lo:e} and {d_hi:e})")]
    BracketInvalid {
        lo: f64,
        hi: f64,
        d_lo: f64,
        d_hi: f64,
    },

    /// The joint dynamic program would need more product states than the
    /// configured cap allows.
    #[error("joint state space of {states} points exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },
}

/// Non-fatal findings reported by instance validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationWarning {
    /// Observation probabilities differ from rewards. The toolkit handles
    /// this fine numerically, but the structural guarantees (threshold
    /// optimality, indexability) are established for matched values.
    RewardObservationMismatch { arm: usize },
}
