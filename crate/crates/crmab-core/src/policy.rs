//! Per-slot arm selection: rank arms by a score and play the best
//! available ones within the play budget.
//!
//! All deterministic policies share one ranking rule — highest score
//! first, ties to the lowest arm id — and differ only in where the score
//! comes from: an interpolated index table ([`select_whittle`],
//! [`select_mwi`]) or the immediate expected reward ([`select_myopic`]).
//! [`select_random`] ignores scores and samples uniformly. Unavailable
//! arms are never chosen; when fewer than the budget are available, all
//! available arms are played.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::arm::{ArmParams, PerceivedState};
use crate::index::IndexTable;

/// One slot's selection: the chosen arm ids (ascending) and the per-arm
/// scores that ranked them (zero for unavailable arms).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub chosen: Vec<usize>,
    pub scores: Vec<f64>,
}

impl PolicyDecision {
    /// Whether `arm` is in the chosen set.
    pub fn plays(&self, arm: usize) -> bool {
        self.chosen.binary_search(&arm).is_ok()
    }
}

/// Top-`m` available arms by score, ties to the lowest id.
pub(crate) fn select_top_m(scores: Vec<f64>, state: &[PerceivedState], m: usize) -> PolicyDecision {
    let mut candidates: Vec<usize> = (0..state.len()).filter(|&n| state[n].available).collect();
    if candidates.len() > m {
        candidates.sort_unstable_by(|&a, &b| {
            scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
        });
        candidates.truncate(m);
        candidates.sort_unstable();
    }
    PolicyDecision {
        chosen: candidates,
        scores,
    }
}

fn scored_by_table(tables: &[IndexTable], state: &[PerceivedState]) -> Vec<f64> {
    state
        .iter()
        .enumerate()
        .map(|(n, st)| {
            if st.available {
                tables[n].index_at(st.belief)
            } else {
                0.0
            }
        })
        .collect()
}

/// Plays the `m` available arms with the highest interpolated subsidy
/// index.
pub fn select_whittle(
    tables: &[IndexTable],
    state: &[PerceivedState],
    m: usize,
) -> PolicyDecision {
    select_top_m(scored_by_table(tables, state), state, m)
}

/// Plays the `m` available arms with the highest interpolated
/// finite-horizon backward index. Identical ranking semantics to
/// [`select_whittle`]; only the table contents differ.
pub fn select_mwi(tables: &[IndexTable], state: &[PerceivedState], m: usize) -> PolicyDecision {
    select_top_m(scored_by_table(tables, state), state, m)
}

/// Plays the `m` available arms with the highest immediate expected
/// reward at their current belief.
pub fn select_myopic(
    arms: &[ArmParams],
    state: &[PerceivedState],
    m: usize,
) -> PolicyDecision {
    let scores = state
        .iter()
        .enumerate()
        .map(|(n, st)| {
            if st.available {
                arms[n].expected_reward(st.belief)
            } else {
                0.0
            }
        })
        .collect();
    select_top_m(scores, state, m)
}

/// Plays a uniform sample of `min(m, #available)` available arms without
/// replacement.
pub fn select_random(
    state: &[PerceivedState],
    m: usize,
    rng: &mut impl Rng,
) -> PolicyDecision {
    let mut candidates: Vec<usize> = (0..state.len()).filter(|&n| state[n].available).collect();
    if candidates.len() > m {
        // Partial Fisher-Yates: settle the first m slots only.
        for i in 0..m {
            let j = rng.gen_range(i..candidates.len());
            candidates.swap(i, j);
        }
        candidates.truncate(m);
        candidates.sort_unstable();
    }
    PolicyDecision {
        chosen: candidates,
        scores: vec![0.0; state.len()],
    }
}
