//! Single-arm model: hidden two-state Markov chain, Bernoulli observations
//! through plays, belief (filter) updates, and the arm availability models.
//!
//! State `0` is the bad state and state `1` the good state. The belief
//! `pi` tracked everywhere in this crate is the probability that the arm is
//! currently in the *bad* state. A play succeeds with probability `rho1`
//! from the good state and `rho0 < rho1` from the bad state, and pays the
//! expected reward `eta(pi) = pi*eta0 + (1-pi)*eta1`.
//!
//! Belief updates:
//! * after a played success: `pi' = (pi*rho0*p00 + (1-pi)*rho1*p10) / (pi*rho0 + (1-pi)*rho1)`
//! * after a played failure: the complementary Bayes update through `1-rho`
//! * idle while available: one step of the chain, `pi' = pi*p00 + (1-pi)*p10`
//! * while unavailable: either the same natural evolution, or a reset to the
//!   chain's stationary distribution, depending on [`UnavailableUpdate`].

use alloc::vec::Vec;

use crate::error::{Error, ValidationWarning};

/// How the belief of an *unavailable* arm evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnavailableUpdate {
    /// The chain keeps running: `pi' = pi*p00 + (1-pi)*p10` each slot.
    #[default]
    NaturalEvolution,
    /// The belief snaps to the stationary distribution of the chain,
    /// modelling outages long enough to forget the last observation.
    StationaryReset,
}

/// Availability dynamics of an arm.
///
/// `theta11` is the probability that an arm played while available is
/// available next slot; `theta01` the same for an idle available arm. Under
/// [`AvailabilityModel::Stochastic`], `theta00` is the probability that an
/// unavailable arm returns next slot. Under
/// [`AvailabilityModel::SemiDeterministic`], an arm that leaves instead
/// stays away for exactly `outage_len` slots and then returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AvailabilityModel {
    Stochastic {
        theta11: f64,
        theta01: f64,
        theta00: f64,
    },
    SemiDeterministic {
        theta11: f64,
        theta01: f64,
        outage_len: u32,
    },
}

impl AvailabilityModel {
    /// Always-available dynamics (all transition probabilities one).
    pub const fn always_available() -> Self {
        AvailabilityModel::Stochastic {
            theta11: 1.0,
            theta01: 1.0,
            theta00: 1.0,
        }
    }

    pub fn theta11(&self) -> f64 {
        match *self {
            AvailabilityModel::Stochastic { theta11, .. } => theta11,
            AvailabilityModel::SemiDeterministic { theta11, .. } => theta11,
        }
    }

    pub fn theta01(&self) -> f64 {
        match *self {
            AvailabilityModel::Stochastic { theta01, .. } => theta01,
            AvailabilityModel::SemiDeterministic { theta01, .. } => theta01,
        }
    }

    /// Length of a deterministic outage, when the model has one.
    pub fn outage_len(&self) -> Option<u32> {
        match *self {
            AvailabilityModel::Stochastic { .. } => None,
            AvailabilityModel::SemiDeterministic { outage_len, .. } => Some(outage_len),
        }
    }
}

/// All parameters of a single arm.
///
/// `p00` is the bad-to-bad and `p10` the good-to-bad transition
/// probability; `rho0 < rho1` are the success probabilities and
/// `eta0 < eta1` the rewards from the bad and good states.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmParams {
    pub p00: f64,
    pub p10: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub availability: AvailabilityModel,
    pub unavailable_update: UnavailableUpdate,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), Error> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            requirement: "a probability in [0, 1]",
        })
    }
}

impl ArmParams {
    /// Checks every parameter range and the model's structural requirements.
    ///
    /// Returns the list of non-fatal warnings (currently: rewards differing
    /// from observation probabilities, which leaves the solvers sound but
    /// voids the threshold/indexability guarantees). `arm` only labels the
    /// warnings.
    pub fn validate(&self, arm: usize) -> Result<Vec<ValidationWarning>, Error> {
        check_unit("p00", self.p00)?;
        check_unit("p10", self.p10)?;
        check_unit("rho0", self.rho0)?;
        check_unit("rho1", self.rho1)?;
        check_unit("eta0", self.eta0)?;
        check_unit("eta1", self.eta1)?;
        if !(self.rho0 < self.rho1) {
            return Err(Error::InvalidParameter {
                name: "rho0",
                value: self.rho0,
                requirement: "strictly below rho1",
            });
        }
        if !(self.eta0 < self.eta1) {
            return Err(Error::InvalidParameter {
                name: "eta0",
                value: self.eta0,
                requirement: "strictly below eta1",
            });
        }
        match self.availability {
            AvailabilityModel::Stochastic {
                theta11,
                theta01,
                theta00,
            } => {
                check_unit("theta11", theta11)?;
                check_unit("theta01", theta01)?;
                check_unit("theta00", theta00)?;
            }
            AvailabilityModel::SemiDeterministic {
                theta11,
                theta01,
                outage_len,
            } => {
                check_unit("theta11", theta11)?;
                check_unit("theta01", theta01)?;
                if outage_len == 0 {
                    return Err(Error::InvalidParameter {
                        name: "outage_len",
                        value: 0.0,
                        requirement: "at least one slot",
                    });
                }
            }
        }
        if self.unavailable_update == UnavailableUpdate::StationaryReset {
            // Fails exactly when the chain has no unique stationary law.
            self.stationary_belief()?;
        }
        let mut warnings = Vec::new();
        if self.rho0 != self.eta0 || self.rho1 != self.eta1 {
            warnings.push(ValidationWarning::RewardObservationMismatch { arm });
        }
        Ok(warnings)
    }

    /// Expected one-slot reward of a play at belief `pi`.
    #[inline]
    pub fn expected_reward(&self, pi: f64) -> f64 {
        pi * self.eta0 + (1.0 - pi) * self.eta1
    }

    /// Probability that a play at belief `pi` succeeds.
    #[inline]
    pub fn success_prob(&self, pi: f64) -> f64 {
        pi * self.rho0 + (1.0 - pi) * self.rho1
    }

    /// Bayes update after a played success.
    pub fn belief_after_success(&self, pi: f64) -> Result<f64, Error> {
        let denom = self.success_prob(pi);
        if denom <= 0.0 {
            return Err(Error::DegenerateObservation { belief: pi });
        }
        Ok((pi * self.rho0 * self.p00 + (1.0 - pi) * self.rho1 * self.p10) / denom)
    }

    /// Bayes update after a played failure.
    pub fn belief_after_failure(&self, pi: f64) -> Result<f64, Error> {
        let denom = 1.0 - self.success_prob(pi);
        if denom <= 0.0 {
            return Err(Error::DegenerateObservation { belief: pi });
        }
        Ok((pi * (1.0 - self.rho0) * self.p00 + (1.0 - pi) * (1.0 - self.rho1) * self.p10) / denom)
    }

    /// One chain step without an observation (arm available but idle).
    #[inline]
    pub fn belief_when_idle(&self, pi: f64) -> f64 {
        pi * self.p00 + (1.0 - pi) * self.p10
    }

    /// One belief step while the arm is unavailable, per the configured
    /// [`UnavailableUpdate`].
    pub fn belief_when_unavailable(&self, pi: f64) -> Result<f64, Error> {
        match self.unavailable_update {
            UnavailableUpdate::NaturalEvolution => Ok(self.belief_when_idle(pi)),
            UnavailableUpdate::StationaryReset => self.stationary_belief(),
        }
    }

    /// Stationary probability of the bad state, `p10 / (p01 + p10)`.
    pub fn stationary_belief(&self) -> Result<f64, Error> {
        let denom = (1.0 - self.p00) + self.p10;
        if denom <= 0.0 {
            return Err(Error::NoStationaryDistribution);
        }
        Ok(self.p10 / denom)
    }
}

/// What a decision maker knows about one arm at a slot boundary: its
/// belief, whether it can be played, and — for semi-deterministic outages —
/// how many unavailable slots remain (counting the current one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceivedState {
    pub belief: f64,
    pub available: bool,
    /// Remaining outage slots; only meaningful for unavailable arms under
    /// the semi-deterministic model. `None` means a full outage.
    pub remaining: Option<u32>,
}

impl PerceivedState {
    pub fn available(belief: f64) -> Self {
        Self {
            belief,
            available: true,
            remaining: None,
        }
    }

    pub fn unavailable(belief: f64) -> Self {
        Self {
            belief,
            available: false,
            remaining: None,
        }
    }

    pub fn in_outage(belief: f64, remaining: u32) -> Self {
        Self {
            belief,
            available: false,
            remaining: Some(remaining),
        }
    }
}
