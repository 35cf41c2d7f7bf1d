//! Scheduling functions that carry the control parameter from 0 to 1.
//!
//! A ramp profile maps laboratory time t in [0, tau] to the dimensionless
//! progress lambda(t) with lambda(0) = 0 and lambda(tau) = 1. Profiles are
//! analytic, so evaluation past tau is well defined; timing-error studies
//! rely on that extension instead of clamping.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Maximum relative timing error accepted by [`TimingError::new`].
pub const MAX_TIMING_EPSILON: f64 = 0.5;

/// Shape of the control schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RampKind {
    /// lambda = t / tau. Nonzero slope at both endpoints.
    Linear,
    /// lambda = 10 s^3 - 15 s^4 + 6 s^5 with s = t / tau. First and second
    /// derivatives vanish at both endpoints.
    Polynomial,
    /// lambda = sin(pi t / (2 tau)). Zero slope only at the endpoint t = tau.
    Sinusoidal,
}

impl RampKind {
    /// All supported kinds, in canonical listing order.
    pub const ALL: [RampKind; 3] = [RampKind::Linear, RampKind::Polynomial, RampKind::Sinusoidal];

    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            RampKind::Linear => "linear",
            RampKind::Polynomial => "polynomial",
            RampKind::Sinusoidal => "sinusoidal",
        }
    }
}

impl fmt::Display for RampKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RampKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RampKind::Linear),
            "polynomial" => Ok(RampKind::Polynomial),
            "sinusoidal" => Ok(RampKind::Sinusoidal),
            other => Err(Error::InvalidParameter {
                name: "ramp",
                reason: format!(
                    "unknown ramp '{other}'; valid values are linear, polynomial, sinusoidal"
                ),
            }),
        }
    }
}

/// A ramp shape together with its nominal duration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RampProfile {
    kind: RampKind,
    tau: f64,
}

impl RampProfile {
    /// Builds a profile; the duration must be positive and finite.
    pub fn new(kind: RampKind, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("duration must be positive and finite, got {tau}"),
            });
        }
        Ok(Self { kind, tau })
    }

    /// Ramp shape.
    pub fn kind(&self) -> RampKind {
        self.kind
    }

    /// Nominal gate duration.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Progress lambda(t). Analytic in t, so t > tau extrapolates smoothly;
    /// negative times are rejected.
    pub fn lambda(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime { t });
        }
        let s = t / self.tau;
        Ok(match self.kind {
            RampKind::Linear => s,
            RampKind::Polynomial => s * s * s * (10.0 + s * (-15.0 + 6.0 * s)),
            RampKind::Sinusoidal => (std::f64::consts::FRAC_PI_2 * s).sin(),
        })
    }

    /// Ramp speed d lambda / dt, analytic like [`Self::lambda`].
    pub fn lambda_dot(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime { t });
        }
        let s = t / self.tau;
        Ok(match self.kind {
            RampKind::Linear => 1.0 / self.tau,
            RampKind::Polynomial => {
                let u = s * (1.0 - s);
                30.0 * u * u / self.tau
            }
            RampKind::Sinusoidal => {
                std::f64::consts::FRAC_PI_2 / self.tau
                    * (std::f64::consts::FRAC_PI_2 * s).cos()
            }
        })
    }
}

/// Direction of a clock miscalibration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimingSign {
    /// The pulse runs long: effective duration tau (1 + epsilon).
    Overshoot,
    /// The pulse is cut short: effective duration tau (1 - epsilon).
    Undershoot,
}

impl TimingSign {
    /// +1 for overshoot, -1 for undershoot.
    pub fn factor(&self) -> f64 {
        match self {
            TimingSign::Overshoot => 1.0,
            TimingSign::Undershoot => -1.0,
        }
    }
}

/// Relative timing error with magnitude at most 0.5.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingError {
    epsilon: f64,
    sign: TimingSign,
}

impl TimingError {
    /// Builds a timing error; epsilon must lie in [0, 0.5].
    pub fn new(epsilon: f64, sign: TimingSign) -> Result<Self> {
        if !(0.0..=MAX_TIMING_EPSILON).contains(&epsilon) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!(
                    "timing error must lie in [0, {MAX_TIMING_EPSILON}], got {epsilon}"
                ),
            });
        }
        Ok(Self { epsilon, sign })
    }

    /// Error magnitude.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Error direction.
    pub fn sign(&self) -> TimingSign {
        self.sign
    }

    /// Signed magnitude: positive for overshoot, negative for undershoot.
    pub fn signed(&self) -> f64 {
        self.sign.factor() * self.epsilon
    }

    /// The duration actually executed: tau (1 + signed epsilon).
    pub fn effective_duration(&self, tau: f64) -> f64 {
        tau * (1.0 + self.signed())
    }
}
