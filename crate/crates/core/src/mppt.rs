//! Perturb-and-observe hill climbing on the load-current reference.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpptConfig {
    /// Time between perturbations, s.
    pub period: f64,
    /// Current increment per perturbation, A.
    pub step: f64,
    pub min_current: f64,
    pub max_current: f64,
    pub initial_current: f64,
}

impl Default for MpptConfig {
    fn default() -> Self {
        Self::mppt1()
    }
}

impl MpptConfig {
    /// Fast-tracking variant (0.1 s, 0.02 A).
    pub fn mppt1() -> Self {
        Self {
            period: 0.1,
            step: 0.02,
            min_current: 0.0,
            max_current: 10.0,
            initial_current: 0.5,
        }
    }

    /// Low-ripple variant (0.1 s, 0.01 A).
    pub fn mppt2() -> Self {
        Self {
            step: 0.01,
            ..Self::mppt1()
        }
    }

    pub fn validate(&self, plant_dt: f64) -> Result<()> {
        ensure_arg!(self.step > 0.0, "MPPT step must be positive");
        ensure_arg!(
            self.period >= plant_dt,
            "MPPT period {} shorter than plant step {plant_dt}",
            self.period
        );
        ensure_arg!(self.min_current <= self.max_current, "MPPT current bounds out of order");
        ensure_arg!(
            (self.min_current..=self.max_current).contains(&self.initial_current),
            "initial MPPT current outside bounds"
        );
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpptState {
    pub last_power: f64,
    pub direction: f64,
    pub current: f64,
    pub last_update: f64,
}

impl MpptState {
    pub fn new(config: &MpptConfig) -> Self {
        Self {
            last_power: 0.0,
            direction: 1.0,
            current: config.initial_current,
            last_update: 0.0,
        }
    }
}

/// Advances the controller to time `t` with measured power `power`.
///
/// Nothing changes until a full period has elapsed since the last update.
/// Then the direction is kept if power did not drop and flipped otherwise,
/// and the reference moves one step in that direction.
pub fn mppt_update(config: &MpptConfig, state: &MpptState, power: f64, t: f64) -> (MpptState, f64) {
    // Tolerate float drift in accumulated step times.
    if t - state.last_update < config.period * (1.0 - 1e-9) {
        return (*state, state.current);
    }
    let direction = if power >= state.last_power {
        state.direction
    } else {
        -state.direction
    };
    let current = (state.current + direction * config.step).clamp(config.min_current, config.max_current);
    let next = MpptState {
        last_power: power,
        direction,
        current,
        last_update: t,
    };
    (next, current)
}
