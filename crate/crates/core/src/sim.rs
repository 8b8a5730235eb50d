//! Closed-loop episodes: a controller driving the plant through a wind series.

use crate::error::{ensure_arg, Result};
use crate::mppt::{mppt_update, MpptConfig, MpptState};
use crate::plant::{self, PlantParams, PlantState};
use crate::policy::{rotor_accel, PolicyEval, PolicyInput};
use crate::wind::WindSeries;

/// What a controller sees at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub input: PolicyInput,
    /// Electrical power delivered during the previous step, W.
    pub power: f64,
}

/// Produces the commanded load current for each step.
pub trait Controller {
    fn command(&mut self, obs: &Observation) -> f64;
}

pub struct RbfnnController<'a> {
    eval: PolicyEval<'a>,
}

impl<'a> RbfnnController<'a> {
    pub fn new(eval: PolicyEval<'a>) -> Self {
        Self { eval }
    }
}

impl Controller for RbfnnController<'_> {
    fn command(&mut self, obs: &Observation) -> f64 {
        self.eval.output(&obs.input)
    }
}

pub struct MpptController {
    config: MpptConfig,
    state: MpptState,
}

impl MpptController {
    pub fn new(config: MpptConfig) -> Self {
        let state = MpptState::new(&config);
        Self { config, state }
    }

    pub fn state(&self) -> &MpptState {
        &self.state
    }
}

impl Controller for MpptController {
    fn command(&mut self, obs: &Observation) -> f64 {
        let (state, current) = mppt_update(&self.config, &self.state, obs.power, obs.t);
        self.state = state;
        current
    }
}

/// Fixed load current, used for plant checks.
pub struct ConstantCurrent(pub f64);

impl Controller for ConstantCurrent {
    fn command(&mut self, _obs: &Observation) -> f64 {
        self.0
    }
}

/// One row of the per-step record. Plant quantities are post-step; wind and
/// nominal quantities are those applied during the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub wind_speed: f64,
    pub omega: f64,
    pub omega_opt: f64,
    pub voltage: f64,
    pub current: f64,
    pub resistance: Option<f64>,
    pub power: f64,
    pub nominal_power: f64,
}

/// Work done on the rotor over an episode, J. Each torque is paired with the
/// speed at which it was evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MechanicalLedger {
    pub wind_work: f64,
    pub friction_work: f64,
    pub generator_work: f64,
    pub kinetic_start: f64,
    pub kinetic_end: f64,
}

impl MechanicalLedger {
    pub fn kinetic_change(&self) -> f64 {
        self.kinetic_end - self.kinetic_start
    }

    /// `∫T_w ω − ΔKE − ∫T_fr ω − ∫T_g ω`.
    pub fn residual(&self) -> f64 {
        self.wind_work - self.kinetic_change() - self.friction_work - self.generator_work
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub dt: f64,
    pub records: Vec<StepRecord>,
}

/// Energy delivered versus the Cp_max reference.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub e_out: f64,
    pub e_ref: f64,
    pub error: f64,
    pub power: Vec<f64>,
    pub nominal: Vec<f64>,
}

impl EnergyLedger {
    pub fn efficiency(&self) -> f64 {
        if self.e_ref > 0.0 {
            self.e_out / self.e_ref
        } else {
            0.0
        }
    }

    /// Running E_out and E* after each step.
    pub fn cumulative(&self, dt: f64) -> (Vec<f64>, Vec<f64>) {
        let mut out = Vec::with_capacity(self.power.len());
        let mut reference = Vec::with_capacity(self.power.len());
        let (mut a, mut b) = (0.0, 0.0);
        for (p, ps) in self.power.iter().zip(&self.nominal) {
            a += p * dt;
            b += ps * dt;
            out.push(a);
            reference.push(b);
        }
        (out, reference)
    }
}

pub fn energy_ledger(log: &EpisodeLog) -> Result<EnergyLedger> {
    ensure_arg!(!log.records.is_empty(), "episode log is empty");
    let power: Vec<f64> = log.records.iter().map(|r| r.power).collect();
    let nominal: Vec<f64> = log.records.iter().map(|r| r.nominal_power).collect();
    let e_out = power.iter().sum::<f64>() * log.dt;
    let e_ref = nominal.iter().sum::<f64>() * log.dt;
    Ok(EnergyLedger {
        e_out,
        e_ref,
        error: e_ref - e_out,
        power,
        nominal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    pub initial_omega: f64,
    /// Keep every [`StepRecord`].
    pub record: bool,
    /// Weight applied to step `k`'s squared tracking error is `discount^k`.
    pub discount: f64,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            initial_omega: 0.0,
            record: true,
            discount: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub log: Option<EpisodeLog>,
    pub final_state: PlantState,
    pub e_out: f64,
    pub e_ref: f64,
    /// `Σ_k discount^k (P*_k − P_k)²`, W².
    pub discounted_sq_error: f64,
    pub mechanical: MechanicalLedger,
    /// Time when `|ω − ω*| ≤ 5%·ω*` first held, s.
    pub first_near_optimal: Option<f64>,
}

impl Episode {
    pub fn energy_error(&self) -> f64 {
        self.e_ref - self.e_out
    }

    pub fn efficiency(&self) -> f64 {
        if self.e_ref > 0.0 {
            self.e_out / self.e_ref
        } else {
            0.0
        }
    }
}

const NEAR_OPTIMAL_BAND: f64 = 0.05;

/// Simulates `wind.len()` plant steps of length `wind.dt`.
pub fn run_episode(
    params: &PlantParams,
    wind: &WindSeries,
    controller: &mut dyn Controller,
    options: &EpisodeOptions,
) -> Result<Episode> {
    ensure_arg!(!wind.is_empty(), "wind series is empty");
    ensure_arg!(
        options.discount > 0.0 && options.discount <= 1.0,
        "discount must lie in (0, 1]"
    );
    let dt = wind.dt;
    let mut state = PlantState::at_rest_load(params, options.initial_omega)?;
    let mut prev_omega = state.omega;
    let mut records = options.record.then(|| Vec::with_capacity(wind.len()));
    let mut mech = MechanicalLedger {
        kinetic_start: 0.5 * params.inertia * state.omega * state.omega,
        ..Default::default()
    };
    let (mut e_out, mut e_ref, mut sq_err) = (0.0, 0.0, 0.0);
    let mut weight = 1.0;
    let mut first_near = None;

    for k in 0..wind.len() {
        let u = wind.speed[k];
        let obs = Observation {
            t: state.t,
            input: PolicyInput {
                wind_speed: u,
                wind_accel: wind.accel[k],
                current: state.current,
                voltage: state.voltage,
                omega: state.omega,
                omega_accel: if k == 0 {
                    0.0
                } else {
                    rotor_accel(state.omega, prev_omega, dt)
                },
            },
            power: state.power,
        };
        let cmd = controller.command(&obs);
        let omega_before = state.omega;
        let (next, torques) = plant::step_with_torques(params, &state, cmd, u, dt)?;
        mech.wind_work += torques.wind * omega_before * dt;
        mech.friction_work += torques.friction * omega_before * dt;
        mech.generator_work += torques.generator * omega_before * dt;

        let nominal = plant::nominal_power(params, u)?;
        let omega_opt = plant::optimal_rotor_speed(params, u)?;
        let err = nominal - next.power;
        e_out += next.power * dt;
        e_ref += nominal * dt;
        sq_err += weight * err * err;
        weight *= options.discount;
        if first_near.is_none() && (next.omega - omega_opt).abs() <= NEAR_OPTIMAL_BAND * omega_opt {
            first_near = Some(next.t);
        }
        if let Some(r) = records.as_mut() {
            r.push(StepRecord {
                t: next.t,
                wind_speed: u,
                omega: next.omega,
                omega_opt,
                voltage: next.voltage,
                current: next.current,
                resistance: next.load_resistance(),
                power: next.power,
                nominal_power: nominal,
            });
        }
        prev_omega = omega_before;
        state = next;
    }
    mech.kinetic_end = 0.5 * params.inertia * state.omega * state.omega;

    Ok(Episode {
        log: records.map(|records| EpisodeLog { dt, records }),
        final_state: state,
        e_out,
        e_ref,
        discounted_sq_error: sq_err,
        mechanical: mech,
        first_near_optimal: first_near,
    })
}
