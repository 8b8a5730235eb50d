//! Pseudo-marginal Metropolis-Hastings policy search.
//!
//! Each iteration proposes `θ† = θ + Σ^{1/2}ξ`, scores it with a closed-loop
//! rollout, and accepts with probability `min(1, ϱ)`, where
//! `log ϱ = [log μ(θ†) + log Ĵ(θ†)] − [log μ(θ) + log Ĵ(θ)]`. The Gaussian
//! random-walk proposal is symmetric, so its density ratio cancels.
//!
//! `Ĵ = exp(Σ_t r_t)` with `r_t = −Q·(P*_t − P_t)²` is far below the
//! smallest positive double for any real episode, so the chain only ever
//! stores and compares `log Ĵ`. The estimate of the current state is kept
//! between iterations, never recomputed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};
use crate::plant::PlantParams;
use crate::policy::{PolicyParams, RbfnnConfig, THETA_LEN};
use crate::sim::{run_episode, Episode, EpisodeOptions, RbfnnController};
use crate::wind::{WindProfile, WindSeries};

pub type ChainRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    /// State weight Q in `r = −Q·s²`.
    pub q: f64,
    pub gamma: f64,
    /// Episode length, s.
    pub episode_length: f64,
    /// Plant step, s.
    pub dt: f64,
    /// Diagonal of the proposal covariance.
    pub proposal_var: Vec<f64>,
    pub prior_mean: Vec<f64>,
    pub prior_var: Vec<f64>,
    pub max_iterations: usize,
    /// θ_final is the mean of the last `window` chain states.
    pub window: usize,
    /// Rollouts averaged (log-mean-exp) per estimate on stochastic winds.
    pub rollouts: usize,
    /// Multiplies every reward; 1 keeps Q as given.
    pub reward_scale: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            q: 1e5,
            gamma: 1.0,
            episode_length: 150.0,
            dt: 1e-3,
            proposal_var: vec![1.0; THETA_LEN],
            prior_mean: vec![0.0; THETA_LEN],
            prior_var: vec![1e4; THETA_LEN],
            max_iterations: 200,
            window: 50,
            rollouts: 1,
            reward_scale: 1.0,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.q > 0.0, "Q must be positive");
        ensure_arg!(self.gamma > 0.0 && self.gamma <= 1.0, "gamma must lie in (0, 1]");
        ensure_arg!(
            self.episode_length > 0.0 && self.dt > 0.0,
            "episode length and dt must be positive"
        );
        ensure_arg!(self.window <= self.max_iterations, "window exceeds max iterations");
        ensure_arg!(self.rollouts >= 1, "need at least one rollout per estimate");
        ensure_arg!(self.reward_scale > 0.0, "reward scale must be positive");
        ensure_arg!(
            self.proposal_var.iter().all(|v| *v >= 0.0 && v.is_finite()),
            "proposal variances must be non-negative"
        );
        ensure_arg!(
            self.prior_var.iter().all(|v| *v > 0.0 && v.is_finite()),
            "prior variances must be positive"
        );
        ensure_arg!(
            self.prior_mean.len() == self.prior_var.len() && self.proposal_var.len() == self.prior_var.len(),
            "prior and proposal dimensions differ"
        );
        Ok(())
    }
}

/// `r = −Q·s²`.
pub fn reward(s: f64, q: f64) -> f64 {
    -s * s * q
}

/// Log density of independent Gaussians, without the normalizing constant.
pub fn log_prior(theta: &[f64], mean: &[f64], var: &[f64]) -> Result<f64> {
    ensure_arg!(
        theta.len() == mean.len() && theta.len() == var.len(),
        "parameter length {} does not match prior dimension {}",
        theta.len(),
        mean.len()
    );
    Ok(theta
        .iter()
        .zip(mean)
        .zip(var)
        .map(|((t, m), v)| -(t - m) * (t - m) / (2.0 * v))
        .sum())
}

/// Gaussian random-walk proposal with diagonal covariance.
pub fn propose(theta: &[f64], proposal_var: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    theta
        .iter()
        .zip(proposal_var)
        .map(|(t, v)| {
            let z: f64 = rng.sample(StandardNormal);
            t + v.sqrt() * z
        })
        .collect()
}

/// Metropolis-Hastings decision in the log domain.
///
/// `log_num` and `log_den` are `log μ + log Ĵ` of the proposal and the
/// current state. A proposal at `−∞` (or NaN) is never accepted; a finite
/// proposal always replaces a current state at `−∞`.
pub fn accept(log_num: f64, log_den: f64, rng: &mut impl Rng) -> bool {
    let u: f64 = rng.random();
    if log_num.is_nan() || log_num == f64::NEG_INFINITY {
        return false;
    }
    if log_den == f64::NEG_INFINITY {
        return true;
    }
    u.ln() < log_num - log_den
}

/// Unnormalized posterior: a prior and a nonnegative estimator of the
/// likelihood-like factor, both in log form.
pub trait Target {
    fn log_prior(&self, theta: &[f64]) -> f64;
    /// `log Ĵ(θ)`; may consume randomness and may return `−∞`.
    fn log_estimate(&mut self, theta: &[f64], rng: &mut ChainRng) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub accepted: bool,
    pub log_j: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub log_j: f64,
    pub log_prior: f64,
    pub iteration: usize,
    pub accepted: usize,
    pub trace: Vec<TraceRow>,
    pub rng: ChainRng,
}

impl ChainState {
    /// Scores `theta0` to obtain the initial estimate.
    pub fn start<T: Target + ?Sized>(target: &mut T, theta0: Vec<f64>, seed: u64) -> Self {
        let mut rng = ChainRng::seed_from_u64(seed);
        let log_prior = target.log_prior(&theta0);
        let log_j = target.log_estimate(&theta0, &mut rng);
        Self {
            theta: theta0,
            log_j,
            log_prior,
            iteration: 0,
            accepted: 0,
            trace: Vec::new(),
            rng,
        }
    }

    /// One propose/score/accept iteration.
    pub fn step<T: Target + ?Sized>(&mut self, target: &mut T, proposal_var: &[f64]) {
        let candidate = propose(&self.theta, proposal_var, &mut self.rng);
        let cand_prior = target.log_prior(&candidate);
        let cand_j = target.log_estimate(&candidate, &mut self.rng);
        let ok = accept(cand_prior + cand_j, self.log_prior + self.log_j, &mut self.rng);
        if ok {
            self.theta = candidate;
            self.log_j = cand_j;
            self.log_prior = cand_prior;
            self.accepted += 1;
        }
        self.iteration += 1;
        self.trace.push(TraceRow {
            iteration: self.iteration,
            accepted: ok,
            log_j: self.log_j,
            theta: self.theta.clone(),
        });
    }

    pub fn run<T: Target + ?Sized>(&mut self, target: &mut T, proposal_var: &[f64], iterations: usize) {
        for _ in 0..iterations {
            self.step(target, proposal_var);
        }
    }

    /// Componentwise mean of the last `window` states, or the current θ when
    /// the chain has not moved yet.
    pub fn window_mean(&self, window: usize) -> Vec<f64> {
        let n = window.min(self.trace.len());
        if n == 0 {
            return self.theta.clone();
        }
        let rows = &self.trace[self.trace.len() - n..];
        let mut mean = vec![0.0; self.theta.len()];
        for row in rows {
            for (m, t) in mean.iter_mut().zip(&row.theta) {
                *m += t;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        mean
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.iteration == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iteration as f64
        }
    }
}

/// Environment a policy is trained and scored in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub wind: WindProfile,
    pub initial_omega: f64,
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub log_j: f64,
    pub episode: Option<Episode>,
}

/// Simulates one episode and returns its return `Σ γ^{t−1} r_t` as `log Ĵ`.
/// A numeric failure in the plant yields `log Ĵ = −∞`.
pub fn rollout(
    theta: &PolicyParams,
    wind: &WindSeries,
    rl: &RlConfig,
    plant: &PlantParams,
    rbf: &RbfnnConfig,
    initial_omega: f64,
    record: bool,
) -> Result<Rollout> {
    let eval = rbf.evaluator(theta)?;
    let mut controller = RbfnnController::new(eval);
    let options = EpisodeOptions {
        initial_omega,
        record,
        discount: rl.gamma,
    };
    match run_episode(plant, wind, &mut controller, &options) {
        Ok(ep) => {
            let log_j = -rl.q * rl.reward_scale * ep.discounted_sq_error;
            Ok(Rollout {
                log_j: if log_j.is_nan() { f64::NEG_INFINITY } else { log_j },
                episode: Some(ep),
            })
        }
        Err(Error::Numeric(_)) => Ok(Rollout {
            log_j: f64::NEG_INFINITY,
            episode: None,
        }),
        Err(e) => Err(e),
    }
}

/// `log((1/k)·Σ exp(x_i))` without overflow.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + (s / xs.len() as f64).ln()
}

/// Posterior over RBFNN parameters for one scenario.
pub struct PolicySearch<'a> {
    pub plant: &'a PlantParams,
    pub rbf: &'a RbfnnConfig,
    pub rl: &'a RlConfig,
    pub scenario: &'a Scenario,
    fixed_wind: Option<WindSeries>,
}

impl<'a> PolicySearch<'a> {
    pub fn new(plant: &'a PlantParams, rbf: &'a RbfnnConfig, rl: &'a RlConfig, scenario: &'a Scenario) -> Result<Self> {
        plant.validate()?;
        rbf.validate()?;
        rl.validate()?;
        ensure_arg!(
            rl.prior_mean.len() == rbf.theta_len(),
            "prior dimension {} does not match controller parameter count {}",
            rl.prior_mean.len(),
            rbf.theta_len()
        );
        let fixed_wind = match &scenario.wind {
            WindProfile::Stochastic(_) => None,
            w => Some(w.realize(rl.episode_length, rl.dt)?),
        };
        Ok(Self {
            plant,
            rbf,
            rl,
            scenario,
            fixed_wind,
        })
    }

    fn score(&self, theta: &PolicyParams, wind: &WindSeries) -> f64 {
        match rollout(
            theta,
            wind,
            self.rl,
            self.plant,
            self.rbf,
            self.scenario.initial_omega,
            false,
        ) {
            Ok(r) => r.log_j,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

impl Target for PolicySearch<'_> {
    fn log_prior(&self, theta: &[f64]) -> f64 {
        log_prior(theta, &self.rl.prior_mean, &self.rl.prior_var).unwrap_or(f64::NEG_INFINITY)
    }

    fn log_estimate(&mut self, theta: &[f64], rng: &mut ChainRng) -> f64 {
        let Ok(params) = PolicyParams::unpack_with_nodes(theta, self.rbf.nodes()) else {
            return f64::NEG_INFINITY;
        };
        match (&self.fixed_wind, &self.scenario.wind) {
            (Some(wind), _) => self.score(&params, wind),
            (None, WindProfile::Stochastic(base)) => {
                let logs: Vec<f64> = (0..self.rl.rollouts)
                    .map(|_| {
                        let profile = WindProfile::Stochastic(crate::wind::StochasticWind {
                            seed: rng.next_u64(),
                            ..base.clone()
                        });
                        match profile.realize(self.rl.episode_length, self.rl.dt) {
                            Ok(w) => self.score(&params, &w),
                            Err(_) => f64::NEG_INFINITY,
                        }
                    })
                    .collect();
                log_mean_exp(&logs)
            }
            (None, _) => unreachable!("deterministic winds are realized up front"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub chain: ChainState,
    pub theta_final: PolicyParams,
}

/// Runs `rl.max_iterations` MH steps from `theta0` and averages the final window.
pub fn run_chain(
    rl: &RlConfig,
    plant: &PlantParams,
    rbf: &RbfnnConfig,
    scenario: &Scenario,
    theta0: &PolicyParams,
    seed: u64,
) -> Result<ChainOutcome> {
    let mut target = PolicySearch::new(plant, rbf, rl, scenario)?;
    ensure_arg!(
        theta0.to_vec().len() == rbf.theta_len(),
        "initial parameters have the wrong length"
    );
    let mut chain = ChainState::start(&mut target, theta0.to_vec(), seed);
    chain.run(&mut target, &rl.proposal_var, rl.max_iterations);
    let theta_final = PolicyParams::unpack_with_nodes(&chain.window_mean(rl.window), rbf.nodes())?;
    Ok(ChainOutcome { chain, theta_final })
}
