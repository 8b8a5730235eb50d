//! Simulation, control and policy search for a small vertical-axis wind
//! turbine with a PMSG and rectified resistive load.

pub mod error;
pub mod harness;
pub mod mppt;
pub mod plant;
pub mod policy;
pub mod rl_mcmc;
pub mod sim;
pub mod wind;

pub use error::{Error, Result};
pub use mppt::{MpptConfig, MpptState};
pub use plant::{PlantParams, PlantState};
pub use policy::{PolicyInput, PolicyParams, RbfnnConfig};
pub use rl_mcmc::RlConfig;
pub use sim::{run_episode, Episode, EpisodeOptions};
pub use wind::{StochasticWind, WindProfile, WindSeries};
