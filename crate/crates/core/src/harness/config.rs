//! TOML experiment configuration. One file fully determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mppt::MpptConfig;
use crate::plant::{rectifier_gain, CpCurve, PlantParams, CP_COEFFS};
use crate::policy::{PolicyParams, RbfnnConfig, DEFAULT_BIAS, INPUT_RANGES, N_INPUTS};
use crate::rl_mcmc::RlConfig;
use crate::wind::{StochasticWind, WindProfile};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "VAWT_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "vawt-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Stage1,
    Stage2,
    CompareStep,
    CompareReal,
    Stats,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Stage1 => "stage1",
            ScenarioKind::Stage2 => "stage2",
            ScenarioKind::CompareStep => "compare_step",
            ScenarioKind::CompareReal => "compare_real",
            ScenarioKind::Stats => "stats",
        }
    }

    /// Wind used when the config has no `[wind]` section.
    pub fn default_wind(self) -> WindProfile {
        match self {
            ScenarioKind::Stage1 => WindProfile::step(8.0),
            ScenarioKind::Stage2 => WindProfile::sine(10.0, 2.0, 0.2),
            ScenarioKind::CompareStep => WindProfile::step(10.0),
            ScenarioKind::CompareReal | ScenarioKind::Stats => WindProfile::Stochastic(StochasticWind::default()),
        }
    }

    fn needs_seed(self) -> bool {
        matches!(
            self,
            ScenarioKind::Stage1 | ScenarioKind::Stage2 | ScenarioKind::CompareReal | ScenarioKind::Stats
        )
    }
}

/// Plant constants as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub inertia: f64,
    pub rotor_radius: f64,
    pub blade_length: f64,
    pub friction: f64,
    pub air_density: f64,
    pub cp_coeffs: [f64; 6],
    pub cp_search_hi: f64,
    pub pole_pairs: u32,
    pub flux: f64,
    pub inductance: f64,
    pub resistance: f64,
    /// Derived from flux and pole pairs when absent.
    pub torque_constant: Option<f64>,
    pub max_current: f64,
    pub min_speed: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = PlantParams::default();
        Self {
            inertia: p.inertia,
            rotor_radius: p.rotor_radius,
            blade_length: p.blade_length,
            friction: p.friction,
            air_density: p.air_density,
            cp_coeffs: CP_COEFFS,
            cp_search_hi: p.cp_curve.search_hi(),
            pole_pairs: p.pole_pairs,
            flux: p.flux,
            inductance: p.inductance,
            resistance: p.resistance,
            torque_constant: None,
            max_current: p.max_current,
            min_speed: p.min_speed,
        }
    }
}

impl PlantSection {
    pub fn build(&self) -> Result<PlantParams> {
        let params = PlantParams {
            inertia: self.inertia,
            rotor_radius: self.rotor_radius,
            blade_length: self.blade_length,
            friction: self.friction,
            air_density: self.air_density,
            cp_curve: CpCurve::new(self.cp_coeffs, self.cp_search_hi)?,
            pole_pairs: self.pole_pairs,
            flux: self.flux,
            inductance: self.inductance,
            resistance: self.resistance,
            torque_constant: self
                .torque_constant
                .unwrap_or_else(|| rectifier_gain() * self.flux * self.pole_pairs as f64),
            max_current: self.max_current,
            min_speed: self.min_speed,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSection {
    pub nodes: usize,
    pub bias: f64,
    pub output_max: f64,
    pub input_ranges: [(f64, f64); N_INPUTS],
}

impl Default for RbfSection {
    fn default() -> Self {
        Self {
            nodes: crate::policy::N_NODES,
            bias: DEFAULT_BIAS,
            output_max: 10.0,
            input_ranges: INPUT_RANGES,
        }
    }
}

impl RbfSection {
    pub fn build(&self) -> Result<RbfnnConfig> {
        RbfnnConfig::grid(self.nodes, &self.input_ranges, self.bias, self.output_max)
    }
}

/// Where a parameter vector comes from: a shipped fixture (`s0`, `s1`, `s2`)
/// or a JSON file holding a flat array, relative to the working directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum PolicySource {
    Initial,
    PublishedStage1,
    PublishedStage2,
    File(PathBuf),
}

impl From<String> for PolicySource {
    fn from(s: String) -> Self {
        match s.as_str() {
            "s0" => PolicySource::Initial,
            "s1" => PolicySource::PublishedStage1,
            "s2" => PolicySource::PublishedStage2,
            _ => PolicySource::File(PathBuf::from(s)),
        }
    }
}

impl From<PolicySource> for String {
    fn from(p: PolicySource) -> Self {
        match p {
            PolicySource::Initial => "s0".into(),
            PolicySource::PublishedStage1 => "s1".into(),
            PolicySource::PublishedStage2 => "s2".into(),
            PolicySource::File(path) => path.to_string_lossy().into_owned(),
        }
    }
}

impl PolicySource {
    pub fn load(&self) -> Result<PolicyParams> {
        match self {
            PolicySource::Initial => Ok(PolicyParams::initial()),
            PolicySource::PublishedStage1 => Ok(PolicyParams::published_stage1()),
            PolicySource::PublishedStage2 => Ok(PolicyParams::published_stage2()),
            PolicySource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let theta: PolicyParams =
                    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                if !theta.is_finite() {
                    return Err(Error::Parse(format!("{}: non-finite parameters", path.display())));
                }
                Ok(theta)
            }
        }
    }
}

/// Unset sources fall back to the stage defaults: `s0` for stage 1, and the
/// previous stage's output in the output directory otherwise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    /// Chain start for training scenarios.
    pub init: Option<PolicySource>,
    /// Parameters of the RBFNN controller in comparisons.
    pub controller: Option<PolicySource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub duration: f64,
    pub dt: f64,
    pub include_mppt2: bool,
    /// Write every `csv_stride`-th step to episode CSVs.
    pub csv_stride: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            duration: 150.0,
            dt: 1e-3,
            include_mppt2: true,
            csv_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub seeds: usize,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self { seeds: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Excluded from the config hash.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Adds wall-clock time to summaries, which breaks byte-identical reruns.
    #[serde(default)]
    pub record_wall_clock: bool,
    /// Rotor speed at the start of every episode, rad/s.
    #[serde(default)]
    pub initial_omega: f64,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub rl: RlConfig,
    #[serde(default)]
    pub rbf: RbfSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default = "MpptConfig::mppt1")]
    pub mppt1: MpptConfig,
    #[serde(default = "MpptConfig::mppt2")]
    pub mppt2: MpptConfig,
    #[serde(default)]
    pub wind: Option<WindProfile>,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub stats: StatsSection,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioKind, seed: Option<u64>) -> Self {
        Self {
            scenario,
            seed,
            out_dir: None,
            record_wall_clock: false,
            initial_omega: 0.0,
            plant: PlantSection::default(),
            rl: RlConfig::default(),
            rbf: RbfSection::default(),
            policy: PolicySection::default(),
            mppt1: MpptConfig::mppt1(),
            mppt2: MpptConfig::mppt2(),
            wind: None,
            compare: CompareSection::default(),
            stats: StatsSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| Error::Config(e.to_string());
        if self.scenario.needs_seed() && self.seed.is_none() {
            return Err(Error::Config(format!(
                "scenario {} requires a seed",
                self.scenario.name()
            )));
        }
        self.plant.build().map_err(config)?;
        self.rbf.build().map_err(config)?;
        self.rl.validate().map_err(config)?;
        self.mppt1.validate(self.compare.dt).map_err(config)?;
        self.mppt2.validate(self.compare.dt).map_err(config)?;
        self.wind().validate().map_err(config)?;
        if !(self.initial_omega >= 0.0 && self.initial_omega.is_finite()) {
            return Err(Error::Config("initial_omega must be non-negative".into()));
        }
        if self.compare.duration <= 0.0 || self.compare.dt <= 0.0 || self.compare.csv_stride == 0 {
            return Err(Error::Config(
                "compare duration, dt and csv_stride must be positive".into(),
            ));
        }
        if self.scenario == ScenarioKind::Stats {
            if self.stats.seeds < 2 {
                return Err(Error::Config("stats needs at least two seeds".into()));
            }
            if !matches!(self.wind(), WindProfile::Stochastic(_)) {
                return Err(Error::Config("stats requires a stochastic wind".into()));
            }
        }
        Ok(())
    }

    pub fn wind(&self) -> WindProfile {
        self.wind.clone().unwrap_or_else(|| self.scenario.default_wind())
    }

    /// Seeded copy of a stochastic wind; other profiles are returned as is.
    pub fn wind_for_seed(&self, seed: u64) -> WindProfile {
        match self.wind() {
            WindProfile::Stochastic(s) => WindProfile::Stochastic(StochasticWind { seed, ..s }),
            other => other,
        }
    }

    /// Hex SHA-256 of the canonical JSON form of everything but the output
    /// location.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `explicit`, then the config's `out_dir`, then `$VAWT_OUT_DIR`, then
    /// `./vawt-out`.
    pub fn resolve_out_dir(&self, explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| self.out_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
    }
}
