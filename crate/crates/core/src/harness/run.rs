//! Scenario runners. Each writes its artifacts under the output directory and
//! returns the summary it wrote.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicySource, ScenarioKind};
use super::io::{fmt_f64, write_episode_csv, write_json, write_table, write_trace_csv};
use crate::error::{Error, Result};
use crate::mppt::MpptConfig;
use crate::plant::PlantParams;
use crate::policy::{PolicyParams, RbfnnConfig};
use crate::rl_mcmc::{rollout, run_chain, RlConfig, Scenario, TraceRow};
use crate::sim::{run_episode, Controller, Episode, EpisodeLog, EpisodeOptions, MpptController, RbfnnController};
use crate::wind::{WindProfile, WindSeries};

/// Efficiencies above this are reported with `efficiency_flag` set.
pub const EFFICIENCY_FLAG_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub controller: String,
    pub e_out: f64,
    pub e_ref: f64,
    pub energy_error: f64,
    pub efficiency: f64,
    /// Efficiency above 1, possible only through kinetic-energy release.
    pub efficiency_flag: bool,
    /// First time the rotor came within 5% of the optimal speed, s.
    pub first_near_optimal: Option<f64>,
}

impl ControllerSummary {
    pub fn from_episode(controller: &str, ep: &Episode) -> Self {
        let efficiency = ep.efficiency();
        Self {
            controller: controller.to_string(),
            e_out: ep.e_out,
            e_ref: ep.e_ref,
            energy_error: ep.energy_error(),
            efficiency,
            efficiency_flag: efficiency > EFFICIENCY_FLAG_THRESHOLD,
            first_near_optimal: ep.first_near_optimal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub controllers: Vec<ControllerSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

impl RunSummary {
    pub fn controller(&self, name: &str) -> Option<&ControllerSummary> {
        self.controllers.iter().find(|c| c.controller == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub iterations: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// Median logJ over the first and the last `window` iterations.
    pub median_log_j_first: f64,
    pub median_log_j_last: f64,
    pub theta_initial: PolicyParams,
    pub theta_final: PolicyParams,
    /// Scored on the training wind.
    pub initial: ControllerSummary,
    #[serde(rename = "final")]
    pub final_: ControllerSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerStats {
    pub controller: String,
    pub n: usize,
    pub mean_energy_error: f64,
    /// Sample standard deviation (n − 1).
    pub sd_energy_error: f64,
    pub mean_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub stats: Vec<ControllerStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

impl StatsReport {
    pub fn controller(&self, name: &str) -> Option<&ControllerStats> {
        self.stats.iter().find(|c| c.controller == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Train(Box<TrainSummary>),
    Compare(RunSummary),
    Stats(StatsReport),
}

/// Resolved inputs shared by all scenarios.
pub struct Harness {
    pub config: ExperimentConfig,
    pub hash: String,
    pub plant: PlantParams,
    pub rbf: RbfnnConfig,
    pub out_dir: PathBuf,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Pools per-seed summaries into per-controller statistics. Runs must share
/// one config hash and are ordered by seed.
pub fn aggregate(runs: &[RunSummary]) -> Result<StatsReport> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no runs to aggregate".into()))?;
    if let Some(bad) = runs.iter().find(|r| r.config_hash != first.config_hash) {
        return Err(Error::Config(format!(
            "config hash mismatch: {} vs {}",
            first.config_hash, bad.config_hash
        )));
    }
    let mut runs = runs.to_vec();
    runs.sort_by_key(|r| r.seed);
    let names: Vec<String> = first.controllers.iter().map(|c| c.controller.clone()).collect();
    let mut stats = Vec::with_capacity(names.len());
    for name in names {
        let rows: Vec<&ControllerSummary> = runs
            .iter()
            .map(|r| {
                r.controller(&name)
                    .ok_or_else(|| Error::InvalidArgument(format!("run is missing controller {name}")))
            })
            .collect::<Result<_>>()?;
        let errors: Vec<f64> = rows.iter().map(|c| c.energy_error).collect();
        let (mean, sd) = mean_sd(&errors);
        stats.push(ControllerStats {
            controller: name,
            n: rows.len(),
            mean_energy_error: mean,
            sd_energy_error: sd,
            mean_efficiency: rows.iter().map(|c| c.efficiency).sum::<f64>() / rows.len() as f64,
        });
    }
    Ok(StatsReport {
        config_hash: first.config_hash.clone(),
        seeds: runs.iter().filter_map(|r| r.seed).collect(),
        runs,
        stats,
        wall_clock_s: None,
    })
}

impl Harness {
    pub fn new(config: ExperimentConfig, out_dir: PathBuf) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            hash: config.hash(),
            plant: config.plant.build()?,
            rbf: config.rbf.build()?,
            out_dir,
            config,
        })
    }

    pub fn run(&self) -> Result<Outcome> {
        match self.config.scenario {
            ScenarioKind::Stage1 | ScenarioKind::Stage2 => self.run_training().map(|s| Outcome::Train(Box::new(s))),
            ScenarioKind::CompareStep | ScenarioKind::CompareReal => self.run_compare().map(Outcome::Compare),
            ScenarioKind::Stats => self.run_stats().map(Outcome::Stats),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn seed(&self) -> Result<u64> {
        self.config
            .seed
            .ok_or_else(|| Error::Config(format!("scenario {} requires a seed", self.config.scenario.name())))
    }

    fn elapsed(&self, start: Instant) -> Option<f64> {
        self.config.record_wall_clock.then(|| start.elapsed().as_secs_f64())
    }

    fn load_policy(&self, source: Option<&PolicySource>, default_file: &str) -> Result<PolicyParams> {
        let theta = match source {
            Some(s) => s.load()?,
            None => PolicySource::File(self.path(default_file)).load()?,
        };
        if theta.weights.len() != self.rbf.nodes() {
            return Err(Error::Config(format!(
                "policy has {} weights but the controller has {} nodes",
                theta.weights.len(),
                self.rbf.nodes()
            )));
        }
        Ok(theta)
    }

    /// Chain start: `policy.init`, else `s0` for stage 1 and the stage-1
    /// output for stage 2.
    pub fn initial_policy(&self) -> Result<PolicyParams> {
        match (self.config.scenario, &self.config.policy.init) {
            (_, Some(source)) => self.load_policy(Some(source), ""),
            (ScenarioKind::Stage2, None) => self.load_policy(None, "theta_s1.json").map_err(|e| {
                Error::Config(format!(
                    "stage 2 needs stage-1 parameters ({e}); run stage 1 or set policy.init"
                ))
            }),
            _ => Ok(PolicyParams::initial()),
        }
    }

    /// Parameters for the RBFNN controller in comparisons: `policy.controller`,
    /// else the stage-2 output.
    pub fn controller_policy(&self) -> Result<PolicyParams> {
        self.load_policy(self.config.policy.controller.as_ref(), "theta_s2.json")
    }

    fn episode_options(&self) -> EpisodeOptions {
        EpisodeOptions {
            initial_omega: self.config.initial_omega,
            record: true,
            discount: 1.0,
        }
    }

    fn score(&self, theta: &PolicyParams, wind: &WindSeries, rl: &RlConfig) -> Result<Episode> {
        rollout(theta, wind, rl, &self.plant, &self.rbf, self.config.initial_omega, true)?
            .episode
            .ok_or_else(|| Error::Numeric("policy episode diverged".into()))
    }

    pub fn run_training(&self) -> Result<TrainSummary> {
        let start = Instant::now();
        let seed = self.seed()?;
        let rl = &self.config.rl;
        let theta0 = self.initial_policy()?;
        let scenario = Scenario {
            wind: self.config.wind_for_seed(seed),
            initial_omega: self.config.initial_omega,
        };
        let outcome = run_chain(rl, &self.plant, &self.rbf, &scenario, &theta0, seed)?;
        let tag = match self.config.scenario {
            ScenarioKind::Stage2 => "s2",
            _ => "s1",
        };
        let stage = self.config.scenario.name();

        // Score both ends of the chain on one realization of the training wind.
        let wind = scenario.wind.realize(rl.episode_length, rl.dt)?;
        let before = self.score(&theta0, &wind, rl)?;
        let after = self.score(&outcome.theta_final, &wind, rl)?;
        let stride = self.config.compare.csv_stride;
        write_episode_csv(
            &self.path(&format!("{stage}_episode_initial.csv")),
            log(&before)?,
            stride,
            &self.hash,
        )?;
        write_episode_csv(
            &self.path(&format!("{stage}_episode_final.csv")),
            log(&after)?,
            stride,
            &self.hash,
        )?;
        write_trace_csv(
            &self.path(&format!("{stage}_trace.csv")),
            &outcome.chain.trace,
            &self.hash,
        )?;
        write_json(&self.path(&format!("theta_{tag}.json")), &outcome.theta_final)?;

        let window = rl.window.max(1);
        let log_js: Vec<f64> = outcome.chain.trace.iter().map(|r: &TraceRow| r.log_j).collect();
        let head = &log_js[..window.min(log_js.len())];
        let tail = &log_js[log_js.len().saturating_sub(window)..];
        let summary = TrainSummary {
            scenario: stage.to_string(),
            seed,
            config_hash: self.hash.clone(),
            iterations: outcome.chain.iteration,
            accepted: outcome.chain.accepted,
            acceptance_rate: outcome.chain.acceptance_rate(),
            median_log_j_first: median(head),
            median_log_j_last: median(tail),
            theta_initial: theta0,
            theta_final: outcome.theta_final,
            initial: ControllerSummary::from_episode("initial", &before),
            final_: ControllerSummary::from_episode("final", &after),
            wall_clock_s: self.elapsed(start),
        };
        write_json(&self.path(&format!("{stage}_summary.json")), &summary)?;
        Ok(summary)
    }

    /// Runs every controller on `wind`, in the order rbfnn, mppt1, mppt2.
    pub fn compare_on(&self, theta: &PolicyParams, wind: &WindSeries, record: bool) -> Result<Vec<(String, Episode)>> {
        let options = EpisodeOptions {
            record,
            ..self.episode_options()
        };
        let eval = self.rbf.evaluator(theta)?;
        let mut out = vec![(
            "rbfnn".to_string(),
            run_episode(&self.plant, wind, &mut RbfnnController::new(eval), &options)?,
        )];
        let mut mppts: Vec<(&str, &MpptConfig)> = vec![("mppt1", &self.config.mppt1)];
        if self.config.compare.include_mppt2 {
            mppts.push(("mppt2", &self.config.mppt2));
        }
        for (name, cfg) in mppts {
            let mut c = MpptController::new(cfg.clone());
            out.push((name.to_string(), run_episode(&self.plant, wind, &mut c, &options)?));
        }
        Ok(out)
    }

    fn compare_wind(&self, seed: Option<u64>) -> Result<WindSeries> {
        let c = &self.config.compare;
        let profile = match seed {
            Some(s) => self.config.wind_for_seed(s),
            None => self.config.wind(),
        };
        profile.realize(c.duration, c.dt)
    }

    pub fn run_compare(&self) -> Result<RunSummary> {
        let start = Instant::now();
        let theta = self.controller_policy()?;
        let seed = self.config.seed;
        let wind = self.compare_wind(match self.config.scenario {
            ScenarioKind::CompareReal => Some(self.seed()?),
            _ => seed,
        })?;
        let episodes = self.compare_on(&theta, &wind, true)?;
        let stage = self.config.scenario.name();
        for (name, ep) in &episodes {
            write_episode_csv(
                &self.path(&format!("{stage}_{name}.csv")),
                log(ep)?,
                self.config.compare.csv_stride,
                &self.hash,
            )?;
        }
        let summary = RunSummary {
            scenario: stage.to_string(),
            seed,
            config_hash: self.hash.clone(),
            controllers: episodes
                .iter()
                .map(|(n, e)| ControllerSummary::from_episode(n, e))
                .collect(),
            wall_clock_s: self.elapsed(start),
        };
        write_json(&self.path(&format!("{stage}_summary.json")), &summary)?;
        Ok(summary)
    }

    /// Seeds `seed, seed+1, …` evaluated concurrently; results are ordered by
    /// seed regardless of completion order.
    pub fn run_stats(&self) -> Result<StatsReport> {
        let start = Instant::now();
        let theta = self.controller_policy()?;
        let base = self.seed()?;
        let seeds: Vec<u64> = (0..self.config.stats.seeds as u64).map(|i| base + i).collect();
        let runs: Vec<RunSummary> = seeds
            .par_iter()
            .map(|&s| {
                let wind = self.compare_wind(Some(s))?;
                let episodes = self.compare_on(&theta, &wind, false)?;
                Ok(RunSummary {
                    scenario: "stats".into(),
                    seed: Some(s),
                    config_hash: self.hash.clone(),
                    controllers: episodes
                        .iter()
                        .map(|(n, e)| ControllerSummary::from_episode(n, e))
                        .collect(),
                    wall_clock_s: None,
                })
            })
            .collect::<Result<_>>()?;
        let mut report = aggregate(&runs)?;
        report.wall_clock_s = self.elapsed(start);

        let rows: Vec<Vec<String>> = report
            .runs
            .iter()
            .flat_map(|r| {
                r.controllers.iter().map(move |c| {
                    vec![
                        r.seed.map(|s| s.to_string()).unwrap_or_default(),
                        c.controller.clone(),
                        fmt_f64(c.e_out),
                        fmt_f64(c.e_ref),
                        fmt_f64(c.energy_error),
                        fmt_f64(c.efficiency),
                    ]
                })
            })
            .collect();
        write_table(
            &self.path("stats_runs.csv"),
            &["seed", "controller", "E_out", "E_ref", "energy_error", "efficiency"],
            &rows,
            &self.hash,
        )?;
        write_json(&self.path("stats_report.json"), &report)?;
        Ok(report)
    }
}

fn log(ep: &Episode) -> Result<&EpisodeLog> {
    ep.log
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("episode was not recorded".into()))
}

/// Runs one controller on one wind profile.
pub fn simulate(
    plant: &PlantParams,
    controller: &mut dyn Controller,
    wind: &WindProfile,
    duration: f64,
    dt: f64,
    initial_omega: f64,
) -> Result<Episode> {
    let series = wind.realize(duration, dt)?;
    run_episode(
        plant,
        &series,
        controller,
        &EpisodeOptions {
            initial_omega,
            record: true,
            discount: 1.0,
        },
    )
}

/// Writes a single-episode summary and CSV.
pub fn write_simulation(out: &Path, name: &str, ep: &Episode, stride: usize, hash: &str) -> Result<RunSummary> {
    write_episode_csv(&out.join(format!("simulate_{name}.csv")), log(ep)?, stride, hash)?;
    let summary = RunSummary {
        scenario: "simulate".into(),
        seed: None,
        config_hash: hash.to_string(),
        controllers: vec![ControllerSummary::from_episode(name, ep)],
        wall_clock_s: None,
    };
    write_json(&out.join(format!("simulate_{name}_summary.json")), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{ExperimentConfig, PolicySource, ScenarioKind};

    fn summary(seed: u64, hash: &str, err: f64) -> RunSummary {
        RunSummary {
            scenario: "stats".into(),
            seed: Some(seed),
            config_hash: hash.into(),
            controllers: vec![ControllerSummary {
                controller: "rbfnn".into(),
                e_out: 100.0 - err,
                e_ref: 100.0,
                energy_error: err,
                efficiency: (100.0 - err) / 100.0,
                efficiency_flag: false,
                first_near_optimal: None,
            }],
            wall_clock_s: None,
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn aggregate_sorts_and_computes_sample_sd() {
        let runs = vec![summary(3, "h", 30.0), summary(1, "h", 10.0), summary(2, "h", 20.0)];
        let r = aggregate(&runs).unwrap();
        assert_eq!(r.seeds, vec![1, 2, 3]);
        let s = r.controller("rbfnn").unwrap();
        assert_eq!(s.n, 3);
        assert_eq!(s.mean_energy_error, 20.0);
        assert_eq!(s.sd_energy_error, 10.0);
    }

    #[test]
    fn aggregate_refuses_mixed_hashes() {
        let runs = vec![summary(1, "h", 10.0), summary(2, "other", 20.0)];
        assert!(matches!(aggregate(&runs), Err(Error::Config(_))));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn efficiency_flag_set_above_one() {
        let ep = Episode {
            log: None,
            final_state: crate::plant::PlantState::at_rest_load(&PlantParams::default(), 0.0).unwrap(),
            e_out: 102.0,
            e_ref: 100.0,
            discounted_sq_error: 0.0,
            mechanical: Default::default(),
            first_near_optimal: None,
        };
        assert!(ControllerSummary::from_episode("x", &ep).efficiency_flag);
    }

    fn read_rows(path: &Path) -> Vec<Vec<f64>> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
        rdr.records()
            .map(|r| r.unwrap().iter().map(|f| f.parse().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    #[test]
    fn compare_feeds_identical_wind_and_reports_optimal_speed() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ScenarioKind::CompareStep, None);
        cfg.compare.duration = 3.0;
        cfg.policy.controller = Some(PolicySource::PublishedStage1);
        let h = Harness::new(cfg, dir.path().to_path_buf()).unwrap();
        let summary = h.run_compare().unwrap();
        assert_eq!(summary.controllers.len(), 3);
        let tables: Vec<Vec<Vec<f64>>> = ["rbfnn", "mppt1", "mppt2"]
            .iter()
            .map(|n| read_rows(&dir.path().join(format!("compare_step_{n}.csv"))))
            .collect();
        assert_eq!(tables[0].len(), 3000);
        let lambda = h.plant.cp_curve.lambda_opt();
        for (k, row) in tables[0].iter().enumerate() {
            assert_eq!(row[1].to_bits(), tables[1][k][1].to_bits());
            assert_eq!(row[1].to_bits(), tables[2][k][1].to_bits());
            let expected = lambda * row[1] / h.plant.rotor_radius;
            assert!((row[3] - expected).abs() <= 1e-12 * expected);
        }
        let text = std::fs::read_to_string(dir.path().join("compare_step_summary.json")).unwrap();
        assert!(text.contains(&h.hash));
        assert!(!text.contains("wall_clock"));
    }

    #[test]
    fn stage1_writes_one_trace_row_per_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ScenarioKind::Stage1, Some(2));
        cfg.rl.episode_length = 0.2;
        cfg.compare.csv_stride = 10;
        let h = Harness::new(cfg, dir.path().to_path_buf()).unwrap();
        let s = h.run_training().unwrap();
        assert_eq!(s.iterations, 200);
        assert_eq!(read_rows(&dir.path().join("stage1_trace.csv")).len(), 200);
        assert_eq!(s.theta_final.to_vec().len(), 12);
        assert_eq!(s.theta_initial, PolicyParams::initial());
        let theta: PolicyParams =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("theta_s1.json")).unwrap()).unwrap();
        assert_eq!(theta, s.theta_final);
        for f in [
            "stage1_trace.csv",
            "stage1_episode_initial.csv",
            "stage1_episode_final.csv",
        ] {
            let first = std::fs::read_to_string(dir.path().join(f)).unwrap();
            assert!(first.starts_with(&format!("# config_hash: {}", h.hash)));
        }
    }

    #[test]
    fn wall_clock_only_when_requested() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ScenarioKind::CompareStep, None);
        cfg.compare.duration = 0.5;
        cfg.record_wall_clock = true;
        cfg.policy.controller = Some(PolicySource::Initial);
        let s = Harness::new(cfg, dir.path().to_path_buf())
            .unwrap()
            .run_compare()
            .unwrap();
        assert!(s.wall_clock_s.is_some());
    }
}
