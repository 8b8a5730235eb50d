//! `vawt` command-line runner. Prints the run summary as JSON on stdout; on
//! failure prints `{"error": {"kind", "message"}}` on stderr and exits nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vawt_core::harness::{simulate, write_simulation, ExperimentConfig, Harness, PolicySource, ScenarioKind};
use vawt_core::sim::{Controller, MpptController, RbfnnController};
use vawt_core::wind::{StochasticWind, WindProfile, WindTrace};
use vawt_core::{Error, Result};

#[derive(Parser)]
#[command(name = "vawt", version, about = "Wind turbine control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the RBFNN controller with the MCMC policy search.
    Train {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the config's, then $VAWT_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one controller on one wind.
    Simulate {
        #[arg(long, value_enum)]
        controller: ControllerKind,
        /// `step:A`, `sine:MEAN:AMP:OMEGA`, `stochastic:SEED[:MEAN[:INTENSITY]]` or `trace:FILE.csv`.
        #[arg(long)]
        wind: String,
        /// RBFNN parameters: `s0`, `s1`, `s2` or a JSON file.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 150.0)]
        duration: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Compare the RBFNN controller with the MPPT baselines on one wind.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-seed energy-error statistics on stochastic winds.
    Stats {
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerKind {
    Rbfnn,
    Mppt1,
    Mppt2,
}

impl ControllerKind {
    fn name(self) -> &'static str {
        match self {
            ControllerKind::Rbfnn => "rbfnn",
            ControllerKind::Mppt1 => "mppt1",
            ControllerKind::Mppt2 => "mppt2",
        }
    }
}

fn load_or_default(path: Option<&Path>, scenario: ScenarioKind) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::new(scenario, None)),
    }
}

fn parse_num(field: &str, spec: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad number {field:?} in wind spec {spec:?}")))
}

fn parse_wind(spec: &str) -> Result<WindProfile> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("unrecognized wind spec {spec:?}"));
    let wind = match parts.as_slice() {
        ["step", a] => WindProfile::step(parse_num(a, spec)?),
        ["sine", m, a, w] => WindProfile::sine(parse_num(m, spec)?, parse_num(a, spec)?, parse_num(w, spec)?),
        ["stochastic", seed, rest @ ..] if rest.len() <= 2 => {
            let mut s = StochasticWind {
                seed: seed.parse().map_err(|_| bad())?,
                ..StochasticWind::default()
            };
            if let Some(m) = rest.first() {
                s.mean = parse_num(m, spec)?;
            }
            if let Some(i) = rest.get(1) {
                s.intensity = parse_num(i, spec)?;
            }
            WindProfile::Stochastic(s)
        }
        ["trace", path] => WindProfile::Trace(WindTrace::from_csv(Path::new(path))?),
        _ => return Err(bad()),
    };
    wind.validate()?;
    Ok(wind)
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Train {
            stage,
            config,
            out,
            seed,
        } => {
            let scenario = if stage == 1 {
                ScenarioKind::Stage1
            } else {
                ScenarioKind::Stage2
            };
            let mut cfg = load_or_default(config.as_deref(), scenario)?;
            cfg.scenario = scenario;
            if seed.is_some() {
                cfg.seed = seed;
            }
            let out_dir = cfg.resolve_out_dir(out.as_deref());
            to_json(&Harness::new(cfg, out_dir)?.run_training()?)
        }
        Command::Simulate {
            controller,
            wind,
            theta,
            config,
            out,
            duration,
            dt,
        } => {
            let mut cfg = load_or_default(config.as_deref(), ScenarioKind::CompareStep)?;
            cfg.scenario = ScenarioKind::CompareStep;
            cfg.wind = Some(parse_wind(&wind)?);
            cfg.compare.duration = duration;
            cfg.compare.dt = dt;
            if let Some(t) = theta {
                cfg.policy.controller = Some(PolicySource::from(t));
            }
            let out_dir = cfg.resolve_out_dir(out.as_deref());
            let h = Harness::new(cfg, out_dir)?;
            let theta = match controller {
                ControllerKind::Rbfnn => Some(h.controller_policy()?),
                _ => None,
            };
            let mut c: Box<dyn Controller + '_> = match controller {
                ControllerKind::Rbfnn => Box::new(RbfnnController::new(
                    h.rbf.evaluator(theta.as_ref().expect("loaded above"))?,
                )),
                ControllerKind::Mppt1 => Box::new(MpptController::new(h.config.mppt1.clone())),
                ControllerKind::Mppt2 => Box::new(MpptController::new(h.config.mppt2.clone())),
            };
            let ep = simulate(
                &h.plant,
                c.as_mut(),
                &h.config.wind(),
                duration,
                dt,
                h.config.initial_omega,
            )?;
            let summary = write_simulation(&h.out_dir, controller.name(), &ep, h.config.compare.csv_stride, &h.hash)?;
            to_json(&summary)
        }
        Command::Compare { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            if !matches!(cfg.scenario, ScenarioKind::CompareStep | ScenarioKind::CompareReal) {
                return Err(Error::Config(format!(
                    "compare needs scenario compare_step or compare_real, got {}",
                    cfg.scenario.name()
                )));
            }
            let out_dir = cfg.resolve_out_dir(out.as_deref());
            to_json(&Harness::new(cfg, out_dir)?.run_compare()?)
        }
        Command::Stats { seeds, config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.scenario = ScenarioKind::Stats;
            if let Some(n) = seeds {
                cfg.stats.seeds = n;
            }
            let out_dir = cfg.resolve_out_dir(out.as_deref());
            to_json(&Harness::new(cfg, out_dir)?.run_stats()?)
        }
    }
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
