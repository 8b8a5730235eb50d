//! Wind-speed profiles: step, sinusoid, seeded stochastic and replayed traces.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};

/// Clamp range for wind acceleration fed to the controller, m/s².
pub const ACCEL_RANGE: (f64, f64) = (-8.33, 8.32);
/// Training envelope for stochastic winds, m/s.
pub const ENVELOPE: (f64, f64) = (4.66, 11.31);

/// Seeded turbulent wind: a constant mean plus first-order low-pass filtered
/// Gaussian noise (discrete Ornstein-Uhlenbeck), softly kept in an envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StochasticWind {
    pub mean: f64,
    /// σ_g / mean.
    pub intensity: f64,
    /// Filter time constant τ, s.
    pub time_constant: f64,
    pub seed: u64,
    /// Hard lower bound on emitted speed, m/s.
    pub floor: f64,
    pub envelope: (f64, f64),
    /// Width of the smooth transition into each envelope edge, m/s.
    pub knee: f64,
    /// Generation grid, s.
    pub dt: f64,
}

impl Default for StochasticWind {
    fn default() -> Self {
        Self {
            mean: 9.5,
            intensity: 0.1,
            time_constant: 3.0,
            seed: 0,
            floor: 1.0,
            envelope: ENVELOPE,
            knee: 0.5,
            dt: 1e-3,
        }
    }
}

impl StochasticWind {
    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.mean > 0.0, "stochastic mean must be positive");
        ensure_arg!(self.intensity >= 0.0, "turbulence intensity must be non-negative");
        ensure_arg!(self.time_constant > 0.0, "time constant must be positive");
        ensure_arg!(self.floor > 0.0, "wind floor must be positive");
        ensure_arg!(self.dt > 0.0, "generation step must be positive");
        let (lo, hi) = self.envelope;
        ensure_arg!(lo < hi, "envelope must be increasing");
        ensure_arg!(
            self.knee >= 0.0 && 2.0 * self.knee <= hi - lo,
            "knee must fit inside the envelope"
        );
        Ok(())
    }

    /// Noise process g_k before mean, envelope and floor are applied.
    pub fn noise(&self, steps: usize) -> Vec<f64> {
        let sigma = self.intensity * self.mean;
        let a = (-self.dt / self.time_constant).exp();
        let b = sigma * (1.0 - a * a).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(steps);
        if steps == 0 {
            return out;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        let mut g = sigma * z;
        out.push(g);
        for _ in 1..steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            g = a * g + b * z;
            out.push(g);
        }
        out
    }

    /// Speed samples on the generation grid covering `[0, duration)`.
    pub fn path(&self, duration: f64) -> Result<Vec<f64>> {
        self.validate()?;
        ensure_arg!(duration > 0.0, "duration must be positive");
        let steps = grid_len(duration, self.dt);
        Ok(self
            .noise(steps)
            .into_iter()
            .map(|g| self.shape(self.mean + g))
            .collect())
    }

    fn shape(&self, u: f64) -> f64 {
        let (lo, hi) = self.envelope;
        soft_clamp(u, lo, hi, self.knee).max(self.floor)
    }
}

/// Identity inside `[lo + knee, hi - knee]`, tanh saturation towards each edge.
pub fn soft_clamp(x: f64, lo: f64, hi: f64, knee: f64) -> f64 {
    if knee <= 0.0 {
        return x.clamp(lo, hi);
    }
    let upper = hi - knee;
    let lower = lo + knee;
    if x > upper {
        upper + knee * ((x - upper) / knee).tanh()
    } else if x < lower {
        lower - knee * ((lower - x) / knee).tanh()
    } else {
        x
    }
}

/// `mean + OU noise` path with default band parameters, generated at `dt`.
pub fn stochastic_path(seed: u64, duration: f64, dt: f64, mean: f64, intensity: f64) -> Result<Vec<f64>> {
    ensure_arg!(dt > 0.0, "dt must be positive, got {dt}");
    ensure_arg!(duration > 0.0, "duration must be positive, got {duration}");
    StochasticWind {
        mean,
        intensity,
        seed,
        dt,
        ..StochasticWind::default()
    }
    .path(duration)
}

/// A recorded wind trace, linearly interpolated and held at the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindTrace {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

impl WindTrace {
    pub fn new(t: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        ensure_arg!(
            !t.is_empty() && t.len() == u.len(),
            "trace columns must be nonempty and equal length"
        );
        ensure_arg!(
            t.windows(2).all(|w| w[1] > w[0]),
            "trace times must be strictly increasing"
        );
        ensure_arg!(
            u.iter().all(|&v| v.is_finite() && v > 0.0),
            "trace speeds must be positive"
        );
        Ok(Self { t, u })
    }

    /// Reads a two-column CSV (`t_seconds,u_mps`) with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.len() != 2 {
            return Err(Error::Parse(format!(
                "{}: expected 2 columns (t_seconds,u_mps), found {}",
                path.display(),
                headers.len()
            )));
        }
        let (mut t, mut u) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}: row {}: {e}", path.display(), i + 2)))
            };
            t.push(parse(0)?);
            u.push(parse(1)?);
        }
        Self::new(t, u)
    }

    pub fn sample(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.u[0];
        }
        if t >= self.t[n - 1] {
            return self.u[n - 1];
        }
        let k = self.t.partition_point(|&x| x <= t);
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let w = (t - t0) / (t1 - t0);
        self.u[k - 1] + w * (self.u[k] - self.u[k - 1])
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindProfile {
    /// `before` until `start`, then `amplitude`.
    Step {
        amplitude: f64,
        #[serde(default)]
        start: f64,
        #[serde(default = "default_before")]
        before: f64,
    },
    /// `mean + amplitude·sin(omega·t)`.
    Sine {
        mean: f64,
        amplitude: f64,
        omega: f64,
    },
    Stochastic(StochasticWind),
    Trace(WindTrace),
}

fn default_before() -> f64 {
    1.0
}

impl WindProfile {
    pub fn step(amplitude: f64) -> Self {
        WindProfile::Step {
            amplitude,
            start: 0.0,
            before: default_before(),
        }
    }

    pub fn sine(mean: f64, amplitude: f64, omega: f64) -> Self {
        WindProfile::Sine { mean, amplitude, omega }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WindProfile::Step {
                amplitude,
                start,
                before,
            } => {
                ensure_arg!(*amplitude > 0.0 && *before > 0.0, "step speeds must be positive");
                ensure_arg!(*start >= 0.0, "step start must be non-negative");
            }
            WindProfile::Sine { mean, amplitude, .. } => {
                ensure_arg!(
                    mean - amplitude.abs() > 0.0,
                    "sine wind must stay positive (mean {mean}, amplitude {amplitude})"
                );
            }
            WindProfile::Stochastic(s) => s.validate()?,
            WindProfile::Trace(_) => {}
        }
        Ok(())
    }

    /// Wind speed at time `t`. Stochastic profiles regenerate their path up to
    /// `t`; use [`WindProfile::realize`] for whole episodes.
    pub fn sample(&self, t: f64) -> Result<f64> {
        ensure_arg!(t >= 0.0, "time must be non-negative, got {t}");
        Ok(match self {
            WindProfile::Step {
                amplitude,
                start,
                before,
            } => {
                if t >= *start {
                    *amplitude
                } else {
                    *before
                }
            }
            WindProfile::Sine { mean, amplitude, omega } => mean + amplitude * (omega * t).sin(),
            WindProfile::Stochastic(s) => {
                let k = grid_index(t, s.dt);
                let path = s.path((k + 1) as f64 * s.dt)?;
                path[k.min(path.len() - 1)]
            }
            WindProfile::Trace(tr) => tr.sample(t),
        })
    }

    /// Wind acceleration at `t`, clamped to [`ACCEL_RANGE`].
    pub fn derivative(&self, t: f64, dt: f64) -> Result<f64> {
        ensure_arg!(t >= 0.0, "time must be non-negative, got {t}");
        ensure_arg!(dt > 0.0, "dt must be positive, got {dt}");
        let raw = match self {
            WindProfile::Step { start, .. } => {
                if t >= *start && t - dt < *start && t >= dt {
                    (self.sample(t)? - self.sample(t - dt)?) / dt
                } else {
                    0.0
                }
            }
            WindProfile::Sine { amplitude, omega, .. } => amplitude * omega * (omega * t).cos(),
            WindProfile::Stochastic(_) | WindProfile::Trace(_) => {
                if t < dt {
                    0.0
                } else {
                    (self.sample(t)? - self.sample(t - dt)?) / dt
                }
            }
        };
        Ok(clamp_accel(raw))
    }

    /// Materializes speed and acceleration on the grid `k·dt`, `k < duration/dt`.
    pub fn realize(&self, duration: f64, dt: f64) -> Result<WindSeries> {
        self.validate()?;
        ensure_arg!(duration > 0.0, "duration must be positive");
        ensure_arg!(dt > 0.0, "dt must be positive");
        let n = grid_len(duration, dt);
        let speed: Vec<f64> = match self {
            WindProfile::Stochastic(s) => {
                let path = s.path(duration + dt)?;
                (0..n)
                    .map(|k| path[grid_index(k as f64 * dt, s.dt).min(path.len() - 1)])
                    .collect()
            }
            _ => (0..n).map(|k| self.sample(k as f64 * dt)).collect::<Result<_>>()?,
        };
        let accel = match self {
            WindProfile::Step { .. } | WindProfile::Sine { .. } => (0..n)
                .map(|k| self.derivative(k as f64 * dt, dt))
                .collect::<Result<_>>()?,
            _ => (0..n)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        clamp_accel((speed[k] - speed[k - 1]) / dt)
                    }
                })
                .collect(),
        };
        Ok(WindSeries { dt, speed, accel })
    }
}

fn clamp_accel(a: f64) -> f64 {
    a.clamp(ACCEL_RANGE.0, ACCEL_RANGE.1)
}

pub(crate) fn grid_len(duration: f64, dt: f64) -> usize {
    ((duration / dt) - 1e-9).ceil().max(1.0) as usize
}

fn grid_index(t: f64, dt: f64) -> usize {
    (t / dt + 1e-9).floor() as usize
}

/// Wind sampled on an episode grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    pub dt: f64,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
}

impl WindSeries {
    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }
}
