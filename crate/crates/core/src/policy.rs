//! Gaussian radial-basis controller that maps six measurements to the load
//! current reference.
//!
//! Node `i` responds with `R_i(x) = Σ_j exp(-(x_j - c_ij)² / 2σ_j²)`, an
//! additive (not multiplicative) combination over input dimensions. The
//! output is `Σ_i w_i·R_i(x) + b`, clamped to the admissible current range.
//!
//! Centers are fixed: for input `j`, node `i` sits on the `i`-th of `n`
//! evenly spaced points spanning the input's working range, i.e. the
//! boundary points of `n - 1` equal intervals.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};

pub const N_INPUTS: usize = 6;
pub const N_NODES: usize = 6;
pub const THETA_LEN: usize = N_INPUTS + N_NODES;

/// Working ranges `(min center, max center)` of the six inputs:
/// wind speed, wind acceleration, load current, load voltage, rotor speed,
/// rotor acceleration.
pub const INPUT_RANGES: [(f64, f64); N_INPUTS] = [
    (4.66, 11.31),
    (-8.33, 8.32),
    (0.83, 9.13),
    (3.32, 36.52),
    (5.0, 35.0),
    (-4.998, 4.992),
];

pub const DEFAULT_BIAS: f64 = 3.5;

/// Rotor-acceleration clamp applied when building [`PolicyInput`], rad/s².
pub const ROTOR_ACCEL_RANGE: (f64, f64) = INPUT_RANGES[5];

#[derive(Debug, Clone, PartialEq)]
pub struct RbfnnConfig {
    /// `centers[i][j]`: node `i`, input `j`.
    pub centers: Vec<[f64; N_INPUTS]>,
    pub bias: f64,
    pub output_min: f64,
    pub output_max: f64,
}

impl RbfnnConfig {
    /// Evenly spaced grid with `nodes` points per input over `ranges`.
    pub fn grid(nodes: usize, ranges: &[(f64, f64); N_INPUTS], bias: f64, output_max: f64) -> Result<Self> {
        ensure_arg!(nodes >= 2, "need at least two nodes, got {nodes}");
        ensure_arg!(ranges.iter().all(|(lo, hi)| lo < hi), "input ranges must be increasing");
        let centers = (0..nodes)
            .map(|i| {
                let frac = i as f64 / (nodes - 1) as f64;
                let mut row = [0.0; N_INPUTS];
                for (c, (lo, hi)) in row.iter_mut().zip(ranges) {
                    *c = lo + frac * (hi - lo);
                }
                row
            })
            .collect();
        Ok(Self {
            centers,
            bias,
            output_min: 0.0,
            output_max,
        })
    }

    pub fn nodes(&self) -> usize {
        self.centers.len()
    }

    pub fn theta_len(&self) -> usize {
        N_INPUTS + self.nodes()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_arg!(!self.centers.is_empty(), "controller needs at least one node");
        ensure_arg!(self.output_min <= self.output_max, "output clamp must be ordered");
        ensure_arg!(self.bias.is_finite(), "bias must be finite");
        Ok(())
    }

    /// Response of node `node` to `x` under widths `sigma`.
    pub fn receptive_field(&self, sigma: &[f64], x: &[f64; N_INPUTS], node: usize) -> Result<f64> {
        ensure_arg!(node < self.nodes(), "node {node} out of range");
        ensure_arg!(
            sigma.len() == N_INPUTS,
            "expected {N_INPUTS} widths, got {}",
            sigma.len()
        );
        for (j, s) in sigma.iter().enumerate() {
            ensure_arg!(
                s.is_finite() && *s != 0.0,
                "width sigma[{j}] must be finite and nonzero, got {s}"
            );
        }
        Ok(self.field_unchecked(sigma, x, node))
    }

    fn field_unchecked(&self, sigma: &[f64], x: &[f64; N_INPUTS], node: usize) -> f64 {
        self.centers[node]
            .iter()
            .zip(x)
            .zip(sigma)
            .map(|((c, xj), s)| {
                let d = xj - c;
                (-d * d / (2.0 * s * s)).exp()
            })
            .sum()
    }

    /// Reference load current for measurements `x`.
    pub fn output(&self, theta: &PolicyParams, x: &PolicyInput) -> Result<f64> {
        ensure_arg!(
            theta.weights.len() == self.nodes(),
            "expected {} weights, got {}",
            self.nodes(),
            theta.weights.len()
        );
        let xs = x.as_array();
        ensure_arg!(xs.iter().all(|v| v.is_finite()), "policy input must be finite");
        let mut acc = self.bias;
        for (i, w) in theta.weights.iter().enumerate() {
            acc += w * self.receptive_field(&theta.sigma, &xs, i)?;
        }
        Ok(acc.clamp(self.output_min, self.output_max))
    }

    /// Builds a fast evaluator after validating the widths once.
    pub fn evaluator<'a>(&'a self, theta: &'a PolicyParams) -> Result<PolicyEval<'a>> {
        ensure_arg!(
            theta.weights.len() == self.nodes(),
            "expected {} weights, got {}",
            self.nodes(),
            theta.weights.len()
        );
        for (j, s) in theta.sigma.iter().enumerate() {
            ensure_arg!(
                s.is_finite() && *s != 0.0,
                "width sigma[{j}] must be finite and nonzero, got {s}"
            );
        }
        ensure_arg!(theta.weights.iter().all(|w| w.is_finite()), "weights must be finite");
        let mut inv_two_var = [0.0; N_INPUTS];
        for (k, s) in inv_two_var.iter_mut().zip(&theta.sigma) {
            *k = 1.0 / (2.0 * s * s);
        }
        Ok(PolicyEval {
            config: self,
            weights: &theta.weights,
            inv_two_var,
        })
    }
}

impl Default for RbfnnConfig {
    fn default() -> Self {
        Self::grid(N_NODES, &INPUT_RANGES, DEFAULT_BIAS, 10.0).expect("default grid is valid")
    }
}

/// Precomputed form of [`RbfnnConfig::output`] for the inner simulation loop.
#[derive(Debug, Clone, Copy)]
pub struct PolicyEval<'a> {
    config: &'a RbfnnConfig,
    weights: &'a [f64],
    inv_two_var: [f64; N_INPUTS],
}

impl PolicyEval<'_> {
    pub fn output(&self, x: &PolicyInput) -> f64 {
        let xs = x.as_array();
        let mut acc = self.config.bias;
        for (w, centers) in self.weights.iter().zip(&self.config.centers) {
            let mut field = 0.0;
            for j in 0..N_INPUTS {
                let d = xs[j] - centers[j];
                field += (-d * d * self.inv_two_var[j]).exp();
            }
            acc += w * field;
        }
        acc.clamp(self.config.output_min, self.config.output_max)
    }
}

/// Learnable widths and weights, packed as `[σ₁..σ₆, w₁..w_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolicyParams {
    pub sigma: [f64; N_INPUTS],
    pub weights: Vec<f64>,
}

impl PolicyParams {
    pub fn pack(sigma: [f64; N_INPUTS], weights: Vec<f64>) -> Self {
        Self { sigma, weights }
    }

    /// Flat vector, σ-block first.
    pub fn to_vec(&self) -> Vec<f64> {
        self.sigma.iter().chain(&self.weights).copied().collect()
    }

    /// Splits a flat vector with the default node count.
    pub fn unpack(theta: &[f64]) -> Result<Self> {
        ensure_arg!(
            theta.len() == THETA_LEN,
            "parameter vector must have length {THETA_LEN}, got {}",
            theta.len()
        );
        Self::unpack_with_nodes(theta, N_NODES)
    }

    pub fn unpack_with_nodes(theta: &[f64], nodes: usize) -> Result<Self> {
        ensure_arg!(
            theta.len() == N_INPUTS + nodes,
            "parameter vector must have length {}, got {}",
            N_INPUTS + nodes,
            theta.len()
        );
        let mut sigma = [0.0; N_INPUTS];
        sigma.copy_from_slice(&theta[..N_INPUTS]);
        Ok(Self {
            sigma,
            weights: theta[N_INPUTS..].to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Untrained starting point: every width 20, every weight 1.
    pub fn initial() -> Self {
        Self::pack([20.0; N_INPUTS], vec![1.0; N_NODES])
    }

    /// Parameters after step-wind training, as published.
    pub fn published_stage1() -> Self {
        Self::pack(
            [14.9, 20.1, 16.4, 8.1, 33.4, 22.0],
            vec![32.0, 40.0, 5.2, -17.1, 3.6, -22.3],
        )
    }

    /// Parameters after sine-wind training, as published.
    pub fn published_stage2() -> Self {
        Self::pack(
            [17.8, 20.3, 19.0, 8.6, 33.3, 21.2],
            vec![29.2, 43.7, 9.3, -18.5, 2.7, -20.8],
        )
    }
}

impl TryFrom<Vec<f64>> for PolicyParams {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ensure_arg!(v.len() > N_INPUTS, "parameter vector too short: {}", v.len());
        let nodes = v.len() - N_INPUTS;
        Self::unpack_with_nodes(&v, nodes)
    }
}

impl From<PolicyParams> for Vec<f64> {
    fn from(p: PolicyParams) -> Self {
        p.to_vec()
    }
}

/// Controller measurements at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyInput {
    pub wind_speed: f64,
    pub wind_accel: f64,
    pub current: f64,
    pub voltage: f64,
    pub omega: f64,
    pub omega_accel: f64,
}

impl PolicyInput {
    pub fn as_array(&self) -> [f64; N_INPUTS] {
        [
            self.wind_speed,
            self.wind_accel,
            self.current,
            self.voltage,
            self.omega,
            self.omega_accel,
        ]
    }

    pub fn from_array(x: [f64; N_INPUTS]) -> Self {
        Self {
            wind_speed: x[0],
            wind_accel: x[1],
            current: x[2],
            voltage: x[3],
            omega: x[4],
            omega_accel: x[5],
        }
    }
}

/// Backward-difference rotor acceleration, clamped to the controller's range.
pub fn rotor_accel(omega: f64, prev_omega: f64, dt: f64) -> f64 {
    ((omega - prev_omega) / dt).clamp(ROTOR_ACCEL_RANGE.0, ROTOR_ACCEL_RANGE.1)
}
