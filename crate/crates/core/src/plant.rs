//! Fixed-step model of a small vertical-axis turbine driving a PMSG through a
//! diode rectifier into a controllable resistive load.
//!
//! The aerodynamic side is a 6th-order power-coefficient polynomial in the
//! tip-speed ratio. The electrical side is the DC-equivalent of the
//! generator-rectifier pair. Rotor speed is the only dynamic state and is
//! advanced with explicit Euler.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};

/// Power-coefficient polynomial coefficients, highest power first.
pub const CP_COEFFS: [f64; 6] = [-0.3015, 1.9004, -4.3520, 4.1121, -1.2969, 0.2954];

const CP_GRID_STEP: f64 = 1e-4;

/// 3√6/π, the rectifier scaling of flux and EMF.
pub fn rectifier_gain() -> f64 {
    3.0 * 6f64.sqrt() / PI
}

/// Cp(λ) = p₁λ⁶ + … + p₆λ, with its maximum over `[0, search_hi]` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CpCurve {
    coeffs: [f64; 6],
    search_hi: f64,
    lambda_opt: f64,
    cp_max: f64,
}

impl CpCurve {
    pub fn new(coeffs: [f64; 6], search_hi: f64) -> Result<Self> {
        ensure_arg!(
            search_hi.is_finite() && search_hi > 0.0,
            "Cp search window upper bound must be positive, got {search_hi}"
        );
        ensure_arg!(coeffs.iter().all(|c| c.is_finite()), "Cp coefficients must be finite");
        let mut curve = Self {
            coeffs,
            search_hi,
            lambda_opt: 0.0,
            cp_max: 0.0,
        };
        let (lambda_opt, cp_max) = curve.locate_optimum();
        curve.lambda_opt = lambda_opt;
        curve.cp_max = cp_max;
        Ok(curve)
    }

    pub fn coeffs(&self) -> [f64; 6] {
        self.coeffs
    }

    pub fn search_hi(&self) -> f64 {
        self.search_hi
    }

    /// Tip-speed ratio that maximizes Cp on the search window.
    pub fn lambda_opt(&self) -> f64 {
        self.lambda_opt
    }

    pub fn cp_max(&self) -> f64 {
        self.cp_max
    }

    pub fn cp(&self, lambda: f64) -> Result<f64> {
        ensure_arg!(
            lambda >= 0.0 && lambda.is_finite(),
            "tip-speed ratio must be finite and non-negative, got {lambda}"
        );
        Ok(self.eval(lambda))
    }

    /// Horner evaluation without argument checks.
    pub(crate) fn eval(&self, lambda: f64) -> f64 {
        let [p1, p2, p3, p4, p5, p6] = self.coeffs;
        lambda * (p6 + lambda * (p5 + lambda * (p4 + lambda * (p3 + lambda * (p2 + lambda * p1)))))
    }

    // Grid scan, then golden-section refinement inside the best cell pair.
    fn locate_optimum(&self) -> (f64, f64) {
        let n = (self.search_hi / CP_GRID_STEP).round() as usize;
        let mut best_i = 0;
        let mut best = self.eval(0.0);
        for i in 1..=n {
            let l = (i as f64 * CP_GRID_STEP).min(self.search_hi);
            let v = self.eval(l);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let mut a = (best_i as f64 - 1.0).max(0.0) * CP_GRID_STEP;
        let mut b = ((best_i as f64 + 1.0) * CP_GRID_STEP).min(self.search_hi);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let c = b - ratio * (b - a);
            let d = a + ratio * (b - a);
            if self.eval(c) > self.eval(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let refined = 0.5 * (a + b);
        let refined_val = self.eval(refined);
        if refined_val >= best {
            (refined, refined_val)
        } else {
            ((best_i as f64 * CP_GRID_STEP).min(self.search_hi), best)
        }
    }
}

impl Default for CpCurve {
    fn default() -> Self {
        Self::new(CP_COEFFS, 2.0).expect("default Cp curve is valid")
    }
}

/// Rotor, aerodynamic and generator constants.
///
/// The generator constants (`pole_pairs`, `flux`, `inductance`, `resistance`,
/// `torque_constant`) are modelling assumptions chosen so that load voltage and
/// current stay in the controller's input ranges at 6–12 m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    /// Rotor inertia J_r, kg·m².
    pub inertia: f64,
    /// Rotor radius r_r, m.
    pub rotor_radius: f64,
    /// Blade length l_b, m.
    pub blade_length: f64,
    /// Viscous friction b_fr, N·s/rad.
    pub friction: f64,
    /// Air density ρ, kg/m³.
    pub air_density: f64,
    pub cp_curve: CpCurve,
    pub pole_pairs: u32,
    /// Per-phase flux φ_s, Wb.
    pub flux: f64,
    /// Per-phase inductance L_s, H.
    pub inductance: f64,
    /// Per-phase resistance R_s, Ω.
    pub resistance: f64,
    /// Generator torque constant K_t, N·m/A.
    pub torque_constant: f64,
    /// Load current limit, A.
    pub max_current: f64,
    /// Speed floor for the wind-torque evaluation, rad/s.
    pub min_speed: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        let pole_pairs = 4;
        let flux = 0.2;
        Self {
            inertia: 2.0,
            rotor_radius: 0.5,
            blade_length: 1.0,
            friction: 0.02,
            air_density: 1.2,
            cp_curve: CpCurve::default(),
            pole_pairs,
            flux,
            inductance: 5e-3,
            resistance: 0.5,
            torque_constant: rectifier_gain() * flux * pole_pairs as f64,
            max_current: 10.0,
            min_speed: 0.1,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inertia", self.inertia),
            ("rotor_radius", self.rotor_radius),
            ("blade_length", self.blade_length),
            ("friction", self.friction),
            ("air_density", self.air_density),
            ("flux", self.flux),
            ("inductance", self.inductance),
            ("resistance", self.resistance),
            ("torque_constant", self.torque_constant),
            ("max_current", self.max_current),
            ("min_speed", self.min_speed),
        ];
        for (name, v) in positive {
            ensure_arg!(v.is_finite() && v > 0.0, "{name} must be positive, got {v}");
        }
        ensure_arg!(self.pole_pairs > 0, "pole_pairs must be positive");
        Ok(())
    }

    /// Torque constant that makes E_SDC·I_L equal T_g·ω_r.
    pub fn lossless_torque_constant(&self) -> f64 {
        self.dc_flux() * self.pole_pairs as f64
    }

    /// φ_dc = 3√6·φ_s/π.
    pub fn dc_flux(&self) -> f64 {
        rectifier_gain() * self.flux
    }

    /// L_dc = 18·L_s/π².
    pub fn dc_inductance(&self) -> f64 {
        18.0 * self.inductance / (PI * PI)
    }

    /// R_dc = 18·R_s/π².
    pub fn dc_resistance(&self) -> f64 {
        18.0 * self.resistance / (PI * PI)
    }

    /// Rectified EMF E_SDC = 3√6·φ_s·p·ω_r/π.
    pub fn dc_emf(&self, omega: f64) -> f64 {
        rectifier_gain() * self.flux * self.pole_pairs as f64 * omega
    }

    /// Commutation-overlap resistance R_D = 3·L_s·p·ω_r/π.
    pub fn overlap_resistance(&self, omega: f64) -> f64 {
        3.0 * self.inductance * self.pole_pairs as f64 * omega / PI
    }

    /// Swept area S_a = 2·r_r·l_b.
    pub fn swept_area(&self) -> f64 {
        2.0 * self.rotor_radius * self.blade_length
    }
}

/// Instantaneous plant quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub t: f64,
    pub omega: f64,
    pub current: f64,
    pub voltage: f64,
    pub power: f64,
}

impl PlantState {
    /// Unloaded rotor spinning at `omega` at time zero.
    pub fn at_rest_load(params: &PlantParams, omega: f64) -> Result<Self> {
        ensure_arg!(omega >= 0.0 && omega.is_finite(), "rotor speed must be non-negative");
        Ok(Self {
            t: 0.0,
            omega,
            current: 0.0,
            voltage: load_voltage(params, omega, 0.0)?,
            power: 0.0,
        })
    }

    /// Load resistance V_L/I_L, or `None` when the load is effectively open.
    pub fn load_resistance(&self) -> Option<f64> {
        (self.current > 1e-9).then(|| self.voltage / self.current)
    }
}

/// Torques acting on the rotor during one step, evaluated at the pre-step speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torques {
    pub wind: f64,
    pub friction: f64,
    pub generator: f64,
}

pub fn tip_speed_ratio(omega: f64, wind_speed: f64, rotor_radius: f64) -> Result<f64> {
    ensure_arg!(wind_speed > 0.0, "wind speed must be positive, got {wind_speed}");
    Ok(omega * rotor_radius / wind_speed)
}

/// Aerodynamic power ρ·Cp(λ)·r_r·l_b·U³.
pub fn wind_power(params: &PlantParams, wind_speed: f64, lambda: f64) -> Result<f64> {
    ensure_arg!(wind_speed > 0.0, "wind speed must be positive, got {wind_speed}");
    let cp = params.cp_curve.cp(lambda)?;
    Ok(params.air_density * cp * params.rotor_radius * params.blade_length * wind_speed.powi(3))
}

/// Aerodynamic power written with the swept area, 0.5·ρ·Cp·S_a·U³.
pub fn wind_power_swept(params: &PlantParams, wind_speed: f64, lambda: f64) -> Result<f64> {
    ensure_arg!(wind_speed > 0.0, "wind speed must be positive, got {wind_speed}");
    let cp = params.cp_curve.cp(lambda)?;
    Ok(0.5 * params.air_density * cp * params.swept_area() * wind_speed.powi(3))
}

/// Aerodynamic torque P_w/ω_r. Below `min_speed` the rotor is evaluated at
/// `min_speed`, so a stalled rotor still sees the (finite) starting torque
/// given by the linear term of Cp.
pub fn wind_torque(params: &PlantParams, wind_speed: f64, omega: f64) -> Result<f64> {
    ensure_arg!(omega >= 0.0, "rotor speed must be non-negative, got {omega}");
    let omega = omega.max(params.min_speed);
    let lambda = tip_speed_ratio(omega, wind_speed, params.rotor_radius)?;
    Ok(wind_power(params, wind_speed, lambda)? / omega)
}

pub fn friction_torque(params: &PlantParams, omega: f64) -> f64 {
    params.friction * omega
}

/// Rectifier output voltage for a given speed and load current, floored at 0.
pub fn load_voltage(params: &PlantParams, omega: f64, current: f64) -> Result<f64> {
    ensure_arg!(
        omega >= 0.0 && omega.is_finite(),
        "rotor speed must be non-negative, got {omega}"
    );
    ensure_arg!(
        (0.0..=params.max_current).contains(&current),
        "load current {current} outside [0, {}]",
        params.max_current
    );
    let emf = params.dc_emf(omega);
    let reactive = params.pole_pairs as f64 * omega * params.dc_inductance() * current;
    let drop = (params.dc_resistance() + params.overlap_resistance(omega)) * current;
    Ok(((emf * emf + reactive * reactive).sqrt() - drop).max(0.0))
}

/// Cp_max power P* = ρ·Cp_max·r_r·l_b·U³.
pub fn nominal_power(params: &PlantParams, wind_speed: f64) -> Result<f64> {
    ensure_arg!(wind_speed > 0.0, "wind speed must be positive, got {wind_speed}");
    Ok(params.air_density * params.cp_curve.cp_max() * params.rotor_radius * params.blade_length * wind_speed.powi(3))
}

/// Rotor speed ω* = λ*·U/r_r that holds the turbine at Cp_max.
pub fn optimal_rotor_speed(params: &PlantParams, wind_speed: f64) -> Result<f64> {
    ensure_arg!(wind_speed > 0.0, "wind speed must be positive, got {wind_speed}");
    Ok(params.cp_curve.lambda_opt() * wind_speed / params.rotor_radius)
}

pub fn step_dynamics(
    params: &PlantParams,
    state: &PlantState,
    current_cmd: f64,
    wind_speed: f64,
    dt: f64,
) -> Result<PlantState> {
    step_with_torques(params, state, current_cmd, wind_speed, dt).map(|(s, _)| s)
}

/// One explicit-Euler step. The commanded current is clamped and applied
/// immediately; torques are evaluated at the pre-step speed.
pub fn step_with_torques(
    params: &PlantParams,
    state: &PlantState,
    current_cmd: f64,
    wind_speed: f64,
    dt: f64,
) -> Result<(PlantState, Torques)> {
    ensure_arg!(dt > 0.0 && dt.is_finite(), "time step must be positive, got {dt}");
    ensure_arg!(wind_speed > 0.0, "wind speed must be positive, got {wind_speed}");
    if !state.omega.is_finite() || !current_cmd.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite input at t={}: omega={}, current={}",
            state.t, state.omega, current_cmd
        )));
    }
    let current = current_cmd.clamp(0.0, params.max_current);
    let torques = Torques {
        wind: wind_torque(params, wind_speed, state.omega)?,
        friction: friction_torque(params, state.omega),
        generator: params.torque_constant * current,
    };
    let accel = (torques.wind - torques.friction - torques.generator) / params.inertia;
    let omega = (state.omega + dt * accel).max(0.0);
    if !omega.is_finite() {
        return Err(Error::Numeric(format!("rotor speed diverged at t={}", state.t)));
    }
    let voltage = load_voltage(params, omega, current)?;
    let next = PlantState {
        t: state.t + dt,
        omega,
        current,
        voltage,
        power: voltage * current,
    };
    Ok((next, torques))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cp_has_no_constant_term() {
        let c = CpCurve::default();
        assert_eq!(c.cp(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cp_at_unity_is_coefficient_sum() {
        let c = CpCurve::default();
        assert_relative_eq!(c.cp(1.0).unwrap(), 0.3575, epsilon = 1e-4);
    }

    #[test]
    fn cp_rejects_negative_ratio() {
        assert!(matches!(CpCurve::default().cp(-0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cached_optimum_matches_grid() {
        let c = CpCurve::default();
        let mut best = (0.0, 0.0);
        for i in 0..=20_000 {
            let l = i as f64 * 1e-4;
            let v = c.cp(l).unwrap();
            if v > best.1 {
                best = (l, v);
            }
        }
        assert!((c.lambda_opt() - best.0).abs() <= 1e-4);
        assert!(c.cp_max() >= best.1);
        assert!(c.cp_max() - best.1 < 1e-8);
    }

    #[test]
    fn tsr_examples() {
        assert_eq!(tip_speed_ratio(20.0, 10.0, 0.5).unwrap(), 1.0);
        assert_eq!(tip_speed_ratio(0.0, 8.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(
            tip_speed_ratio(3.0 * 13.0, 3.0 * 7.0, 0.5).unwrap(),
            tip_speed_ratio(13.0, 7.0, 0.5).unwrap(),
            max_relative = 1e-15
        );
        assert!(tip_speed_ratio(1.0, 0.0, 0.5).is_err());
        assert!(tip_speed_ratio(1.0, -2.0, 0.5).is_err());
    }

    #[test]
    fn wind_power_examples() {
        let p = PlantParams::default();
        assert_relative_eq!(wind_power(&p, 10.0, 1.0).unwrap(), 214.5, epsilon = 0.05);
        assert_eq!(wind_power(&p, 10.0, 0.0).unwrap(), 0.0);
        let a = wind_power(&p, 7.0, 0.9).unwrap();
        let b = wind_power_swept(&p, 7.0, 0.9).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(wind_power(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn wind_torque_examples() {
        let p = PlantParams::default();
        assert_relative_eq!(wind_torque(&p, 10.0, 20.0).unwrap(), 10.725, epsilon = 0.01);
    }

    #[test]
    fn wind_torque_vanishes_at_cp_root() {
        // Bisect for the positive root of Cp above the optimum.
        let p = PlantParams::default();
        let c = &p.cp_curve;
        let (mut a, mut b) = (c.lambda_opt(), 4.0);
        assert!(c.cp(b).unwrap() < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if c.cp(m).unwrap() > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let omega = a * 8.0 / p.rotor_radius;
        assert!(wind_torque(&p, 8.0, omega).unwrap().abs() < 1e-10);
    }

    #[test]
    fn stalled_rotor_sees_starting_torque() {
        let p = PlantParams::default();
        let at_floor = wind_torque(&p, 8.0, p.min_speed).unwrap();
        assert_eq!(wind_torque(&p, 8.0, 0.0).unwrap(), at_floor);
        assert_eq!(wind_torque(&p, 8.0, 0.5 * p.min_speed).unwrap(), at_floor);
        // P_w(λ(ω_min))/ω_min, within a few percent of the ω→0 limit ρ·r²·l·U²·p₆.
        let lambda = p.min_speed * p.rotor_radius / 8.0;
        let expected = wind_power(&p, 8.0, lambda).unwrap() / p.min_speed;
        assert_relative_eq!(at_floor, expected, max_relative = 1e-15);
        let limit = 1.2 * 0.25 * 64.0 * 0.2954;
        assert!((at_floor - limit).abs() < 0.05 * limit);
    }

    #[test]
    fn friction_examples() {
        let p = PlantParams::default();
        assert_relative_eq!(friction_torque(&p, 10.0), 0.2, max_relative = 1e-15);
        assert_eq!(friction_torque(&p, 0.0), 0.0);
        assert_eq!(friction_torque(&p, 14.0), 2.0 * friction_torque(&p, 7.0));
    }

    #[test]
    fn dc_equivalents() {
        let p = PlantParams::default();
        let g = 3.0 * 6f64.sqrt() / PI;
        assert_relative_eq!(p.dc_flux(), g * 0.2, max_relative = 1e-15);
        assert_relative_eq!(p.dc_inductance(), 18.0 * 5e-3 / (PI * PI), max_relative = 1e-15);
        assert_relative_eq!(p.dc_resistance(), 18.0 * 0.5 / (PI * PI), max_relative = 1e-15);
        assert_relative_eq!(p.torque_constant, p.lossless_torque_constant(), max_relative = 1e-15);
        // E_SDC·I = T_g·ω with the lossless torque constant.
        assert_relative_eq!(
            p.dc_emf(17.0) * 3.0,
            p.torque_constant * 3.0 * 17.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn load_voltage_zero_current_is_emf() {
        let p = PlantParams::default();
        let expected = rectifier_gain() * 0.2 * 4.0 * 20.0;
        assert_relative_eq!(load_voltage(&p, 20.0, 0.0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn load_voltage_stalled_rotor_is_zero() {
        let p = PlantParams::default();
        for i in [0.0, 1.0, 5.0, 10.0] {
            assert_eq!(load_voltage(&p, 0.0, i).unwrap(), 0.0);
        }
    }

    #[test]
    fn load_voltage_regression() {
        // Hand evaluation with p=4, φ_s=0.2, L_s=5 mH, R_s=0.5 Ω at ω=20, I=5:
        // E_SDC=37.4254465, reactive=3.6475626, drop=(0.9118907+0.3819719)·5
        let p = PlantParams::default();
        assert_relative_eq!(
            load_voltage(&p, 20.0, 5.0).unwrap(),
            31.133463322823264,
            max_relative = 1e-12
        );
    }

    #[test]
    fn load_voltage_rejects_out_of_range() {
        let p = PlantParams::default();
        assert!(load_voltage(&p, -1.0, 1.0).is_err());
        assert!(load_voltage(&p, 1.0, -0.1).is_err());
        assert!(load_voltage(&p, 1.0, 10.5).is_err());
    }

    #[test]
    fn nominal_quantities() {
        let p = PlantParams::default();
        let ps = nominal_power(&p, 10.0).unwrap();
        assert!((ps - 239.4).abs() < 1.0, "P* = {ps}");
        let w = optimal_rotor_speed(&p, 10.0).unwrap();
        assert!((w - 25.0).abs() < 0.5, "ω* = {w}");
        assert_relative_eq!(
            nominal_power(&p, 12.0).unwrap() / nominal_power(&p, 6.0).unwrap(),
            8.0,
            max_relative = 1e-12
        );
        assert!(nominal_power(&p, 0.0).is_err());
        assert!(optimal_rotor_speed(&p, -1.0).is_err());
    }

    #[test]
    fn step_equilibrium_holds_speed() {
        let p = PlantParams::default();
        let omega = 20.0;
        let tw = wind_torque(&p, 8.0, omega).unwrap();
        let current = (tw - friction_torque(&p, omega)) / p.torque_constant;
        let s0 = PlantState::at_rest_load(&p, omega).unwrap();
        let s1 = step_dynamics(&p, &s0, current, 8.0, 1e-3).unwrap();
        assert!((s1.omega - omega).abs() < 1e-12);
    }

    #[test]
    fn step_unloaded_rotor_accelerates() {
        let p = PlantParams::default();
        let tw = wind_torque(&p, 8.0, 5.0).unwrap();
        assert!(tw > friction_torque(&p, 5.0));
        let s0 = PlantState::at_rest_load(&p, 5.0).unwrap();
        let s1 = step_dynamics(&p, &s0, 0.0, 8.0, 1e-3).unwrap();
        assert!(s1.omega > 5.0);
        assert_eq!(s1.power, 0.0);
        assert_relative_eq!(s1.t, 1e-3);
    }

    #[test]
    fn step_clamps_current() {
        let p = PlantParams::default();
        let s0 = PlantState::at_rest_load(&p, 20.0).unwrap();
        let s1 = step_dynamics(&p, &s0, 2.0 * p.max_current, 10.0, 1e-3).unwrap();
        assert_eq!(s1.current, p.max_current);
        let s2 = step_dynamics(&p, &s0, -3.0, 10.0, 1e-3).unwrap();
        assert_eq!(s2.current, 0.0);
        assert_relative_eq!(s1.power, s1.voltage * s1.current);
    }

    #[test]
    fn step_rejects_bad_arguments() {
        let p = PlantParams::default();
        let s0 = PlantState::at_rest_load(&p, 20.0).unwrap();
        assert!(matches!(
            step_dynamics(&p, &s0, 1.0, 10.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(step_dynamics(&p, &s0, 1.0, 0.0, 1e-3).is_err());
        let bad = PlantState { omega: f64::NAN, ..s0 };
        assert!(matches!(
            step_dynamics(&p, &bad, 1.0, 10.0, 1e-3),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn heavy_load_floors_speed_at_zero() {
        let p = PlantParams::default();
        let mut s = PlantState::at_rest_load(&p, 0.5).unwrap();
        for _ in 0..2000 {
            s = step_dynamics(&p, &s, p.max_current, 6.0, 1e-3).unwrap();
            assert!(s.omega >= 0.0);
        }
        assert_eq!(s.omega, 0.0);
    }

    #[test]
    fn validate_rejects_nonpositive() {
        let mut p = PlantParams::default();
        assert!(p.validate().is_ok());
        p.inertia = 0.0;
        assert!(p.validate().is_err());
        let p = PlantParams {
            pole_pairs: 0,
            ..PlantParams::default()
        };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn power_forms_agree(u in 0.5f64..30.0, lambda in 0.0f64..2.0) {
            let p = PlantParams::default();
            let a = wind_power(&p, u, lambda).unwrap();
            let b = wind_power_swept(&p, u, lambda).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(f64::MIN_POSITIVE));
        }

        #[test]
        fn extracted_power_bounded_by_nominal(u in 3.0f64..14.0, omega in 0.0f64..60.0, i in 0.0f64..10.0) {
            let p = PlantParams::default();
            let state = PlantState { omega, ..PlantState::at_rest_load(&p, 0.0).unwrap() };
            let (_, tq) = step_with_torques(&p, &state, i, u, 1e-3).unwrap();
            prop_assert!(tq.wind * omega <= nominal_power(&p, u).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn step_is_deterministic_and_admissible(u in 3.0f64..14.0, omega in 0.0f64..60.0, cmd in -5.0f64..20.0) {
            let p = PlantParams::default();
            let state = PlantState::at_rest_load(&p, omega).unwrap();
            let a = step_dynamics(&p, &state, cmd, u, 1e-3).unwrap();
            let b = step_dynamics(&p, &state, cmd, u, 1e-3).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.omega >= 0.0);
            prop_assert!((0.0..=p.max_current).contains(&a.current));
            prop_assert!(a.voltage >= 0.0);
            prop_assert_eq!(a.power, a.voltage * a.current);
        }
    }
}
