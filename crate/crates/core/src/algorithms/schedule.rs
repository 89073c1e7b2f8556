//! Step-size schedules and baseline parameter presets.

use crate::error::{Error, Result};
use crate::problem::AssumptionConstants;

/// Which `γ_t` schedule the virtual-queue learner uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleCase {
    /// Constant `γ_t² = 1/(2β²) · 1/√(2R)`.
    Case1,
    /// `γ_t² = 1/(2β²) · 1/√(2R) · 1/√(t+1)`.
    Case2,
}

impl ScheduleCase {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleCase::Case1 => "case1",
            ScheduleCase::Case2 => "case2",
        }
    }
}

/// `α_t = √(T / (R + path_len))`.
pub fn alpha_schedule(_t: usize, horizon: usize, diameter: f64, path_len: f64) -> f64 {
    (horizon as f64 / (diameter + path_len)).sqrt()
}

/// `γ_t` for the given case. `t = 0` is allowed and gives `γ_0`.
pub fn gamma_schedule(case: ScheduleCase, t: usize, beta: f64, diameter: f64) -> f64 {
    let base = 1.0 / (2.0 * beta * beta) / (2.0 * diameter).sqrt();
    match case {
        ScheduleCase::Case1 => base.sqrt(),
        ScheduleCase::Case2 => (base / ((t + 1) as f64).sqrt()).sqrt(),
    }
}

/// Constant parameters of the Slater-condition learner:
/// `α = T^a`, `γ² = T^a / (2β²)`.
pub fn slater_params(a: f64, horizon: usize, beta: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!("exponent a must lie in (0, 1), got {a}")));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    let ta = (horizon as f64).powf(a);
    Ok((ta, (ta / (2.0 * beta * beta)).sqrt()))
}

/// Upper bound on `‖λ(t)‖` for the Slater learner:
/// `γF + (GR + γ²εF + 2γ²F² + αR²) / (γ(ε − V̄_g))`.
pub fn slater_queue_bound(constants: &AssumptionConstants, alpha: f64, gamma: f64) -> Result<f64> {
    let (Some(eps), Some(vbar)) = (constants.slater_eps, constants.max_variation) else {
        return Err(Error::Config(
            "queue bound needs a Slater margin and a max constraint variation".into(),
        ));
    };
    let (f, g, r) = (constants.value_bound, constants.grad_bound, constants.diameter);
    let g2 = gamma * gamma;
    let num = g * r + g2 * eps * f + 2.0 * g2 * f * f + alpha * r * r;
    Ok(gamma * f + num / (gamma * (eps - vbar)))
}

pub const PRESET_NAMES: [&str; 6] = ["cao2018", "chen2017", "chen2018", "chen2019", "vqb_case1", "vqb_case2"];

/// Step sizes of the generic saddle-point baseline plus the raw table
/// constants they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleParams {
    pub preset: &'static str,
    /// Primal step size.
    pub eta: f64,
    /// Dual step size.
    pub mu: f64,
    pub raw: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetParams {
    Vqb(ScheduleCase),
    Saddle(SaddleParams),
}

/// Parameters for a named preset at horizon `T`, dimension `n` and box
/// bound `C`.
///
/// The baseline presets are mapped onto one primal-dual update:
///
/// | preset   | table constants              | η               | μ        |
/// |----------|------------------------------|-----------------|----------|
/// | cao2018  | δ = 8nC²+1, η = 2/√T         | η               | η        |
/// | chen2017 | α = μ = T^{1/3}              | 1/α             | μ        |
/// | chen2018 | δ = 1, λ₁ = 4√2·T^{1/8}      | 1/λ₁            | δ·η      |
/// | chen2019 | μ = T^{-1/2}, α = 2T^{-1/2}  | α               | μ        |
pub fn preset_params(name: &str, horizon: usize, n: usize, box_bound: f64) -> Result<PresetParams> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let t = horizon as f64;
    let saddle = |preset, eta, mu, raw| Ok(PresetParams::Saddle(SaddleParams { preset, eta, mu, raw }));
    match name {
        "vqb_case1" => Ok(PresetParams::Vqb(ScheduleCase::Case1)),
        "vqb_case2" => Ok(PresetParams::Vqb(ScheduleCase::Case2)),
        "cao2018" => {
            let delta = 8.0 * n as f64 * box_bound * box_bound + 1.0;
            let eta = 2.0 / t.sqrt();
            saddle("cao2018", eta, eta, vec![("delta", delta), ("eta", eta)])
        }
        "chen2017" => {
            let a = t.cbrt();
            saddle("chen2017", 1.0 / a, a, vec![("alpha", a), ("mu", a)])
        }
        "chen2018" => {
            let delta = 1.0;
            let lambda1 = 4.0 * 2f64.sqrt() * t.powf(0.125);
            let eta = 1.0 / lambda1;
            saddle("chen2018", eta, delta * eta, vec![("delta", delta), ("lambda1", lambda1)])
        }
        "chen2019" => {
            let mu = 1.0 / t.sqrt();
            let a = 2.0 / t.sqrt();
            saddle("chen2019", a, mu, vec![("mu", mu), ("alpha", a)])
        }
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn alpha_examples() {
        assert!(close(alpha_schedule(1, 100, 2.0, 0.0), 50f64.sqrt(), 1e-12));
        assert!(close(alpha_schedule(5, 100, 2.0, 2.0), 5.0, 1e-12));
        assert_eq!(alpha_schedule(1, 7, 7.0, 0.0), 1.0);
    }

    #[test]
    fn alpha_nonincreasing_in_path() {
        let mut prev = f64::INFINITY;
        for k in 0..100 {
            let a = alpha_schedule(1, 1000, 3.0, k as f64 * 0.37);
            assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn gamma_examples() {
        assert!(close(gamma_schedule(ScheduleCase::Case1, 17, 1.0, 2.0), 0.5, 1e-15));
        let g = gamma_schedule(ScheduleCase::Case2, 3, 1.0, 2.0);
        assert!(close(g * g, 0.125, 1e-15));
        assert!(close(g, 0.353_553_390_593_273_8, 1e-12));
        assert!(gamma_schedule(ScheduleCase::Case2, 10_000_000, 1.0, 2.0) < 0.01);
        // both cases agree at t = 0
        assert_eq!(
            gamma_schedule(ScheduleCase::Case1, 0, 1.3, 4.0),
            gamma_schedule(ScheduleCase::Case2, 0, 1.3, 4.0)
        );
    }

    #[test]
    fn case2_gamma_decreasing_and_midpoint_convex() {
        for t in 1..5000 {
            let (a, b, c) = (
                gamma_schedule(ScheduleCase::Case2, t - 1, 0.7, 3.0),
                gamma_schedule(ScheduleCase::Case2, t, 0.7, 3.0),
                gamma_schedule(ScheduleCase::Case2, t + 1, 0.7, 3.0),
            );
            assert!(b < a);
            assert!(2.0 * b <= a + c);
        }
    }

    #[test]
    fn slater_param_examples() {
        let (a, g) = slater_params(0.5, 100, 1.0).unwrap();
        assert!(close(a, 10.0, 1e-12) && close(g, 5f64.sqrt(), 1e-12));
        let (a, g) = slater_params(0.5, 1, 1.0).unwrap();
        assert!(close(a, 1.0, 1e-15) && close(g, 0.5f64.sqrt(), 1e-15));
        let (a, g) = slater_params(0.25, 16, 2.0).unwrap();
        assert!(close(a, 2.0, 1e-12) && close(g, 0.5, 1e-12));
        assert!(slater_params(1.0, 10, 1.0).is_err());
        assert!(slater_params(0.5, 0, 1.0).is_err());
    }

    #[test]
    fn half_exponent_matches_coupled_setting() {
        for t in [1usize, 4, 100, 2000] {
            let beta = 1.7;
            let (a, g) = slater_params(0.5, t, beta).unwrap();
            assert!(close(a, (t as f64).sqrt(), 1e-9));
            assert!(close(2.0 * beta * beta * g * g, a, 1e-9));
        }
    }

    #[test]
    fn preset_examples() {
        let PresetParams::Saddle(p) = preset_params("cao2018", 400, 5, 7.0).unwrap() else {
            panic!()
        };
        assert_eq!(p.raw[0], ("delta", 1961.0));
        assert!(close(p.eta, 0.1, 1e-15));
        let PresetParams::Saddle(p) = preset_params("chen2017", 8, 5, 7.0).unwrap() else {
            panic!()
        };
        assert!(close(p.mu, 2.0, 1e-12) && close(p.eta, 0.5, 1e-12));
        let PresetParams::Saddle(p) = preset_params("chen2018", 256, 5, 7.0).unwrap() else {
            panic!()
        };
        assert!(close(p.raw[1].1, 8.0 * 2f64.sqrt(), 1e-12));
        let PresetParams::Saddle(p) = preset_params("chen2019", 100, 5, 7.0).unwrap() else {
            panic!()
        };
        assert!(close(p.mu, 0.1, 1e-15) && close(p.eta, 0.2, 1e-15));
        assert_eq!(
            preset_params("vqb_case2", 10, 1, 1.0).unwrap(),
            PresetParams::Vqb(ScheduleCase::Case2)
        );
        assert!(matches!(preset_params("ogd", 10, 1, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn queue_bound_needs_slater_constants() {
        let c = AssumptionConstants::new(1.0, 1.0, 1.0, 1).unwrap();
        assert!(slater_queue_bound(&c, 1.0, 1.0).is_err());
        let c = c.with_slater(0.5, 0.1).unwrap();
        // γF + (GR + γ²εF + 2γ²F² + αR²)/(γ(ε−V̄)) = 1 + (1 + 0.5 + 2 + 1)/0.4
        assert!(close(slater_queue_bound(&c, 1.0, 1.0).unwrap(), 1.0 + 4.5 / 0.4, 1e-12));
    }
}
