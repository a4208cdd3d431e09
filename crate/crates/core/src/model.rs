//! Structural model: parameters, household first-order conditions, the
//! broken-windows probability and the reduced two-dimensional map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents passed to `exp` are clamped to this magnitude.
pub const EXP_CLAMP: f64 = 700.0;

/// Structural constants of the economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Inertia of green preferences.
    pub alpha: f64,
    /// Intensity of choice.
    pub beta: f64,
    /// Materialistic secular trend.
    pub rho: f64,
    /// Marginal effectiveness of conservation.
    pub sigma: f64,
    /// Marginal damage of consumption.
    pub gamma: f64,
    /// Wage / endowment.
    pub w: f64,
    /// Reference-group consumption.
    pub c_ref: f64,
    /// Weight on social comparison.
    pub v: f64,
    /// Consumption tax rate.
    #[serde(default)]
    pub tau: f64,
}

impl Default for ModelParams {
    /// Weak-Veblen calibration with a single green equilibrium.
    fn default() -> Self {
        Self { alpha: 0.9, beta: 10.0, rho: 0.0, sigma: 0.75, gamma: 1.5, w: 1.0, c_ref: 1.0, v: 0.1, tau: 0.0 }
    }
}

impl ModelParams {
    /// Checks every admissibility constraint on the constants.
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool, &'static str); 9] = [
            ("alpha", self.alpha, self.alpha > 0.0 && self.alpha < 1.0, "must lie in (0, 1)"),
            ("beta", self.beta, self.beta > 0.0, "must be positive"),
            ("rho", self.rho, self.rho >= 0.0, "must be non-negative"),
            ("sigma", self.sigma, self.sigma > 0.0, "must be positive"),
            ("gamma", self.gamma, self.gamma > 0.0, "must be positive"),
            ("w", self.w, self.w > 0.0, "must be positive"),
            ("c_ref", self.c_ref, self.c_ref >= 0.0, "must be non-negative"),
            ("v", self.v, self.v >= 0.0, "must be non-negative"),
            ("tau", self.tau, self.tau >= 0.0, "must be non-negative"),
        ];
        for (name, value, ok, reason) in checks {
            if !value.is_finite() || !ok {
                return Err(Error::InvalidParam { name, value, reason });
            }
        }
        if !self.isocline_slope().is_finite() {
            return Err(Error::InvalidParam {
                name: "v",
                value: self.v,
                reason: "social-comparison bracket is not finite",
            });
        }
        Ok(())
    }

    /// `sigma*w - (sigma+gamma)*v*c_ref`: the bracket of the environmental
    /// law of motion, and the slope of the linear steady-state isocline
    /// `e = K*pi`.
    pub fn isocline_slope(&self) -> f64 {
        self.sigma * self.w - (self.sigma + self.gamma) * self.v * self.c_ref
    }

    /// Status-consumption intensity `v*c_ref/w`.
    pub fn veblen_intensity(&self) -> f64 {
        self.v * self.c_ref / self.w
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

/// One generation's point: environmental quality and green preference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub e: f64,
    pub pi: f64,
}

impl State {
    pub const fn new(e: f64, pi: f64) -> Self {
        Self { e, pi }
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &State) -> f64 {
        (self.e - other.e).abs().max((self.pi - other.pi).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.pi.is_finite()
    }
}

/// Optimal allocation of the young household.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdChoice {
    pub c: f64,
    pub m: f64,
    /// Effective consumption `c - v*c_ref`.
    pub c_eff: f64,
    /// Veblen overconsumption `(pi/(1+pi))*v*c_ref`.
    pub overconsumption: f64,
}

impl HouseholdChoice {
    /// `(1+tau)*c + m - w`.
    ///
    /// Zero without tax. With `tau > 0` the tax-adjusted conservation rule
    /// allocates exactly `tau * overconsumption` beyond the budget: the tax
    /// levied on Veblen overconsumption flows back into conservation.
    pub fn budget_residual(&self, params: &ModelParams) -> f64 {
        (1.0 + params.tau) * self.c + self.m - params.w
    }
}

/// Logistic `1/(1+exp(x))` with the exponent clamped to `±EXP_CLAMP`.
pub(crate) fn logistic_of_exponent(x: f64) -> f64 {
    1.0 / (1.0 + x.clamp(-EXP_CLAMP, EXP_CLAMP).exp())
}

/// Probability of valuing the environment, `1/(1+exp(-beta*e + rho))`.
pub fn broken_windows_prob(e: f64, params: &ModelParams) -> f64 {
    logistic_of_exponent(-params.beta * e + params.rho)
}

fn check_pi(pi: f64) -> Result<()> {
    if pi > -1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("green preference pi = {pi} must exceed -1")))
    }
}

/// Closed-form first-order conditions, with or without the consumption tax.
pub fn household_choice(state: State, params: &ModelParams) -> Result<HouseholdChoice> {
    check_pi(state.pi)?;
    let ModelParams { sigma, gamma, w, c_ref, v, tau, .. } = *params;
    let denom = gamma + sigma * (1.0 + tau);
    if denom <= 0.0 {
        return Err(Error::Domain(format!("gamma + sigma*(1+tau) = {denom} must be positive")));
    }
    let share = state.pi / (1.0 + state.pi);
    let scale = (1.0 + state.pi) * denom;
    let overconsumption = share * v * c_ref;
    let c = (sigma * w + state.e) / scale + overconsumption;
    let m = (gamma * w - (1.0 + tau) * state.e) / scale + share * (w - v * c_ref);
    Ok(HouseholdChoice { c, m, c_eff: c - v * c_ref, overconsumption })
}

/// `ln(c - v*c_ref) + pi*ln(e_next)` on the interior of its domain.
pub fn utility(c: f64, e_next: f64, pi: f64, params: &ModelParams) -> Result<f64> {
    let c_eff = c - params.v * params.c_ref;
    if c_eff <= 0.0 || e_next <= 0.0 {
        return Err(Error::Domain(format!(
            "utility undefined at effective consumption {c_eff}, next-period environment {e_next}"
        )));
    }
    Ok(c_eff.ln() + pi * e_next.ln())
}

/// One step of the reduced map.
///
/// The tax rate is ignored: the reduced map does not depend on it.
pub fn step_map(state: State, params: &ModelParams) -> Result<State> {
    check_pi(state.pi)?;
    Ok(step_unchecked(state, params))
}

#[inline]
pub(crate) fn step_unchecked(state: State, params: &ModelParams) -> State {
    let share = state.pi / (1.0 + state.pi);
    State {
        e: share * (state.e + params.isocline_slope()),
        pi: params.alpha * state.pi + (1.0 - params.alpha) * broken_windows_prob(state.e, params),
    }
}

/// The same step obtained by substituting the household choice (with the
/// stored tax rate) into `e' = e - gamma*c + sigma*m`.
pub fn step_map_via_foc(state: State, params: &ModelParams) -> Result<State> {
    let choice = household_choice(state, params)?;
    Ok(State {
        e: state.e - params.gamma * choice.c + params.sigma * choice.m,
        pi: params.alpha * state.pi + (1.0 - params.alpha) * broken_windows_prob(state.e, params),
    })
}
