//! Steady states.
//!
//! A steady state satisfies `e = K*pi` and `pi = L(e)` with `L` the
//! broken-windows logistic, so every equilibrium is a root of the scalar gap
//! `g(pi) = pi - L(K*pi)` on the unit interval. `g(0) < 0` and `g(1) >= 0`,
//! hence at least one root always exists; there are at most three.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{broken_windows_prob, ModelParams, State};

pub const DEFAULT_SCAN_NODES: usize = 10_000;
/// Roots closer than this in `pi` are merged and flagged as a tangency.
pub const DEDUP_TOLERANCE: f64 = 1e-6;
/// Tolerance on the regime comparison `v*c_ref/w` vs `sigma/(sigma+gamma)`.
pub const REGIME_TOLERANCE: f64 = 1e-14;

const MAX_BISECTIONS: usize = 200;

/// Ordinal tag among coexisting steady states, by `pi_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RootLabel {
    Unique,
    Lower,
    Middle,
    Upper,
}

impl RootLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RootLabel::Unique => "unique",
            RootLabel::Lower => "lower",
            RootLabel::Middle => "middle",
            RootLabel::Upper => "upper",
        }
    }
}

impl fmt::Display for RootLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub e_bar: f64,
    pub pi_bar: f64,
    /// Max absolute residual of the two steady-state conditions.
    pub residual: f64,
    pub label: RootLabel,
    /// Set when two roots were merged within [`DEDUP_TOLERANCE`].
    pub tangency: bool,
}

impl Equilibrium {
    pub fn state(&self) -> State {
        State::new(self.e_bar, self.pi_bar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Strong,
    Threshold,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VeblenRegime {
    pub regime: Regime,
    /// `sigma/(sigma+gamma)`.
    pub threshold_value: f64,
    /// `v*c_ref/w`.
    pub intensity: f64,
}

pub fn classify_regime(params: &ModelParams) -> VeblenRegime {
    let threshold_value = params.sigma / (params.sigma + params.gamma);
    let intensity = params.veblen_intensity();
    let regime = if (intensity - threshold_value).abs() <= REGIME_TOLERANCE {
        Regime::Threshold
    } else if intensity > threshold_value {
        Regime::Strong
    } else {
        Regime::Weak
    };
    VeblenRegime { regime, threshold_value, intensity }
}

/// `g(pi) = pi - L(K*pi)`.
pub fn fixed_point_gap(pi: f64, params: &ModelParams) -> f64 {
    pi - broken_windows_prob(params.isocline_slope() * pi, params)
}

fn residual(pi: f64, params: &ModelParams) -> f64 {
    let e = params.isocline_slope() * pi;
    let first = (e - params.isocline_slope() * pi).abs();
    let second = (pi - broken_windows_prob(e, params)).abs();
    first.max(second)
}

fn bisect(mut lo: f64, mut hi: f64, params: &ModelParams) -> f64 {
    let mut g_lo = fixed_point_gap(lo, params);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = fixed_point_gap(mid, params);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    // Pick the endpoint with the smaller gap.
    if fixed_point_gap(lo, params).abs() <= fixed_point_gap(hi, params).abs() {
        lo
    } else {
        hi
    }
}

/// [`find_equilibria_with`] at [`DEFAULT_SCAN_NODES`].
pub fn find_equilibria(params: &ModelParams) -> Result<Vec<Equilibrium>> {
    find_equilibria_with(params, DEFAULT_SCAN_NODES)
}

/// All steady states, sorted by `pi_bar`, via a sign scan of `g` on `nodes`
/// equal cells of `[0, 1]` followed by bisection to full precision.
pub fn find_equilibria_with(params: &ModelParams, nodes: usize) -> Result<Vec<Equilibrium>> {
    params.validate()?;
    if nodes < 2 {
        return Err(Error::InvalidSetting(format!("scan needs at least 2 nodes, got {nodes}")));
    }
    let at = |i: usize| i as f64 / nodes as f64;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_g = fixed_point_gap(prev_x, params);
    if prev_g == 0.0 {
        roots.push(prev_x);
    }
    for i in 1..=nodes {
        let x = at(i);
        let g = fixed_point_gap(x, params);
        if g == 0.0 {
            roots.push(x);
        } else if prev_g != 0.0 && (g < 0.0) != (prev_g < 0.0) {
            roots.push(bisect(prev_x, x, params));
        }
        prev_x = x;
        prev_g = g;
    }
    if roots.is_empty() {
        return Err(Error::NoEquilibrium { nodes });
    }

    // Merge tangent pairs.
    let mut merged: Vec<(f64, bool)> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged.last_mut() {
            Some((last, tangent)) if (r - *last).abs() <= DEDUP_TOLERANCE => {
                if residual(r, params) < residual(*last, params) {
                    *last = r;
                }
                *tangent = true;
            }
            _ => merged.push((r, false)),
        }
    }

    let k = params.isocline_slope();
    let n = merged.len();
    Ok(merged
        .into_iter()
        .enumerate()
        .map(|(i, (pi_bar, tangency))| {
            let label = match (n, i) {
                (1, _) => RootLabel::Unique,
                (_, 0) => RootLabel::Lower,
                (_, i) if i + 1 == n => RootLabel::Upper,
                _ => RootLabel::Middle,
            };
            Equilibrium { e_bar: k * pi_bar, pi_bar, residual: residual(pi_bar, params), label, tangency }
        })
        .collect())
}

/// Number of steady states at each `rho` of an ascending grid.
pub fn equilibrium_count_profile(params: &ModelParams, rho_grid: &[f64]) -> Result<Vec<(f64, usize)>> {
    if rho_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSetting("rho grid must be ascending".into()));
    }
    rho_grid
        .par_iter()
        .map(|&rho| {
            let p = ModelParams { rho, ..*params };
            find_equilibria(&p).map(|eqs| (rho, eqs.len()))
        })
        .collect()
}

/// Samples of both steady-state isoclines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Isoclines {
    /// `pi = e/K`; empty when `K = 0`.
    pub linear: Vec<(f64, f64)>,
    /// `pi = L(e)`.
    pub logistic: Vec<(f64, f64)>,
    /// `K = 0`: the linear isocline is the vertical line `e = 0`.
    pub linear_is_vertical: bool,
}

pub fn isocline_points(params: &ModelParams, e_grid: &[f64]) -> Isoclines {
    let k = params.isocline_slope();
    let linear_is_vertical = k == 0.0;
    let linear = if linear_is_vertical { Vec::new() } else { e_grid.iter().map(|&e| (e, e / k)).collect() };
    let logistic = e_grid.iter().map(|&e| (e, broken_windows_prob(e, params))).collect();
    Isoclines { linear, logistic, linear_is_vertical }
}
