//! Sweepable parameters and grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    Beta,
    Rho,
    V,
    CRef,
    Sigma,
    Gamma,
    W,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::Alpha,
        SweepParam::Beta,
        SweepParam::Rho,
        SweepParam::V,
        SweepParam::CRef,
        SweepParam::Sigma,
        SweepParam::Gamma,
        SweepParam::W,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Rho => "rho",
            SweepParam::V => "v",
            SweepParam::CRef => "c_ref",
            SweepParam::Sigma => "sigma",
            SweepParam::Gamma => "gamma",
            SweepParam::W => "w",
        }
    }

    pub fn get(self, params: &ModelParams) -> f64 {
        match self {
            SweepParam::Alpha => params.alpha,
            SweepParam::Beta => params.beta,
            SweepParam::Rho => params.rho,
            SweepParam::V => params.v,
            SweepParam::CRef => params.c_ref,
            SweepParam::Sigma => params.sigma,
            SweepParam::Gamma => params.gamma,
            SweepParam::W => params.w,
        }
    }

    /// Copy of `params` with this parameter set to `value`.
    pub fn apply(self, params: &ModelParams, value: f64) -> ModelParams {
        let mut p = *params;
        match self {
            SweepParam::Alpha => p.alpha = value,
            SweepParam::Beta => p.beta = value,
            SweepParam::Rho => p.rho = value,
            SweepParam::V => p.v = value,
            SweepParam::CRef => p.c_ref = value,
            SweepParam::Sigma => p.sigma = value,
            SweepParam::Gamma => p.gamma = value,
            SweepParam::W => p.w = value,
        }
        p
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        SweepParam::ALL.into_iter().find(|p| p.name() == key).ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidSetting(format!("grid needs at least 2 steps, got {steps}")));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidSetting(format!("grid range [{lo}, {hi}] is empty")));
    }
    let n = (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * (i as f64) / n }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_apply() {
        assert_eq!("c-ref".parse::<SweepParam>().unwrap(), SweepParam::CRef);
        assert_eq!("V".parse::<SweepParam>().unwrap(), SweepParam::V);
        assert!("tau".parse::<SweepParam>().is_err());
        let p = ModelParams::default();
        for sp in SweepParam::ALL {
            assert_eq!(sp.get(&sp.apply(&p, 0.123)), 0.123);
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = linear_grid(0.0, 5.0, 500).unwrap();
        assert_eq!(g.len(), 500);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[499], 5.0);
        assert!(linear_grid(0.0, 1.0, 1).is_err());
        assert!(linear_grid(1.0, 1.0, 4).is_err());
    }
}
