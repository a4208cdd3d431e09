//! Named parameter sets with their default sweeps.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::model::ModelParams;
use crate::sweep::SweepParam;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Strong comparison sweep in `v`, intensity of choice 100.
    Fig4a,
    /// Strong comparison sweep in `v`, intensity of choice 1000.
    Fig4b,
    /// Sweep in `v` at low inertia (`alpha = 0.49`).
    Fig5,
    /// Inertia sweep under strong Veblen effects.
    Fig6,
    /// Weak Veblen effects, no materialistic trend.
    Fig7a,
    /// Weak Veblen effects at `rho = 2.6`: three steady states.
    Fig7b,
    /// Basins at `alpha = 0.5`.
    Fig8a,
    /// Basins at `alpha = 0.75`.
    Fig8b,
}

const STRONG: ModelParams =
    ModelParams { alpha: 0.75, beta: 100.0, rho: 0.0, sigma: 0.75, gamma: 1.5, w: 1.0, c_ref: 3.0, v: 0.0, tau: 0.0 };

const WEAK: ModelParams =
    ModelParams { alpha: 0.9, beta: 10.0, rho: 0.0, sigma: 0.75, gamma: 1.5, w: 1.0, c_ref: 1.0, v: 0.1, tau: 0.0 };

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7a,
        Preset::Fig7b,
        Preset::Fig8a,
        Preset::Fig8b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7a => "fig7a",
            Preset::Fig7b => "fig7b",
            Preset::Fig8a => "fig8a",
            Preset::Fig8b => "fig8b",
        }
    }

    /// The swept parameter holds the start of its range.
    pub fn params(self) -> ModelParams {
        match self {
            Preset::Fig4a => STRONG,
            Preset::Fig4b => ModelParams { beta: 1000.0, ..STRONG },
            Preset::Fig5 => ModelParams { alpha: 0.49, ..STRONG },
            Preset::Fig6 => ModelParams { alpha: 0.05, beta: 10.0, v: 1.0, ..STRONG },
            Preset::Fig7a => WEAK,
            Preset::Fig7b => ModelParams { rho: 2.6, ..WEAK },
            Preset::Fig8a => ModelParams { alpha: 0.5, rho: 2.6, ..WEAK },
            Preset::Fig8b => ModelParams { alpha: 0.75, rho: 2.6, ..WEAK },
        }
    }

    /// Default bifurcation sweep: parameter and range.
    pub fn sweep(self) -> (SweepParam, (f64, f64)) {
        match self {
            Preset::Fig4a | Preset::Fig4b | Preset::Fig5 => (SweepParam::V, (0.0, 1.0)),
            Preset::Fig6 => (SweepParam::Alpha, (0.05, 0.95)),
            Preset::Fig7a | Preset::Fig7b | Preset::Fig8a | Preset::Fig8b => (SweepParam::Rho, (0.0, 5.0)),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidSetting(format!("unknown preset `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_round_trip() {
        for p in Preset::ALL {
            p.params().validate().unwrap();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig9".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_values() {
        let p = Preset::Fig6.params();
        assert_eq!((p.beta, p.v, p.sigma, p.gamma, p.w, p.c_ref, p.rho), (10.0, 1.0, 0.75, 1.5, 1.0, 3.0, 0.0));
        let p = Preset::Fig7b.params();
        assert_eq!((p.alpha, p.beta, p.v, p.c_ref, p.rho), (0.9, 10.0, 0.1, 1.0, 2.6));
        assert_eq!(Preset::Fig8a.params().alpha, 0.5);
        assert_eq!(Preset::Fig8b.params().alpha, 0.75);
        assert_eq!(Preset::Fig4b.params().beta, 1000.0);
    }
}
