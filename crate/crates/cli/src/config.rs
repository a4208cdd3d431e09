//! Experiment configuration: preset, then JSON document, then flags.

use std::fs;
use std::path::Path;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use veblen_core::presets::Preset;
use veblen_core::ModelParams;

use crate::CliError;

/// Fills every `None` field of `self` from `base`.
macro_rules! overlay {
    ($t:ident { $($f:ident),* $(,)? }) => {
        impl $t {
            pub fn overlay(self, base: Self) -> Self {
                Self { $($f: self.$f.or(base.$f)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Inertia of green preferences, in (0, 1).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Intensity of choice.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Materialistic trend.
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub w: Option<f64>,
    /// Reference-group consumption.
    #[arg(long = "c-ref", global = true)]
    pub c_ref: Option<f64>,
    /// Weight on social comparison.
    #[arg(long, global = true)]
    pub v: Option<f64>,
    /// Consumption tax rate.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
}
overlay!(ParamArgs { alpha, beta, rho, sigma, gamma, w, c_ref, v, tau });

impl ParamArgs {
    fn apply(&self, mut p: ModelParams) -> ModelParams {
        let fields = [
            (self.alpha, &mut p.alpha),
            (self.beta, &mut p.beta),
            (self.rho, &mut p.rho),
            (self.sigma, &mut p.sigma),
            (self.gamma, &mut p.gamma),
            (self.w, &mut p.w),
            (self.c_ref, &mut p.c_ref),
            (self.v, &mut p.v),
            (self.tau, &mut p.tau),
        ];
        for (value, slot) in fields {
            if let Some(x) = value {
                *slot = x;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// Initial environmental quality.
    #[arg(long)]
    pub e0: Option<f64>,
    /// Initial green preference.
    #[arg(long)]
    pub pi0: Option<f64>,
    /// Steps discarded before recording.
    #[arg(long)]
    pub transient: Option<usize>,
    /// Steps recorded.
    #[arg(long)]
    pub record: Option<usize>,
}
overlay!(SimulateArgs { e0, pi0, transient, record });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaArgs {
    /// Cells of the sign scan on [0, 1].
    #[arg(long)]
    pub scan_nodes: Option<usize>,
}
overlay!(EquilibriaArgs { scan_nodes });

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    FixedIc,
    Continuation,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationArgs {
    /// Swept parameter (alpha, beta, rho, v, c_ref, sigma, gamma, w).
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    /// Grid values, endpoints included.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub transient: Option<usize>,
    #[arg(long)]
    pub record: Option<usize>,
    #[arg(long)]
    pub e0: Option<f64>,
    #[arg(long)]
    pub pi0: Option<f64>,
}
overlay!(BifurcationArgs { param, from, to, steps, mode, transient, record, e0, pi0 });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinArgs {
    #[arg(long)]
    pub e_min: Option<f64>,
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub pi_min: Option<f64>,
    #[arg(long)]
    pub pi_max: Option<f64>,
    /// Cells per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub capture_radius: Option<f64>,
}
overlay!(BasinArgs { e_min, e_max, pi_min, pi_max, resolution, max_iter, capture_radius });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxCheckArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}
overlay!(TaxCheckArgs { trials, tau_min, tau_max, seed });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoclineArgs {
    #[arg(long)]
    pub e_min: Option<f64>,
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}
overlay!(IsoclineArgs { e_min, e_max, points });

/// Contents of a `--config` JSON document.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub w: Option<f64>,
    pub c_ref: Option<f64>,
    pub v: Option<f64>,
    pub tau: Option<f64>,
    #[serde(default)]
    pub simulate: SimulateArgs,
    #[serde(default)]
    pub equilibria: EquilibriaArgs,
    #[serde(default)]
    pub bifurcation: BifurcationArgs,
    #[serde(default)]
    pub basin: BasinArgs,
    #[serde(default)]
    pub tax_check: TaxCheckArgs,
    #[serde(default)]
    pub isoclines: IsoclineArgs,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> ParamArgs {
        ParamArgs {
            alpha: self.alpha,
            beta: self.beta,
            rho: self.rho,
            sigma: self.sigma,
            gamma: self.gamma,
            w: self.w,
            c_ref: self.c_ref,
            v: self.v,
            tau: self.tau,
        }
    }
}

/// Parameters after layering, validated.
pub fn resolve_params(
    preset: Option<Preset>,
    config: &ExperimentConfig,
    flags: &ParamArgs,
) -> Result<ModelParams, CliError> {
    let base = preset.map(Preset::params).unwrap_or_default();
    let params = flags.clone().overlay(config.params()).apply(base);
    params.validate()?;
    Ok(params)
}

pub fn resolve_preset(flag: Option<&str>, config: &ExperimentConfig) -> Result<Option<Preset>, CliError> {
    flag.or(config.preset.as_deref()).map(|s| s.parse::<Preset>().map_err(CliError::from)).transpose()
}
