use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use veblen_core::basins::{
    basin_area_fractions, compute_basins, connected_components, BasinSettings, CellLabel, DEFAULT_CAPTURE_RADIUS,
    DEFAULT_MAX_ITER, DEFAULT_RESOLUTION,
};
use veblen_core::dynamics::{
    orbit_diagram, simulate as run_orbit, SweepMode, SweepSettings, DEFAULT_INITIAL, DEFAULT_RECORD,
    DEFAULT_SWEEP_STEPS, DEFAULT_TRANSIENT,
};
use veblen_core::equilibria::{classify_regime, find_equilibria_with, isocline_points, DEFAULT_SCAN_NODES};
use veblen_core::model::{step_map, step_map_via_foc};
use veblen_core::presets::Preset;
use veblen_core::stability::{classify_equilibrium, detect_bifurcation, spectral_radius};
use veblen_core::sweep::{linear_grid, SweepParam};
use veblen_core::{ModelParams, State};

use crate::config::{BasinArgs, BifurcationArgs, EquilibriaArgs, IsoclineArgs, ModeArg, SimulateArgs, TaxCheckArgs};
use crate::output::{num, OutDir};
use crate::plot::{self, Series};
use crate::CliError;

/// `println!` unless `--quiet` was given.
macro_rules! say {
    ($ctx:expr, $($arg:tt)*) => {
        if !$ctx.quiet {
            println!($($arg)*);
        }
    };
}

/// Largest tolerated deviation in `tax-check`.
pub const TAX_TOLERANCE: f64 = 1e-10;

pub struct Context {
    pub params: ModelParams,
    pub preset: Option<Preset>,
    pub out: OutDir,
    pub png: bool,
    /// Suppress the stdout summary.
    pub quiet: bool,
}

fn initial_state(e0: Option<f64>, pi0: Option<f64>) -> Result<State, CliError> {
    let s = State::new(e0.unwrap_or(DEFAULT_INITIAL.e), pi0.unwrap_or(DEFAULT_INITIAL.pi));
    if !s.is_finite() || s.pi <= -1.0 {
        return Err(CliError::Config(format!("initial state ({}, {}) needs finite e and pi > -1", s.e, s.pi)));
    }
    Ok(s)
}

pub fn simulate(ctx: &Context, args: SimulateArgs) -> Result<(), CliError> {
    let initial = initial_state(args.e0, args.pi0)?;
    let transient = args.transient.unwrap_or(DEFAULT_TRANSIENT);
    let record = args.record.unwrap_or(DEFAULT_RECORD);
    let orbit = run_orbit(initial, &ctx.params, transient, record)?;

    let mut csv = ctx.out.csv("orbit.csv", &["t", "e", "pi"])?;
    for (i, s) in orbit.points.iter().enumerate() {
        csv.row([(transient + 1 + i).to_string(), num(s.e), num(s.pi)])?;
    }
    let path = csv.finish()?;
    match orbit.last() {
        Some(s) => say!(ctx, "{} states written to {}; final (e, pi) = ({}, {})", record, path.display(), s.e, s.pi),
        None => say!(ctx, "no states recorded; {} holds the header only", path.display()),
    }
    if ctx.png {
        let t0 = transient as f64 + 1.0;
        let along = |f: fn(&State) -> f64| Series {
            points: orbit.points.iter().enumerate().map(|(i, s)| (t0 + i as f64, f(s))).collect(),
            color: plot::BLUE,
        };
        plot::scatter_panels(&ctx.out.path("orbit.png"), &[vec![along(|s| s.e)], vec![along(|s| s.pi)]])?;
    }
    Ok(())
}

pub fn equilibria(ctx: &Context, args: EquilibriaArgs) -> Result<(), CliError> {
    let p = &ctx.params;
    let roots = find_equilibria_with(p, args.scan_nodes.unwrap_or(DEFAULT_SCAN_NODES))?;
    let regime = classify_regime(p);
    say!(
        ctx,
        "{:?} Veblen regime: v*c_ref/w = {} against threshold {}",
        regime.regime,
        regime.intensity,
        regime.threshold_value
    );

    let mut csv = ctx.out.csv("equilibria.csv", &["e_bar", "pi_bar", "eta", "trace", "det", "verdict", "label"])?;
    for eq in &roots {
        let rep = classify_equilibrium(eq, p)?;
        csv.row([
            num(eq.e_bar),
            num(eq.pi_bar),
            num(rep.eta),
            num(rep.trace),
            num(rep.det),
            rep.verdict.as_str().to_string(),
            eq.label.as_str().to_string(),
        ])?;
        say!(
            ctx,
            "{:>6}: e_bar = {:<22} pi_bar = {:<22} eta = {:<12.6} |lambda| = {:<10.6} {}{}",
            eq.label.as_str(),
            eq.e_bar,
            eq.pi_bar,
            rep.eta,
            spectral_radius(&rep.eigenvalues),
            rep.verdict,
            if eq.tangency { " (tangency)" } else { "" },
        );
    }
    csv.finish()?;

    if ctx.png {
        let lo = roots.iter().map(|r| r.e_bar).fold(-1.0f64, f64::min) - 0.1;
        let hi = roots.iter().map(|r| r.e_bar).fold(1.0f64, f64::max) + 0.1;
        let mut series = isocline_series(p, lo, hi, 801)?;
        let mark = 0.005 * (hi - lo);
        series.push(Series {
            points: roots
                .iter()
                .flat_map(|r| {
                    [(-mark, 0.0), (mark, 0.0), (0.0, mark), (0.0, -mark), (0.0, 0.0)]
                        .map(|(de, dp)| (r.e_bar + de, r.pi_bar + dp))
                })
                .collect(),
            color: plot::BLACK,
        });
        plot::scatter_panels(&ctx.out.path("equilibria.png"), &[series])?;
    }
    Ok(())
}

fn sweep_target(ctx: &Context, args: &BifurcationArgs) -> Result<(SweepParam, (f64, f64)), CliError> {
    let preset_sweep = ctx.preset.map(Preset::sweep);
    let param = match &args.param {
        Some(name) => name.parse::<SweepParam>()?,
        None => preset_sweep
            .map(|(p, _)| p)
            .ok_or_else(|| CliError::Config("bifurcation needs --param (or a preset)".into()))?,
    };
    let default_range = preset_sweep.filter(|(p, _)| *p == param).map(|(_, r)| r);
    let from = args.from.or(default_range.map(|r| r.0));
    let to = args.to.or(default_range.map(|r| r.1));
    match (from, to) {
        (Some(a), Some(b)) => Ok((param, (a, b))),
        _ => Err(CliError::Config(format!("bifurcation over {param} needs --from and --to"))),
    }
}

pub fn bifurcation(ctx: &Context, args: BifurcationArgs) -> Result<(), CliError> {
    let (param, range) = sweep_target(ctx, &args)?;
    let initial = initial_state(args.e0, args.pi0)?;
    let mut settings = SweepSettings::new(param, range);
    settings.steps = args.steps.unwrap_or(DEFAULT_SWEEP_STEPS);
    settings.transient = args.transient.unwrap_or(DEFAULT_TRANSIENT);
    settings.record = args.record.unwrap_or(DEFAULT_RECORD);
    settings.mode = match args.mode.unwrap_or(ModeArg::Continuation) {
        ModeArg::FixedIc => SweepMode::FixedIc { initial },
        ModeArg::Continuation => SweepMode::Continuation { initial },
    };
    let diagram = orbit_diagram(&ctx.params, &settings)?;
    let scan = detect_bifurcation(&ctx.params, param, range, settings.steps)?;

    let mut csv = ctx.out.csv("sweep.csv", &["param_value", "e", "pi"])?;
    for (x, points) in diagram.values.iter().zip(&diagram.samples) {
        for s in points {
            csv.row([num(*x), num(s.e), num(s.pi)])?;
        }
    }
    csv.finish()?;
    let mut csv = ctx.out.csv("crossings.csv", &["param_value", "type"])?;
    for c in &scan.crossings {
        csv.row([num(c.param_value), c.kind.as_str().to_string()])?;
    }
    csv.finish()?;

    say!(
        ctx,
        "{} values of {param} in [{}, {}] ({} mode); {} crossing(s)",
        diagram.values.len(),
        range.0,
        range.1,
        settings.mode.name(),
        scan.crossings.len()
    );
    for c in &scan.crossings {
        say!(
            ctx,
            "  {:<9} at {param} = {:<22} (e_bar, pi_bar) = ({}, {}), |lambda| = {}",
            c.kind.as_str(),
            c.param_value,
            c.e_bar,
            c.pi_bar,
            spectral_radius(&c.eigenvalues)
        );
    }
    for x in &scan.tracking_failures {
        eprintln!("warning: steady-state branch lost after {param} = {x}");
    }

    if ctx.png {
        let pts = |f: fn(&State) -> f64| Series {
            points: diagram
                .values
                .iter()
                .zip(&diagram.samples)
                .flat_map(|(&x, s)| s.iter().map(move |st| (x, f(st))))
                .collect(),
            color: plot::BLUE,
        };
        plot::scatter_panels(&ctx.out.path("sweep.png"), &[vec![pts(|s| s.e)], vec![pts(|s| s.pi)]])?;
    }
    Ok(())
}

pub fn basin(ctx: &Context, args: BasinArgs) -> Result<(), CliError> {
    let settings = BasinSettings {
        e_range: (args.e_min.unwrap_or(0.0), args.e_max.unwrap_or(1.0)),
        pi_range: (args.pi_min.unwrap_or(0.0), args.pi_max.unwrap_or(1.0)),
        resolution: args.resolution.unwrap_or(DEFAULT_RESOLUTION),
        max_iter: args.max_iter.unwrap_or(DEFAULT_MAX_ITER),
        capture_radius: args.capture_radius.unwrap_or(DEFAULT_CAPTURE_RADIUS),
    };
    let grid = compute_basins(&ctx.params, &settings)?;
    let n = grid.resolution;

    let mut csv = ctx.out.csv("basin_labels.csv", &["e_min", "e_max", "pi_min", "pi_max", "resolution"])?;
    csv.row([num(grid.e_range.0), num(grid.e_range.1), num(grid.pi_range.0), num(grid.pi_range.1), n.to_string()])?;
    for row in grid.labels.chunks(n) {
        csv.row(row.iter().map(|l| l.code().to_string()))?;
    }
    csv.finish()?;

    let fractions = basin_area_fractions(&grid);
    let mut csv = ctx.out.csv("basin_summary.csv", &["attractor", "e_bar", "pi_bar", "fraction", "components"])?;
    say!(ctx, "{} stable steady state(s) on a {n}x{n} grid", grid.attractors.len());
    for (i, (a, f)) in grid.attractors.iter().zip(&fractions.per_attractor).enumerate() {
        let comps = connected_components(&grid, CellLabel::Attractor(i));
        csv.row([i.to_string(), num(a.e_bar), num(a.pi_bar), num(*f), comps.to_string()])?;
        say!(ctx, "  attractor {i} (pi_bar = {}): area {f}, {comps} component(s)", a.pi_bar);
    }
    let comps = connected_components(&grid, CellLabel::Unconverged);
    csv.row(["-1".to_string(), String::new(), String::new(), num(fractions.unconverged), comps.to_string()])?;
    say!(ctx, "  unconverged: area {}, {comps} component(s)", fractions.unconverged);
    csv.finish()?;

    if ctx.png {
        let last = grid.attractors.len().saturating_sub(1);
        plot::raster(&ctx.out.path("basin_labels.png"), n, |r, c| match grid.label(r, c) {
            CellLabel::Unconverged => plot::WHITE,
            CellLabel::Attractor(i) if i == last => plot::GREEN,
            CellLabel::Attractor(0) => plot::RED,
            CellLabel::Attractor(_) => plot::GREY,
        })?;
    }
    Ok(())
}

pub fn tax_check(ctx: &Context, args: TaxCheckArgs) -> Result<(), CliError> {
    let trials = args.trials.unwrap_or(10_000);
    if trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let (lo, hi) = (args.tau_min.unwrap_or(0.0), args.tau_max.unwrap_or(10.0));
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(CliError::Config(format!("tax range [{lo}, {hi}] must satisfy 0 <= tau_min <= tau_max")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(0));
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let s = State::new(rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..=1.0));
        let tau = rng.gen_range(lo..=hi);
        let base = step_map(s, &ctx.params)?;
        let taxed = step_map_via_foc(s, &ctx.params.with_tau(tau))?;
        worst = worst.max(taxed.distance(&base));
    }
    say!(ctx, "max |deviation| = {worst:e} over {trials} trials, tau in [{lo}, {hi}]");
    if worst <= TAX_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Check(format!("deviation {worst:e} exceeds {TAX_TOLERANCE:e}")))
    }
}

fn isocline_series(p: &ModelParams, lo: f64, hi: f64, points: usize) -> Result<Vec<Series>, CliError> {
    let iso = isocline_points(p, &linear_grid(lo, hi, points)?);
    let visible = |pts: Vec<(f64, f64)>| pts.into_iter().filter(|(_, y)| (-0.1..=1.1).contains(y)).collect();
    let mut linear: Vec<(f64, f64)> = visible(iso.linear);
    if iso.linear_is_vertical {
        linear = linear_grid(0.0, 1.0, points)?.into_iter().map(|y| (0.0, y)).collect();
    }
    Ok(vec![Series { points: linear, color: plot::BLUE }, Series { points: iso.logistic, color: plot::RED }])
}

pub fn isoclines(ctx: &Context, args: IsoclineArgs) -> Result<(), CliError> {
    let (lo, hi) = (args.e_min.unwrap_or(-1.0), args.e_max.unwrap_or(1.0));
    let points = args.points.unwrap_or(201);
    let grid = linear_grid(lo, hi, points)?;
    let iso = isocline_points(&ctx.params, &grid);

    let mut csv = ctx.out.csv("isoclines.csv", &["curve", "e", "pi"])?;
    for (e, pi) in &iso.linear {
        csv.row(["linear".to_string(), num(*e), num(*pi)])?;
    }
    if iso.linear_is_vertical {
        for pi in linear_grid(0.0, 1.0, points)? {
            csv.row(["linear_vertical".to_string(), num(0.0), num(pi)])?;
        }
    }
    for (e, pi) in &iso.logistic {
        csv.row(["logistic".to_string(), num(*e), num(*pi)])?;
    }
    let path = csv.finish()?;
    say!(ctx, "isoclines on e in [{lo}, {hi}] ({points} points) written to {}", path.display());
    if ctx.png {
        plot::scatter_panels(
            &ctx.out.path("isoclines.png"),
            &[isocline_series(&ctx.params, lo, hi, points.max(801))?],
        )?;
    }
    Ok(())
}
