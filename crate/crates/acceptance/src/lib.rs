//! The ten acceptance criteria of the workspace, each a function returning
//! a pass flag and a one-line account of what was measured.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use veblen_core::basins::{basin_area_fractions, compute_basins, connected_components, BasinSettings, CellLabel};
use veblen_core::dynamics::{extent, orbit_diagram, refine_period_two, simulate, SweepSettings, DEFAULT_INITIAL};
use veblen_core::equilibria::{equilibrium_count_profile, find_equilibria};
use veblen_core::model::{household_choice, step_map, step_map_via_foc, utility};
use veblen_core::presets::Preset;
use veblen_core::stability::{
    analyze, detect_bifurcation, jacobian_at, BifurcationKind, Crossing, StabilityReport, Verdict,
};
use veblen_core::sweep::{linear_grid, SweepParam};
use veblen_core::{ModelParams, State};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        alpha: rng.gen_range(0.01..0.99),
        beta: rng.gen_range(0.5..200.0),
        rho: rng.gen_range(0.0..5.0),
        sigma: rng.gen_range(0.1..2.0),
        gamma: rng.gen_range(0.1..3.0),
        w: rng.gen_range(0.5..2.0),
        c_ref: rng.gen_range(0.0..3.0),
        v: rng.gen_range(0.0..1.0),
        tau: 0.0,
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> State {
    State::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0))
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{}; {:.2} s", out.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            out.pass = false;
            out.detail = format!("{} (limit {} s)", out.detail, limit.as_secs());
        }
    }
    out
}

pub fn tax_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_params(&mut rng);
        let s = random_state(&mut rng);
        let taxed = p.with_tau(rng.gen_range(0.0..=10.0));
        let d = step_map_via_foc(s, &taxed).unwrap().distance(&step_map(s, &p).unwrap());
        worst = worst.max(d);
    }
    Outcome::new(worst <= 1e-10, format!("max deviation {worst:.3e} over 10^4 draws"))
}

pub fn jacobian_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst_rel = 0.0f64;
    for _ in 0..1_000 {
        let p = random_params(&mut rng);
        let s = random_state(&mut rng);
        let j = jacobian_at(s, &p).unwrap();
        let f = |x: State| step_map(x, &p).unwrap();
        let de = (f(State::new(s.e + h, s.pi)), f(State::new(s.e - h, s.pi)));
        let dp = (f(State::new(s.e, s.pi + h)), f(State::new(s.e, s.pi - h)));
        let fd = [
            (de.0.e - de.1.e) / (2.0 * h),
            (dp.0.e - dp.1.e) / (2.0 * h),
            (de.0.pi - de.1.pi) / (2.0 * h),
            (dp.0.pi - dp.1.pi) / (2.0 * h),
        ];
        let an = [j.j11, j.j12, j.j21, j.j22];
        let scale = an.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = an.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst_rel = worst_rel.max(err / scale);
    }
    let mut worst_det = 0.0f64;
    let mut roots = 0;
    let cases: Vec<ModelParams> =
        Preset::ALL.iter().map(|p| p.params()).chain((0..200).map(|_| random_params(&mut rng))).collect();
    for p in cases {
        for (eq, rep) in analyze(&p).unwrap() {
            roots += 1;
            let identity = (p.alpha * eq.pi_bar - rep.eta) / (1.0 + eq.pi_bar);
            worst_det = worst_det.max((rep.jacobian.det() - identity).abs());
        }
    }
    Outcome::new(
        worst_rel <= 1e-5 && worst_det <= 1e-12,
        format!("max relative FD error {worst_rel:.2e}; det identity error {worst_det:.2e} over {roots} roots"),
    )
}

pub fn regimes() -> Outcome {
    let fig6 = find_equilibria(&Preset::Fig6.params()).unwrap();
    let a = fig6.len() == 1 && fig6[0].e_bar <= 0.0;
    let fig7 = Preset::Fig7a.params();
    let counts: Vec<usize> =
        [0.0, 2.6, 5.0].iter().map(|&rho| find_equilibria(&ModelParams { rho, ..fig7 }).unwrap().len()).collect();
    let b = counts == [1, 3, 1];
    let grid = linear_grid(0.0, 5.0, 500).unwrap();
    let profile = equilibrium_count_profile(&fig7, &grid).unwrap();
    let three: Vec<usize> = profile.iter().enumerate().filter(|(_, (_, n))| *n == 3).map(|(i, _)| i).collect();
    let contiguous = !three.is_empty() && three.last().unwrap() - three[0] + 1 == three.len();
    let window = three.first().map(|&i| (profile[i].0, profile[*three.last().unwrap()].0));
    let c = contiguous && window.is_some_and(|(lo, hi)| lo <= 2.6 && 2.6 <= hi);
    Outcome::new(
        a && b && c,
        format!(
            "fig6 roots {} (e_bar {:.4}); counts at rho 0/2.6/5 = {counts:?}; 3-root window {window:?}",
            fig6.len(),
            fig6.first().map_or(f64::NAN, |r| r.e_bar)
        ),
    )
}

pub fn stability_classification() -> Outcome {
    let roots = analyze(&Preset::Fig7b.params()).unwrap();
    if roots.len() != 3 {
        return Outcome::new(false, format!("{} roots at rho = 2.6", roots.len()));
    }
    let all_pass = |r: &StabilityReport| r.cond_fold > 0.0 && r.cond_flip > 0.0 && r.cond_ns > 0.0;
    let mid = &roots[1].1;
    let outer = all_pass(&roots[0].1) && all_pass(&roots[2].1);
    let only_fold = mid.cond_fold < 0.0 && mid.cond_flip > 0.0 && mid.cond_ns > 0.0;
    let eta_ok = (mid.eta - 0.131).abs() <= 0.01 && mid.eta > 0.1;
    let real_above_one = mid.eigenvalues.iter().any(|l| l.im == 0.0 && l.re > 1.0);
    Outcome::new(
        outer && only_fold && eta_ok && real_above_one && mid.verdict == Verdict::FoldUnstable,
        format!("middle eta {:.4}, eigenvalues {:.4} / {:.4}", mid.eta, mid.eigenvalues[0], mid.eigenvalues[1]),
    )
}

fn first_of(crossings: &[Crossing], kind: BifurcationKind) -> Option<Crossing> {
    crossings.iter().find(|c| c.kind == kind).copied()
}

pub fn ns_onset() -> Outcome {
    let mut found = Vec::new();
    let mut notes = Vec::new();
    for preset in [Preset::Fig4a, Preset::Fig4b] {
        let p = preset.params();
        let scan = detect_bifurcation(&p, SweepParam::V, (0.0, 1.0), 400).unwrap();
        let Some(c) = first_of(&scan.crossings, BifurcationKind::NeimarkSacker) else {
            notes.push(format!("{preset}: no NS crossing"));
            continue;
        };
        let margin = |v: f64| {
            let roots = analyze(&ModelParams { v, ..p }).unwrap();
            roots
                .iter()
                .min_by(|a, b| (a.0.pi_bar - c.pi_bar).abs().total_cmp(&(b.0.pi_bar - c.pi_bar).abs()))
                .unwrap()
                .1
                .cond_ns
        };
        let located = (margin(c.param_value - 1e-6) > 0.0) != (margin(c.param_value + 1e-6) > 0.0);
        let complex = c.eigenvalues.iter().all(|l| l.im != 0.0);
        let modulus = c.eigenvalues[0].norm();
        let intensity = c.param_value * p.c_ref / p.w;
        let ok = located && complex && (modulus - 1.0).abs() <= 1e-6 && intensity > 1.0 / 3.0;
        notes.push(format!(
            "{preset}: v* = {:.6} (v c/w = {intensity:.4}, |lambda| - 1 = {:.1e})",
            c.param_value,
            modulus - 1.0
        ));
        found.push((c.param_value, ok));
    }
    let pass = found.len() == 2 && found.iter().all(|f| f.1) && found[1].0 < found[0].0;
    Outcome::new(pass, notes.join("; "))
}

pub fn inertia_stabilization() -> Outcome {
    let p = Preset::Fig6.params();
    let mut st = SweepSettings::new(SweepParam::Alpha, (0.05, 0.95));
    st.steps = 91;
    st.transient = 20_000;
    st.record = 500;
    let d = orbit_diagram(&p, &st).unwrap();
    let diam: Vec<f64> = d.samples.iter().map(|s| extent(s).0).collect();
    let at = |a: f64| {
        let i = d.values.iter().enumerate().min_by(|x, y| (x.1 - a).abs().total_cmp(&(y.1 - a).abs())).unwrap().0;
        diam[i]
    };
    let (low, high) = (at(0.3), at(0.8));
    let settled_from = (0..diam.len()).rev().take_while(|&i| diam[i] < 1e-6).last().map(|i| d.values[i]);
    let in_band = settled_from.is_some_and(|a| (0.5..=0.7).contains(&a));
    Outcome::new(
        low > 1e-3 && high < 1e-6 && in_band,
        format!("e-diameter {low:.3e} at alpha 0.3, {high:.1e} at alpha 0.8; single-point from alpha {settled_from:?}"),
    )
}

pub fn flip_signature() -> Outcome {
    let p = Preset::Fig5.params();
    let scan = detect_bifurcation(&p, SweepParam::V, (0.0, 1.0), 400).unwrap();
    let min_flip = scan
        .values
        .iter()
        .flat_map(|&v| analyze(&ModelParams { v, ..p }).unwrap())
        .map(|(_, r)| r.cond_flip)
        .fold(f64::INFINITY, f64::min);
    let kinds: Vec<&str> = scan.crossings.iter().map(|c| c.kind.as_str()).collect();
    let Some(flip) = first_of(&scan.crossings, BifurcationKind::Flip) else {
        return Outcome::new(
            false,
            format!("no Flip crossing of a steady state (crossings {kinds:?}; min 1+tr+det = {min_flip:.3})"),
        );
    };
    let post = ModelParams { v: flip.param_value + 0.01, ..p };
    let orbit = simulate(DEFAULT_INITIAL, &post, 5_000, 50).unwrap();
    let cycle = orbit.points.iter().find_map(|&s| refine_period_two(s, &post, 1e-8));
    Outcome::new(cycle.is_some(), format!("Flip at v = {:.6}; period-2 orbit {cycle:?}", flip.param_value))
}

pub fn basins() -> Outcome {
    let settings = BasinSettings { resolution: 400, ..Default::default() };
    let g = compute_basins(&Preset::Fig7b.params(), &settings).unwrap();
    let f = basin_area_fractions(&g);
    let both = g.attractors.len() == 2 && f.per_attractor.iter().all(|&x| x > 0.01);
    let comps: Vec<usize> =
        (0..g.attractors.len()).map(|i| connected_components(&g, CellLabel::Attractor(i))).collect();
    let fragmented = comps.iter().any(|&c| c >= 2);
    let lower =
        |preset: Preset| basin_area_fractions(&compute_basins(&preset.params(), &settings).unwrap()).per_attractor[0];
    let (l05, l075) = (lower(Preset::Fig8a), lower(Preset::Fig8b));
    Outcome::new(
        both && fragmented && l05 < l075,
        format!(
            "fractions {:?}; components per attractor {comps:?}; lower-basin fraction {l05:.4} at alpha 0.5 vs {l075:.4} at 0.75",
            f.per_attractor
        ),
    )
}

fn run_cli(threads: usize, out: &Path, args: &[&str]) -> bool {
    let threads = threads.to_string();
    let mut argv = vec!["veblen-dyn", "--quiet", "--threads", &threads, "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    veblen_dyn::main_with_args(argv) == 0
}

pub fn determinism() -> Outcome {
    let runs: [(&str, &[&str], &[&str]); 3] = [
        ("fig4a", &["--preset", "fig4a", "bifurcation"], &["sweep.csv", "crossings.csv"]),
        ("fig4b", &["--preset", "fig4b", "bifurcation"], &["sweep.csv", "crossings.csv"]),
        ("fig7b", &["--preset", "fig7b", "basin", "--resolution", "400"], &["basin_labels.csv", "basin_summary.csv"]),
    ];
    let mut compared = 0;
    for (name, args, files) in runs {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for (dir, threads) in dirs.iter().zip([1, 8]) {
            if !run_cli(threads, dir.path(), args) {
                return Outcome::new(false, format!("{name}: run with --threads {threads} failed"));
            }
        }
        for file in files {
            let a = std::fs::read(dirs[0].path().join(file)).unwrap();
            let b = std::fs::read(dirs[1].path().join(file)).unwrap();
            if a != b {
                return Outcome::new(false, format!("{name}/{file} differs between 1 and 8 threads"));
            }
            compared += 1;
        }
    }
    Outcome::new(true, format!("{compared} CSV files byte-identical"))
}

pub fn foc_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 1_000_000;
    let (mut instances, mut worst) = (0, 0.0f64);
    while instances < 100 {
        let p = ModelParams { v: rng.gen_range(0.0..0.3), tau: rng.gen_range(0.0..2.0), ..random_params(&mut rng) };
        let s = State::new(rng.gen_range(0.0..1.0), rng.gen_range(0.05..1.0));
        let hc = household_choice(s, &p).unwrap();
        // Budget (1+tau)c + m = w substituted into e' = e - gamma c + sigma m.
        let slope = p.gamma + p.sigma * (1.0 + p.tau);
        let next = |c: f64| s.e + p.sigma * p.w - slope * c;
        if hc.c_eff <= 0.0 || next(hc.c) <= 0.0 {
            continue;
        }
        instances += 1;
        let lo = p.v * p.c_ref;
        let hi = (s.e + p.sigma * p.w) / slope;
        let h = (hi - lo) / n as f64;
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for i in 1..n {
            let c = lo + i as f64 * h;
            if let Ok(u) = utility(c, next(c), s.pi, &p) {
                if u > best.1 {
                    best = (c, u);
                }
            }
        }
        worst = worst.max((best.0 - hc.c).abs() / h);
    }
    Outcome::new(worst <= 1.0, format!("max |c_grid - c| = {worst:.3} grid cells over 100 instances"))
}

pub struct Criterion {
    pub name: &'static str,
    /// Wall-clock budget, if the criterion states one.
    pub limit: Option<Duration>,
    pub check: fn() -> Outcome,
}

const fn criterion(name: &'static str, limit_secs: Option<u64>, check: fn() -> Outcome) -> Criterion {
    let limit = match limit_secs {
        Some(s) => Some(Duration::from_secs(s)),
        None => None,
    };
    Criterion { name, limit, check }
}

pub const CRITERIA: [Criterion; 10] = [
    criterion("tax equivalence", Some(1), tax_equivalence),
    criterion("Jacobian correctness", None, jacobian_correctness),
    criterion("steady-state regimes", Some(5), regimes),
    criterion("stability classification at rho = 2.6", None, stability_classification),
    criterion("Neimark-Sacker onset", Some(30), ns_onset),
    criterion("inertia stabilization", Some(30), inertia_stabilization),
    criterion("flip signature", None, flip_signature),
    criterion("basins of attraction", Some(60), basins),
    criterion("thread-count determinism", None, determinism),
    criterion("first-order-condition optimality", None, foc_optimality),
];

/// Runs the check and fails it if it overran its budget.
pub fn evaluate(c: &Criterion) -> Outcome {
    timed(c.limit, c.check)
}
