use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use veblen_core::basins::{basin_area_fractions, compute_basins, label_cell, BasinSettings, CellLabel};
use veblen_core::dynamics::{
    lyapunov_largest, min_sector_radius, orbit_diagram, simulate, SweepMode, SweepSettings, DEFAULT_INITIAL,
};
use veblen_core::equilibria::find_equilibria;
use veblen_core::model::{household_choice, step_map, step_map_via_foc, utility};
use veblen_core::presets::Preset;
use veblen_core::stability::{analyze, detect_bifurcation, eigenvalues_from, spectral_radius};
use veblen_core::sweep::SweepParam;
use veblen_core::{ModelParams, State};

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

#[test]
fn tax_does_not_move_the_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_params(&mut rng);
        let s = State::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0));
        let reference = step_map(s, &p).unwrap();
        let taxed = step_map_via_foc(s, &p.with_tau(rng.gen_range(0.0..10.0))).unwrap();
        worst = worst.max(taxed.distance(&reference));
    }
    assert!(worst <= 1e-12, "max deviation {worst:e}");
}

#[test]
fn closed_form_choice_maximises_utility() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 100 {
        let p = ModelParams { v: rng.gen_range(0.0..0.3), ..random_params(&mut rng) };
        let s = State::new(rng.gen_range(0.0..1.0), rng.gen_range(0.05..1.0));
        let hc = household_choice(s, &p).unwrap();
        let next = |c: f64| s.e - p.gamma * c + p.sigma * (p.w - c);
        if hc.c_eff <= 0.0 || next(hc.c) <= 0.0 {
            continue;
        }
        checked += 1;
        let lo = p.v * p.c_ref;
        let hi = (s.e + p.sigma * p.w) / (p.gamma + p.sigma);
        let n = 1_000_000;
        let h = (hi - lo) / n as f64;
        let (mut best_c, mut best_u) = (f64::NAN, f64::NEG_INFINITY);
        for i in 1..n {
            let c = lo + i as f64 * h;
            if let Ok(u) = utility(c, next(c), s.pi, &p) {
                if u > best_u {
                    best_u = u;
                    best_c = c;
                }
            }
        }
        let u_star = utility(hc.c, next(hc.c), s.pi, &p).unwrap();
        assert!(u_star >= best_u - 1e-12, "closed form {u_star} below grid best {best_u}");
        assert!((best_c - hc.c).abs() <= 2.0 * h, "grid argmax {best_c} vs {}", hc.c);
    }
}

#[test]
fn eigenvalues_agree_with_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut seen = 0;
    for _ in 0..10_000 {
        let p = random_params(&mut rng);
        for (_, rep) in analyze(&p).unwrap() {
            seen += 1;
            assert!(rep.trace > 0.0);
            let from_entries = rep.jacobian.eigenvalues();
            let from_formula = eigenvalues_from(rep.trace, rep.det);
            assert!((rep.jacobian.trace() - rep.trace).abs() <= 1e-12 * rep.trace.max(1.0));
            for (a, b) in from_entries.iter().zip(&from_formula) {
                assert!((a - b).norm() <= 1e-9 * (1.0 + b.norm()), "{a} vs {b}");
            }
            let near_boundary = [rep.cond_fold, rep.cond_flip, rep.cond_ns].iter().any(|m| m.abs() < 1e-9);
            if !near_boundary {
                assert_eq!(rep.is_stable(), spectral_radius(&from_formula) < 1.0, "{p:?}");
            }
        }
    }
    assert!(seen >= 10_000);
}

#[test]
fn stable_steady_states_attract_nearby_orbits() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut tested = 0;
    while tested < 200 {
        let p = random_params(&mut rng);
        for (eq, rep) in analyze(&p).unwrap() {
            if !rep.is_stable() || rep.spectral_radius() > 0.99 {
                continue;
            }
            tested += 1;
            let start = State::new(eq.e_bar + 1e-4, (eq.pi_bar - 1e-4).max(0.0));
            let end = simulate(start, &p, 9_999, 1).unwrap().last().unwrap();
            assert!(end.distance(&eq.state()) <= 1e-6, "{p:?} {eq:?} -> {end:?}");
        }
    }
}

#[test]
fn orbit_samples_sit_on_the_steady_state() {
    let p = Preset::Fig7a.params();
    let root = find_equilibria(&p).unwrap()[0];
    let o = simulate(DEFAULT_INITIAL, &p, 2000, 500).unwrap();
    assert!(o.points.iter().all(|s| s.distance(&root.state()) <= 1e-6));
}

#[test]
fn basin_labels_match_resimulation() {
    let p = Preset::Fig7b.params();
    let settings = BasinSettings { resolution: 100, ..Default::default() };
    let g = compute_basins(&p, &settings).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let (r, c) = (rng.gen_range(0..100), rng.gen_range(0..100));
        let end = simulate(g.cell_center(r, c), &p, 0, 100_000).unwrap().last().unwrap();
        let nearest = g
            .attractors
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.state().distance(&end).total_cmp(&b.1.state().distance(&end)))
            .unwrap();
        assert!(nearest.1.state().distance(&end) <= 1e-6);
        assert_eq!(g.label(r, c), CellLabel::Attractor(nearest.0));
    }
}

#[test]
fn capture_radius_barely_matters() {
    let p = Preset::Fig8b.params();
    let coarse = compute_basins(&p, &BasinSettings { resolution: 200, ..Default::default() }).unwrap();
    let fine =
        compute_basins(&p, &BasinSettings { resolution: 200, capture_radius: 1e-8, ..Default::default() }).unwrap();
    let changed = coarse.labels.iter().zip(&fine.labels).filter(|(a, b)| a != b).count();
    assert!(changed as f64 <= 0.001 * coarse.labels.len() as f64, "{changed} labels changed");
    let targets: Vec<State> = coarse.attractors.iter().map(|a| a.state()).collect();
    assert_eq!(label_cell(targets[0], &p, &targets, 1e-8, 10).0, CellLabel::Attractor(0));
}

#[test]
fn lower_inertia_shrinks_the_brown_basin() {
    let settings = BasinSettings { resolution: 200, ..Default::default() };
    let fa = basin_area_fractions(&compute_basins(&Preset::Fig8a.params(), &settings).unwrap());
    let fb = basin_area_fractions(&compute_basins(&Preset::Fig8b.params(), &settings).unwrap());
    assert_eq!(fa.per_attractor.len(), 2);
    assert!(fa.per_attractor[0] < fb.per_attractor[0]);
    assert_eq!(fa.unconverged, 0.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let p = Preset::Fig7b.params();
            let basins = compute_basins(&p, &BasinSettings { resolution: 60, ..Default::default() }).unwrap();
            let mut st = SweepSettings::new(SweepParam::V, (0.0, 1.0));
            st.steps = 50;
            st.transient = 300;
            st.record = 50;
            st.mode = SweepMode::FixedIc { initial: DEFAULT_INITIAL };
            let diagram = orbit_diagram(&Preset::Fig4a.params(), &st).unwrap();
            let scan = detect_bifurcation(&p, SweepParam::Rho, (0.0, 5.0), 200).unwrap();
            (basins, diagram, scan)
        })
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn post_hopf_orbit_is_an_invariant_circle() {
    let p = ModelParams { v: 0.5, ..Preset::Fig4a.params() };
    let roots = analyze(&p).unwrap();
    assert_eq!(roots.len(), 1);
    let (eq, rep) = roots[0];
    assert!(!rep.is_stable());
    let o = simulate(DEFAULT_INITIAL, &p, 20_000, 5_000).unwrap();
    let (de, dp) = o.extent();
    assert!(de.max(dp) > 1e-3);
    assert!(min_sector_radius(&o.points, eq.state(), 16).unwrap() > 1e-4);
    let l1 = lyapunov_largest(DEFAULT_INITIAL, &p, 20_000, 20_000).unwrap();
    let l2 = lyapunov_largest(DEFAULT_INITIAL, &p, 20_000, 40_000).unwrap();
    assert!(l1.abs() <= 0.01, "{l1}");
    assert!((l1 - l2).abs() <= 1e-3, "{l1} vs {l2}");
}
