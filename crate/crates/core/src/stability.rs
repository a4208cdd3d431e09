//! Local stability of steady states and scans for their bifurcations.
//!
//! Stability of a 2-D map is read off the trace/determinant triangle:
//! `1 - tr + det > 0` (no eigenvalue through +1), `1 + tr + det > 0` (none
//! through -1) and `1 - det > 0` (no complex pair through the unit circle).

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{find_equilibria, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State, EXP_CLAMP};
use crate::sweep::{linear_grid, SweepParam};

/// Crossings are refined until the bracketing interval is this narrow.
pub const CROSSING_TOLERANCE: f64 = 1e-8;
/// Largest `|delta pi_bar|` accepted when pairing roots of neighbouring grid
/// points. A unique root is always paired with the unique root next door.
pub const BRANCH_JUMP_GUARD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jacobian {
    pub j11: f64,
    pub j12: f64,
    pub j21: f64,
    pub j22: f64,
}

impl Jacobian {
    pub fn trace(&self) -> f64 {
        self.j11 + self.j22
    }

    pub fn det(&self) -> f64 {
        self.j11 * self.j22 - self.j12 * self.j21
    }

    pub fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        [self.j11 * u[0] + self.j12 * u[1], self.j21 * u[0] + self.j22 * u[1]]
    }

    pub fn compose(&self, first: &Jacobian) -> Jacobian {
        Jacobian {
            j11: self.j11 * first.j11 + self.j12 * first.j21,
            j12: self.j11 * first.j12 + self.j12 * first.j22,
            j21: self.j21 * first.j11 + self.j22 * first.j21,
            j22: self.j21 * first.j12 + self.j22 * first.j22,
        }
    }

    pub fn eigenvalues(&self) -> [Complex64; 2] {
        eigenvalues_from(self.trace(), self.det())
    }
}

/// Roots of `lambda^2 - tr*lambda + det`, larger real part first.
pub fn eigenvalues_from(trace: f64, det: f64) -> [Complex64; 2] {
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = 0.5 * (trace + trace.signum() * sq);
        let small = if big != 0.0 { det / big } else { 0.5 * (trace - sq) };
        let (a, b) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * trace, im), Complex64::new(0.5 * trace, -im)]
    }
}

pub fn spectral_radius(eigs: &[Complex64; 2]) -> f64 {
    eigs[0].norm().max(eigs[1].norm())
}

/// `(1-alpha)*beta*exp(rho - beta*e)/(1+exp(rho - beta*e))^2`, evaluated
/// through `exp(-|x|)` so it never overflows.
fn logistic_slope(e: f64, params: &ModelParams) -> f64 {
    let x = (params.rho - params.beta * e).clamp(-EXP_CLAMP, EXP_CLAMP);
    let s = (-x.abs()).exp();
    (1.0 - params.alpha) * params.beta * s / ((1.0 + s) * (1.0 + s))
}

/// Analytic Jacobian of the map at any state.
pub fn jacobian_at(state: State, params: &ModelParams) -> Result<Jacobian> {
    if state.pi <= -1.0 {
        return Err(Error::Domain(format!("green preference pi = {} must exceed -1", state.pi)));
    }
    let one_plus = 1.0 + state.pi;
    Ok(Jacobian {
        j11: state.pi / one_plus,
        j12: (state.e + params.isocline_slope()) / (one_plus * one_plus),
        j21: logistic_slope(state.e, params),
        j22: params.alpha,
    })
}

/// Elasticity of green preferences to environmental conditions at a steady
/// state, `(e_bar/pi_bar) * d pi'/d e`.
pub fn eta_at(eq: &Equilibrium, params: &ModelParams) -> Result<f64> {
    if eq.pi_bar == 0.0 {
        return Err(Error::Domain("elasticity undefined at pi_bar = 0".into()));
    }
    Ok(eq.e_bar / eq.pi_bar * logistic_slope(eq.e_bar, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    FoldUnstable,
    FlipUnstable,
    NsUnstable,
    UnstableMultiple,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::FoldUnstable => "fold-unstable",
            Verdict::FlipUnstable => "flip-unstable",
            Verdict::NsUnstable => "ns-unstable",
            Verdict::UnstableMultiple => "unstable-multiple",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub jacobian: Jacobian,
    pub trace: f64,
    pub det: f64,
    pub eta: f64,
    /// `1 - tr + det`.
    pub cond_fold: f64,
    /// `1 + tr + det`.
    pub cond_flip: f64,
    /// `1 - det`.
    pub cond_ns: f64,
    #[serde(skip)]
    pub eigenvalues: [Complex64; 2],
    pub verdict: Verdict,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.eigenvalues)
    }

    pub fn margin(&self, kind: BifurcationKind) -> f64 {
        match kind {
            BifurcationKind::Fold | BifurcationKind::Pitchfork => self.cond_fold,
            BifurcationKind::Flip => self.cond_flip,
            BifurcationKind::NeimarkSacker => self.cond_ns,
        }
    }
}

fn verdict_from(fold: f64, flip: f64, ns: f64) -> Verdict {
    match (fold > 0.0, flip > 0.0, ns > 0.0) {
        (true, true, true) => Verdict::Stable,
        (false, true, true) => Verdict::FoldUnstable,
        (true, false, true) => Verdict::FlipUnstable,
        (true, true, false) => Verdict::NsUnstable,
        _ => Verdict::UnstableMultiple,
    }
}

/// Local stability report of a steady state.
pub fn classify_equilibrium(eq: &Equilibrium, params: &ModelParams) -> Result<StabilityReport> {
    let eta = eta_at(eq, params)?;
    let jacobian = jacobian_at(eq.state(), params)?;
    let pi = eq.pi_bar;
    let trace = pi / (1.0 + pi) + params.alpha;
    let det = (params.alpha * pi - eta) / (1.0 + pi);
    let cond_fold = 1.0 - trace + det;
    let cond_flip = 1.0 + trace + det;
    let cond_ns = 1.0 - det;
    Ok(StabilityReport {
        jacobian,
        trace,
        det,
        eta,
        cond_fold,
        cond_flip,
        cond_ns,
        eigenvalues: eigenvalues_from(trace, det),
        verdict: verdict_from(cond_fold, cond_flip, cond_ns),
    })
}

/// Steady states with their stability reports.
pub fn analyze(params: &ModelParams) -> Result<Vec<(Equilibrium, StabilityReport)>> {
    find_equilibria(params)?.into_iter().map(|eq| classify_equilibrium(&eq, params).map(|r| (eq, r))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BifurcationKind {
    Fold,
    Flip,
    #[serde(rename = "NS")]
    NeimarkSacker,
    /// Change in the number of steady states (one to three or back).
    Pitchfork,
}

impl BifurcationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BifurcationKind::Fold => "Fold",
            BifurcationKind::Flip => "Flip",
            BifurcationKind::NeimarkSacker => "NS",
            BifurcationKind::Pitchfork => "Pitchfork",
        }
    }
}

impl fmt::Display for BifurcationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub param_value: f64,
    pub kind: BifurcationKind,
    /// Steady state on the crossing branch at `param_value`; for count
    /// changes, the root nearest the tangency.
    pub e_bar: f64,
    pub pi_bar: f64,
    #[serde(skip)]
    pub eigenvalues: [Complex64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationScan {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Steady-state count at each grid value.
    pub counts: Vec<usize>,
    /// Sorted by parameter value.
    pub crossings: Vec<Crossing>,
    /// Grid values after which a branch could not be continued.
    pub tracking_failures: Vec<f64>,
}

type Analysis = Vec<(Equilibrium, StabilityReport)>;

fn analyze_at(base: &ModelParams, param: SweepParam, value: f64) -> Result<Analysis> {
    analyze(&param.apply(base, value))
}

/// Pairs each root at the left grid point with its nearest neighbour on the
/// right, greedily by distance, subject to the jump guard.
fn match_branches(left: &Analysis, right: &Analysis) -> Vec<(usize, Option<usize>)> {
    if left.len() == 1 && right.len() == 1 {
        return vec![(0, Some(0))];
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, (a, _)) in left.iter().enumerate() {
        for (j, (b, _)) in right.iter().enumerate() {
            let d = (a.pi_bar - b.pi_bar).abs();
            if d <= BRANCH_JUMP_GUARD {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut left_used = vec![None; left.len()];
    let mut right_used = vec![false; right.len()];
    for (_, i, j) in candidates {
        if left_used[i].is_none() && !right_used[j] {
            left_used[i] = Some(j);
            right_used[j] = true;
        }
    }
    left_used.into_iter().enumerate().collect()
}

fn nearest(analysis: &Analysis, pi: f64) -> Option<&(Equilibrium, StabilityReport)> {
    analysis.iter().min_by(|a, b| (a.0.pi_bar - pi).abs().total_cmp(&(b.0.pi_bar - pi).abs()))
}

fn refine_margin(
    base: &ModelParams,
    param: SweepParam,
    kind: BifurcationKind,
    (mut lo, mut hi): (f64, f64),
    mut branch_pi: f64,
    lo_sign: bool,
) -> Result<Crossing> {
    let mut best = None;
    while hi - lo > CROSSING_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let analysis = analyze_at(base, param, mid)?;
        let Some(&(eq, rep)) = nearest(&analysis, branch_pi) else { break };
        branch_pi = eq.pi_bar;
        if (rep.margin(kind) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        best = Some((eq, rep));
    }
    let at = 0.5 * (lo + hi);
    let analysis = analyze_at(base, param, at)?;
    let (eq, rep) = match nearest(&analysis, branch_pi) {
        Some(&found) => found,
        None => best.ok_or(Error::NoEquilibrium { nodes: 0 })?,
    };
    Ok(Crossing { param_value: at, kind, e_bar: eq.e_bar, pi_bar: eq.pi_bar, eigenvalues: rep.eigenvalues })
}

fn refine_count_change(
    base: &ModelParams,
    param: SweepParam,
    (mut lo, mut hi): (f64, f64),
    lo_count: usize,
) -> Result<Crossing> {
    while hi - lo > CROSSING_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if analyze_at(base, param, mid)?.len() == lo_count {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Report the root closest to tangency on the multi-root side.
    let lo_side = analyze_at(base, param, lo)?;
    let hi_side = analyze_at(base, param, hi)?;
    let side = if lo_side.len() >= hi_side.len() { lo_side } else { hi_side };
    let (eq, rep) = side
        .iter()
        .min_by(|a, b| a.1.cond_fold.abs().total_cmp(&b.1.cond_fold.abs()))
        .copied()
        .ok_or(Error::NoEquilibrium { nodes: 0 })?;
    Ok(Crossing {
        param_value: 0.5 * (lo + hi),
        kind: BifurcationKind::Pitchfork,
        e_bar: eq.e_bar,
        pi_bar: eq.pi_bar,
        eigenvalues: rep.eigenvalues,
    })
}

/// Tracks every steady-state branch over a grid of `steps` values of
/// `param` and reports where a stability margin changes sign or the number
/// of steady states changes. Grid points are analysed in parallel; crossings
/// are resolved sequentially in grid order.
pub fn detect_bifurcation(
    params: &ModelParams,
    param: SweepParam,
    range: (f64, f64),
    steps: usize,
) -> Result<BifurcationScan> {
    let values = linear_grid(range.0, range.1, steps)?;
    let analyses: Vec<Analysis> = values.par_iter().map(|&x| analyze_at(params, param, x)).collect::<Result<_>>()?;

    let mut crossings = Vec::new();
    let mut tracking_failures = Vec::new();
    for k in 0..values.len() - 1 {
        let (left, right) = (&analyses[k], &analyses[k + 1]);
        let bracket = (values[k], values[k + 1]);
        if left.len() != right.len() {
            crossings.push(refine_count_change(params, param, bracket, left.len())?);
            continue;
        }
        let pairs = match_branches(left, right);
        if pairs.iter().any(|(_, j)| j.is_none()) {
            tracking_failures.push(values[k]);
        }
        for (i, j) in pairs {
            let Some(j) = j else { continue };
            let (eq, a) = &left[i];
            let b = &right[j].1;
            for kind in [BifurcationKind::Fold, BifurcationKind::Flip, BifurcationKind::NeimarkSacker] {
                let (ma, mb) = (a.margin(kind), b.margin(kind));
                if (ma > 0.0) == (mb > 0.0) {
                    continue;
                }
                let c = refine_margin(params, param, kind, bracket, eq.pi_bar, ma > 0.0)?;
                // det = 1 with real eigenvalues is a neutral saddle, not a
                // Neimark-Sacker point.
                if kind == BifurcationKind::NeimarkSacker && c.eigenvalues[0].im == 0.0 {
                    continue;
                }
                crossings.push(c);
            }
        }
    }
    crossings.sort_by(|a, b| a.param_value.total_cmp(&b.param_value));
    let counts = analyses.iter().map(Vec::len).collect();
    Ok(BifurcationScan { param, values, counts, crossings, tracking_failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::RootLabel;
    use crate::model::step_map;
    use crate::presets::Preset;

    fn fd_jacobian(s: State, p: &ModelParams, h: f64) -> Jacobian {
        let f = |e: f64, pi: f64| step_map(State::new(e, pi), p).unwrap();
        let (ep, em) = (f(s.e + h, s.pi), f(s.e - h, s.pi));
        let (pp, pm) = (f(s.e, s.pi + h), f(s.e, s.pi - h));
        Jacobian {
            j11: (ep.e - em.e) / (2.0 * h),
            j12: (pp.e - pm.e) / (2.0 * h),
            j21: (ep.pi - em.pi) / (2.0 * h),
            j22: (pp.pi - pm.pi) / (2.0 * h),
        }
    }

    #[test]
    fn jacobian_basic_entries() {
        let p = Preset::Fig7b.params();
        let j = jacobian_at(State::new(0.3, 0.0), &p).unwrap();
        assert_eq!(j.j11, 0.0);
        assert_eq!(j.j22, p.alpha);
        assert!(jacobian_at(State::new(0.3, -1.0), &p).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = Preset::Fig7b.params();
        let s = State::new(0.2, 0.45);
        let (a, n) = (jacobian_at(s, &p).unwrap(), fd_jacobian(s, &p, 1e-6));
        for (x, y) in [(a.j11, n.j11), (a.j12, n.j12), (a.j21, n.j21), (a.j22, n.j22)] {
            assert!((x - y).abs() <= 1e-5 * x.abs().max(1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn j12_identity_at_equilibria() {
        for p in [Preset::Fig7b.params(), Preset::Fig7a.params(), Preset::Fig6.params()] {
            for (eq, rep) in analyze(&p).unwrap() {
                let want = eq.e_bar / (eq.pi_bar * (1.0 + eq.pi_bar));
                assert!((rep.jacobian.j12 - want).abs() <= 1e-10 * want.abs().max(1.0));
                assert_eq!(rep.jacobian.j11, eq.pi_bar / (1.0 + eq.pi_bar));
                assert_eq!(rep.jacobian.j22, p.alpha);
            }
        }
    }

    // Reference elasticities from the closed form (1-alpha)*beta*e*(1-pi)
    // evaluated at independently bisected roots.
    #[test]
    fn fig7b_elasticities_and_verdicts() {
        let p = Preset::Fig7b.params();
        let res = analyze(&p).unwrap();
        let etas: Vec<f64> = res.iter().map(|(_, r)| r.eta).collect();
        let want = [0.057_641_186_124_575_41, 0.131_039_278_187_099_84, 0.052_941_685_635_627_47];
        for (g, w) in etas.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
        let verdicts: Vec<Verdict> = res.iter().map(|(_, r)| r.verdict).collect();
        assert_eq!(verdicts, vec![Verdict::Stable, Verdict::FoldUnstable, Verdict::Stable]);
        assert_eq!(res[1].0.label, RootLabel::Middle);
        assert!(res[1].1.eigenvalues[0].re > 1.0 && res[1].1.eigenvalues[0].im == 0.0);
    }

    #[test]
    fn eta_forms_agree() {
        for p in [Preset::Fig7b.params(), Preset::Fig6.params(), Preset::Fig4b.params()] {
            for (eq, rep) in analyze(&p).unwrap() {
                let closed = (1.0 - p.alpha) * p.beta * eq.e_bar * (1.0 - eq.pi_bar);
                assert!((rep.eta - closed).abs() <= 1e-12, "{} vs {closed}", rep.eta);
                assert!(rep.eta == 0.0 || rep.eta.signum() == eq.e_bar.signum());
            }
        }
        let zero = Equilibrium { e_bar: 0.0, pi_bar: 0.4, residual: 0.0, label: RootLabel::Unique, tangency: false };
        assert_eq!(eta_at(&zero, &Preset::Fig7a.params()).unwrap(), 0.0);
        let bad = Equilibrium { pi_bar: 0.0, ..zero };
        assert!(eta_at(&bad, &Preset::Fig7a.params()).is_err());
    }

    #[test]
    fn determinant_two_ways() {
        for p in [Preset::Fig7b.params(), Preset::Fig7a.params(), Preset::Fig6.params(), Preset::Fig4a.params()] {
            for (_, rep) in analyze(&p).unwrap() {
                assert!((rep.jacobian.det() - rep.det).abs() <= 1e-12);
                assert!((rep.jacobian.trace() - rep.trace).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn rearranged_conditions_agree_with_margins() {
        for p in [Preset::Fig7b.params(), Preset::Fig6.params(), Preset::Fig5.params()] {
            for (eq, rep) in analyze(&p).unwrap() {
                let (a, pi, eta) = (p.alpha, eq.pi_bar, rep.eta);
                assert_eq!(eta < 1.0 - a, rep.cond_fold > 0.0);
                let chain = (1.0 + a) * (1.0 + pi) * (1.0 + pi / (1.0 + pi));
                let short = (1.0 + a) * (1.0 + 2.0 * pi);
                assert!((chain - short).abs() <= 1e-14);
                assert_eq!(eta < short, rep.cond_flip > 0.0);
                assert_eq!(-(1.0 + eta) / pi < 1.0 - a, rep.cond_ns > 0.0);
            }
        }
    }

    #[test]
    fn frozen_preferences_are_stable() {
        let p = ModelParams { alpha: 1.0 - 1e-9, ..Preset::Fig6.params() };
        for (_, rep) in analyze(&p).unwrap() {
            assert!(rep.is_stable());
            assert!(rep.spectral_radius() < 1.0);
        }
    }

    #[test]
    fn no_crossings_in_threshold_family() {
        let base = Preset::Fig7a.params();
        let p = ModelParams { v: base.sigma * base.w / ((base.sigma + base.gamma) * base.c_ref), ..base };
        let scan = detect_bifurcation(&p, SweepParam::Rho, (0.0, 5.0), 100).unwrap();
        assert!(scan.crossings.is_empty(), "{:?}", scan.crossings);
        assert!(scan.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn rho_sweep_brackets_three_root_window() {
        let scan = detect_bifurcation(&Preset::Fig7a.params(), SweepParam::Rho, (0.0, 5.0), 200).unwrap();
        let events: Vec<f64> =
            scan.crossings.iter().filter(|c| c.kind == BifurcationKind::Pitchfork).map(|c| c.param_value).collect();
        assert_eq!(events.len(), 2, "{:?}", scan.crossings);
        assert!(events[0] < 2.6 && events[1] > 2.6);
    }

    #[test]
    fn ns_crossing_fig4a() {
        let p = Preset::Fig4a.params();
        let scan = detect_bifurcation(&p, SweepParam::V, (0.0, 1.0), 200).unwrap();
        let ns: Vec<&Crossing> = scan.crossings.iter().filter(|c| c.kind == BifurcationKind::NeimarkSacker).collect();
        assert_eq!(ns.len(), 1, "{:?}", scan.crossings);
        let c = ns[0];
        assert!(c.param_value * p.c_ref / p.w > 1.0 / 3.0);
        assert!(c.eigenvalues[0].im != 0.0);
        assert!((c.eigenvalues[0].norm() - 1.0).abs() <= 1e-6);
    }
}
