//! Orbits, orbit (bifurcation) diagrams and the largest Lyapunov exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{step_unchecked, ModelParams, State};
use crate::stability::{jacobian_at, Jacobian};
use crate::sweep::{linear_grid, SweepParam};

pub const DEFAULT_TRANSIENT: usize = 2000;
pub const DEFAULT_RECORD: usize = 500;
pub const DEFAULT_SWEEP_STEPS: usize = 400;
pub const DEFAULT_INITIAL: State = State::new(0.1, 0.5);
pub const MIN_LYAPUNOV_HORIZON: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub initial: State,
    pub params: ModelParams,
    /// States `x_{transient+1} ..= x_{transient+record}`.
    pub points: Vec<State>,
    pub transient_discarded: usize,
}

impl Orbit {
    /// `(max - min)` of `e` and of `pi` over the recorded points.
    pub fn extent(&self) -> (f64, f64) {
        extent(&self.points)
    }

    pub fn last(&self) -> Option<State> {
        self.points.last().copied()
    }
}

/// `(max - min)` of `e` and of `pi`; zero for an empty slice.
pub fn extent(points: &[State]) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for s in points {
        lo.e = lo.e.min(s.e);
        lo.pi = lo.pi.min(s.pi);
        hi.e = hi.e.max(s.e);
        hi.pi = hi.pi.max(s.pi);
    }
    (hi.e - lo.e, hi.pi - lo.pi)
}

fn check_initial(initial: State) -> Result<()> {
    if !initial.is_finite() || initial.pi <= -1.0 {
        return Err(Error::Domain(format!("initial state ({}, {}) needs finite e and pi > -1", initial.e, initial.pi)));
    }
    Ok(())
}

/// Iterates the map `transient + record` times and keeps the last `record`
/// states.
pub fn simulate(initial: State, params: &ModelParams, transient: usize, record: usize) -> Result<Orbit> {
    params.validate()?;
    check_initial(initial)?;
    let mut s = initial;
    let mut points = Vec::with_capacity(record);
    for step in 1..=transient + record {
        s = step_unchecked(s, params);
        if !s.is_finite() || s.pi <= -1.0 {
            return Err(Error::Divergence { step });
        }
        if step > transient {
            points.push(s);
        }
    }
    Ok(Orbit { initial, params: *params, points, transient_discarded: transient })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SweepMode {
    /// Every grid value restarts from this state.
    FixedIc { initial: State },
    /// Grid value `k+1` starts from the last recorded state at `k`; the
    /// first value starts from `initial`.
    Continuation { initial: State },
}

impl SweepMode {
    pub fn initial(&self) -> State {
        match *self {
            SweepMode::FixedIc { initial } | SweepMode::Continuation { initial } => initial,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepMode::FixedIc { .. } => "fixed-ic",
            SweepMode::Continuation { .. } => "continuation",
        }
    }
}

impl Default for SweepMode {
    fn default() -> Self {
        SweepMode::Continuation { initial: DEFAULT_INITIAL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub param: SweepParam,
    pub range: (f64, f64),
    pub steps: usize,
    pub mode: SweepMode,
    pub transient: usize,
    pub record: usize,
}

impl SweepSettings {
    pub fn new(param: SweepParam, range: (f64, f64)) -> Self {
        Self {
            param,
            range,
            steps: DEFAULT_SWEEP_STEPS,
            mode: SweepMode::default(),
            transient: DEFAULT_TRANSIENT,
            record: DEFAULT_RECORD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sweep_param: SweepParam,
    pub values: Vec<f64>,
    /// Recorded attractor points per grid value.
    pub samples: Vec<Vec<State>>,
    pub mode: SweepMode,
}

/// Attractor samples over a parameter grid.
pub fn orbit_diagram(params: &ModelParams, settings: &SweepSettings) -> Result<SweepResult> {
    let values = linear_grid(settings.range.0, settings.range.1, settings.steps)?;
    let samples = match settings.mode {
        SweepMode::FixedIc { initial } => values
            .par_iter()
            .map(|&x| {
                simulate(initial, &settings.param.apply(params, x), settings.transient, settings.record)
                    .map(|o| o.points)
            })
            .collect::<Result<Vec<_>>>()?,
        SweepMode::Continuation { initial } => {
            let mut state = initial;
            let mut out = Vec::with_capacity(values.len());
            for &x in &values {
                let p = settings.param.apply(params, x);
                if settings.record == 0 {
                    // Carry the end of the transient forward.
                    if settings.transient > 0 {
                        state = simulate(state, &p, settings.transient - 1, 1)?.last().unwrap_or(state);
                    }
                    out.push(Vec::new());
                } else {
                    let o = simulate(state, &p, settings.transient, settings.record)?;
                    state = o.last().unwrap_or(state);
                    out.push(o.points);
                }
            }
            out
        }
    };
    Ok(SweepResult { sweep_param: settings.param, values, samples, mode: settings.mode })
}

/// Average log growth rate of a tangent vector carried along the orbit.
pub fn lyapunov_largest(initial: State, params: &ModelParams, transient: usize, horizon: usize) -> Result<f64> {
    if horizon < MIN_LYAPUNOV_HORIZON {
        return Err(Error::InvalidSetting(format!("Lyapunov horizon {horizon} is below {MIN_LYAPUNOV_HORIZON}")));
    }
    params.validate()?;
    check_initial(initial)?;
    let mut s = match transient {
        0 => initial,
        t => simulate(initial, params, t - 1, 1)?.last().unwrap_or(initial),
    };
    let mut u = [std::f64::consts::FRAC_1_SQRT_2; 2];
    let mut sum = 0.0;
    for step in 1..=horizon {
        let j = jacobian_at(s, params)?;
        let v = j.apply(u);
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Divergence { step: transient + step });
        }
        sum += n.ln();
        u = [v[0] / n, v[1] / n];
        s = step_unchecked(s, params);
        if !s.is_finite() {
            return Err(Error::Divergence { step: transient + step });
        }
    }
    Ok(sum / horizon as f64)
}

/// `|F(F(x)) - x|` in the max-norm.
pub fn period_two_residual(state: State, params: &ModelParams) -> f64 {
    let twice = step_unchecked(step_unchecked(state, params), params);
    twice.distance(&state)
}

/// Newton iteration on `F(F(x)) = x` from `seed`. Returns a point with
/// residual at most `tol` that is not a fixed point of `F`, if one is
/// reached.
pub fn refine_period_two(seed: State, params: &ModelParams, tol: f64) -> Option<State> {
    let mut x = seed;
    for _ in 0..100 {
        if x.pi <= -1.0 || !x.is_finite() {
            return None;
        }
        let y = step_unchecked(x, params);
        let z = step_unchecked(y, params);
        let r = [z.e - x.e, z.pi - x.pi];
        if r[0].abs().max(r[1].abs()) <= tol {
            let separation = y.distance(&x);
            return (separation > 1e3 * tol.max(1e-12)).then_some(x);
        }
        let jx = jacobian_at(x, params).ok()?;
        let jy = jacobian_at(y, params).ok()?;
        let d = jy.compose(&jx);
        // Solve (D - I) dx = -r.
        let m = Jacobian { j11: d.j11 - 1.0, j12: d.j12, j21: d.j21, j22: d.j22 - 1.0 };
        let det = m.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [(-r[0] * m.j22 + r[1] * m.j12) / det, (-r[1] * m.j11 + r[0] * m.j21) / det];
        x = State::new(x.e + dx[0], x.pi + dx[1]);
    }
    None
}

/// Minimum, over `bins` equal angular sectors around `center`, of the
/// largest radius of the points falling in each sector. `None` if some
/// sector is empty.
pub fn min_sector_radius(points: &[State], center: State, bins: usize) -> Option<f64> {
    if bins == 0 {
        return None;
    }
    let mut max_r = vec![f64::NEG_INFINITY; bins];
    for s in points {
        let (de, dp) = (s.e - center.e, s.pi - center.pi);
        let theta = dp.atan2(de) + std::f64::consts::PI;
        let bin = ((theta / std::f64::consts::TAU) * bins as f64) as usize % bins;
        max_r[bin] = max_r[bin].max(de.hypot(dp));
    }
    max_r.into_iter().try_fold(f64::INFINITY, |acc, r| (r > f64::NEG_INFINITY).then(|| acc.min(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::find_equilibria;
    use crate::model::step_map;
    use crate::presets::Preset;

    #[test]
    fn fixed_point_orbit_stays_put() {
        let p = Preset::Fig7b.params();
        for eq in find_equilibria(&p).unwrap() {
            let o = simulate(eq.state(), &p, 0, 200).unwrap();
            assert!(o.points.iter().all(|s| s.distance(&eq.state()) <= 1e-9));
        }
    }

    #[test]
    fn replay_matches_step_map() {
        let p = Preset::Fig6.params();
        let o = simulate(DEFAULT_INITIAL, &p, 10, 300).unwrap();
        for w in o.points.windows(2) {
            assert_eq!(step_map(w[0], &p).unwrap(), w[1]);
        }
        assert_eq!(o.points.len(), 300);
        assert_eq!(o.transient_discarded, 10);
        assert!(o.points.iter().all(|s| (0.0..=1.0).contains(&s.pi)));
        assert_eq!(o, simulate(DEFAULT_INITIAL, &p, 10, 300).unwrap());
    }

    #[test]
    fn converges_to_upper_attractor() {
        let p = Preset::Fig7b.params();
        let upper = find_equilibria(&p).unwrap()[2];
        let o = simulate(State::new(0.6, 0.9), &p, 2000, 10).unwrap();
        assert!(o.last().unwrap().distance(&upper.state()) <= 1e-6);
    }

    #[test]
    fn empty_record_and_bad_initial() {
        let p = Preset::Fig7b.params();
        assert!(simulate(DEFAULT_INITIAL, &p, 5, 0).unwrap().points.is_empty());
        assert!(simulate(State::new(0.0, -1.0), &p, 5, 5).is_err());
        assert!(lyapunov_largest(DEFAULT_INITIAL, &p, 10, 999).is_err());
    }

    #[test]
    fn continuation_chains_initial_conditions() {
        let p = Preset::Fig6.params();
        let mut st = SweepSettings::new(SweepParam::Alpha, (0.3, 0.5));
        st.steps = 5;
        st.transient = 50;
        st.record = 20;
        let res = orbit_diagram(&p, &st).unwrap();
        for k in 0..4 {
            let p_next = SweepParam::Alpha.apply(&p, res.values[k + 1]);
            let replay = simulate(*res.samples[k].last().unwrap(), &p_next, 50, 20).unwrap();
            assert_eq!(replay.points, res.samples[k + 1]);
        }
        assert!(res.samples.iter().all(|s| s.len() == 20));
    }

    #[test]
    fn stable_family_sweep_hits_the_equilibrium() {
        let base = Preset::Fig7a.params();
        let p = ModelParams { v: base.sigma * base.w / ((base.sigma + base.gamma) * base.c_ref), ..base };
        let mut st = SweepSettings::new(SweepParam::Rho, (0.0, 3.0));
        st.steps = 12;
        st.mode = SweepMode::FixedIc { initial: DEFAULT_INITIAL };
        let res = orbit_diagram(&p, &st).unwrap();
        for (rho, pts) in res.values.iter().zip(&res.samples) {
            let want = 1.0 / (1.0 + rho.exp());
            assert!(pts.iter().all(|s| s.e.abs() <= 1e-6 && (s.pi - want).abs() <= 1e-6));
        }
    }

    #[test]
    fn lyapunov_negative_at_stable_point() {
        let p = Preset::Fig7b.params();
        let upper = find_equilibria(&p).unwrap()[2];
        let l = lyapunov_largest(upper.state(), &p, 0, 2000).unwrap();
        assert!(l < 0.0);
    }

    #[test]
    fn sector_radius() {
        let c = State::new(0.0, 0.0);
        let ring: Vec<State> = (0..360)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 360.0;
                State::new(t.cos(), t.sin())
            })
            .collect();
        assert!((min_sector_radius(&ring, c, 16).unwrap() - 1.0).abs() < 1e-12);
        assert!(min_sector_radius(&ring[..90], c, 16).is_none());
    }

    #[test]
    fn extent_of_points() {
        let pts = [State::new(0.0, 1.0), State::new(2.0, 0.5), State::new(-1.0, 0.75)];
        assert_eq!(extent(&pts), (3.0, 0.5));
        assert_eq!(extent(&[]), (0.0, 0.0));
    }
}
