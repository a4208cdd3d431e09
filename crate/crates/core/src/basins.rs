//! Basins of attraction on a rectangle of initial conditions.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::model::{step_unchecked, ModelParams, State};
use crate::stability::analyze;

pub const DEFAULT_CAPTURE_RADIUS: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_RESOLUTION: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinSettings {
    pub e_range: (f64, f64),
    pub pi_range: (f64, f64),
    /// Cells per axis.
    pub resolution: usize,
    pub max_iter: usize,
    /// Max-norm distance at which an orbit counts as captured.
    pub capture_radius: f64,
}

impl Default for BasinSettings {
    fn default() -> Self {
        Self {
            e_range: (0.0, 1.0),
            pi_range: (0.0, 1.0),
            resolution: DEFAULT_RESOLUTION,
            max_iter: DEFAULT_MAX_ITER,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
        }
    }
}

impl BasinSettings {
    fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok_range(self.e_range) || !ok_range(self.pi_range) {
            return Err(Error::InvalidSetting("basin rectangle must have finite, increasing bounds".into()));
        }
        if self.resolution == 0 {
            return Err(Error::InvalidSetting("basin resolution must be at least 1".into()));
        }
        if self.capture_radius.is_nan() || self.capture_radius <= 0.0 {
            return Err(Error::InvalidSetting("capture radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellLabel {
    /// Index into [`BasinGrid::attractors`].
    Attractor(usize),
    Unconverged,
}

impl CellLabel {
    /// Attractor index, or -1 for unconverged cells.
    pub fn code(self) -> i64 {
        match self {
            CellLabel::Attractor(i) => i as i64,
            CellLabel::Unconverged => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid {
    pub e_range: (f64, f64),
    pub pi_range: (f64, f64),
    pub resolution: usize,
    /// Stable steady states, ascending in `pi_bar`.
    pub attractors: Vec<Equilibrium>,
    /// Row-major; row 0 holds the lowest `pi`, column 0 the lowest `e`.
    pub labels: Vec<CellLabel>,
    /// Steps taken before capture (or `max_iter`).
    pub iterations: Vec<u32>,
    pub capture_radius: f64,
    pub max_iter: usize,
}

impl BasinGrid {
    pub fn cell_center(&self, row: usize, col: usize) -> State {
        cell_center(self.e_range, self.pi_range, self.resolution, row, col)
    }

    pub fn label(&self, row: usize, col: usize) -> CellLabel {
        self.labels[row * self.resolution + col]
    }

    /// More than one stable attractor to compete for the rectangle.
    pub fn is_multistable(&self) -> bool {
        self.attractors.len() >= 2
    }
}

fn cell_center(e_range: (f64, f64), pi_range: (f64, f64), n: usize, row: usize, col: usize) -> State {
    let de = (e_range.1 - e_range.0) / n as f64;
    let dp = (pi_range.1 - pi_range.0) / n as f64;
    State::new(e_range.0 + (col as f64 + 0.5) * de, pi_range.0 + (row as f64 + 0.5) * dp)
}

/// Iterates from `start` until it is within `radius` of one of `targets` or
/// `max_iter` steps have been taken.
pub fn label_cell(
    start: State,
    params: &ModelParams,
    targets: &[State],
    radius: f64,
    max_iter: usize,
) -> (CellLabel, u32) {
    if start.pi <= -1.0 || !start.is_finite() {
        return (CellLabel::Unconverged, 0);
    }
    let mut s = start;
    for it in 0..=max_iter {
        if let Some(i) = targets.iter().position(|t| t.distance(&s) <= radius) {
            return (CellLabel::Attractor(i), it as u32);
        }
        if it == max_iter {
            break;
        }
        s = step_unchecked(s, params);
        if !s.is_finite() || s.pi <= -1.0 {
            return (CellLabel::Unconverged, it as u32 + 1);
        }
    }
    (CellLabel::Unconverged, max_iter as u32)
}

/// Labels every cell centre by the stable steady state its orbit reaches.
/// The saddle is never a target.
pub fn compute_basins(params: &ModelParams, settings: &BasinSettings) -> Result<BasinGrid> {
    params.validate()?;
    settings.validate()?;
    let attractors: Vec<Equilibrium> =
        analyze(params)?.into_iter().filter(|(_, r)| r.is_stable()).map(|(eq, _)| eq).collect();
    let targets: Vec<State> = attractors.iter().map(Equilibrium::state).collect();
    let n = settings.resolution;
    let mut cells = vec![(CellLabel::Unconverged, 0u32); n * n];
    cells.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        for (col, cell) in out.iter_mut().enumerate() {
            let start = cell_center(settings.e_range, settings.pi_range, n, row, col);
            *cell = label_cell(start, params, &targets, settings.capture_radius, settings.max_iter);
        }
    });
    let (labels, iterations) = cells.into_iter().unzip();
    Ok(BasinGrid {
        e_range: settings.e_range,
        pi_range: settings.pi_range,
        resolution: n,
        attractors,
        labels,
        iterations,
        capture_radius: settings.capture_radius,
        max_iter: settings.max_iter,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaFractions {
    pub per_attractor: Vec<f64>,
    pub unconverged: f64,
}

pub fn basin_area_fractions(grid: &BasinGrid) -> AreaFractions {
    let mut counts = vec![0usize; grid.attractors.len()];
    let mut unconverged = 0usize;
    for l in &grid.labels {
        match *l {
            CellLabel::Attractor(i) => counts[i] += 1,
            CellLabel::Unconverged => unconverged += 1,
        }
    }
    let total = grid.labels.len() as f64;
    AreaFractions {
        per_attractor: counts.into_iter().map(|c| c as f64 / total).collect(),
        unconverged: unconverged as f64 / total,
    }
}

/// Number of 4-connected regions carrying `label`.
pub fn connected_components(grid: &BasinGrid, label: CellLabel) -> usize {
    let n = grid.resolution;
    let mut seen = vec![false; n * n];
    let mut queue = VecDeque::new();
    let mut components = 0;
    for start in 0..n * n {
        if seen[start] || grid.labels[start] != label {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (r, c) = (idx / n, idx % n);
            let neighbours = [
                (r > 0).then(|| idx - n),
                (r + 1 < n).then(|| idx + n),
                (c > 0).then(|| idx - 1),
                (c + 1 < n).then(|| idx + 1),
            ];
            for nb in neighbours.into_iter().flatten() {
                if !seen[nb] && grid.labels[nb] == label {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    fn small(params: &ModelParams, resolution: usize) -> BasinGrid {
        compute_basins(params, &BasinSettings { resolution, ..Default::default() }).unwrap()
    }

    #[test]
    fn cell_on_attractor_is_captured_immediately() {
        let p = Preset::Fig7b.params();
        let upper = small(&p, 2).attractors[1];
        let half = 0.01;
        let st = BasinSettings {
            e_range: (upper.e_bar - half, upper.e_bar + half),
            pi_range: (upper.pi_bar - half, upper.pi_bar + half),
            resolution: 1,
            ..Default::default()
        };
        let g = compute_basins(&p, &st).unwrap();
        assert_eq!(g.labels, vec![CellLabel::Attractor(1)]);
        assert_eq!(g.iterations, vec![0]);
    }

    #[test]
    fn saddle_is_never_a_target() {
        let p = Preset::Fig7b.params();
        let g = small(&p, 40);
        assert_eq!(g.attractors.len(), 2);
        assert!(g.is_multistable());
        assert!(g.attractors.iter().all(|a| (a.pi_bar - 0.48).abs() > 0.1));
        let f = basin_area_fractions(&g);
        assert!(f.per_attractor.iter().all(|&x| x > 0.01));
        assert!((f.per_attractor.iter().sum::<f64>() + f.unconverged - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_attractor_fills_the_grid() {
        let g = small(&Preset::Fig7a.params(), 20);
        assert_eq!(g.attractors.len(), 1);
        assert!(!g.is_multistable());
        let f = basin_area_fractions(&g);
        assert_eq!(f.per_attractor, vec![1.0]);
        assert_eq!(connected_components(&g, CellLabel::Attractor(0)), 1);
    }

    #[test]
    fn cells_outside_domain_are_unconverged() {
        let p = Preset::Fig7b.params();
        let st = BasinSettings { pi_range: (-1.6, -1.1), resolution: 4, ..Default::default() };
        let g = compute_basins(&p, &st).unwrap();
        assert!(g.labels.iter().all(|&l| l == CellLabel::Unconverged));
        assert!(g.iterations.iter().all(|&i| i == 0));
    }

    #[test]
    fn component_counting() {
        let p = Preset::Fig7a.params();
        let mut g = small(&p, 5);
        let x = CellLabel::Unconverged;
        let a = CellLabel::Attractor(0);
        g.labels = vec![
            a, x, a, a, a, //
            a, x, x, x, x, //
            x, a, a, x, a, //
            x, x, x, x, a, //
            a, x, a, a, a,
        ];
        assert_eq!(connected_components(&g, a), 5);
        assert_eq!(connected_components(&g, x), 1);
    }

    #[test]
    fn rejects_bad_settings() {
        let p = Preset::Fig7b.params();
        assert!(compute_basins(&p, &BasinSettings { resolution: 0, ..Default::default() }).is_err());
        assert!(compute_basins(&p, &BasinSettings { e_range: (1.0, 0.0), ..Default::default() }).is_err());
    }
}
