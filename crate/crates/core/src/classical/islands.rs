use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::section::{strobe_states, wrap_angle};
use super::{advance, period_step, PhaseState, Potential};
use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianVariant, Model};
use crate::params::DimensionlessParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandDetector {
    pub max_n: usize,
    pub eps: f64,
    /// Length of the strobe sequence.
    pub n_strobes: usize,
    /// Number of strobe pairs averaged at the end of the sequence.
    pub window: usize,
}

impl Default for IslandDetector {
    fn default() -> Self {
        Self {
            max_n: 16,
            eps: 1e-3,
            n_strobes: 512,
            window: 32,
        }
    }
}

fn section_distance(a: &PhaseState, b: &PhaseState) -> f64 {
    wrap_angle(a.x - b.x).hypot(a.p - b.p)
}

/// Smallest `n <= max_n` whose `n`-strobe return distance, averaged over the
/// final window, is below `eps`.
pub fn detect_island_period<P: Potential>(
    s0: PhaseState,
    pot: &P,
    steps_per_period: usize,
    det: &IslandDetector,
) -> Result<Option<usize>> {
    if det.max_n < 1 || det.eps <= 0.0 || det.window == 0 || det.n_strobes < det.max_n + det.window {
        return Err(Error::InvalidParameter {
            field: "detector",
            reason: format!("inconsistent detector settings {det:?}"),
        });
    }
    let states = strobe_states(s0, pot, det.n_strobes, steps_per_period)?;
    let last = det.n_strobes;
    for n in 1..=det.max_n {
        let first = last - n + 1 - det.window;
        let mean = (first..=last - n)
            .map(|k| section_distance(&states[k + n], &states[k]))
            .sum::<f64>()
            / det.window as f64;
        if mean < det.eps {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Central-difference Jacobian of the `n_periods` strobe map at `(x, p)`.
pub fn strobe_jacobian<P: Potential>(
    x: f64,
    p: f64,
    pot: &P,
    n_periods: usize,
    steps_per_period: usize,
    h: f64,
) -> Result<[[f64; 2]; 2]> {
    let n = n_periods * steps_per_period;
    let dt = period_step(steps_per_period);
    let map = |x, p| advance(PhaseState::new(x, p, 0.0), pot, dt, n);
    let (xp, xm) = (map(x + h, p)?, map(x - h, p)?);
    let (pp, pm) = (map(x, p + h)?, map(x, p - h)?);
    Ok([
        [(xp.x - xm.x) / (2.0 * h), (pp.x - pm.x) / (2.0 * h)],
        [(xp.p - xm.p) / (2.0 * h), (pp.p - pm.p) / (2.0 * h)],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub x: f64,
    pub p: f64,
    pub period: usize,
    /// Trace of the monodromy matrix.
    pub trace: f64,
    pub elliptic: bool,
}

/// Newton search for a point returning to itself (mod `2 pi` in `x`) after
/// `period` strobes. `None` when the iteration does not converge.
pub fn find_periodic_orbit<P: Potential>(
    x0: f64,
    p0: f64,
    pot: &P,
    period: usize,
    steps_per_period: usize,
) -> Result<Option<PeriodicOrbit>> {
    const H: f64 = 1e-7;
    const TOL: f64 = 1e-11;
    let n = period * steps_per_period;
    let dt = period_step(steps_per_period);
    let (mut x, mut p) = (x0, p0);
    for _ in 0..25 {
        let end = match advance(PhaseState::new(x, p, 0.0), pot, dt, n) {
            Ok(s) => s,
            Err(_) => return Ok(None),
        };
        let (rx, rp) = (wrap_angle(end.x - x), end.p - p);
        if rx.abs() + rp.abs() < TOL {
            let j = strobe_jacobian(x, p, pot, period, steps_per_period, H)?;
            let trace = j[0][0] + j[1][1];
            return Ok(Some(PeriodicOrbit {
                x: wrap_angle(x),
                p,
                period,
                trace,
                elliptic: trace.abs() < 2.0,
            }));
        }
        let j = strobe_jacobian(x, p, pot, period, steps_per_period, H)?;
        let (a, b, c, d) = (j[0][0] - 1.0, j[0][1], j[1][0], j[1][1] - 1.0);
        let det = a * d - b * c;
        if det.abs() < 1e-14 {
            return Ok(None);
        }
        x -= (d * rx - b * rp) / det;
        p -= (a * rp - c * rx) / det;
        if !(x.is_finite() && p.is_finite()) || p.abs() > 10.0 {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Mean winding per strobe of `s0` around the co-evolved orbit of `center`,
/// divided by `2 pi`. Clockwise motion in the `(x, p)` plane counts positive.
pub fn rotation_number<P: Potential>(
    s0: PhaseState,
    center: PhaseState,
    pot: &P,
    steps_per_period: usize,
    n_periods: usize,
) -> Result<f64> {
    const MIN_RADIUS: f64 = 1e-9;
    let radius = (s0.x - center.x).hypot(s0.p - center.p);
    if radius < MIN_RADIUS {
        return Err(Error::AmbiguousWinding { radius });
    }
    let dt = period_step(steps_per_period);
    let (mut s, mut c) = (s0, center);
    let mut angle = (s.x - c.x).atan2(s.p - c.p);
    let mut total = 0.0;
    for _ in 0..n_periods * steps_per_period {
        s = super::step(s, pot, dt)?;
        c = super::step(c, pot, dt)?;
        let (dx, dp) = (s.x - c.x, s.p - c.p);
        if dx.hypot(dp) < MIN_RADIUS {
            return Err(Error::AmbiguousWinding { radius: dx.hypot(dp) });
        }
        let a = dx.atan2(dp);
        let mut d = a - angle;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        total += d;
        angle = a;
    }
    Ok(total / (TAU * n_periods as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub variant: HamiltonianVariant,
    pub base: DimensionlessParams,
    pub kays: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Chain periods searched for with Newton seeding.
    pub periods: Vec<usize>,
    /// Seed momenta; each is tried at `x = 0` and `x = pi`.
    pub seed_momenta: Vec<f64>,
    /// Displacement of the detector's initial condition from the orbit.
    pub offset: f64,
    pub steps_per_period: usize,
    pub detector: IslandDetector,
}

impl ScanSettings {
    /// 8x8 grid over `K in [0.1, 2]`, `lambda in [1, 4]`, periods 3 to 5.
    pub fn standard(base: DimensionlessParams) -> Self {
        let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        Self {
            variant: HamiltonianVariant::RwaAdiabaticLargeMinus,
            base,
            kays: lin(0.1, 2.0, 8),
            lambdas: lin(1.0, 4.0, 8),
            periods: vec![3, 4, 5],
            seed_momenta: lin(-3.0, 3.0, 25),
            offset: 1e-4,
            steps_per_period: 512,
            detector: IslandDetector::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandHit {
    /// Period targeted by the Newton search.
    pub searched: usize,
    /// Period reported by the detector from the displaced seed.
    pub detected: usize,
    pub orbit: PeriodicOrbit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub kay: f64,
    pub lambda: f64,
    pub hits: Vec<IslandHit>,
}

impl ScanPoint {
    pub fn periods(&self) -> BTreeSet<usize> {
        self.hits.iter().map(|h| h.detected).collect()
    }

    pub fn hit(&self, period: usize) -> Option<&IslandHit> {
        self.hits.iter().find(|h| h.detected == period)
    }
}

/// For every grid point and target period, locates an elliptic periodic orbit
/// and runs the detector from a point displaced by `offset` inside its island.
pub fn scan_island_periods(settings: &ScanSettings) -> Result<Vec<ScanPoint>> {
    let grid: Vec<(f64, f64)> = settings
        .kays
        .iter()
        .flat_map(|&k| settings.lambdas.iter().map(move |&l| (k, l)))
        .collect();
    grid.par_iter()
        .map(|&(kay, lambda)| {
            let params = DimensionlessParams { kay, lambda, ..settings.base };
            let model = Model::new(settings.variant, params)?;
            let mut hits = Vec::new();
            for &n in &settings.periods {
                if let Some(hit) = island_of_period(&model, n, settings)? {
                    hits.push(hit);
                }
            }
            Ok(ScanPoint { kay, lambda, hits })
        })
        .collect()
}

fn island_of_period(model: &Model, n: usize, settings: &ScanSettings) -> Result<Option<IslandHit>> {
    for &p0 in &settings.seed_momenta {
        for x0 in [0.0, PI] {
            let Some(orbit) = find_periodic_orbit(x0, p0, model, n, settings.steps_per_period)? else {
                continue;
            };
            if !orbit.elliptic {
                continue;
            }
            let s0 = PhaseState::new(orbit.x + settings.offset, orbit.p, 0.0);
            if let Ok(Some(detected)) =
                detect_island_period(s0, model, settings.steps_per_period, &settings.detector)
            {
                if detected == n {
                    return Ok(Some(IslandHit {
                        searched: n,
                        detected,
                        orbit,
                    }));
                }
            }
        }
    }
    Ok(None)
}
