//! Symplectic integration of `H = p^2/2 + V(x, t)` in scaled units.

mod islands;
mod section;

pub use islands::{
    detect_island_period, find_periodic_orbit, rotation_number, scan_island_periods,
    strobe_jacobian, IslandDetector, PeriodicOrbit, ScanPoint, ScanSettings,
};
pub use section::{
    disk_ensemble, ensemble_momentum_spread, ensemble_sections, gaussian_ensemble, strobe_map,
    strobe_states, wrap_angle, IcFailure, SectionDataset, SectionRow,
};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianVariant, Model};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 512;

/// Anything providing a scalar potential and its force.
pub trait Potential: Sync {
    fn potential(&self, x: f64, t: f64) -> f64;
    fn force(&self, x: f64, t: f64) -> f64;
}

impl Potential for Model {
    fn potential(&self, x: f64, t: f64) -> f64 {
        Model::potential(self, x, t)
    }

    fn force(&self, x: f64, t: f64) -> f64 {
        Model::force(self, x, t)
    }
}

/// A potential with its time argument pinned to `at`.
#[derive(Debug, Clone, Copy)]
pub struct Frozen<P> {
    pub inner: P,
    pub at: f64,
}

impl<P: Potential> Potential for Frozen<P> {
    fn potential(&self, x: f64, _t: f64) -> f64 {
        self.inner.potential(x, self.at)
    }

    fn force(&self, x: f64, _t: f64) -> f64 {
        self.inner.force(x, self.at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    /// Unwrapped position.
    pub x: f64,
    pub p: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: f64, p: f64, t: f64) -> Self {
        Self { x, p, t }
    }

    pub fn energy<P: Potential>(&self, pot: &P) -> f64 {
        0.5 * self.p * self.p + pot.potential(self.x, self.t)
    }

    fn check(self) -> Result<Self> {
        if self.x.is_finite() && self.p.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFiniteState { t: self.t })
        }
    }
}

pub fn period_step(steps_per_period: usize) -> f64 {
    TAU / steps_per_period as f64
}

/// One kick-drift-kick step; kicks use the potential at `t` and `t + dt`.
/// A negative `dt` runs the map backwards.
pub fn step<P: Potential>(s: PhaseState, pot: &P, dt: f64) -> Result<PhaseState> {
    let p_half = s.p + 0.5 * dt * pot.force(s.x, s.t);
    let x = s.x + dt * p_half;
    let t = s.t + dt;
    let p = p_half + 0.5 * dt * pot.force(x, t);
    PhaseState { x, p, t }.check()
}

/// `n` steps with times `t0 + k dt`; the closing kick of each step is reused
/// as the opening kick of the next.
pub fn advance<P: Potential>(s: PhaseState, pot: &P, dt: f64, n: usize) -> Result<PhaseState> {
    let t0 = s.t;
    let (mut x, mut p) = (s.x, s.p);
    let mut f = pot.force(x, t0);
    for k in 0..n {
        p += 0.5 * dt * f;
        x += dt * p;
        let t = t0 + (k + 1) as f64 * dt;
        f = pot.force(x, t);
        p += 0.5 * dt * f;
    }
    PhaseState {
        x,
        p,
        t: t0 + n as f64 * dt,
    }
    .check()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub variant: Option<HamiltonianVariant>,
    pub states: Vec<PhaseState>,
}

/// Records every `stride`-th state of an `n_steps` run, including the first.
pub fn integrate<P: Potential>(
    s0: PhaseState,
    pot: &P,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Vec<PhaseState>> {
    let stride = stride.max(1);
    let mut out = Vec::with_capacity(n_steps / stride + 1);
    out.push(s0.check()?);
    let mut s = s0;
    let mut done = 0;
    while done < n_steps {
        let chunk = stride.min(n_steps - done);
        let mut next = advance(s, pot, dt, chunk)?;
        done += chunk;
        next.t = s0.t + done as f64 * dt;
        s = next;
        if chunk == stride {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn trajectory(model: &Model, s0: PhaseState, dt: f64, n_steps: usize, stride: usize) -> Result<Trajectory> {
    Ok(Trajectory {
        dt,
        variant: Some(model.variant),
        states: integrate(s0, model, dt, n_steps, stride)?,
    })
}
