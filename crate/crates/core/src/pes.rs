//! Crossings and gaps of the two potential energy surfaces.
//!
//! Positions are in metres and times in seconds. Complex positions are the
//! analytic continuation of the coupling matrix in `x`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

pub const DEFAULT_SMALL_DETUNING_LIMIT: f64 = 0.3;
pub const DEFAULT_SECANT_EPS: f64 = 1e-3;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Minus => 1.0,
            Branch::Plus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SmallDetuning,
    LargeDetuning,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub t: f64,
    pub x_re: f64,
    pub x_im: f64,
    pub branch: Branch,
    pub regime: Regime,
}

impl CrossingPoint {
    pub fn x(&self) -> Complex64 {
        Complex64::new(self.x_re, self.x_im)
    }
}

/// Tunables for [`crossing_exact`] and [`crossing_small_detuning`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingOptions {
    /// Largest `|delta| / Omega` accepted by the small-detuning formula.
    pub small_detuning_limit: f64,
    /// Exclusion half-width (rad) around odd multiples of `pi/2` in `omega_L t`.
    pub secant_eps: f64,
    /// Residual tolerance relative to `(hbar Omega)^2`.
    pub residual_tol: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self {
            small_detuning_limit: DEFAULT_SMALL_DETUNING_LIMIT,
            secant_eps: DEFAULT_SECANT_EPS,
            residual_tol: DEFAULT_RESIDUAL_TOL,
        }
    }
}

fn shift(t: f64, p: &PhysicalParams) -> f64 {
    p.modulation_amplitude * (p.modulation_freq * t).sin()
}

/// `a^2 + b1^2 + b2^2` continued to complex `x`, in units of `(hbar Omega)^2`.
pub fn scaled_determinant(x: Complex64, t: f64, p: &PhysicalParams) -> Complex64 {
    let phase = (x - shift(t, p)) * p.wavenumber;
    let a = 0.5 * p.detuning() / p.rabi_freq;
    let (s2, c2) = (2.0 * p.laser_freq * t).sin_cos();
    let cos_x = phase.cos();
    let b1 = cos_x * (0.5 * (1.0 + c2));
    let b2 = cos_x * (0.5 * s2);
    a * a + b1 * b1 + b2 * b2
}

/// Crossing of the RWA surfaces to leading order in `delta / Omega`.
pub fn crossing_small_detuning(
    t: f64,
    p: &PhysicalParams,
    opts: &CrossingOptions,
) -> Result<CrossingPoint> {
    p.validate()?;
    let ratio = p.detuning() / p.rabi_freq;
    if ratio.abs() >= opts.small_detuning_limit {
        return Err(Error::RegimeViolation {
            ratio: ratio.abs(),
            limit: opts.small_detuning_limit,
        });
    }
    Ok(CrossingPoint {
        t,
        x_re: shift(t, p) + FRAC_PI_2 / p.wavenumber,
        x_im: -std::f64::consts::SQRT_2 * ratio / (2.0 * p.wavenumber),
        branch: Branch::Minus,
        regime: Regime::SmallDetuning,
    })
}

/// Real crossing of the large-detuning surfaces at node `n`.
pub fn crossing_large_detuning(t: f64, n: i64, p: &PhysicalParams) -> CrossingPoint {
    CrossingPoint {
        t,
        x_re: (n as f64 + 0.5) * PI / p.wavenumber + shift(t, p),
        x_im: 0.0,
        branch: Branch::Minus,
        regime: Regime::LargeDetuning,
    }
}

/// Distance of `phase` from the nearest odd multiple of `pi/2`.
fn secant_distance(phase: f64) -> f64 {
    let r = (phase - FRAC_PI_2).rem_euclid(PI);
    r.min(PI - r)
}

/// Complex crossing of the exact (pre-RWA) surfaces, principal branch.
pub fn crossing_exact(
    t: f64,
    branch: Branch,
    p: &PhysicalParams,
    opts: &CrossingOptions,
) -> Result<CrossingPoint> {
    p.validate()?;
    let laser_phase = p.laser_freq * t;
    if secant_distance(laser_phase) < opts.secant_eps {
        return Err(Error::SecantSingularity {
            phase: laser_phase,
            eps: opts.secant_eps,
        });
    }
    let cos_l = laser_phase.cos();
    let y = branch.sign() * p.detuning() / (2.0 * p.rabi_freq * cos_l);
    let mut phase = Complex64::new(0.0, y).acos();
    // Newton polish on a^2 + cos^2(omega_L t) cos^2 X = 0.
    let a = 0.5 * p.detuning() / p.rabi_freq;
    let bsq = cos_l * cos_l;
    for _ in 0..4 {
        let f = a * a + bsq * phase.cos() * phase.cos();
        let df = -bsq * (2.0 * phase).sin();
        if df.norm() == 0.0 || f.norm() == 0.0 {
            break;
        }
        let step = f / df;
        phase -= step;
        if step.norm() <= 1e-16 * phase.norm().max(1.0) {
            break;
        }
    }
    let x = shift(t, p) + phase / p.wavenumber;
    let residual = scaled_determinant(x, t, p).norm();
    if residual > opts.residual_tol {
        return Err(Error::CrossingResidual {
            residual,
            tolerance: opts.residual_tol,
        });
    }
    Ok(CrossingPoint {
        t,
        x_re: x.re,
        x_im: x.im,
        branch,
        regime: Regime::Exact,
    })
}

/// Rectangle in the complex `x` plane (metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapField {
    pub t: f64,
    pub x_re: Vec<f64>,
    pub x_im: Vec<f64>,
    /// Row-major over `x_im` (outer) and `x_re` (inner), in joules.
    pub gap: Vec<f64>,
}

impl GapField {
    pub fn at(&self, i_im: usize, i_re: usize) -> f64 {
        self.gap[i_im * self.x_re.len() + i_re]
    }

    /// Grid location of the smallest gap.
    pub fn argmin(&self) -> (usize, usize) {
        let (idx, _) = self
            .gap
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &g)| if g < best.1 { (i, g) } else { best });
        (idx / self.x_re.len(), idx % self.x_re.len())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<usize> {
        writeln!(w, "x_re,x_im,gap")?;
        let mut rows = 0;
        for (i, &im) in self.x_im.iter().enumerate() {
            for (j, &re) in self.x_re.iter().enumerate() {
                writeln!(w, "{},{},{}", re, im, self.at(i, j))?;
                rows += 1;
            }
        }
        Ok(rows)
    }
}

/// Gap `2 |sqrt(a^2 + b1^2 + b2^2)|` on a uniform grid spanning `window`.
pub fn gap_scan(p: &PhysicalParams, t: f64, window: &Window, resolution: (usize, usize)) -> Result<GapField> {
    p.validate()?;
    let (n_re, n_im) = resolution;
    if n_re < 16 || n_im < 16 {
        return Err(Error::InvalidParameter {
            field: "resolution",
            reason: format!("need at least 16 points per axis, got {n_re}x{n_im}"),
        });
    }
    if !(window.re_max > window.re_min && window.im_max >= window.im_min) {
        return Err(Error::InvalidParameter {
            field: "window",
            reason: "empty window".into(),
        });
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let x_re = axis(window.re_min, window.re_max, n_re);
    let x_im = axis(window.im_min, window.im_max, n_im);
    let scale = p.planck * p.rabi_freq;
    let gap: Vec<f64> = x_im
        .par_iter()
        .flat_map_iter(|&im| {
            x_re.iter().map(move |&re| {
                2.0 * scale * scaled_determinant(Complex64::new(re, im), t, p).norm().sqrt()
            })
        })
        .collect();
    Ok(GapField { t, x_re, x_im, gap })
}

pub fn write_crossings_csv<W: Write>(points: &[CrossingPoint], mut w: W) -> io::Result<usize> {
    writeln!(w, "regime,branch,t,x_re,x_im")?;
    for c in points {
        writeln!(w, "{:?},{:?},{},{},{}", c.regime, c.branch, c.t, c.x_re, c.x_im)?;
    }
    Ok(points.len())
}
