//! First-order time-dependent perturbation theory of the driven pendulum
//! written as a perturbed harmonic oscillator.
//!
//! Action-angle convention: `x = sqrt(J/(pi W)) sin(theta)`,
//! `p = sqrt(J W / pi) cos(theta)` with `W = sqrt(K)`, so `H_ho = W J / (2 pi)`.
//! The modulation frequency is 1.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_jn, j1_over_arg};
use crate::error::{Error, Result};
use crate::params::DimensionlessParams;

pub const DEFAULT_MIN_DENOMINATOR: f64 = 1e-3;
pub const RESONANCE_GRID: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub omega_tilde: f64,
    pub lambda: f64,
    pub epsilon: f64,
}

impl PerturbationParams {
    pub fn new(omega_tilde: f64, lambda: f64, epsilon: f64) -> Result<Self> {
        if !(omega_tilde.is_finite() && omega_tilde > 0.0) {
            return Err(Error::InvalidParameter {
                field: "omega_tilde",
                reason: format!("must be > 0, got {omega_tilde}"),
            });
        }
        if !lambda.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                field: "lambda",
                reason: "lambda and epsilon must be finite".into(),
            });
        }
        Ok(Self {
            omega_tilde,
            lambda,
            epsilon,
        })
    }

    /// `W = sqrt(K)` and `epsilon = 1`.
    pub fn from_scaled(d: &DimensionlessParams) -> Result<Self> {
        Self::new(d.omega_tilde(), d.lambda, 1.0)
    }

    /// Bessel argument `sqrt(J / (W pi))`.
    pub fn amplitude(&self, j: f64) -> f64 {
        (j.max(0.0) / (self.omega_tilde * PI)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionAngleState {
    pub j: f64,
    pub theta: f64,
}

impl ActionAngleState {
    pub fn from_phase(x: f64, p: f64, omega_tilde: f64) -> Self {
        let j = PI * (p * p / omega_tilde + omega_tilde * x * x);
        Self {
            j,
            theta: (x * omega_tilde).atan2(p).rem_euclid(TAU),
        }
    }

    pub fn to_phase(&self, omega_tilde: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (
            (self.j / (PI * omega_tilde)).sqrt() * s,
            (self.j * omega_tilde / PI).sqrt() * c,
        )
    }
}

/// Perturbation `Delta H(J, theta, t)` with `epsilon` factored out.
pub fn delta_h(j: f64, theta: f64, t: f64, pp: &PerturbationParams) -> f64 {
    let w = pp.omega_tilde;
    let u = pp.amplitude(j);
    -w * w * (u * theta.sin() - pp.lambda * t.sin()).cos() - j * w / TAU * theta.sin().powi(2)
}

/// Average of `Delta H` over `theta` and `t`.
pub fn averaged_delta_h(j: f64, pp: &PerturbationParams) -> Result<f64> {
    let w = pp.omega_tilde;
    Ok(-w * w * bessel_jn(0, pp.amplitude(j))? * bessel_jn(0, pp.lambda)? - j * w / (4.0 * PI))
}

pub fn averaged_hamiltonian(j_bar: f64, pp: &PerturbationParams) -> Result<f64> {
    Ok(pp.omega_tilde * j_bar / TAU + pp.epsilon * averaged_delta_h(j_bar, pp)?)
}

/// `2 pi dH/dJ` of the averaged Hamiltonian, finite at `J = 0`.
pub fn first_order_frequency(j_bar: f64, pp: &PerturbationParams) -> Result<f64> {
    let w = pp.omega_tilde;
    let u = pp.amplitude(j_bar);
    Ok(w * (1.0 - 0.5 * pp.epsilon) + pp.epsilon * w * bessel_jn(0, pp.lambda)? * j1_over_arg(u)?)
}

fn denominator(n: i32, m: i32, omega_bar: f64, min: f64) -> Result<f64> {
    let value = n as f64 * omega_bar - m as f64;
    if value.abs() <= min {
        return Err(Error::SmallDenominator { n, m, value });
    }
    Ok(value)
}

/// Oscillating action `Delta S_{n,m} = -eps W^2 J_n(u) J_m(lambda) sin(n theta - m t) / (n Omega - m)`.
pub fn delta_s_nm(
    j_bar: f64,
    theta_bar: f64,
    t: f64,
    n: i32,
    m: i32,
    pp: &PerturbationParams,
) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter {
            field: "n, m",
            reason: format!("both mode indices must be nonzero, got ({n}, {m})"),
        });
    }
    let w = pp.omega_tilde;
    let den = denominator(n, m, first_order_frequency(j_bar, pp)?, DEFAULT_MIN_DENOMINATOR)?;
    Ok(-pp.epsilon * w * w / den
        * bessel_jn(n, pp.amplitude(j_bar))?
        * bessel_jn(m, pp.lambda)?
        * (n as f64 * theta_bar - m as f64 * t).sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderTransform {
    pub j_bar: f64,
    /// Reduced to `[0, 2 pi)`.
    pub theta_bar: f64,
    /// Modes dropped by the small-denominator guard.
    pub excluded: Vec<(i32, i32)>,
}

/// First-order `(J, theta) -> (J_bar, theta_bar)` summed over
/// `1 <= |n| <= n_max`, `1 <= |m| <= m_max`.
pub fn first_order_transform(
    j: f64,
    theta: f64,
    t: f64,
    pp: &PerturbationParams,
    n_max: u32,
    m_max: u32,
) -> Result<FirstOrderTransform> {
    if n_max == 0 || m_max == 0 {
        return Err(Error::InvalidParameter {
            field: "n_max, m_max",
            reason: "truncation orders must be >= 1".into(),
        });
    }
    let w = pp.omega_tilde;
    let eps = pp.epsilon;
    let u = pp.amplitude(j);
    let omega_bar = first_order_frequency(j, pp)?;
    let (n_max, m_max) = (n_max as i32, m_max as i32);
    let mut dj = 0.0;
    let mut dtheta = 0.0;
    let mut excluded = Vec::new();
    for n in (-n_max..=n_max).filter(|&n| n != 0) {
        let jn = bessel_jn(n, u)?;
        let jn_prime = 0.5 * (bessel_jn(n - 1, u)? - bessel_jn(n + 1, u)?);
        for m in (-m_max..=m_max).filter(|&m| m != 0) {
            let den = match denominator(n, m, omega_bar, DEFAULT_MIN_DENOMINATOR) {
                Ok(d) => d,
                Err(_) => {
                    excluded.push((n, m));
                    continue;
                }
            };
            let jm = bessel_jn(m, pp.lambda)?;
            let (s, c) = (n as f64 * theta - m as f64 * t).sin_cos();
            dj += n as f64 * w * w / den * jn * jm * c;
            dtheta += -w * w / den * jn_prime * jm * s;
        }
    }
    let j_bar = j + eps * dj - eps * j * w / (4.0 * PI) * (2.0 * theta).cos();
    let omega_of_j_bar = first_order_frequency(j_bar, pp)?;
    let theta_bar = theta + eps * dtheta + eps * w / (8.0 * PI * omega_of_j_bar) * (2.0 * theta).sin();
    Ok(FirstOrderTransform {
        j_bar,
        theta_bar: theta_bar.rem_euclid(TAU),
        excluded,
    })
}

pub fn resonance_strength(n: i32, m: i32, j: f64, pp: &PerturbationParams) -> Result<f64> {
    Ok((bessel_jn(n, pp.amplitude(j))? * bessel_jn(m, pp.lambda)?).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRecord {
    pub n: i32,
    pub m: i32,
    pub j_star: f64,
    pub strength: f64,
    /// `n Omega'(J*) - m`.
    pub denominator_at: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Roots of `n Omega'(J) - m` on `j_range` for `1 <= n <= n_max`, `1 <= |m| <= m_max`,
/// by bisection of sign changes on a 2048-point grid.
pub fn find_resonances(
    pp: &PerturbationParams,
    n_max: u32,
    m_max: u32,
    j_range: (f64, f64),
    tol: f64,
) -> Result<Vec<ResonanceRecord>> {
    let (lo, hi) = j_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter {
            field: "j_range",
            reason: format!("need finite 0 <= lo < hi, got ({lo}, {hi})"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            field: "tol",
            reason: "must be > 0".into(),
        });
    }
    let grid: Vec<f64> = linspace(lo, hi, RESONANCE_GRID).collect();
    let freq: Vec<f64> = grid
        .iter()
        .map(|&j| first_order_frequency(j, pp))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for n in 1..=n_max as i32 {
        for m in (-(m_max as i32)..=m_max as i32).filter(|&m| m != 0) {
            let f = |om: f64| n as f64 * om - m as f64;
            for i in 0..grid.len() - 1 {
                let (fa, fb) = (f(freq[i]), f(freq[i + 1]));
                if fa == 0.0 || fa.signum() != fb.signum() {
                    if fb == 0.0 && i + 2 < grid.len() {
                        // counted at the next interval's left end
                        continue;
                    }
                    let j_star = bisect(|j| Ok(f(first_order_frequency(j, pp)?)), grid[i], grid[i + 1], fa, tol)?;
                    let residual = f(first_order_frequency(j_star, pp)?);
                    out.push(ResonanceRecord {
                        n,
                        m,
                        j_star,
                        strength: resonance_strength(n, m, j_star, pp)?,
                        denominator_at: residual,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm.abs() <= 0.5 * tol || (b - a) <= f64::EPSILON * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `(J, Omega'(J))` samples for plotting.
pub fn frequency_curve(pp: &PerturbationParams, j_range: (f64, f64), n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            field: "samples",
            reason: "need at least 2 samples".into(),
        });
    }
    linspace(j_range.0, j_range.1, n)
        .map(|j| Ok((j, first_order_frequency(j, pp)?)))
        .collect()
}

pub fn write_curve_csv<W: Write>(curve: &[(f64, f64)], mut w: W) -> io::Result<usize> {
    writeln!(w, "J,Omega_prime")?;
    for (j, om) in curve {
        writeln!(w, "{j},{om}")?;
    }
    Ok(curve.len())
}
