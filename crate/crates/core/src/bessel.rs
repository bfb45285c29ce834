//! Bessel functions of the first kind, integer order.

use crate::error::{Error, Result};

pub const MAX_ORDER: i32 = 60;
pub const MAX_ARG: f64 = 50.0;

const SERIES_LIMIT: f64 = 2.0;
const MILLER_PAD: usize = 60;

fn check(n: i32, z: f64) -> Result<()> {
    if n.abs() > MAX_ORDER || !z.is_finite() || z.abs() > MAX_ARG {
        return Err(Error::BesselRange { order: n, arg: z });
    }
    Ok(())
}

fn parity(n: i32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `J_n(z)` for `|n| <= 60`, `|z| <= 50`.
pub fn bessel_jn(n: i32, z: f64) -> Result<f64> {
    check(n, z)?;
    let mut sign = 1.0;
    if n < 0 {
        sign *= parity(n);
    }
    if z < 0.0 {
        sign *= parity(n);
    }
    let (m, x) = (n.unsigned_abs() as usize, z.abs());
    let v = if x <= SERIES_LIMIT {
        series(m, x)
    } else {
        miller(m, x)[m]
    };
    Ok(sign * v)
}

/// `[J_0(z), ..., J_{n_max}(z)]` from a single recurrence.
pub fn bessel_j_all(n_max: usize, z: f64) -> Result<Vec<f64>> {
    check(n_max.min(i32::MAX as usize) as i32, z)?;
    let x = z.abs();
    let mut out = if x <= SERIES_LIMIT {
        (0..=n_max).map(|m| series(m, x)).collect()
    } else {
        let mut v = miller(n_max, x);
        v.truncate(n_max + 1);
        v
    };
    if z < 0.0 {
        for (m, v) in out.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }
    Ok(out)
}

/// Ascending power series; `x` small.
fn series(m: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Downward recurrence normalized by `J_0 + 2 sum J_{2k} = 1`. Returns orders `0..=top`.
fn miller(m: usize, x: f64) -> Vec<f64> {
    let top = m.max(x.ceil() as usize) + MILLER_PAD;
    let top = top + top % 2;
    let mut v = vec![0.0; top + 2];
    v[top] = 1e-300;
    for k in (1..=top).rev() {
        v[k - 1] = 2.0 * k as f64 / x * v[k] - v[k + 1];
        if v[k - 1].abs() > 1e250 {
            for w in v[k - 1..].iter_mut() {
                *w *= 1e-250;
            }
        }
    }
    let norm: f64 = v[0] + 2.0 * v[2..=top].iter().step_by(2).sum::<f64>();
    v.truncate(top + 1);
    for w in v.iter_mut() {
        *w /= norm;
    }
    v
}

/// `J_1(u) / u`, regular at `u = 0` where it equals `1/2`.
pub fn j1_over_arg(u: f64) -> Result<f64> {
    if u.abs() < 1e-4 {
        let q = u * u / 4.0;
        return Ok(0.5 * (1.0 - q / 2.0 + q * q / 12.0));
    }
    Ok(bessel_jn(1, u)? / u)
}
