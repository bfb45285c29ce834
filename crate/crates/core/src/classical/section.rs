use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{advance, period_step, PhaseState, Potential};
use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianVariant, Model};
use crate::params::DimensionlessParams;

/// Reduces an angle to `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionRow {
    pub ic_id: usize,
    pub k: usize,
    pub x_wrapped: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcFailure {
    pub ic_id: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionDataset {
    pub variant: HamiltonianVariant,
    pub params: DimensionlessParams,
    pub steps_per_period: usize,
    pub n_periods: usize,
    /// Sorted by `(ic_id, k)`.
    pub rows: Vec<SectionRow>,
    pub failures: Vec<IcFailure>,
}

impl SectionDataset {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<usize> {
        writeln!(w, "ic_id,k,x_wrapped,p")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.ic_id, r.k, r.x_wrapped, r.p)?;
        }
        Ok(self.rows.len())
    }
}

/// Unwrapped states at `t0 + 2 pi k`, `k = 0..=n_periods`.
pub fn strobe_states<P: Potential>(
    s0: PhaseState,
    pot: &P,
    n_periods: usize,
    steps_per_period: usize,
) -> Result<Vec<PhaseState>> {
    let dt = period_step(steps_per_period);
    let mut out = Vec::with_capacity(n_periods + 1);
    out.push(s0);
    let mut s = s0;
    for k in 1..=n_periods {
        s = advance(s, pot, dt, steps_per_period)?;
        s.t = s0.t + TAU * k as f64;
        out.push(s);
    }
    Ok(out)
}

fn validate_run(n_periods: usize, steps_per_period: usize) -> Result<()> {
    if n_periods == 0 {
        return Err(Error::InvalidParameter {
            field: "n_periods",
            reason: "must be >= 1".into(),
        });
    }
    if steps_per_period == 0 {
        return Err(Error::InvalidParameter {
            field: "steps_per_period",
            reason: "must be >= 1".into(),
        });
    }
    Ok(())
}

/// Section rows of a single initial condition (`ic_id = 0`).
pub fn strobe_map(
    s0: PhaseState,
    model: &Model,
    n_periods: usize,
    steps_per_period: usize,
) -> Result<Vec<SectionRow>> {
    validate_run(n_periods, steps_per_period)?;
    Ok(rows_for(0, &strobe_states(s0, model, n_periods, steps_per_period)?))
}

fn rows_for(ic_id: usize, states: &[PhaseState]) -> Vec<SectionRow> {
    states
        .iter()
        .enumerate()
        .map(|(k, s)| SectionRow {
            ic_id,
            k,
            x_wrapped: wrap_angle(s.x),
            p: s.p,
        })
        .collect()
}

/// Strobe maps of many initial conditions. A failing trajectory is reported
/// in `failures` and does not abort the batch.
pub fn ensemble_sections(
    ics: &[PhaseState],
    model: &Model,
    n_periods: usize,
    steps_per_period: usize,
) -> Result<SectionDataset> {
    validate_run(n_periods, steps_per_period)?;
    if ics.is_empty() {
        return Err(Error::InvalidParameter {
            field: "ics",
            reason: "need at least one initial condition".into(),
        });
    }
    let results: Vec<Result<Vec<PhaseState>>> = ics
        .par_iter()
        .map(|s| strobe_states(*s, model, n_periods, steps_per_period))
        .collect();
    let mut rows = Vec::with_capacity(ics.len() * (n_periods + 1));
    let mut failures = Vec::new();
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(states) => rows.extend(rows_for(id, &states)),
            Err(e) => failures.push(IcFailure {
                ic_id: id,
                message: e.to_string(),
            }),
        }
    }
    Ok(SectionDataset {
        variant: model.variant,
        params: model.params,
        steps_per_period,
        n_periods,
        rows,
        failures,
    })
}

/// Uniform samples from the disk of `radius` around `(x0, p0)` at `t = 0`.
pub fn disk_ensemble(x0: f64, p0: f64, radius: f64, count: usize, seed: u64) -> Vec<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let a = TAU * rng.gen::<f64>();
            PhaseState::new(x0 + r * a.cos(), p0 + r * a.sin(), 0.0)
        })
        .collect()
}

/// Independent normal samples in `x` and `p` at `t = 0`.
pub fn gaussian_ensemble(
    x0: f64,
    p0: f64,
    sigma_x: f64,
    sigma_p: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<PhaseState>> {
    let bad = |field| Error::InvalidParameter {
        field,
        reason: "must be finite and >= 0".into(),
    };
    if !(sigma_x.is_finite() && sigma_x >= 0.0) {
        return Err(bad("sigma_x"));
    }
    if !(sigma_p.is_finite() && sigma_p >= 0.0) {
        return Err(bad("sigma_p"));
    }
    let nx = Normal::new(x0, sigma_x).map_err(|_| bad("sigma_x"))?;
    let np = Normal::new(p0, sigma_p).map_err(|_| bad("sigma_p"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let x = nx.sample(&mut rng);
            let p = np.sample(&mut rng);
            PhaseState::new(x, p, 0.0)
        })
        .collect())
}

/// Ensemble mean of `p^2` at every strobe `k = 0..=n_periods`.
pub fn ensemble_momentum_spread<P: Potential>(
    ics: &[PhaseState],
    pot: &P,
    n_periods: usize,
    steps_per_period: usize,
) -> Result<Vec<f64>> {
    validate_run(n_periods, steps_per_period)?;
    let per_ic: Vec<Vec<f64>> = ics
        .par_iter()
        .map(|s| {
            strobe_states(*s, pot, n_periods, steps_per_period)
                .map(|v| v.iter().map(|s| s.p * s.p).collect())
        })
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; n_periods + 1];
    for series in &per_ic {
        for (m, v) in mean.iter_mut().zip(series) {
            *m += v;
        }
    }
    let n = ics.len().max(1) as f64;
    Ok(mean.into_iter().map(|m| m / n).collect())
}
