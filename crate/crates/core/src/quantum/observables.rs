use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{SnapshotPlan, SpinorField};
use crate::error::{Error, Result};

/// Fits with a coefficient of determination below this are flagged.
pub const POOR_FIT_R2: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrobeRecord {
    pub k: usize,
    pub t: f64,
    pub norm: f64,
    pub p_mean: f64,
    pub p2_mean: f64,
    pub pop_excited: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub records: Vec<StrobeRecord>,
    /// `(strobe, distribution)` in FFT order.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    /// `((first, last), mean distribution)` in FFT order.
    pub window_means: Vec<((usize, usize), Vec<f64>)>,
}

impl ObservableSeries {
    pub(super) fn new(plan: &SnapshotPlan) -> Self {
        Self {
            records: Vec::new(),
            snapshots: plan.strobes.iter().map(|&k| (k, Vec::new())).collect(),
            window_means: plan.windows.iter().map(|&w| (w, Vec::new())).collect(),
        }
    }

    /// Records observables from momentum-space amplitudes (unnormalised FFT output).
    pub(super) fn record(
        &mut self,
        k: usize,
        t: f64,
        plus: &[Complex64],
        minus: &[Complex64],
        momenta: &[f64],
        norm_scale: f64,
    ) {
        let excited: f64 = plus.iter().map(|z| z.norm_sqr()).sum();
        let weights: Vec<f64> = plus
            .iter()
            .zip(minus)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect();
        let total: f64 = weights.iter().sum();
        let p_mean = weights.iter().zip(momenta).map(|(w, p)| w * p).sum::<f64>() / total;
        let p2_mean = weights.iter().zip(momenta).map(|(w, p)| w * p * p).sum::<f64>() / total;
        self.records.push(StrobeRecord {
            k,
            t,
            norm: total * norm_scale,
            p_mean,
            p2_mean,
            pop_excited: excited / total,
        });
        let dist = || weights.iter().map(|w| w / total).collect::<Vec<f64>>();
        for (strobe, d) in self.snapshots.iter_mut() {
            if *strobe == k {
                *d = dist();
            }
        }
        for ((a, b), d) in self.window_means.iter_mut() {
            if (*a..=*b).contains(&k) {
                let count = (*b - *a + 1) as f64;
                if d.is_empty() {
                    d.resize(weights.len(), 0.0);
                }
                for (acc, w) in d.iter_mut().zip(&weights) {
                    *acc += w / total / count;
                }
            }
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<usize> {
        writeln!(w, "k,norm,p_mean,p2_mean,pop_excited")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{},{}", r.k, r.norm, r.p_mean, r.p2_mean, r.pop_excited)?;
        }
        Ok(self.records.len())
    }
}

/// Normalised momentum probabilities in FFT order.
pub fn momentum_distribution(s: &SpinorField) -> Vec<f64> {
    let n = s.grid.n;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut weights = vec![0.0; n];
    for comp in [&s.plus, &s.minus] {
        let mut buf = comp.clone();
        fft.process(&mut buf);
        for (w, z) in weights.iter_mut().zip(&buf) {
            *w += z.norm_sqr();
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Rows `p,probability` sorted by momentum.
pub fn write_distribution_csv<W: Write>(mut w: W, momenta: &[f64], dist: &[f64]) -> std::io::Result<usize> {
    let mut rows: Vec<(f64, f64)> = momenta.iter().copied().zip(dist.iter().copied()).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    writeln!(w, "p,probability")?;
    for (p, d) in &rows {
        writeln!(w, "{p},{d}")?;
    }
    Ok(rows.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFit {
    pub xi: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub poor_fit: bool,
}

/// Fits `ln P(|p|) = c - |p| / xi` over `lo <= |p| <= hi`.
///
/// With `bin_width`, probabilities are first averaged over `|p|` bins of that
/// width starting at `lo`, each bin placed at its mean `|p|`.
pub fn localization_length(
    momenta: &[f64],
    dist: &[f64],
    window: (f64, f64),
    bin_width: Option<f64>,
) -> Result<LocalizationFit> {
    let (lo, hi) = window;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter {
            field: "window",
            reason: format!("need 0 <= lo < hi, got ({lo}, {hi})"),
        });
    }
    let inside: Vec<(f64, f64)> = momenta
        .iter()
        .zip(dist)
        .map(|(p, d)| (p.abs(), *d))
        .filter(|(a, _)| *a >= lo && *a <= hi)
        .collect();
    let points: Vec<(f64, f64)> = match bin_width {
        None => inside,
        Some(w) => {
            if !(w > 0.0) {
                return Err(Error::InvalidParameter {
                    field: "bin_width",
                    reason: format!("must be > 0, got {w}"),
                });
            }
            let nbins = ((hi - lo) / w).ceil().max(1.0) as usize;
            let mut acc = vec![(0.0, 0.0, 0usize); nbins];
            for (a, d) in inside {
                let b = (((a - lo) / w) as usize).min(nbins - 1);
                acc[b].0 += a;
                acc[b].1 += d;
                acc[b].2 += 1;
            }
            acc.into_iter()
                .filter(|b| b.2 > 0)
                .map(|(sa, sd, c)| (sa / c as f64, sd / c as f64))
                .collect()
        }
    };
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(a, d)| (a, d.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::EmptyFitWindow { count: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let syy: f64 = pts.iter().map(|q| (q.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::EmptyFitWindow { count: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 0.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LocalizationFit {
        xi: -1.0 / slope,
        intercept,
        r_squared,
        points: pts.len(),
        poor_fit: r_squared < POOR_FIT_R2 || slope >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{init_gaussian, SpatialGrid};
    use std::f64::consts::PI;

    #[test]
    fn parseval() {
        let g = SpatialGrid::new(256, 4.0 * PI).unwrap();
        let s = init_gaussian(
            g,
            0.7,
            -0.4,
            0.9,
            (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)),
            0.5,
        )
        .unwrap();
        let fft = FftPlanner::new().plan_fft_forward(g.n);
        let mut total = 0.0;
        for comp in [&s.plus, &s.minus] {
            let mut buf = comp.clone();
            fft.process(&mut buf);
            total += buf.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let momentum_norm = total * g.dx() / g.n as f64;
        assert!((momentum_norm - s.norm()).abs() < 1e-12);
        let d = momentum_distribution(&s);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_recovers_xi() {
        let momenta: Vec<f64> = (-200..200).map(|i| i as f64 * 0.05).collect();
        let raw: Vec<f64> = momenta.iter().map(|p| (-p.abs() / 2.0).exp()).collect();
        let z: f64 = raw.iter().sum();
        let dist: Vec<f64> = raw.iter().map(|d| d / z).collect();
        let fit = localization_length(&momenta, &dist, (1.0, 8.0), None).unwrap();
        assert!((fit.xi - 2.0).abs() < 1e-9);
        assert!(fit.r_squared > 0.999999);
        assert!(!fit.poor_fit);
        let binned = localization_length(&momenta, &dist, (1.0, 8.0), Some(0.5)).unwrap();
        assert!((binned.xi - 2.0).abs() / 2.0 < 0.01, "{}", binned.xi);
    }

    #[test]
    fn gaussian_is_a_poor_fit() {
        let momenta: Vec<f64> = (-200..200).map(|i| i as f64 * 0.05).collect();
        let dist: Vec<f64> = momenta.iter().map(|p| (-p * p / 0.5).exp()).collect();
        let near = localization_length(&momenta, &dist, (0.0, 3.0), None).unwrap();
        let far = localization_length(&momenta, &dist, (3.0, 6.0), None).unwrap();
        let drift = (near.xi - far.xi).abs() / far.xi;
        assert!(near.poor_fit || far.poor_fit || drift > 0.2, "{near:?} {far:?}");
    }

    #[test]
    fn empty_window() {
        let momenta = [0.0, 0.1, 0.2];
        let dist = [0.5, 0.3, 0.2];
        assert!(matches!(
            localization_length(&momenta, &dist, (5.0, 6.0), None),
            Err(Error::EmptyFitWindow { count: 0 })
        ));
    }
}
