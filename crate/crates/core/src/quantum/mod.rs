//! Split-operator evolution of the two-component atom on a periodic grid.

mod observables;

pub use observables::{
    localization_length, momentum_distribution, write_distribution_csv, LocalizationFit,
    ObservableSeries, StrobeRecord, POOR_FIT_R2,
};

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{scaled_coupling, scaled_coupling_rwa, CouplingMatrix, HamiltonianVariant, Model};
use crate::params::DimensionlessParams;

/// Largest accepted `dt * max(|V|, r) / hbar`.
pub const STABILITY_LIMIT: f64 = 0.1;
pub const MIN_STEPS_PER_PERIOD: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n: usize,
    /// The domain is `[-half_width, half_width)`.
    pub half_width: f64,
}

impl SpatialGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter {
                field: "n",
                reason: format!("grid size must be a power of two >= 64, got {n}"),
            });
        }
        let periods = half_width / PI;
        if !(half_width > 0.0 && (periods - periods.round()).abs() < 1e-9) {
            return Err(Error::InvalidParameter {
                field: "half_width",
                reason: format!("must be a positive multiple of pi, got {half_width}"),
            });
        }
        Ok(Self { n, half_width })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| -self.half_width + i as f64 * self.dx())
            .collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = TAU / (2.0 * self.half_width);
        (0..self.n)
            .map(|j| {
                let j = j as i64;
                let signed = if j < (self.n / 2) as i64 { j } else { j - self.n as i64 };
                signed as f64 * dk
            })
            .collect()
    }

    /// Momenta `hbar k` in FFT order.
    pub fn momenta(&self, hbar: f64) -> Vec<f64> {
        self.wavenumbers().into_iter().map(|k| hbar * k).collect()
    }
}

/// Two-component wavefunction; `plus` is the excited amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: SpatialGrid,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    pub t: f64,
    pub hbar_eff: f64,
}

impl SpinorField {
    pub fn norm(&self) -> f64 {
        let s: f64 = self
            .plus
            .iter()
            .chain(self.minus.iter())
            .map(|z| z.norm_sqr())
            .sum();
        s * self.grid.dx()
    }

    pub fn excited_population(&self) -> f64 {
        self.plus.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Position variance of the total density.
    pub fn position_moments(&self) -> (f64, f64) {
        let dx = self.grid.dx();
        let xs = self.grid.positions();
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let w = (self.plus[i].norm_sqr() + self.minus[i].norm_sqr()) * dx;
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        let mean = m1 / m0;
        (mean, m2 / m0 - mean * mean)
    }
}

/// Gaussian packet `exp(-(x-x0)^2/(4 sigma^2) + i p0 x / hbar)` split over the
/// components by `weights = (w_plus, w_minus)`.
pub fn init_gaussian(
    grid: SpatialGrid,
    x0: f64,
    p0: f64,
    sigma: f64,
    weights: (Complex64, Complex64),
    hbar_eff: f64,
) -> Result<SpinorField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "sigma",
            reason: format!("must be > 0, got {sigma}"),
        });
    }
    if !(hbar_eff > 0.0 && hbar_eff.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "hbar_eff",
            reason: format!("must be > 0, got {hbar_eff}"),
        });
    }
    let wn = weights.0.norm_sqr() + weights.1.norm_sqr();
    if (wn - 1.0).abs() > 1e-12 {
        return Err(Error::BadWeights { norm: wn });
    }
    let envelope: Vec<Complex64> = grid
        .positions()
        .into_iter()
        .map(|x| {
            let d = x - x0;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), p0 * x / hbar_eff)
        })
        .collect();
    let norm = (envelope.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
    let plus = envelope.iter().map(|z| weights.0 * z / norm).collect();
    let minus = envelope.iter().map(|z| weights.1 * z / norm).collect();
    Ok(SpinorField {
        grid,
        plus,
        minus,
        t: 0.0,
        hbar_eff,
    })
}

/// What drives the potential part of a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvolutionMode {
    /// Full rotating-frame matrix, counter-rotating terms included.
    MatrixRot,
    /// Matrix with counter-rotating terms dropped.
    MatrixRwa,
    /// Time-independent matrix, for tests and diagnostics.
    ConstantMatrix(CouplingMatrix),
    /// One surface applied to both components.
    Scalar(HamiltonianVariant),
    /// Scalar surface with its time argument pinned.
    FrozenScalar(HamiltonianVariant, f64),
}

enum Potential {
    Matrix,
    Scalar(Model, Option<f64>),
}

/// Reusable FFT plans, phases and buffers for one run configuration.
pub struct Propagator {
    grid: SpatialGrid,
    mode: EvolutionMode,
    params: DimensionlessParams,
    potential: Potential,
    dt: f64,
    hbar: f64,
    xs: Vec<f64>,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: SpatialGrid, mode: EvolutionMode, params: DimensionlessParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter {
                field: "dt",
                reason: format!("must be > 0, got {dt}"),
            });
        }
        let potential = match mode {
            EvolutionMode::Scalar(v) => Potential::Scalar(Model::new(v, params)?, None),
            EvolutionMode::FrozenScalar(v, at) => Potential::Scalar(Model::new(v, params)?, Some(at)),
            _ => Potential::Matrix,
        };
        let hbar = params.hbar_eff;
        let phase = |scale: f64| -> Vec<Complex64> {
            grid.wavenumbers()
                .into_iter()
                .map(|k| Complex64::from_polar(1.0, -hbar * k * k * scale))
                .collect()
        };
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n);
        let ifft = planner.plan_fft_inverse(grid.n);
        let scratch_len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());
        Ok(Self {
            grid,
            mode,
            params,
            potential,
            dt,
            hbar,
            xs: grid.positions(),
            // exp(-i (hbar k)^2 (dt/2) / (2 hbar))
            half_kinetic: phase(dt / 4.0),
            full_kinetic: phase(dt / 2.0),
            fft,
            ifft,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self) -> EvolutionMode {
        self.mode
    }

    fn forward(&mut self, v: &mut [Complex64]) {
        self.fft.process_with_scratch(v, &mut self.scratch);
    }

    fn inverse(&mut self, v: &mut [Complex64]) {
        self.ifft.process_with_scratch(v, &mut self.scratch);
        let s = 1.0 / self.grid.n as f64;
        for z in v.iter_mut() {
            *z *= s;
        }
    }

    fn coupling(&self, x: f64, t: f64) -> CouplingMatrix {
        match self.mode {
            EvolutionMode::MatrixRot => scaled_coupling(x, t, &self.params),
            EvolutionMode::MatrixRwa => scaled_coupling_rwa(x, t, &self.params),
            EvolutionMode::ConstantMatrix(m) => m,
            _ => unreachable!("scalar modes have no coupling matrix"),
        }
    }

    /// Potential propagator over `dt` at time `t`, applied in position space.
    fn kick(&self, plus: &mut [Complex64], minus: &mut [Complex64], t: f64, active: [bool; 2]) -> Result<()> {
        let limit = STABILITY_LIMIT * self.hbar / self.dt;
        match &self.potential {
            Potential::Scalar(model, frozen) => {
                let at = frozen.unwrap_or(t);
                for (i, &x) in self.xs.iter().enumerate() {
                    let v = model.potential(x, at);
                    if !(v.abs() <= limit) {
                        return Err(self.violation(v.abs()));
                    }
                    let u = Complex64::from_polar(1.0, -v * self.dt / self.hbar);
                    if active[0] {
                        plus[i] *= u;
                    }
                    if active[1] {
                        minus[i] *= u;
                    }
                }
            }
            Potential::Matrix => {
                for (i, &x) in self.xs.iter().enumerate() {
                    let m = self.coupling(x, t);
                    let r = m.half_gap();
                    if !(r <= limit) {
                        return Err(self.violation(r));
                    }
                    let (a, b) = (plus[i], minus[i]);
                    let (na, nb) = rotate(&m, r, self.dt / self.hbar, a, b);
                    plus[i] = na;
                    minus[i] = nb;
                }
            }
        }
        Ok(())
    }

    fn violation(&self, value: f64) -> Error {
        Error::StabilityViolation {
            value: value * self.dt / self.hbar,
            limit: STABILITY_LIMIT,
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self.potential, Potential::Scalar(..))
    }

    /// One Strang step: half kinetic, potential at `t + dt/2`, half kinetic.
    pub fn split_step(&mut self, s: &mut SpinorField) -> Result<()> {
        let mut plus = std::mem::take(&mut s.plus);
        let mut minus = std::mem::take(&mut s.minus);
        let result = (|| {
            self.forward(&mut plus);
            self.forward(&mut minus);
            for (z, k) in plus.iter_mut().chain(minus.iter_mut()).zip(self.half_kinetic.iter().cycle()) {
                *z *= k;
            }
            self.inverse(&mut plus);
            self.inverse(&mut minus);
            self.kick(&mut plus, &mut minus, s.t + 0.5 * self.dt, [true, true])?;
            self.forward(&mut plus);
            self.forward(&mut minus);
            for (z, k) in plus.iter_mut().chain(minus.iter_mut()).zip(self.half_kinetic.iter().cycle()) {
                *z *= k;
            }
            self.inverse(&mut plus);
            self.inverse(&mut minus);
            Ok(())
        })();
        s.plus = plus;
        s.minus = minus;
        if result.is_ok() {
            s.t += self.dt;
        }
        result
    }

    /// `n_periods * steps_per_period` Strang steps with adjacent half kinetic
    /// steps merged; observables at every period boundary.
    pub fn evolve(
        &mut self,
        s: &mut SpinorField,
        n_periods: usize,
        steps_per_period: usize,
        plan: &SnapshotPlan,
    ) -> Result<ObservableSeries> {
        if steps_per_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::InvalidParameter {
                field: "steps_per_period",
                reason: format!("must be >= {MIN_STEPS_PER_PERIOD}, got {steps_per_period}"),
            });
        }
        if (self.dt - TAU / steps_per_period as f64).abs() > 1e-12 * self.dt {
            return Err(Error::InvalidParameter {
                field: "steps_per_period",
                reason: "propagator dt must equal 2 pi / steps_per_period".into(),
            });
        }
        let momenta = self.grid.momenta(self.hbar);
        // Parseval for the unnormalised forward transform
        let norm_scale = self.grid.dx() / self.grid.n as f64;
        let mut series = ObservableSeries::new(plan);
        let t0 = s.t;
        // components that start at zero stay zero under a scalar potential
        let active = if self.is_scalar() {
            [
                s.plus.iter().any(|z| *z != Complex64::new(0.0, 0.0)),
                s.minus.iter().any(|z| *z != Complex64::new(0.0, 0.0)),
            ]
        } else {
            [true, true]
        };
        let mut plus = std::mem::take(&mut s.plus);
        let mut minus = std::mem::take(&mut s.minus);
        let result = (|| -> Result<()> {
            self.transform(&mut plus, &mut minus, active, true);
            series.record(0, t0, &plus, &minus, &momenta, norm_scale);
            let mut step = 0usize;
            for k in 1..=n_periods {
                self.apply(&mut plus, &mut minus, active, true);
                for j in 0..steps_per_period {
                    self.transform(&mut plus, &mut minus, active, false);
                    let t_mid = t0 + (step as f64 + 0.5) * self.dt;
                    self.kick(&mut plus, &mut minus, t_mid, active)?;
                    self.transform(&mut plus, &mut minus, active, true);
                    step += 1;
                    let last = j + 1 == steps_per_period;
                    self.apply(&mut plus, &mut minus, active, last);
                }
                series.record(k, t0 + TAU * k as f64, &plus, &minus, &momenta, norm_scale);
            }
            self.transform(&mut plus, &mut minus, active, false);
            Ok(())
        })();
        s.plus = plus;
        s.minus = minus;
        result?;
        s.t = t0 + TAU * n_periods as f64;
        Ok(series)
    }

    fn transform(&mut self, plus: &mut [Complex64], minus: &mut [Complex64], active: [bool; 2], forward: bool) {
        for (buf, on) in [(plus, active[0]), (minus, active[1])] {
            if on {
                if forward {
                    self.forward(buf);
                } else {
                    self.inverse(buf);
                }
            }
        }
    }

    fn apply(&self, plus: &mut [Complex64], minus: &mut [Complex64], active: [bool; 2], half: bool) {
        let phase = if half { &self.half_kinetic } else { &self.full_kinetic };
        for (buf, on) in [(plus, active[0]), (minus, active[1])] {
            if on {
                for (z, k) in buf.iter_mut().zip(phase) {
                    *z *= k;
                }
            }
        }
    }

    /// `<H>` at the field's current time.
    pub fn energy(&mut self, s: &SpinorField) -> f64 {
        let dx = self.grid.dx();
        let momenta = self.grid.momenta(self.hbar);
        let mut kinetic = 0.0;
        for comp in [&s.plus, &s.minus] {
            let mut buf = comp.clone();
            self.forward(&mut buf);
            // Parseval: sum |psi|^2 dx = sum |phi|^2 dx / n
            kinetic += buf
                .iter()
                .zip(&momenta)
                .map(|(z, p)| 0.5 * p * p * z.norm_sqr())
                .sum::<f64>()
                * dx
                / self.grid.n as f64;
        }
        let mut potential = 0.0;
        for (i, &x) in self.xs.iter().enumerate() {
            let (a, b) = (s.plus[i], s.minus[i]);
            potential += match &self.potential {
                Potential::Scalar(model, frozen) => {
                    model.potential(x, frozen.unwrap_or(s.t)) * (a.norm_sqr() + b.norm_sqr())
                }
                Potential::Matrix => {
                    let m = self.coupling(x, s.t);
                    let off = Complex64::new(m.b1, m.b2);
                    m.a * (a.norm_sqr() - b.norm_sqr()) + 2.0 * (a.conj() * off * b).re
                }
            } * dx;
        }
        kinetic + potential
    }
}

/// `exp(-i theta M / r)` applied to `(a, b)` with `theta = r * scale`.
fn rotate(m: &CouplingMatrix, r: f64, scale: f64, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    if r == 0.0 {
        return (a, b);
    }
    let theta = r * scale;
    let (s, c) = theta.sin_cos();
    let i_s = Complex64::new(0.0, -s / r);
    let off = Complex64::new(m.b1, m.b2);
    (
        a * c + i_s * (m.a * a + off * b),
        b * c + i_s * (off.conj() * a - m.a * b),
    )
}

/// Which momentum distributions to keep during [`Propagator::evolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    /// Strobe indices whose distributions are stored.
    pub strobes: Vec<usize>,
    /// Inclusive strobe ranges whose distributions are averaged.
    pub windows: Vec<(usize, usize)>,
}
