//! Laboratory and scaled parameter sets.
//!
//! The scaled system measures time in units of `1/omega`, position in units of
//! `1/(2 k_L)`, momentum in units of `M omega / (2 k_L)` and energy in units of
//! `M omega^2 / (4 k_L^2)`. One modulation period is `2 pi` in scaled time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default scaled Planck constant used by the quantum module.
pub const DEFAULT_HBAR_EFF: f64 = 0.5;

/// Laboratory constants of the atom + modulated standing wave (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atomic mass `M` (kg).
    pub mass: f64,
    /// Atomic transition frequency `omega_0` (rad/s).
    pub transition_freq: f64,
    /// Laser frequency `omega_L` (rad/s).
    pub laser_freq: f64,
    /// Rabi frequency `Omega` (rad/s).
    pub rabi_freq: f64,
    /// Laser wavenumber `k_L` (1/m).
    pub wavenumber: f64,
    /// Mirror excursion `Delta L` (m).
    pub modulation_amplitude: f64,
    /// Phase-modulation frequency `omega` (rad/s).
    pub modulation_freq: f64,
    /// Planck constant `hbar` (J s).
    pub planck: f64,
}

impl PhysicalParams {
    /// Detuning `omega_0 - omega_L`.
    pub fn detuning(&self) -> f64 {
        self.transition_freq - self.laser_freq
    }

    /// Checks field signs. Zero detuning is allowed here; operations that
    /// divide by it reject it themselves.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("transition_freq", self.transition_freq),
            ("laser_freq", self.laser_freq),
            ("rabi_freq", self.rabi_freq),
            ("wavenumber", self.wavenumber),
            ("planck", self.planck),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if !(self.modulation_amplitude.is_finite() && self.modulation_amplitude >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "modulation_amplitude",
                reason: format!("must be finite and >= 0, got {}", self.modulation_amplitude),
            });
        }
        if !(self.modulation_freq.is_finite() && self.modulation_freq >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "modulation_freq",
                reason: format!("must be finite and >= 0, got {}", self.modulation_freq),
            });
        }
        Ok(())
    }

    /// Phase `k_L (x - Delta L sin(omega t))` of the standing wave.
    pub fn wave_phase(&self, x: f64, t: f64) -> f64 {
        self.wavenumber * (x - self.modulation_amplitude * (self.modulation_freq * t).sin())
    }
}

/// Scaled constants driving the classical and quantum dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// Modulation depth `2 k_L Delta L`.
    pub lambda: f64,
    /// Laser-to-modulation frequency ratio `omega_L / omega`.
    pub gamma: f64,
    /// Rabi strength `(Omega / delta_L)^2`.
    pub eta: f64,
    /// Well depth `hbar k_L^2 Omega^2 / (2 M omega^2 delta_L)`. Negative for red detuning.
    pub kay: f64,
    /// Scaled Planck constant for the quantum runs.
    #[serde(default = "default_hbar_eff")]
    pub hbar_eff: f64,
}

fn default_hbar_eff() -> f64 {
    DEFAULT_HBAR_EFF
}

impl DimensionlessParams {
    pub fn new(lambda: f64, gamma: f64, eta: f64, kay: f64, hbar_eff: f64) -> Result<Self> {
        let d = Self {
            lambda,
            gamma,
            eta,
            kay,
            hbar_eff,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |field: &'static str, ok: bool, value: f64, want: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be {want}, got {value}"),
                })
            }
        };
        check("lambda", self.lambda.is_finite() && self.lambda >= 0.0, self.lambda, ">= 0")?;
        check("gamma", self.gamma.is_finite() && self.gamma > 0.0, self.gamma, "> 0")?;
        check("eta", self.eta.is_finite() && self.eta > 0.0, self.eta, "> 0")?;
        check("kay", self.kay.is_finite(), self.kay, "finite")?;
        check(
            "hbar_eff",
            self.hbar_eff.is_finite() && self.hbar_eff > 0.0,
            self.hbar_eff,
            "> 0",
        )
    }

    /// Oscillator frequency `sqrt(K)` of the harmonic reference.
    pub fn omega_tilde(&self) -> f64 {
        self.kay.max(0.0).sqrt()
    }
}

/// Maps laboratory constants to the scaled system.
pub fn to_dimensionless(p: &PhysicalParams, hbar_eff: f64) -> Result<DimensionlessParams> {
    p.validate()?;
    let delta = p.detuning();
    if delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if p.modulation_freq == 0.0 {
        return Err(Error::ZeroModulationFreq);
    }
    let w = p.modulation_freq;
    let k = p.wavenumber;
    DimensionlessParams::new(
        2.0 * k * p.modulation_amplitude,
        p.laser_freq / w,
        (p.rabi_freq / delta).powi(2),
        p.planck * k * k * p.rabi_freq * p.rabi_freq / (2.0 * p.mass * w * w * delta),
        hbar_eff,
    )
}
