//! Hamiltonian catalog of the driven two-level atom.
//!
//! Scaled potentials are functions of the moving phase `phi = x - lambda sin t`.
//! "Minus" variants always denote the lower (`-sqrt`) surface, which is the
//! binding one for blue detuning (`K > 0`).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2};
use crate::params::{DimensionlessParams, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HamiltonianVariant {
    /// Exact lower surface `-(4K/eta) sqrt(1 + 2 eta (1 + cos phi) cos^2 gamma t)`.
    ExactMinus,
    ExactPlus,
    /// Large-detuning Taylor form `-4K cos phi cos^2 gamma t`.
    ExactLargeDetTaylorMinus,
    ExactLargeDetTaylorPlus,
    /// RWA + adiabatic surface `-hbar Omega_eff`.
    RwaAdiabaticSmallMinus,
    RwaAdiabaticSmallPlus,
    /// Binomially expanded small-detuning surface.
    RwaAdiabaticSmallBinomialMinus,
    RwaAdiabaticSmallBinomialPlus,
    /// Large-detuning RWA surface `-K cos phi`.
    RwaAdiabaticLargeMinus,
    RwaAdiabaticLargePlus,
    /// Harmonic reference `K x^2 / 2`.
    PendulumApprox,
}

impl HamiltonianVariant {
    pub const ALL: [HamiltonianVariant; 11] = [
        Self::ExactMinus,
        Self::ExactPlus,
        Self::ExactLargeDetTaylorMinus,
        Self::ExactLargeDetTaylorPlus,
        Self::RwaAdiabaticSmallMinus,
        Self::RwaAdiabaticSmallPlus,
        Self::RwaAdiabaticSmallBinomialMinus,
        Self::RwaAdiabaticSmallBinomialPlus,
        Self::RwaAdiabaticLargeMinus,
        Self::RwaAdiabaticLargePlus,
        Self::PendulumApprox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ExactMinus => "ExactMinus",
            Self::ExactPlus => "ExactPlus",
            Self::ExactLargeDetTaylorMinus => "ExactLargeDetTaylorMinus",
            Self::ExactLargeDetTaylorPlus => "ExactLargeDetTaylorPlus",
            Self::RwaAdiabaticSmallMinus => "RwaAdiabaticSmallMinus",
            Self::RwaAdiabaticSmallPlus => "RwaAdiabaticSmallPlus",
            Self::RwaAdiabaticSmallBinomialMinus => "RwaAdiabaticSmallBinomialMinus",
            Self::RwaAdiabaticSmallBinomialPlus => "RwaAdiabaticSmallBinomialPlus",
            Self::RwaAdiabaticLargeMinus => "RwaAdiabaticLargeMinus",
            Self::RwaAdiabaticLargePlus => "RwaAdiabaticLargePlus",
            Self::PendulumApprox => "PendulumApprox",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Whether the variant describes a binding surface and therefore needs `K >= 0`.
    pub fn is_binding(self) -> bool {
        matches!(
            self,
            Self::ExactMinus
                | Self::ExactLargeDetTaylorMinus
                | Self::RwaAdiabaticSmallMinus
                | Self::RwaAdiabaticSmallBinomialMinus
                | Self::RwaAdiabaticLargeMinus
                | Self::PendulumApprox
        )
    }

    /// `-1` for the lower surface, `+1` for the upper one.
    fn surface_sign(self) -> f64 {
        match self {
            Self::ExactPlus
            | Self::ExactLargeDetTaylorPlus
            | Self::RwaAdiabaticSmallPlus
            | Self::RwaAdiabaticSmallBinomialPlus
            | Self::RwaAdiabaticLargePlus => 1.0,
            _ => -1.0,
        }
    }
}

impl std::fmt::Display for HamiltonianVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HamiltonianVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::from_name(s).ok_or_else(|| format!("unknown Hamiltonian variant `{s}`"))
    }
}

/// A variant bound to validated scaled parameters. Evaluation is infallible;
/// the binomial surfaces return non-finite values at their poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub variant: HamiltonianVariant,
    pub params: DimensionlessParams,
}

impl Model {
    pub fn new(variant: HamiltonianVariant, params: DimensionlessParams) -> Result<Self> {
        params.validate()?;
        if variant.is_binding() && params.kay < 0.0 {
            return Err(Error::VariantDomain {
                variant,
                reason: "binding surface requires K >= 0 (blue detuning)",
            });
        }
        Ok(Self { variant, params })
    }

    /// Non-kinetic part `V(x, t)` of the scaled Hamiltonian.
    pub fn potential(&self, x: f64, t: f64) -> f64 {
        use HamiltonianVariant::*;
        let d = &self.params;
        let k = d.kay;
        let sign = self.variant.surface_sign();
        let phi = x - d.lambda * t.sin();
        match self.variant {
            ExactMinus | ExactPlus => {
                let c2 = (d.gamma * t).cos().powi(2);
                sign * (4.0 * k / d.eta) * (1.0 + 2.0 * d.eta * (1.0 + phi.cos()) * c2).sqrt()
            }
            ExactLargeDetTaylorMinus | ExactLargeDetTaylorPlus => {
                let c2 = (d.gamma * t).cos().powi(2);
                sign * 4.0 * k * phi.cos() * c2
            }
            RwaAdiabaticSmallMinus | RwaAdiabaticSmallPlus => {
                sign * (4.0 * k.abs() / d.eta) * (1.0 + 0.5 * d.eta * (1.0 + phi.cos())).sqrt()
            }
            RwaAdiabaticSmallBinomialMinus | RwaAdiabaticSmallBinomialPlus => {
                let c = (0.5 * phi).cos();
                sign * (4.0 * k.abs() / d.eta.sqrt()) * (c + 1.0 / (2.0 * d.eta * c))
            }
            RwaAdiabaticLargeMinus | RwaAdiabaticLargePlus => sign * k * phi.cos(),
            PendulumApprox => 0.5 * k * x * x,
        }
    }

    /// Analytic force `-dV/dx`.
    pub fn force(&self, x: f64, t: f64) -> f64 {
        use HamiltonianVariant::*;
        let d = &self.params;
        let k = d.kay;
        let sign = self.variant.surface_sign();
        let phi = x - d.lambda * t.sin();
        match self.variant {
            ExactMinus | ExactPlus => {
                let c2 = (d.gamma * t).cos().powi(2);
                let root = (1.0 + 2.0 * d.eta * (1.0 + phi.cos()) * c2).sqrt();
                sign * 4.0 * k * phi.sin() * c2 / root
            }
            ExactLargeDetTaylorMinus | ExactLargeDetTaylorPlus => {
                let c2 = (d.gamma * t).cos().powi(2);
                sign * 4.0 * k * phi.sin() * c2
            }
            RwaAdiabaticSmallMinus | RwaAdiabaticSmallPlus => {
                let root = (1.0 + 0.5 * d.eta * (1.0 + phi.cos())).sqrt();
                sign * k.abs() * phi.sin() / root
            }
            RwaAdiabaticSmallBinomialMinus | RwaAdiabaticSmallBinomialPlus => {
                let c = (0.5 * phi).cos();
                sign * (2.0 * k.abs() / d.eta.sqrt())
                    * (1.0 - 1.0 / (2.0 * d.eta * c * c))
                    * (0.5 * phi).sin()
            }
            RwaAdiabaticLargeMinus | RwaAdiabaticLargePlus => sign * k * phi.sin(),
            PendulumApprox => -k * x,
        }
    }
}

fn checked(variant: HamiltonianVariant, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::VariantDomain {
            variant,
            reason: "binomial expansion is singular where cos(phi/2) = 0",
        })
    }
}

/// Scaled potential of `variant` at `(x, t)`.
pub fn potential(v: HamiltonianVariant, x: f64, t: f64, d: &DimensionlessParams) -> Result<f64> {
    let model = Model::new(v, *d)?;
    checked(v, model.potential(x, t))
}

/// Scaled force `-dV/dx` of `variant` at `(x, t)`.
pub fn force(v: HamiltonianVariant, x: f64, t: f64, d: &DimensionlessParams) -> Result<f64> {
    let model = Model::new(v, *d)?;
    checked(v, model.force(x, t))
}

/// Dressed-state quantities of the RWA Hamiltonian (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedFrame {
    /// `Omega_eff` (rad/s).
    pub omega_eff: f64,
    /// Mixing angle `alpha` (rad).
    pub alpha: f64,
    pub dalpha_dx: f64,
    pub dalpha_dt: f64,
    /// Coefficient of `sigma_y` in the gauge potential `A`.
    pub gauge_a: f64,
}

pub fn dressed_frame(x: f64, t: f64, p: &PhysicalParams) -> Result<DressedFrame> {
    p.validate()?;
    let phase = p.wave_phase(x, t);
    let (sin_x, cos_x) = phase.sin_cos();
    let delta = p.detuning();
    let rabi = p.rabi_freq;
    if delta == 0.0 && cos_x.abs() < 1e-12 {
        return Err(Error::UndefinedDressingAngle);
    }
    let ratio = delta / rabi;
    let denom = ratio * ratio + cos_x * cos_x;
    let dalpha_dphase = -ratio * sin_x / denom;
    let dalpha_dx = p.wavenumber * dalpha_dphase;
    // d(phase)/dt = -k_L Delta L omega cos(omega t)
    let dphase_dt = -p.wavenumber
        * p.modulation_amplitude
        * p.modulation_freq
        * (p.modulation_freq * t).cos();
    Ok(DressedFrame {
        omega_eff: 0.5 * (delta * delta + rabi * rabi * cos_x * cos_x).sqrt(),
        alpha: (rabi * cos_x).atan2(delta),
        dalpha_dx,
        dalpha_dt: dalpha_dphase * dphase_dt,
        gauge_a: 0.5 * dalpha_dx,
    })
}

/// Traceless Hermitian matrix `[[a, b1 + i b2], [b1 - i b2, -a]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

impl CouplingMatrix {
    /// Half splitting `sqrt(a^2 + b1^2 + b2^2)`.
    pub fn half_gap(&self) -> f64 {
        (self.a * self.a + self.b1 * self.b1 + self.b2 * self.b2).sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.half_gap();
        [-r, r]
    }

    pub fn to_matrix(&self) -> Mat2 {
        [
            [Complex64::new(self.a, 0.0), Complex64::new(self.b1, self.b2)],
            [Complex64::new(self.b1, -self.b2), Complex64::new(-self.a, 0.0)],
        ]
    }
}

/// Rotating-frame coupling matrix (SI energy units).
pub fn coupling_matrix(x: f64, t: f64, p: &PhysicalParams) -> CouplingMatrix {
    let cos_x = p.wave_phase(x, t).cos();
    let (s2, c2) = (2.0 * p.laser_freq * t).sin_cos();
    let half = 0.5 * p.planck * p.rabi_freq;
    CouplingMatrix {
        a: 0.5 * p.planck * p.detuning(),
        b1: half * cos_x * (1.0 + c2),
        b2: half * cos_x * s2,
    }
}

/// Rotating-frame coupling matrix in scaled units, consistent with the
/// `ExactMinus/Plus` surfaces: `a = 4K/eta`, `b = (4|K|/sqrt(eta)) cos(phi/2) (1 + e^{2 i gamma t})`.
pub fn scaled_coupling(x: f64, t: f64, d: &DimensionlessParams) -> CouplingMatrix {
    let half_phase = 0.5 * (x - d.lambda * t.sin());
    let amp = 4.0 * d.kay.abs() / d.eta.sqrt() * half_phase.cos();
    let (s2, c2) = (2.0 * d.gamma * t).sin_cos();
    CouplingMatrix {
        a: 4.0 * d.kay / d.eta,
        b1: amp * (1.0 + c2),
        b2: amp * s2,
    }
}

/// Scaled coupling with the counter-rotating terms dropped (RWA).
pub fn scaled_coupling_rwa(x: f64, t: f64, d: &DimensionlessParams) -> CouplingMatrix {
    let half_phase = 0.5 * (x - d.lambda * t.sin());
    CouplingMatrix {
        a: 4.0 * d.kay / d.eta,
        b1: 4.0 * d.kay.abs() / d.eta.sqrt() * half_phase.cos(),
        b2: 0.0,
    }
}

/// Eigen-decomposition `S^-1 M S = J` of a coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagonalization {
    /// Columns are the (unnormalized) eigenvectors for `j[0]` and `j[1]`.
    pub s: Mat2,
    /// `(-sqrt(a^2+|b|^2), +sqrt(a^2+|b|^2))`.
    pub j: [f64; 2],
    /// Set when `b1 = b2 = 0`, where the closed form for `S` is singular and
    /// the limiting permutation is returned instead.
    pub degenerate: bool,
}

impl Diagonalization {
    /// `|| S^-1 M S - J ||_F`.
    pub fn residual(&self, m: &CouplingMatrix) -> f64 {
        let Some(inv) = linalg::inverse(&self.s) else {
            return f64::INFINITY;
        };
        let d = linalg::mul(&inv, &linalg::mul(&m.to_matrix(), &self.s));
        let j = [
            [Complex64::new(self.j[0], 0.0), linalg::ZERO],
            [linalg::ZERO, Complex64::new(self.j[1], 0.0)],
        ];
        linalg::norm(&linalg::sub(&d, &j))
    }

    /// Unit-norm eigenvector for the given column (0 = lower surface).
    pub fn unit_column(&self, col: usize) -> [Complex64; 2] {
        let v = [self.s[0][col], self.s[1][col]];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / n, v[1] / n]
    }
}

pub fn diagonalize(m: &CouplingMatrix) -> Diagonalization {
    let r = m.half_gap();
    let bb = m.b1 * m.b1 + m.b2 * m.b2;
    if bb == 0.0 {
        let s = if m.a > 0.0 {
            [[linalg::ZERO, linalg::ONE], [linalg::ONE, linalg::ZERO]]
        } else {
            linalg::identity()
        };
        return Diagonalization {
            s,
            j: [-r, r],
            degenerate: true,
        };
    }
    let b = Complex64::new(m.b1, m.b2);
    // (a - r) and (a + r) rewritten to avoid cancellation; algebraically identical.
    let a_minus_r = if m.a > 0.0 { -bb / (m.a + r) } else { m.a - r };
    let a_plus_r = if m.a < 0.0 { bb / (r - m.a) } else { m.a + r };
    Diagonalization {
        s: [
            [b * (a_minus_r / bb), b * (a_plus_r / bb)],
            [linalg::ONE, linalg::ONE],
        ],
        j: [-r, r],
        degenerate: false,
    }
}

/// Mixing angle used when a closed-form `pi/2` limit is needed.
pub const RESONANT_MIXING_ANGLE: f64 = FRAC_PI_2;
