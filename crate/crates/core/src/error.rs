use thiserror::Error;

use crate::hamiltonians::HamiltonianVariant;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("detuning is zero")]
    ZeroDetuning,

    #[error("modulation frequency is zero")]
    ZeroModulationFreq,

    #[error("variant {variant:?} outside its domain: {reason}")]
    VariantDomain {
        variant: HamiltonianVariant,
        reason: &'static str,
    },

    #[error("dressing angle undefined: zero detuning at a node of the standing wave")]
    UndefinedDressingAngle,

    #[error("detuning ratio {ratio} outside the small-detuning regime (limit {limit})")]
    RegimeViolation { ratio: f64, limit: f64 },

    #[error("omega_L t = {phase} lies within {eps} rad of a secant singularity")]
    SecantSingularity { phase: f64, eps: f64 },

    #[error("crossing residual {residual:e} exceeds tolerance {tolerance:e}")]
    CrossingResidual { residual: f64, tolerance: f64 },

    #[error("non-finite phase-space state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("bessel J_{order}({arg}) outside supported range")]
    BesselRange { order: i32, arg: f64 },

    #[error("small denominator n*Omega - m = {value:e} for mode ({n}, {m})")]
    SmallDenominator { n: i32, m: i32, value: f64 },

    #[error("winding number ambiguous: orbit radius {radius:e} too close to the center")]
    AmbiguousWinding { radius: f64 },

    #[error("spinor weights do not have unit norm (|w+|^2 + |w-|^2 = {norm})")]
    BadWeights { norm: f64 },

    #[error("time step too coarse: dt*max|E|/hbar = {value} > {limit}")]
    StabilityViolation { value: f64, limit: f64 },

    #[error("not enough points in fit window ({count})")]
    EmptyFitWindow { count: usize },
}
