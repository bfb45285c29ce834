//! TOML run configuration.

use std::path::Path;

use phasemod::hamiltonians::HamiltonianVariant;
use phasemod::params::to_dimensionless;
use phasemod::quantum::EvolutionMode;
use phasemod::{DimensionlessParams, PhysicalParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub physical: PhysicalSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub pes: PesSection,
    #[serde(default)]
    pub resonances: ResonanceSection,
    #[serde(default)]
    pub quantum: QuantumSection,
}

/// Either the scaled block (`lambda`, `gamma`, `eta`, `kay`) or the SI block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laser_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planck: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub variants: Vec<String>,
    pub steps_per_period: usize,
    pub n_periods: usize,
    /// Run the island-period detector from every initial condition.
    pub island_report: bool,
    pub detector_eps: f64,
    pub detector_max_n: usize,
    pub detector_strobes: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            variants: vec!["RwaAdiabaticLargeMinus".into()],
            steps_per_period: 512,
            n_periods: 200,
            island_report: false,
            detector_eps: 1e-3,
            detector_max_n: 16,
            detector_strobes: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    /// `disk` or `gaussian`.
    pub kind: String,
    pub count: usize,
    pub x0: f64,
    pub p0: f64,
    pub radius: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub seed: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            kind: "disk".into(),
            count: 20,
            x0: 0.0,
            p0: 0.0,
            radius: 1.0,
            sigma_x: 1.0,
            sigma_p: 0.25,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    /// Box half-width in units of pi.
    pub half_width_pi: u32,
    pub hbar_eff: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: 4096,
            half_width_pi: 32,
            hbar_eff: phasemod::params::DEFAULT_HBAR_EFF,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PesSection {
    /// Laboratory times (s).
    pub times: Vec<f64>,
    /// Any of `small`, `large`, `exact`.
    pub regimes: Vec<String>,
    /// Node indices for the large-detuning crossings.
    pub nodes: Vec<i64>,
    pub gap_time: f64,
    /// Gap window in units of `1/k_L`: `[re_min, re_max, im_min, im_max]`.
    pub window: [f64; 4],
    pub resolution: [usize; 2],
}

impl Default for PesSection {
    fn default() -> Self {
        Self {
            times: vec![0.0],
            regimes: vec!["small".into(), "large".into(), "exact".into()],
            nodes: vec![-1, 0],
            gap_time: 0.0,
            window: [0.0, std::f64::consts::PI, -0.5, 0.5],
            resolution: [64, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceSection {
    pub j_min: f64,
    pub j_max: f64,
    pub n_max: u32,
    pub m_max: u32,
    pub curve_points: usize,
    pub tol: f64,
    pub epsilon: f64,
}

impl Default for ResonanceSection {
    fn default() -> Self {
        Self {
            j_min: 0.0,
            j_max: 60.0,
            n_max: 5,
            m_max: 3,
            curve_points: 400,
            tol: 1e-10,
            epsilon: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumSection {
    /// `MatrixRot`, `MatrixRwa`, or a variant name for a scalar run.
    pub mode: String,
    /// Pins the scalar potential at this time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frozen_at: Option<f64>,
    /// `plus` or `minus`: the component carrying the initial packet.
    pub initial_component: String,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub snapshots: Vec<usize>,
    pub windows: Vec<[usize; 2]>,
    pub fit_window: [f64; 2],
    pub bin_width: f64,
    /// Size of the paired classical ensemble; 0 skips it.
    pub classical_count: usize,
    pub classical_steps_per_period: usize,
}

impl Default for QuantumSection {
    fn default() -> Self {
        Self {
            mode: "RwaAdiabaticLargeMinus".into(),
            frozen_at: None,
            initial_component: "minus".into(),
            x0: 0.0,
            p0: 0.0,
            sigma: 1.0,
            snapshots: vec![],
            windows: vec![],
            fit_window: [0.0, 8.0],
            bin_width: 0.5,
            classical_count: 0,
            classical_steps_per_period: 256,
        }
    }
}

fn invalid(path: impl Into<String>, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {reason}", path.into()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{m} [{}]", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(describe_toml_error(text, &e)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn si_params(&self) -> Result<PhysicalParams, CliError> {
        let p = &self.physical;
        let need = |name: &str, v: Option<f64>| v.ok_or_else(|| invalid(format!("physical.{name}"), "missing (SI block required)"));
        let params = PhysicalParams {
            mass: need("mass", p.mass)?,
            transition_freq: need("transition_freq", p.transition_freq)?,
            laser_freq: need("laser_freq", p.laser_freq)?,
            rabi_freq: need("rabi_freq", p.rabi_freq)?,
            wavenumber: need("wavenumber", p.wavenumber)?,
            modulation_amplitude: need("modulation_amplitude", p.modulation_amplitude)?,
            modulation_freq: need("modulation_freq", p.modulation_freq)?,
            planck: need("planck", p.planck)?,
        };
        params.validate().map_err(|e| core_validation("physical", e))?;
        Ok(params)
    }

    fn has_si(&self) -> bool {
        let p = &self.physical;
        [
            p.mass,
            p.transition_freq,
            p.laser_freq,
            p.rabi_freq,
            p.wavenumber,
            p.modulation_amplitude,
            p.modulation_freq,
            p.planck,
        ]
        .iter()
        .any(Option::is_some)
    }

    fn has_scaled(&self) -> bool {
        let p = &self.physical;
        [p.lambda, p.gamma, p.eta, p.kay].iter().any(Option::is_some)
    }

    pub fn scaled_params(&self) -> Result<DimensionlessParams, CliError> {
        let hbar = self.grid.hbar_eff;
        match (self.has_scaled(), self.has_si()) {
            (true, true) => Err(invalid("physical", "give either the scaled block or the SI block, not both")),
            (false, false) => Err(invalid("physical", "no parameters given")),
            (false, true) => {
                let si = self.si_params()?;
                to_dimensionless(&si, hbar).map_err(|e| core_validation("physical", e))
            }
            (true, false) => {
                let p = &self.physical;
                let need = |name: &str, v: Option<f64>| v.ok_or_else(|| invalid(format!("physical.{name}"), "missing"));
                let d = DimensionlessParams {
                    lambda: need("lambda", p.lambda)?,
                    gamma: need("gamma", p.gamma)?,
                    eta: need("eta", p.eta)?,
                    kay: need("kay", p.kay)?,
                    hbar_eff: hbar,
                };
                d.validate().map_err(|e| match e {
                    phasemod::Error::InvalidParameter { field: "hbar_eff", reason } => invalid("grid.hbar_eff", reason),
                    other => core_validation("physical", other),
                })?;
                Ok(d)
            }
        }
    }

    pub fn variants(&self) -> Result<Vec<HamiltonianVariant>, CliError> {
        if self.integrator.variants.is_empty() {
            return Err(invalid("integrator.variants", "need at least one variant"));
        }
        self.integrator
            .variants
            .iter()
            .enumerate()
            .map(|(i, name)| {
                name.parse()
                    .map_err(|_| invalid(format!("integrator.variants[{i}]"), format!("unknown variant `{name}`")))
            })
            .collect()
    }

    pub fn check_integrator(&self) -> Result<(), CliError> {
        if self.integrator.steps_per_period == 0 {
            return Err(invalid("integrator.steps_per_period", "must be >= 1"));
        }
        if self.integrator.n_periods == 0 {
            return Err(invalid("integrator.n_periods", "must be >= 1"));
        }
        Ok(())
    }

    pub fn evolution_mode(&self) -> Result<EvolutionMode, CliError> {
        let q = &self.quantum;
        let mode = match q.mode.as_str() {
            "MatrixRot" => EvolutionMode::MatrixRot,
            "MatrixRwa" => EvolutionMode::MatrixRwa,
            name => {
                let v: HamiltonianVariant = name
                    .parse()
                    .map_err(|_| invalid("quantum.mode", format!("unknown mode `{name}`")))?;
                match q.frozen_at {
                    Some(at) => EvolutionMode::FrozenScalar(v, at),
                    None => EvolutionMode::Scalar(v),
                }
            }
        };
        if q.frozen_at.is_some() && !matches!(mode, EvolutionMode::FrozenScalar(..)) {
            return Err(invalid("quantum.frozen_at", "only valid for scalar modes"));
        }
        Ok(mode)
    }
}

/// `section.key: message (line L, column C)` when the error has a location.
fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let message = e.message().trim();
    let Some(span) = e.span() else {
        return message.to_string();
    };
    let before = &text[..span.start];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line_no = before.matches('\n').count() + 1;
    let column = span.start - line_start + 1;
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    let header = |l: &str| l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
    let path = if line.starts_with('[') {
        header(line)
    } else {
        let key = line.split('=').next().unwrap_or("").trim();
        match text[..line_start].lines().rev().map(str::trim).find(|l| l.starts_with('[')) {
            Some(h) => format!("{}.{key}", header(h)),
            None => key.to_string(),
        }
    };
    format!("{path}: {message} (line {line_no}, column {column})")
}

/// Maps a core validation error onto a config field path.
pub fn core_validation(section: &str, e: phasemod::Error) -> CliError {
    match e {
        phasemod::Error::InvalidParameter { field, reason } => invalid(format!("{section}.{field}"), reason),
        other => invalid(section, other),
    }
}
