//! Subcommand bodies. Each returns its artifacts in memory; nothing touches
//! the output directory until every computation has succeeded.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use log::info;
use num_complex::Complex64;
use phasemod::classical::{
    detect_island_period, disk_ensemble, ensemble_momentum_spread, ensemble_sections, gaussian_ensemble,
    Frozen, IslandDetector, PhaseState,
};
use phasemod::perturbation::{find_resonances, frequency_curve, write_curve_csv, PerturbationParams};
use phasemod::pes::{
    crossing_exact, crossing_large_detuning, crossing_small_detuning, gap_scan, write_crossings_csv, Branch,
    CrossingOptions, CrossingPoint, Window,
};
use phasemod::quantum::{
    init_gaussian, localization_length, momentum_distribution, write_distribution_csv, EvolutionMode,
    LocalizationFit, Propagator, SnapshotPlan, SpatialGrid,
};
use phasemod::Model;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub rows: usize,
}

impl Artifact {
    fn csv<F>(name: impl Into<String>, write: F) -> Self
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<usize>,
    {
        let mut bytes = Vec::new();
        let rows = write(&mut bytes).expect("writing to memory cannot fail");
        Self {
            name: name.into(),
            bytes,
            rows,
        }
    }

    fn json<T: Serialize>(name: impl Into<String>, value: &T, rows: usize) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        Self {
            name: name.into(),
            bytes,
            rows,
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn pes(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let p = cfg.si_params()?;
    let pc = &cfg.pes;
    if pc.times.is_empty() {
        return Err(CliError::Validation("pes.times: need at least one time".into()));
    }
    for (i, r) in pc.regimes.iter().enumerate() {
        if !matches!(r.as_str(), "small" | "large" | "exact") {
            return Err(CliError::Validation(format!(
                "pes.regimes[{i}]: unknown regime `{r}` (expected small, large or exact)"
            )));
        }
    }
    let wants = |r: &str| pc.regimes.iter().any(|x| x == r);
    let opts = CrossingOptions::default();
    let mut points: Vec<CrossingPoint> = Vec::new();
    let mut skipped = Vec::new();
    for &t in &pc.times {
        if wants("small") {
            match crossing_small_detuning(t, &p, &opts) {
                Ok(c) => points.push(c),
                Err(e) => skipped.push(("SmallDetuning", "Minus", t, e.to_string())),
            }
        }
        if wants("large") {
            points.extend(pc.nodes.iter().map(|&n| crossing_large_detuning(t, n, &p)));
        }
        if wants("exact") {
            for (branch, label) in [(Branch::Minus, "Minus"), (Branch::Plus, "Plus")] {
                match crossing_exact(t, branch, &p, &opts) {
                    Ok(c) => points.push(c),
                    Err(e) => skipped.push(("Exact", label, t, e.to_string())),
                }
            }
        }
    }
    let k = p.wavenumber;
    let [re_min, re_max, im_min, im_max] = pc.window;
    let window = Window {
        re_min: re_min / k,
        re_max: re_max / k,
        im_min: im_min / k,
        im_max: im_max / k,
    };
    let gap = gap_scan(&p, pc.gap_time, &window, (pc.resolution[0], pc.resolution[1]))
        .map_err(|e| CliError::from_core("pes", e))?;
    info!("{} crossings, {} skipped", points.len(), skipped.len());

    let mut out = vec![
        Artifact::csv("crossings.csv", |w| write_crossings_csv(&points, w)),
        Artifact::csv("gap.csv", |w| gap.write_csv(w)),
    ];
    if !skipped.is_empty() {
        let mut text = String::from("regime,branch,t,reason\n");
        for (regime, branch, t, reason) in &skipped {
            writeln!(text, "{regime},{branch},{t},{}", csv_field(reason)).unwrap();
        }
        out.push(Artifact {
            name: "skipped.csv".into(),
            bytes: text.into_bytes(),
            rows: skipped.len(),
        });
    }
    Ok(out)
}

fn ensemble(cfg: &RunConfig) -> Result<Vec<PhaseState>, CliError> {
    let e = &cfg.ensemble;
    if e.count == 0 {
        return Err(CliError::Validation("ensemble.count: must be >= 1".into()));
    }
    match e.kind.as_str() {
        "disk" => {
            if !(e.radius.is_finite() && e.radius >= 0.0) {
                return Err(CliError::Validation("ensemble.radius: must be finite and >= 0".into()));
            }
            Ok(disk_ensemble(e.x0, e.p0, e.radius, e.count, e.seed))
        }
        "gaussian" => gaussian_ensemble(e.x0, e.p0, e.sigma_x, e.sigma_p, e.count, e.seed)
            .map_err(|err| CliError::from_core("ensemble", err)),
        other => Err(CliError::Validation(format!(
            "ensemble.kind: unknown kind `{other}` (expected disk or gaussian)"
        ))),
    }
}

/// Strobe sections for every configured variant from one shared ensemble.
pub fn poincare(cfg: &RunConfig, require_several: bool) -> Result<Vec<Artifact>, CliError> {
    let d = cfg.scaled_params()?;
    let variants = cfg.variants()?;
    cfg.check_integrator()?;
    if require_several && variants.len() < 2 {
        return Err(CliError::Validation(
            "integrator.variants: compare needs at least two variants".into(),
        ));
    }
    let models = variants
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            Model::new(v, d).map_err(|e| CliError::Validation(format!("integrator.variants[{i}]: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ics = ensemble(cfg)?;
    let it = &cfg.integrator;
    let detector = IslandDetector {
        max_n: it.detector_max_n,
        eps: it.detector_eps,
        n_strobes: it.detector_strobes,
        ..IslandDetector::default()
    };

    let mut out = Vec::new();
    let mut failures = String::from("variant,ic_id,message\n");
    let mut n_failures = 0;
    let mut islands = String::from("variant,ic_id,x0,p0,period\n");
    let mut n_islands = 0;
    for model in &models {
        let name = model.variant.name();
        info!("integrating {} initial conditions under {name}", ics.len());
        let data = ensemble_sections(&ics, model, it.n_periods, it.steps_per_period)
            .map_err(|e| CliError::from_core("integrator", e))?;
        for f in &data.failures {
            writeln!(failures, "{name},{},{}", f.ic_id, csv_field(&f.message)).unwrap();
            n_failures += 1;
        }
        out.push(Artifact::csv(format!("section_{name}.csv"), |w| data.write_csv(w)));
        if it.island_report {
            use rayon::prelude::*;
            let periods: Vec<Result<Option<usize>, phasemod::Error>> = ics
                .par_iter()
                .map(|s| detect_island_period(*s, model, it.steps_per_period, &detector))
                .collect();
            for (id, (s, r)) in ics.iter().zip(periods).enumerate() {
                let period = match r {
                    Ok(Some(n)) => n.to_string(),
                    Ok(None) => "none".into(),
                    Err(phasemod::Error::InvalidParameter { field, reason }) => {
                        return Err(CliError::Validation(format!("integrator.{field}: {reason}")))
                    }
                    Err(e) => csv_field(&format!("error: {e}")),
                };
                writeln!(islands, "{name},{id},{},{},{period}", s.x, s.p).unwrap();
                n_islands += 1;
            }
        }
    }
    out.push(Artifact {
        name: "failures.csv".into(),
        bytes: failures.into_bytes(),
        rows: n_failures,
    });
    if it.island_report {
        out.push(Artifact {
            name: "islands.csv".into(),
            bytes: islands.into_bytes(),
            rows: n_islands,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct ResonanceReport<'a> {
    omega_tilde: f64,
    lambda: f64,
    epsilon: f64,
    j_range: [f64; 2],
    resonances: &'a [phasemod::perturbation::ResonanceRecord],
}

pub fn resonances(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let d = cfg.scaled_params()?;
    let r = &cfg.resonances;
    let pp = PerturbationParams::new(d.omega_tilde(), d.lambda, r.epsilon)
        .map_err(|e| CliError::from_core("resonances", e))?;
    let range = (r.j_min, r.j_max);
    let curve = frequency_curve(&pp, range, r.curve_points).map_err(|e| match e {
        phasemod::Error::InvalidParameter { reason, .. } => {
            CliError::Validation(format!("resonances.curve_points: {reason}"))
        }
        other => CliError::from_core("resonances", other),
    })?;
    let found = find_resonances(&pp, r.n_max, r.m_max, range, r.tol).map_err(|e| match e {
        phasemod::Error::InvalidParameter { field: "j_range", reason } => {
            CliError::Validation(format!("resonances.j_min: {reason}"))
        }
        other => CliError::from_core("resonances", other),
    })?;
    info!("{} resonances in [{}, {}]", found.len(), r.j_min, r.j_max);

    let mut guides = String::from("n,m,ratio\n");
    let mut n_guides = 0;
    for n in 1..=r.n_max as i32 {
        for m in (-(r.m_max as i32)..=r.m_max as i32).filter(|&m| m != 0) {
            writeln!(guides, "{n},{m},{}", m as f64 / n as f64).unwrap();
            n_guides += 1;
        }
    }
    let report = ResonanceReport {
        omega_tilde: pp.omega_tilde,
        lambda: pp.lambda,
        epsilon: pp.epsilon,
        j_range: [r.j_min, r.j_max],
        resonances: &found,
    };
    Ok(vec![
        Artifact::csv("frequency_curve.csv", |w| write_curve_csv(&curve, w)),
        Artifact::json("resonances.json", &report, found.len()),
        Artifact {
            name: "guides.csv".into(),
            bytes: guides.into_bytes(),
            rows: n_guides,
        },
    ])
}

#[derive(Serialize)]
struct FitReport {
    target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<LocalizationFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct QuantumReport {
    mode: EvolutionMode,
    params: phasemod::DimensionlessParams,
    grid_n: usize,
    half_width: f64,
    steps_per_period: usize,
    n_periods: usize,
    seed: u64,
    fit_window: [f64; 2],
    bin_width: f64,
    energy_initial: f64,
    energy_final: f64,
    fits: Vec<FitReport>,
}

pub fn quantum(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let d = cfg.scaled_params()?;
    cfg.check_integrator()?;
    let mode = cfg.evolution_mode()?;
    let q = &cfg.quantum;
    let it = &cfg.integrator;
    let grid = SpatialGrid::new(cfg.grid.n, cfg.grid.half_width_pi as f64 * PI)
        .map_err(|e| CliError::from_core("grid", e))?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let weights = match q.initial_component.as_str() {
        "minus" => (zero, one),
        "plus" => (one, zero),
        other => {
            return Err(CliError::Validation(format!(
                "quantum.initial_component: unknown component `{other}` (expected plus or minus)"
            )))
        }
    };
    for (i, w) in q.windows.iter().enumerate() {
        if w[0] > w[1] || w[1] > it.n_periods {
            return Err(CliError::Validation(format!(
                "quantum.windows[{i}]: need first <= last <= integrator.n_periods"
            )));
        }
    }
    for (i, &k) in q.snapshots.iter().enumerate() {
        if k > it.n_periods {
            return Err(CliError::Validation(format!(
                "quantum.snapshots[{i}]: strobe {k} beyond integrator.n_periods"
            )));
        }
    }
    if !(q.bin_width >= 0.0) {
        return Err(CliError::Validation("quantum.bin_width: must be >= 0 (0 disables binning)".into()));
    }
    let classical_potential = if q.classical_count > 0 {
        match mode {
            EvolutionMode::Scalar(v) | EvolutionMode::FrozenScalar(v, _) => Some(
                Model::new(v, d).map_err(|e| CliError::Validation(format!("quantum.mode: {e}")))?,
            ),
            _ => {
                return Err(CliError::Validation(
                    "quantum.classical_count: a paired classical ensemble needs a scalar mode".into(),
                ))
            }
        }
    } else {
        None
    };

    let mut psi = init_gaussian(grid, q.x0, q.p0, q.sigma, weights, d.hbar_eff)
        .map_err(|e| CliError::from_core("quantum", e))?;
    let spp = it.steps_per_period;
    let mut prop = Propagator::new(grid, mode, d, TAU / spp as f64).map_err(|e| CliError::from_core("quantum", e))?;
    let plan = SnapshotPlan {
        strobes: q.snapshots.clone(),
        windows: q.windows.iter().map(|w| (w[0], w[1])).collect(),
    };
    let energy_initial = prop.energy(&psi);
    info!("evolving {} periods at {spp} steps per period", it.n_periods);
    let series = prop
        .evolve(&mut psi, it.n_periods, spp, &plan)
        .map_err(|e| CliError::from_core("integrator", e))?;
    let energy_final = prop.energy(&psi);

    let momenta = grid.momenta(d.hbar_eff);
    let bin = (q.bin_width > 0.0).then_some(q.bin_width);
    let fit = |target: String, dist: &[f64]| match localization_length(&momenta, dist, (q.fit_window[0], q.fit_window[1]), bin) {
        Ok(f) => FitReport {
            target,
            fit: Some(f),
            error: None,
        },
        Err(e) => FitReport {
            target,
            fit: None,
            error: Some(e.to_string()),
        },
    };
    let mut fits: Vec<FitReport> = series
        .window_means
        .iter()
        .map(|((a, b), dist)| fit(format!("window_{a}_{b}"), dist))
        .collect();
    fits.push(fit("final".into(), &momentum_distribution(&psi)));

    let classical = match &classical_potential {
        None => None,
        Some(model) => {
            let ics = gaussian_ensemble(q.x0, q.p0, q.sigma, d.hbar_eff / (2.0 * q.sigma), q.classical_count, cfg.ensemble.seed)
                .map_err(|e| CliError::from_core("quantum", e))?;
            let cspp = q.classical_steps_per_period;
            let spread = match mode {
                EvolutionMode::FrozenScalar(_, at) => {
                    ensemble_momentum_spread(&ics, &Frozen { inner: *model, at }, it.n_periods, cspp)
                }
                _ => ensemble_momentum_spread(&ics, model, it.n_periods, cspp),
            };
            Some(spread.map_err(|e| match e {
                phasemod::Error::InvalidParameter { reason, .. } => {
                    CliError::Validation(format!("quantum.classical_steps_per_period: {reason}"))
                }
                other => CliError::from_core("quantum", other),
            })?)
        }
    };

    let mut out = vec![Artifact::csv("observables.csv", |w| series.write_csv(w))];
    for (k, dist) in &series.snapshots {
        out.push(Artifact::csv(format!("snapshot_{k}.csv"), |w| write_distribution_csv(w, &momenta, dist)));
    }
    for ((a, b), dist) in &series.window_means {
        out.push(Artifact::csv(format!("window_{a}_{b}.csv"), |w| write_distribution_csv(w, &momenta, dist)));
    }
    if let Some(spread) = classical {
        let mut text = String::from("k,p2_mean\n");
        for (k, v) in spread.iter().enumerate() {
            writeln!(text, "{k},{v}").unwrap();
        }
        out.push(Artifact {
            name: "classical_p2.csv".into(),
            bytes: text.into_bytes(),
            rows: spread.len(),
        });
    }
    let report = QuantumReport {
        mode,
        params: d,
        grid_n: grid.n,
        half_width: grid.half_width,
        steps_per_period: spp,
        n_periods: it.n_periods,
        seed: cfg.ensemble.seed,
        fit_window: q.fit_window,
        bin_width: q.bin_width,
        energy_initial,
        energy_final,
        fits,
    };
    let n_fits = report.fits.len();
    out.push(Artifact::json("localization.json", &report, n_fits));
    Ok(out)
}
