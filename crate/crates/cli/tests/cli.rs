use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

const SCALED: &str = "[physical]\nlambda = 1.0\ngamma = 8.0\neta = 1.0\nkay = 0.3\n";

fn phasemod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasemod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_with(dir: &Path, command: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{command}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out_{command}"));
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    phasemod(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file in `dir` except the manifest, by name.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn poincare_config() -> String {
    format!(
        "{SCALED}[integrator]\nvariants = [\"RwaAdiabaticLargeMinus\", \"ExactLargeDetTaylorMinus\"]\n\
         steps_per_period = 128\nn_periods = 30\nisland_report = true\n\
         [ensemble]\nkind = \"gaussian\"\ncount = 8\nsigma_x = 0.5\nsigma_p = 0.5\nseed = 11\n"
    )
}

fn quantum_config(extra: &str) -> String {
    format!(
        "{SCALED}[integrator]\nsteps_per_period = 256\nn_periods = 6\n[grid]\nn = 128\nhalf_width_pi = 4\n\
         [quantum]\nsnapshots = [0, 3]\nwindows = [[4, 6]]\nfit_window = [0.0, 3.0]\nclassical_count = 16\n{extra}"
    )
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (command, cfg) in [("poincare", poincare_config()), ("quantum", quantum_config(""))] {
        assert!(run_with(a.path(), command, &cfg, &[]).status.success());
        assert!(run_with(b.path(), command, &cfg, &[]).status.success());
        let first = outputs(&a.path().join(format!("out_{command}")));
        let second = outputs(&b.path().join(format!("out_{command}")));
        let csvs: Vec<_> = first.keys().filter(|k| k.ends_with(".csv")).collect();
        assert!(csvs.len() >= 3, "{command}: {csvs:?}");
        for name in first.keys().filter(|k| *k != "config.toml") {
            assert_eq!(first[name], second[name], "{command}: {name} differs");
        }
    }
}

#[test]
fn persisted_config_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    assert!(run_with(tmp.path(), "poincare", &poincare_config(), &["--seed", "5"]).status.success());
    let first_dir = tmp.path().join("out_poincare");
    let persisted = first_dir.join("config.toml");
    let text = fs::read_to_string(&persisted).unwrap();
    assert!(text.contains("seed = 5"), "{text}");
    let again = tmp.path().join("again");
    let o = phasemod(&["poincare", "--config", persisted.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (first, second) = (outputs(&first_dir), outputs(&again));
    for name in first.keys().filter(|k| k.ends_with(".csv")) {
        assert_eq!(first[name], second[name], "{name} differs");
    }
}

#[test]
fn seed_override_changes_the_ensemble() {
    let tmp = TempDir::new().unwrap();
    let cfg = poincare_config();
    assert!(run_with(tmp.path(), "poincare", &cfg, &[]).status.success());
    let base = fs::read(tmp.path().join("out_poincare/section_RwaAdiabaticLargeMinus.csv")).unwrap();
    assert!(run_with(tmp.path(), "poincare", &cfg, &["--seed", "12"]).status.success());
    let other = fs::read(tmp.path().join("out_poincare/section_RwaAdiabaticLargeMinus.csv")).unwrap();
    assert_ne!(base, other);
}

#[test]
fn manifest_lists_every_file_with_row_counts() {
    let tmp = TempDir::new().unwrap();
    for (command, cfg) in [
        ("poincare", poincare_config()),
        ("quantum", quantum_config("")),
        ("resonances", format!("{SCALED}[resonances]\nj_max = 40.0\ncurve_points = 50\n")),
    ] {
        let o = run_with(tmp.path(), command, &cfg, &[]);
        assert!(o.status.success(), "{command}: {}", stderr(&o));
        let dir = tmp.path().join(format!("out_{command}"));
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["command"], command);
        assert_eq!(manifest["tool"], "phasemod");
        assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
        let listed: BTreeMap<String, u64> = manifest["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| (f["name"].as_str().unwrap().to_string(), f["rows"].as_u64().unwrap()))
            .collect();
        let on_disk = outputs(&dir);
        assert_eq!(
            listed.keys().collect::<Vec<_>>(),
            on_disk.keys().collect::<Vec<_>>(),
            "{command}"
        );
        for (name, bytes) in &on_disk {
            if name.ends_with(".csv") {
                let lines = bytes.iter().filter(|&&b| b == b'\n').count() as u64;
                assert_eq!(listed[name], lines - 1, "{command}: {name}");
            }
        }
        let hash = hex::encode(Sha256::digest(&on_disk["config.toml"]));
        assert_eq!(manifest["config_hash"], hash.as_str());
    }
}

#[test]
fn validation_errors_name_the_field_and_write_nothing() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("poincare", format!("{SCALED}[integrator]\nsteps_per_perod = 3\n"), "integrator.steps_per_perod"),
        ("poincare", format!("{SCALED}[integrator]\nn_periods = \"ten\"\n"), "integrator.n_periods"),
        ("poincare", "[physical]\nlambda = 1.0\ngamma = 8.0\neta = -1.0\nkay = 0.3\n".into(), "physical.eta"),
        ("poincare", format!("{SCALED}[integrator]\nvariants = [\"ExactMinus\", \"Bogus\"]\n"), "integrator.variants[1]"),
        ("poincare", format!("{SCALED}[ensemble]\nkind = \"ring\"\n"), "ensemble.kind"),
        ("compare", SCALED.to_string(), "integrator.variants"),
        ("quantum", quantum_config("mode = \"Nope\"\n"), "quantum.mode"),
        ("quantum", format!("{SCALED}[grid]\nn = 100\n"), "grid.n"),
        ("pes", SCALED.to_string(), "physical.mass"),
        ("resonances", format!("{SCALED}[resonances]\nj_min = 5.0\nj_max = 1.0\n"), "resonances.j_min"),
    ];
    for (command, cfg, path) in cases {
        let o = run_with(tmp.path(), command, &cfg, &[]);
        assert_eq!(o.status.code(), Some(2), "{command} {path}: {}", stderr(&o));
        assert!(stderr(&o).contains(&format!("{path}:")), "{path} not in {}", stderr(&o));
        assert!(!tmp.path().join(format!("out_{command}")).exists(), "{command} {path} wrote output");
    }
}

#[test]
fn coarse_time_step_is_a_numerical_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = quantum_config("").replace("kay = 0.3", "kay = 3.0").replace("steps_per_period = 256", "steps_per_period = 130");
    let o = run_with(tmp.path(), "quantum", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("increase integrator.steps_per_period"));
    assert!(!tmp.path().join("out_quantum").exists());
}

#[test]
fn frozen_potential_conserves_energy() {
    let tmp = TempDir::new().unwrap();
    let cfg = quantum_config("frozen_at = 0.7\n").replace("classical_count = 16", "classical_count = 0");
    let o = run_with(tmp.path(), "quantum", &cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("out_quantum/localization.json")).unwrap()).unwrap();
    let (e0, e1) = (report["energy_initial"].as_f64().unwrap(), report["energy_final"].as_f64().unwrap());
    assert!((e0 - e1).abs() <= 1e-3 * e0.abs().max(1.0), "{e0} vs {e1}");
}

fn si_config(transition: f64) -> String {
    format!(
        "[physical]\nmass = 1.44e-25\ntransition_freq = {transition:?}\nlaser_freq = 40.0\nrabi_freq = 1.0\n\
         wavenumber = 8.05e6\nmodulation_amplitude = 2e-7\nmodulation_freq = 2.0\nplanck = 1.054571817e-34\n\
         [pes]\ntimes = [0.0, 0.3, 0.9]\nregimes = [\"small\", \"large\", \"exact\"]\nnodes = [0, 2]\n\
         resolution = [16, 16]\n"
    )
}

fn crossing_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("crossings.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn large_detuning_crossings_sit_at_shifted_nodes() {
    let tmp = TempDir::new().unwrap();
    let o = run_with(tmp.path(), "pes", &si_config(50.0), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("out_pes");
    // small-detuning formula refuses this detuning ratio and is reported, not fatal
    assert!(fs::read_to_string(dir.join("skipped.csv")).unwrap().contains("SmallDetuning"));
    let large: Vec<_> = crossing_rows(&dir).into_iter().filter(|r| r[0] == "LargeDetuning").collect();
    assert_eq!(large.len(), 6);
    let nodes = [0.0, 2.0];
    for (i, row) in large.iter().enumerate() {
        let t: f64 = row[2].parse().unwrap();
        let x: f64 = row[3].parse().unwrap();
        let n = nodes[i % 2];
        let want = (n + 0.5) * PI / 8.05e6 + 2e-7 * (2.0 * t).sin();
        assert!((x - want).abs() <= 1e-15, "{x} vs {want}");
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn zero_detuning_crossings_are_real() {
    let tmp = TempDir::new().unwrap();
    let o = run_with(tmp.path(), "pes", &si_config(40.0), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = crossing_rows(&tmp.path().join("out_pes"));
    assert!(rows.iter().any(|r| r[0] == "Exact") && rows.iter().any(|r| r[0] == "SmallDetuning"));
    for r in rows {
        assert_eq!(r[4].parse::<f64>().unwrap().abs(), 0.0, "{r:?}");
    }
}
