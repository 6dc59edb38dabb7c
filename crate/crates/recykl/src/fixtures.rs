//! Regression corpus: small sequences written as manifests, each with counters
//! frozen from a verified run.
//!
//! Layout under the fixture root:
//!
//! ```text
//! <root>/<case>/manifest.json   sequence in manifest form
//! <root>/<case>/*.mtx           matrices and vectors
//! <root>/<case>/expected.json   methods and frozen per-system reports
//! <root>/calibration.json        measured ratios behind the frozen comparison limits
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{run_method, standard_methods, weight_study, MethodSpec, WeightStudyRow};
use crate::linalg::SparseSpdMatrix;
use crate::problems::{
    gen_diffusion_sequence, load_sequence_manifest, write_sequence, DiffusionParams, LinearSystem,
    LoadProfile, SequenceMetadata, SystemSequence,
};
use crate::threestage::{RunOptions, SolveReport, ThreeStageConfig};
use crate::truncation::Strategy;
use crate::weights::WeightKind;

/// Largest admitted ratio of POD to no-truncation total stage-3 iterations.
pub const POD_RATIO_LIMIT: f64 = 1.25;
/// Largest admitted ratio of a computable scheme's post-stage-2 residual to the ideal one.
pub const WEIGHT_TRACKING_FACTOR: f64 = 4.0;
/// Storage cap of the comparison runs.
pub const CALIBRATION_CAP: usize = 50;
/// Retained dimensions of the weight study.
pub const WEIGHT_STUDY_DIMS: [usize; 8] = [5, 10, 15, 20, 25, 30, 40, 50];

/// Relative tolerance on frozen residuals. Counters are compared exactly.
pub const RESIDUAL_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenReport {
    pub j: usize,
    pub matvecs: u64,
    pub precond_apps: u64,
    pub stage1_dim: usize,
    pub stage2_iters: usize,
    pub stage3_iters: usize,
    pub converged: bool,
    pub final_residual: f64,
}

impl From<&SolveReport> for FrozenReport {
    fn from(r: &SolveReport) -> Self {
        Self {
            j: r.j,
            matvecs: r.matvecs,
            precond_apps: r.precond_apps,
            stage1_dim: r.stage1_dim,
            stage2_iters: r.stage2_iters,
            stage3_iters: r.stage3_iters,
            converged: r.converged,
            final_residual: r.final_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureMethod {
    pub method: MethodSpec,
    pub reports: Vec<FrozenReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    pub manifest: String,
    pub residual_rtol: f64,
    pub methods: Vec<FixtureMethod>,
}

/// One mismatch between a frozen and a fresh report.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub fixture: String,
    pub method: String,
    pub j: usize,
    pub field: &'static str,
    pub expected: String,
    pub got: String,
}

impl std::fmt::Display for Drift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{} system {}: {} expected {} got {}",
            self.fixture, self.method, self.j, self.field, self.expected, self.got
        )
    }
}

fn identity_case() -> Result<SystemSequence> {
    let a = Arc::new(SparseSpdMatrix::identity(4));
    let sys = LinearSystem { a, b: vec![1.0, 2.0, 3.0, 4.0], xguess: vec![0.0; 4], tol: 1e-10 };
    SystemSequence::new(vec![sys], None, SequenceMetadata { name: "identity".into(), ..Default::default() })
}

fn no_truncation() -> MethodSpec {
    let mut c = ThreeStageConfig::default();
    c.truncation.strategy = Strategy::None;
    c.truncation.storage_cap = None;
    MethodSpec::new("No truncation", c)
}

/// Built-in fixture cases: sequence, description and methods.
pub fn fixture_cases() -> Result<Vec<(String, String, SystemSequence, Vec<MethodSpec>)>> {
    let invariant = gen_diffusion_sequence(&DiffusionParams {
        nx: 10,
        ny: 10,
        p: 6,
        drift: 0.0,
        load: LoadProfile::Steady,
        seed: 3,
        tol: 1e-8,
    })?;
    let drift = gen_diffusion_sequence(&DiffusionParams {
        nx: 20,
        ny: 20,
        p: 10,
        drift: 0.05,
        load: LoadProfile::Moving,
        seed: 7,
        tol: 1e-6,
    })?;
    Ok(vec![
        (
            "identity".into(),
            "one identity system of order 4".into(),
            identity_case()?,
            vec![MethodSpec::new("PCG", ThreeStageConfig::pcg()), no_truncation()],
        ),
        (
            "invariant".into(),
            "identical 10x10 diffusion systems with a steady load".into(),
            invariant,
            vec![MethodSpec::new("PCG", ThreeStageConfig::pcg()), no_truncation()],
        ),
        (
            "drift".into(),
            "20x20 diffusion, 10 systems, coefficient drift 0.05".into(),
            drift,
            standard_methods(50),
        ),
    ])
}

fn io(file: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { file: file.to_path_buf(), source }
}

fn run_reports(seq: &SystemSequence, m: &MethodSpec) -> Result<Vec<FrozenReport>> {
    let run = run_method(seq, m, &RunOptions::default())?;
    Ok(run.reports.iter().map(FrozenReport::from).collect())
}

/// Writes every fixture case under `root` and returns the written directories.
pub fn regenerate_fixtures(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (name, description, seq, methods) in fixture_cases()? {
        let dir = root.join(&name);
        let manifest = write_sequence(&seq, &dir)?;
        // frozen values come from the reloaded files so `check` sees the same inputs
        let loaded = load_sequence_manifest(&manifest)?;
        let methods = methods
            .into_iter()
            .map(|method| Ok(FixtureMethod { reports: run_reports(&loaded, &method)?, method }))
            .collect::<Result<Vec<_>>>()?;
        let fx = Fixture {
            name,
            description,
            manifest: "manifest.json".into(),
            residual_rtol: RESIDUAL_RTOL,
            methods,
        };
        let path = dir.join("expected.json");
        let text = serde_json::to_string_pretty(&fx).expect("fixture serializes");
        fs::write(&path, text + "\n").map_err(io(&path))?;
        out.push(dir);
    }
    Ok(out)
}

pub fn load_fixture(dir: &Path) -> Result<Fixture> {
    let path = dir.join("expected.json");
    let text = fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { file: path, line: e.line(), message: e.to_string() })
}

fn compare(fx: &str, method: &str, want: &[FrozenReport], got: &[FrozenReport], rtol: f64) -> Vec<Drift> {
    let mut d = Vec::new();
    if want.len() != got.len() {
        d.push(Drift {
            fixture: fx.into(),
            method: method.into(),
            j: 0,
            field: "systems",
            expected: want.len().to_string(),
            got: got.len().to_string(),
        });
        return d;
    }
    for (w, g) in want.iter().zip(got) {
        let mut push = |field, e: String, o: String| {
            d.push(Drift { fixture: fx.into(), method: method.into(), j: w.j, field, expected: e, got: o })
        };
        macro_rules! exact {
            ($f:ident) => {
                if w.$f != g.$f {
                    push(stringify!($f), w.$f.to_string(), g.$f.to_string());
                }
            };
        }
        exact!(matvecs);
        exact!(precond_apps);
        exact!(stage1_dim);
        exact!(stage2_iters);
        exact!(stage3_iters);
        exact!(converged);
        let scale = w.final_residual.abs().max(f64::MIN_POSITIVE);
        if (w.final_residual - g.final_residual).abs() > rtol * scale {
            push("final_residual", format!("{:e}", w.final_residual), format!("{:e}", g.final_residual));
        }
    }
    d
}

/// Reruns the fixture in `dir` and lists every deviation from the frozen reports.
pub fn check_fixture(dir: &Path) -> Result<Vec<Drift>> {
    let fx = load_fixture(dir)?;
    let seq = load_sequence_manifest(&dir.join(&fx.manifest))?;
    let mut drift = Vec::new();
    for m in &fx.methods {
        let got = run_reports(&seq, &m.method)?;
        drift.extend(compare(&fx.name, &m.method.name, &m.reports, &got, fx.residual_rtol));
    }
    Ok(drift)
}

/// Checks every fixture directory under `root`.
pub fn check_fixtures(root: &Path) -> Result<Vec<Drift>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("expected.json").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Config(format!("no fixtures under {}", root.display())));
    }
    let mut all = Vec::new();
    for d in dirs {
        all.extend(check_fixture(&d)?);
    }
    Ok(all)
}

/// Measurements on the default 50x50 sequence behind the frozen limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub storage_cap: usize,
    pub pod_ratio_limit: f64,
    pub weight_tracking_factor: f64,
    /// `(method, total stage-3 iterations)`.
    pub stage3_totals: Vec<(String, usize)>,
    /// POD total over no-truncation total.
    pub pod_ratio: f64,
    /// Largest residual ratio to the ideal scheme over the study dimensions.
    pub prev_over_ideal: f64,
    pub rbf_over_ideal: f64,
    pub weight_study: Vec<WeightStudyRow>,
}

/// Sequence of the comparison runs: default grid, 20 systems, drift 0.05.
pub fn calibration_sequence() -> Result<SystemSequence> {
    gen_diffusion_sequence(&DiffusionParams::default())
}

/// Max over dimensions of `scheme / ideal` residual ratios.
pub fn tracking_ratio(rows: &[WeightStudyRow], scheme: WeightKind) -> f64 {
    rows.iter()
        .filter(|r| r.scheme == scheme)
        .filter_map(|r| {
            rows.iter()
                .find(|i| i.scheme == WeightKind::Ideal && i.k == r.k)
                .map(|i| r.post_stage2_residual / i.post_stage2_residual)
        })
        .fold(0.0, f64::max)
}

pub fn calibrate() -> Result<Calibration> {
    let seq = calibration_sequence()?;
    let methods = standard_methods(CALIBRATION_CAP);
    let mut totals = Vec::new();
    for m in &methods {
        let run = run_method(&seq, m, &RunOptions::default())?;
        totals.push((m.name.clone(), run.total_stage3_iters()));
    }
    let total = |name: &str| totals.iter().find(|(n, _)| n.starts_with(name)).map(|t| t.1 as f64);
    let pod_ratio = match (total("POD("), total("No truncation")) {
        (Some(p), Some(nt)) => p / nt,
        _ => f64::NAN,
    };
    let rows = weight_study(&seq, &ThreeStageConfig::default(), 10, &WEIGHT_STUDY_DIMS)?;
    Ok(Calibration {
        storage_cap: CALIBRATION_CAP,
        pod_ratio_limit: POD_RATIO_LIMIT,
        weight_tracking_factor: WEIGHT_TRACKING_FACTOR,
        stage3_totals: totals,
        pod_ratio,
        prev_over_ideal: tracking_ratio(&rows, WeightKind::Prev),
        rbf_over_ideal: tracking_ratio(&rows, WeightKind::Rbf),
        weight_study: rows,
    })
}

/// Writes `calibration.json` under `root`.
pub fn write_calibration(root: &Path) -> Result<Calibration> {
    let cal = calibrate()?;
    fs::create_dir_all(root).map_err(io(root))?;
    let path = root.join("calibration.json");
    let text = serde_json::to_string_pretty(&cal).expect("calibration serializes");
    fs::write(&path, text + "\n").map_err(io(&path))?;
    Ok(cal)
}

pub fn load_calibration(root: &Path) -> Result<Calibration> {
    let path = root.join("calibration.json");
    let text = fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { file: path, line: e.line(), message: e.to_string() })
}
