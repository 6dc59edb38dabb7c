use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use recykl::analysis::{
    check_subspace_distance_bound, check_weights_bound, subspace_instance, weights_instance,
    BoundCheckReport, Regime, WeightsVariant,
};
use recykl::experiments::{
    output_error_run, reference_solutions, run_method, standard_methods, summarize, validate_methods,
    weight_study as study, MethodSpec, MethodSummary, TOL_SWEEP,
};
use recykl::fixtures::{check_fixtures, regenerate_fixtures, write_calibration};
use recykl::precond::PrecondKind;
use recykl::problems::{
    gen_diffusion_sequence, gen_output_matrix, load_sequence_manifest, write_sequence, DiffusionParams,
    LoadProfile, SystemSequence,
};
use recykl::threestage::{RunOptions, ThreeStageConfig};

use crate::report;
use crate::{FixturesArgs, GenerateArgs, MethodArgs, OutputErrorArgs, RunArgs, VerifyBoundsArgs, WeightStudyArgs};

pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CONFIG: u8 = 3;

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<recykl::Error>() {
        Some(recykl::Error::NotConverged { .. }) => EXIT_NOT_CONVERGED as u8,
        Some(recykl::Error::Config(_) | recykl::Error::Parse { .. } | recykl::Error::Io { .. }) => EXIT_CONFIG,
        Some(_) => 1,
        None if e.downcast_ref::<ConfigError>().is_some() => EXIT_CONFIG,
        None => 1,
    }
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn generate(a: &GenerateArgs) -> Result<i32> {
    let params = DiffusionParams {
        nx: a.nx,
        ny: a.ny,
        p: a.p,
        drift: a.drift,
        load: if a.steady { LoadProfile::Steady } else { LoadProfile::Moving },
        seed: a.seed,
        tol: a.tol,
    };
    let mut seq = gen_diffusion_sequence(&params)?;
    if let Some(q) = a.outputs {
        if q == 0 {
            return Err(config_err("--outputs must be at least 1"));
        }
        let n = seq.n();
        seq = seq.with_output(gen_output_matrix(q, n, a.seed))?;
    }
    let path = write_sequence(&seq, &a.out_dir)?;
    println!("{}", path.display());
    Ok(0)
}

fn parse_precond(s: &str) -> Result<PrecondKind> {
    s.parse::<PrecondKind>().map_err(|e| config_err(format!("--precond: {e}")))
}

fn load_methods(a: &MethodArgs, default: impl FnOnce(usize) -> Vec<MethodSpec>) -> Result<Vec<MethodSpec>> {
    let mut methods = match &a.methods {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Vec<MethodSpec>>(&text)
                .map_err(|e| config_err(format!("{}: line {}: {e}", p.display(), e.line())))?
        }
        None => default(a.cap),
    };
    if methods.is_empty() {
        return Err(config_err("no methods given"));
    }
    if let Some(p) = &a.precond {
        let kind = parse_precond(p)?;
        for m in &mut methods {
            m.config.precond = kind;
        }
    }
    if a.diagnostics {
        for m in &mut methods {
            m.config.diagnostics = true;
        }
    }
    validate_methods(&methods)?;
    Ok(methods)
}

fn out_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

pub fn run(a: &RunArgs) -> Result<i32> {
    let seq = load_sequence_manifest(&a.common.manifest)?;
    let methods = load_methods(&a.common, standard_methods)?;
    out_dir(&a.common.out_dir)?;
    let tols: Vec<Option<f64>> = if a.tol_sweep { TOL_SWEEP.iter().copied().map(Some).collect() } else { vec![None] };
    let jobs: Vec<(&MethodSpec, Option<f64>)> =
        methods.iter().flat_map(|m| tols.iter().map(move |&t| (m, t))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(m, tol)| {
            let s = match tol {
                Some(t) => seq.with_tolerance(t),
                None => seq.clone(),
            };
            let run = run_method(&s, m, &RunOptions::default())?;
            Ok::<_, recykl::Error>((m, tol.unwrap_or(s.system(1).tol), run.reports))
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut summaries: Vec<MethodSummary> = Vec::new();
    for (m, tol, reports) in &results {
        report::write_history(&a.common.out_dir, &m.name, *tol, reports)?;
        rows.extend(reports.iter().map(|r| report::RunRow::new(&m.name, *tol, r)));
        summaries.push(summarize(&m.name, *tol, reports));
    }
    report::write_csv(&a.common.out_dir.join("runs.csv"), &rows)?;
    report::write_json(&a.common.out_dir.join("summary.json"), &summaries)?;
    for s in &summaries {
        println!(
            "{:<28} tol {:>7.0e}  matvecs {:>8.1}  precond {:>8.1}  stage3 {:>8.1}  wall_ms {:>8.2}{}",
            s.method,
            s.tol,
            s.avg_matvecs,
            s.avg_precond_apps,
            s.avg_stage3_iters,
            s.avg_wall_ms,
            if s.not_converged > 0 { format!("  NOT CONVERGED x{}", s.not_converged) } else { String::new() }
        );
    }
    Ok(if summaries.iter().any(|s| s.not_converged > 0) { EXIT_NOT_CONVERGED } else { 0 })
}

fn require_output(seq: &SystemSequence) -> Result<()> {
    if seq.output.is_none() {
        return Err(config_err("manifest has no output_matrix"));
    }
    Ok(())
}

pub fn output_error(a: &OutputErrorArgs) -> Result<i32> {
    let seq = load_sequence_manifest(&a.common.manifest)?;
    require_output(&seq)?;
    let methods = load_methods(&a.common, |cap| {
        let mut m = standard_methods(cap);
        m.truncate(4);
        m.extend(recykl::experiments::output_methods(cap));
        m
    })?;
    out_dir(&a.common.out_dir)?;
    let xstar = reference_solutions(&seq)?;
    let rows: Vec<Vec<_>> = methods
        .par_iter()
        .map(|m| output_error_run(&seq, m, &a.taus, &xstar))
        .collect::<std::result::Result<_, _>>()?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    report::write_csv(&a.common.out_dir.join("output_error.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:<28} tau {:>7.0e}  matvecs {:>8.2}  precond {:>8.2}  wall_ms {:>8.2}  unmet {}",
            r.method, r.tau, r.avg_matvecs, r.avg_precond_apps, r.avg_wall_ms, r.unmet
        );
    }
    Ok(if rows.iter().any(|r| r.unmet > 0) { EXIT_NOT_CONVERGED } else { 0 })
}

pub fn weight_study(a: &WeightStudyArgs) -> Result<i32> {
    let seq = load_sequence_manifest(&a.manifest)?;
    if seq.len() <= a.train {
        return Err(config_err(format!("weight study needs more than {} systems", a.train)));
    }
    let mut cfg = ThreeStageConfig::default();
    if let Some(p) = &a.precond {
        cfg.precond = parse_precond(p)?;
    }
    out_dir(&a.out_dir)?;
    let rows = study(&seq, &cfg, a.train, &a.dims)?;
    report::write_csv(&a.out_dir.join("weight_study.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:<6} k {:>4} kept {:>4}  residual {:>10.4e}  stage3 {:>4}",
            r.scheme.to_string(),
            r.k,
            r.retained,
            r.post_stage2_residual,
            r.stage3_iters
        );
    }
    Ok(0)
}

#[derive(serde::Serialize)]
struct NamedReport {
    check: String,
    #[serde(flatten)]
    report: BoundCheckReport,
}

pub fn verify_bounds(a: &VerifyBoundsArgs) -> Result<i32> {
    out_dir(&a.out_dir)?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.instances).collect();
    let mut all: Vec<NamedReport> = Vec::new();
    for v in [WeightsVariant::AMetric, WeightsVariant::OutputMetric] {
        let reps: Vec<_> = seeds
            .par_iter()
            .map(|&s| check_weights_bound(&weights_instance(s, 40, 6, 1e-2), v))
            .collect::<std::result::Result<_, _>>()?;
        let name = format!("weights-{}", if v == WeightsVariant::AMetric { "a" } else { "ctc" });
        all.extend(reps.into_iter().map(|report| NamedReport { check: name.clone(), report }));
    }
    for r in Regime::ALL {
        let reps: Vec<_> = seeds
            .par_iter()
            .map(|&s| check_subspace_distance_bound(&subspace_instance(r, s), r))
            .collect::<std::result::Result<_, _>>()?;
        all.extend(reps.into_iter().map(|report| NamedReport { check: format!("subspace-{r}"), report }));
    }
    report::write_json(&a.out_dir.join("bounds.json"), &all)?;
    let mut failed = 0;
    let mut names: Vec<&str> = all.iter().map(|r| r.check.as_str()).collect();
    names.dedup();
    for n in names {
        let group: Vec<_> = all.iter().filter(|r| r.check == n).collect();
        let bad = group.iter().filter(|r| !r.report.satisfied).count();
        failed += bad;
        println!("{n:<24} {} / {} satisfied", group.len() - bad, group.len());
    }
    Ok(if failed > 0 { 1 } else { 0 })
}

pub fn fixtures(a: &FixturesArgs) -> Result<i32> {
    if a.regenerate {
        for d in regenerate_fixtures(&a.dir)? {
            println!("wrote {}", d.display());
        }
        let cal = write_calibration(&a.dir)?;
        println!(
            "wrote {} (POD/no-truncation {:.3}, prev/ideal {:.3}, rbf/ideal {:.3})",
            a.dir.join("calibration.json").display(),
            cal.pod_ratio,
            cal.prev_over_ideal,
            cal.rbf_over_ideal
        );
        return Ok(0);
    }
    if !a.dir.is_dir() {
        bail!(config_err(format!("fixture directory {} not found", a.dir.display())));
    }
    let drift = check_fixtures(&a.dir)?;
    for d in &drift {
        println!("{d}");
    }
    if drift.is_empty() {
        println!("fixtures match");
        Ok(0)
    } else {
        Ok(1)
    }
}
