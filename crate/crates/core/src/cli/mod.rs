//! Subcommands of the `spotdeconv` binary, as library functions.
//!
//! | command    | reads                         | writes                                         |
//! |------------|-------------------------------|------------------------------------------------|
//! | `synth`    | config                        | `d_obs.f64t`, `a_true.f64t`, `gt.csv`, `meta.json` |
//! | `solve`    | config, observation           | volume, optional trace CSV                     |
//! | `detect`   | volume                        | detections CSV                                 |
//! | `evaluate` | detections, ground truth      | report JSON, per-threshold sweep CSV           |
//! | `pipeline` | config                        | all of the above in one directory              |

pub mod codec;
pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::convolution::forward;
use crate::detection::{detect as detect_volume, DetectionList};
use crate::error::{Error, Result};
use crate::evaluation::{best_threshold, threshold_sweep, EvalReport, GroundTruth};
use crate::solver::{apg_solve_with_progress, Progress, SolveResult};
use crate::synth::{generate_scene, render_observation, SceneSpec, GENERATOR};
use crate::tensor::{Image, Volume};

pub use config::{NoiseLevel, RunConfig, SceneConfig, WeightsSource};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SPOTDECONV_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`], if set.
pub fn init_thread_pool_from_env() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(THREADS_ENV, format!("must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::invalid(THREADS_ENV, e.to_string()))
}

/// Scene metadata written beside synthetic data.
#[derive(Debug, Serialize)]
pub struct SceneMeta {
    pub generator: &'static str,
    pub seed: u64,
    pub scene: SceneSpec,
    pub sigma_max_pixels: f64,
    pub truncation: f64,
    pub peak_signal: f64,
}

#[derive(Debug)]
pub struct SynthOutput {
    pub a_true: Volume,
    pub ground_truth: GroundTruth,
    pub d_obs: Image,
    pub meta: SceneMeta,
}

pub const OBS_FILE: &str = "d_obs.f64t";
pub const TRUTH_FILE: &str = "a_true.f64t";
pub const GT_FILE: &str = "gt.csv";
pub const META_FILE: &str = "meta.json";
pub const ESTIMATE_FILE: &str = "a_est.f64t";
pub const TRACE_FILE: &str = "trace.csv";
pub const DETECTIONS_FILE: &str = "detections.csv";
pub const REPORT_FILE: &str = "report.json";

/// Generates the configured scene without touching the filesystem.
pub fn synthesize(cfg: &RunConfig) -> Result<SynthOutput> {
    let bank = cfg.kernel_bank()?;
    let spec = cfg.scene_spec(0.0)?;
    let (a_true, ground_truth) = generate_scene(&spec)?;
    let peak_signal = forward(&a_true, &bank)?.max_abs();
    let noise_sigma = match cfg.scene.as_ref().expect("scene_spec succeeded").noise {
        NoiseLevel::Absolute(s) => s,
        NoiseLevel::RelativeToPeak(f) => f * peak_signal,
    };
    let d_obs = render_observation(&a_true, &bank, noise_sigma, cfg.seed)?;
    Ok(SynthOutput {
        a_true,
        ground_truth,
        d_obs,
        meta: SceneMeta {
            generator: GENERATOR,
            seed: cfg.seed,
            scene: SceneSpec { noise_sigma, ..spec },
            sigma_max_pixels: cfg.sigma_max_pixels(),
            truncation: cfg.truncation,
            peak_signal,
        },
    })
}

/// `synth`: writes the observation, true volume, ground truth and metadata.
pub fn synth(cfg: &RunConfig, out_dir: &Path) -> Result<SynthOutput> {
    let out = synthesize(cfg)?;
    fs::create_dir_all(out_dir)?;
    codec::write_image(&out_dir.join(OBS_FILE), &out.d_obs)?;
    codec::write_volume(&out_dir.join(TRUTH_FILE), &out.a_true)?;
    codec::write_ground_truth(&out_dir.join(GT_FILE), &out.ground_truth)?;
    fs::write(out_dir.join(META_FILE), serde_json::to_string_pretty(&out.meta)?)?;
    Ok(out)
}

fn write_trace(path: &Path, rows: &[Progress], initial_objective: Option<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "rel_change", "objective"])?;
    if let Some(f) = initial_objective {
        w.write_record(&["0".to_string(), String::new(), f.to_string()])?;
    }
    for p in rows {
        w.write_record(&[
            p.iteration.to_string(),
            p.rel_change.to_string(),
            p.objective.map(|f| f.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the solver on an in-memory observation.
pub fn solve_image(
    cfg: &RunConfig,
    d_obs: &Image,
    record_objective: bool,
    progress: impl FnMut(&Progress),
) -> Result<SolveResult> {
    let bank = cfg.kernel_bank()?;
    let mut scfg = cfg.solver_config(d_obs.rows(), d_obs.cols())?;
    scfg.record_objective = record_objective;
    apg_solve_with_progress(d_obs, &bank, &scfg, None, progress)
}

/// `solve`: reads an observation, writes the estimated volume and, if
/// requested, a per-iteration trace CSV (`iteration,rel_change,objective`).
pub fn solve(
    cfg: &RunConfig,
    obs: &Path,
    out: &Path,
    trace: Option<&Path>,
    mut progress: impl FnMut(&Progress),
) -> Result<SolveResult> {
    let d_obs = codec::read_image(obs)?;
    let mut rows = Vec::new();
    let res = solve_image(cfg, &d_obs, trace.is_some(), |p| {
        rows.push(*p);
        progress(p);
    })?;
    codec::write_volume(out, &res.a_opt)?;
    if let Some(path) = trace {
        let init = res.objective_trace.as_ref().and_then(|t| t.first().copied());
        write_trace(path, &rows, init)?;
    }
    Ok(res)
}

/// `detect`: regional maxima of a stored volume.
pub fn detect(volume: &Path, out: &Path) -> Result<DetectionList> {
    let dets = detect_volume(&codec::read_volume(volume)?);
    codec::write_detections(out, &dets)?;
    Ok(dets)
}

/// Path of the per-threshold sweep written next to a report:
/// `report.json` → `report_sweep.csv`.
pub fn sweep_path(report: &Path) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    report.with_file_name(format!("{stem}_sweep.csv"))
}

fn write_sweep(path: &Path, sweep: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "threshold",
        "n_detections",
        "tp",
        "fp",
        "fn",
        "precision",
        "recall",
        "f1",
    ])?;
    for r in sweep {
        w.write_record(&[
            if r.threshold.is_infinite() {
                "inf".into()
            } else {
                r.threshold.to_string()
            },
            (r.tp + r.fp).to_string(),
            r.tp.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Best-threshold report plus the full sweep, written as JSON and CSV.
pub fn evaluate_lists(dets: &DetectionList, gt: &GroundTruth, tol: f64, out: &Path) -> Result<EvalReport> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tol", format!("must be >= 0, got {tol}")));
    }
    let report = best_threshold(dets, gt, tol);
    fs::write(out, serde_json::to_string_pretty(&report)?)?;
    write_sweep(&sweep_path(out), &threshold_sweep(dets, gt, tol))?;
    Ok(report)
}

/// `evaluate`: reads detections and ground truth CSVs.
pub fn evaluate(detections: &Path, ground_truth: &Path, tol: f64, out: &Path) -> Result<EvalReport> {
    let dets = codec::read_detections(detections)?;
    let gt = codec::read_ground_truth(ground_truth)?;
    evaluate_lists(&dets, &gt, tol, out)
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub synth: SynthOutput,
    pub solve: SolveResult,
    pub detections: DetectionList,
    pub report: EvalReport,
}

/// `pipeline`: synth → solve → detect → evaluate in `out_dir`.
pub fn pipeline(cfg: &RunConfig, out_dir: &Path, progress: impl FnMut(&Progress)) -> Result<PipelineOutput> {
    let synth_out = synth(cfg, out_dir)?;
    let solve_out = solve(
        cfg,
        &out_dir.join(OBS_FILE),
        &out_dir.join(ESTIMATE_FILE),
        Some(&out_dir.join(TRACE_FILE)),
        progress,
    )?;
    let detections = detect(&out_dir.join(ESTIMATE_FILE), &out_dir.join(DETECTIONS_FILE))?;
    let report = evaluate(
        &out_dir.join(DETECTIONS_FILE),
        &out_dir.join(GT_FILE),
        cfg.tolerance,
        &out_dir.join(REPORT_FILE),
    )?;
    let mut txt = fs::File::create(out_dir.join("report.txt"))?;
    writeln!(txt, "{}", report.summary())?;
    writeln!(
        txt,
        "solver: {} iterations, final relative change {:.3e}, converged: {}",
        solve_out.iterations, solve_out.final_rel_change, solve_out.converged
    )?;
    Ok(PipelineOutput {
        synth: synth_out,
        solve: solve_out,
        detections,
        report,
    })
}
