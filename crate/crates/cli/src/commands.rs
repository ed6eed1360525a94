use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shockzone::datagen::{
    build_dataset, read_dataset, staircase_profile, write_dataset, write_manifest, DataGenConfig,
    StaircaseSpec,
};
use shockzone::experiment::{
    emit_results, simulate_with_model, timing_compare, ExperimentConfig, MeshStrategy, RunReport,
};
use shockzone::monitor::{monitor_eval, MonitorConfig, NodalFields};
use shockzone::surrogate::{
    load_model, save_model, train_with_progress, InputKind, SurrogateModel, TrainConfig,
};
use shockzone::{config, Error, Grid1D, Result};

use crate::Common;

/// Size the rayon pool from `SHOCKZONE_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SHOCKZONE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::config(
            "SHOCKZONE_THREADS",
            format!("expected a positive integer, got `{raw}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::config("SHOCKZONE_THREADS", e.to_string()))
}

fn load_or_default<T: Default + serde::de::DeserializeOwned>(spec: Option<&str>) -> Result<T> {
    match spec {
        None => Ok(T::default()),
        Some(s) if Path::new(s).exists() => config::from_file(Path::new(s)),
        Some(s) => Err(Error::config("config", format!("no such file `{s}`"))),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn generate_data(common: &Common, samples: Option<usize>) -> Result<Value> {
    let mut cfg: DataGenConfig = load_or_default(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = samples {
        cfg.n_samples = n;
    }
    cfg.validate()?;
    fs::create_dir_all(&common.out)?;
    let start = Instant::now();
    let ds = build_dataset(&cfg)?;
    let data = common.out.join("dataset.bin");
    let manifest = common.out.join("dataset.manifest.json");
    write_dataset(&data, &ds.samples)?;
    write_manifest(&manifest, &ds.manifest)?;
    Ok(json!({
        "dataset": data,
        "manifest": manifest,
        "n_samples": ds.manifest.n_samples,
        "n_discarded": ds.manifest.n_discarded,
        "checksum": ds.manifest.checksum,
        "seconds": start.elapsed().as_secs_f64(),
    }))
}

pub fn train(common: &Common, data: &Path, epochs: Option<usize>) -> Result<Value> {
    let mut cfg: TrainConfig = load_or_default(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let samples = read_dataset(data)?;
    fs::create_dir_all(&common.out)?;
    let start = Instant::now();
    let every = (cfg.epochs / 10).max(1);
    let (model, report) = train_with_progress(&samples, &cfg, |epoch, tr, va| {
        if (epoch + 1) % every == 0 {
            eprintln!("epoch {:>6}  train {tr:.4e}  val {va:.4e}", epoch + 1);
        }
    })?;
    let seconds = start.elapsed().as_secs_f64();
    let model_path = common.out.join("model.szm");
    let loss_path = common.out.join("loss.csv");
    save_model(&model, &model_path)?;
    report.write_loss_csv(fs::File::create(&loss_path)?)?;
    let summary = json!({
        "model": model_path,
        "loss_csv": loss_path,
        "n_train": report.n_train,
        "n_val": report.n_val,
        "epochs": cfg.epochs,
        "final_train_mae": report.train_mae.last(),
        "final_val_mae": report.val_mae.last(),
        "min_spacing": model.min_spacing,
        "seconds": seconds,
    });
    write_json(&common.out.join("train_report.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Monitor used to build probe inputs; should match the one used for
    /// data generation.
    pub monitor: MonitorConfig,
    /// Number of single-jump staircases probed.
    pub jump_probes: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            monitor: MonitorConfig::elliptic_default(),
            jump_probes: 20,
            seed: 0,
        }
    }
}

fn probe_input(
    model: &SurrogateModel,
    profile: Vec<f64>,
    grid: &Grid1D,
    monitor: &MonitorConfig,
) -> Result<Vec<f64>> {
    match model.encoding.input {
        InputKind::Monitor => {
            Ok(monitor_eval(&NodalFields::scalar(profile), grid, monitor)?.into_omega())
        }
        InputKind::Profile => Ok(profile),
    }
}

pub fn evaluate_model(common: &Common, model_path: &Path, data: Option<&Path>) -> Result<Value> {
    let mut cfg: EvalConfig = load_or_default(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.monitor.validate()?;
    let model = load_model(model_path)?;
    let n_cells = model.params.layout().n_out;
    let grid = Grid1D::uniform(model.domain[0], model.domain[1], n_cells)?;

    let dataset = match data {
        Some(path) => {
            let samples = read_dataset(path)?;
            let (mut raw, mut mesh, mut count) = (0.0, 0.0, 0usize);
            for s in &samples {
                let pred = model.predict_raw(&s.x)?;
                let target = model.encode_target(&s.y);
                raw += pred
                    .iter()
                    .zip(&target)
                    .map(|(p, t)| (p - t).abs())
                    .sum::<f64>();
                let spacing = model.predict_spacing_from(&s.x)?;
                mesh += spacing
                    .deltas()
                    .iter()
                    .zip(&s.y)
                    .map(|(p, t)| (p - t).abs())
                    .sum::<f64>();
                count += s.y.len();
            }
            let count = count.max(1) as f64;
            json!({ "n_samples": samples.len(), "mae": raw / count, "spacing_mae": mesh / count })
        }
        None => Value::Null,
    };

    let flat = model.predict_spacing_from(&probe_input(
        &model,
        vec![1.0; n_cells + 1],
        &grid,
        &cfg.monitor,
    )?)?;
    let (lo, hi) = flat
        .deltas()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = grid.length() / n_cells as f64;
    let mut offsets = Vec::with_capacity(cfg.jump_probes);
    for _ in 0..cfg.jump_probes {
        let x0 = grid.a() + rng.random_range(0.2..0.8) * grid.length();
        let low = rng.random_range(0.0..0.5);
        let spec = StaircaseSpec::new(vec![x0], vec![low, low + rng.random_range(0.2..0.5)])?;
        let input = probe_input(&model, staircase_profile(&spec, &grid), &grid, &cfg.monitor)?;
        let pred = model.predict_spacing_from(&input)?;
        let d = pred.deltas();
        let imin = (0..d.len())
            .min_by(|&i, &j| d[i].total_cmp(&d[j]))
            .expect("cells");
        let centre = grid.a() + d[..imin].iter().sum::<f64>() + 0.5 * d[imin];
        offsets.push((centre - x0).abs() / h);
    }
    let within_two = offsets.iter().filter(|o| **o <= 2.0).count();

    let summary = json!({
        "model": model_path,
        "dataset": dataset,
        "constant_monitor_spacing_ratio": hi / lo,
        "jump_probes": cfg.jump_probes,
        "jump_offsets_cells": offsets,
        "jump_probes_within_two_cells": within_two,
    });
    fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("evaluation.json"), &summary)?;
    Ok(summary)
}

fn load_experiment(common: &Common, model: Option<PathBuf>) -> Result<ExperimentConfig> {
    let spec = common.config.as_deref().ok_or_else(|| {
        Error::config(
            "config",
            "an experiment config file or preset name is required",
        )
    })?;
    let mut cfg = ExperimentConfig::load(spec)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if model.is_some() {
        cfg.model_path = model;
    }
    cfg.output_dir = common.out.clone();
    Ok(cfg)
}

fn model_for(cfg: &ExperimentConfig) -> Result<Option<SurrogateModel>> {
    match (&cfg.model_path, cfg.mesh_strategy) {
        (Some(p), MeshStrategy::DlSurrogate) => Ok(Some(load_model(p)?)),
        (None, MeshStrategy::DlSurrogate) => Err(Error::config(
            "model_path",
            "required by the dl_surrogate strategy",
        )),
        _ => Ok(None),
    }
}

fn run_summary(report: &RunReport, files: &[PathBuf]) -> Value {
    json!({
        "case": report.case,
        "scheme": report.scheme,
        "strategy": report.strategy,
        "steps": report.n_steps,
        "final_time": report.final_time,
        "total_s": report.wall_clock_total,
        "zoning_s": report.wall_clock_zoning,
        "norms": report.norms.iter().map(|q| json!({
            "quantity": q.quantity,
            "l2_rel_error": q.entry.l2_rel_error,
            "l1_rel_error": q.entry.l1_rel_error,
        })).collect::<Vec<_>>(),
        "warnings": report.warnings,
        "files": files,
    })
}

pub fn run_case(common: &Common, model: Option<PathBuf>) -> Result<Value> {
    let cfg = load_experiment(common, model)?;
    let surrogate = model_for(&cfg)?;
    let report = simulate_with_model(&cfg, surrogate.as_ref())?;
    let files = emit_results(&report, &cfg.output_dir)?;
    Ok(run_summary(&report, &files))
}

pub fn compare(common: &Common, model: Option<PathBuf>) -> Result<Value> {
    let base = match load_experiment(common, model.clone()) {
        Ok(cfg) => cfg,
        Err(first) => {
            let Some(spec) = common.config.as_deref().filter(|s| !Path::new(s).exists()) else {
                return Err(first);
            };
            let with_strategy = Common {
                config: Some(format!("{spec}_uniform")),
                ..common.clone()
            };
            load_experiment(&with_strategy, model).map_err(|_| first)?
        }
    };
    let at = |strategy| ExperimentConfig {
        mesh_strategy: strategy,
        ..base.clone()
    };
    let dl_cfg = at(MeshStrategy::DlSurrogate);
    let surrogate = model_for(&dl_cfg)?;
    let run = |cfg: ExperimentConfig| {
        simulate_with_model(
            &cfg,
            surrogate
                .as_ref()
                .filter(|_| cfg.mesh_strategy == MeshStrategy::DlSurrogate),
        )
    };
    let (uniform, (standard, dl)) = rayon::join(
        || run(at(MeshStrategy::Uniform)),
        || {
            rayon::join(
                || run(at(MeshStrategy::MmpdeElliptic)),
                || run(dl_cfg.clone()),
            )
        },
    );
    let (uniform, standard, dl) = (uniform?, standard?, dl?);
    let mut runs = Vec::new();
    for r in [&uniform, &standard, &dl] {
        let files = emit_results(r, &base.output_dir)?;
        runs.push(run_summary(r, &files));
    }
    let timing = timing_compare(&uniform, &standard, &dl)?;
    let path = base
        .output_dir
        .join(format!("{}_{}.timing_summary.json", base.case, base.scheme));
    write_json(&path, &timing)?;
    Ok(json!({ "timing": timing, "timing_file": path, "runs": runs }))
}
