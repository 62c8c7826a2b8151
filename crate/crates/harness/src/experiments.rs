//! Experiment runners. Each expensive unit of work is checkpointed as one
//! JSON cell under the config hash, so interrupted sweeps resume and
//! re-runs reproduce identical artifacts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use baselines::critical::classify_critical;
use baselines::linear::{linear_fit, linear_predict, LinearClassifier, LinearOpts};
use baselines::lyapunov::{lyapunov_score_field, Projection};
use baselines::polyfit::polyfit_coeffs;
use baselines::roc::fit_threshold_roc;
use dynamics::ode::{interpolate_scattered, simulate_repressilator_sample};
use dynamics::raster::{rasterize, GridSpec, VectorField};
use dynamics::seed::{derive, rng_from};
use dynamics::warp::augmented_sample;
use dynamics::zoo::{
    boundary_curve, make_system, repressilator_boundary, repressilator_label, sample_params,
    DynClass, SystemName,
};
use crate::config::ExperimentConfig;
use crate::emit::{fmt_f64, Table};
use crate::ensemble::{ensure_ensemble, Ensemble, Variant, ABLATIONS};
use crate::evalsets::{
    aug_eval_set, input_tensor, noise_seed, noisy, zoo_eval_set, EvalField,
};
use crate::stats::mean_std;
use crate::{stats, HarnessError};

/// Evaluation seed-stream tags (training tags live in `ensemble`).
mod tags {
    /// Zoo evaluation sets, offset by column context.
    pub const ZOO_EVAL: u64 = 0x5A_4F_45;
    /// Plain-SO evaluation set of the ablation table.
    pub const PLAIN_EVAL: u64 = 0x50_4C_45;
    /// Lyapunov trajectory starts.
    pub const LYAP: u64 = 0x4C_59_41;
    /// Repressilator cell simulations.
    pub const REP: u64 = 0x52_45_50;
    /// Subcritical-probe parameter draws.
    pub const SUBHOPF: u64 = 0x53_55_42;
}

/// Evaluation methods of the comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ours,
    CriticalPoints,
    Lyapunov,
    Parameters,
}

pub const METHODS: [Method; 4] =
    [Method::Ours, Method::CriticalPoints, Method::Lyapunov, Method::Parameters];

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::CriticalPoints => "critical_points",
            Method::Lyapunov => "lyapunov",
            Method::Parameters => "parameters",
        }
    }
}

/// Table columns: the augmented SO split plus the configured zoo systems.
/// The context index keys each column's noise and prediction streams.
#[derive(Debug, Clone)]
pub struct Column {
    pub id: String,
    pub context: u64,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone)]
pub enum ColumnKind {
    AugmentedSo,
    PlainSo,
    Zoo(SystemName),
}

pub fn table_columns(cfg: &ExperimentConfig) -> Result<Vec<Column>, HarnessError> {
    let mut cols = vec![Column { id: "aug_so".into(), context: 0, kind: ColumnKind::AugmentedSo }];
    for (i, id) in cfg.systems.iter().enumerate() {
        let name = SystemName::from_id(id)?;
        cols.push(Column { id: id.clone(), context: 2 + i as u64, kind: ColumnKind::Zoo(name) });
    }
    Ok(cols)
}

fn plain_so_column() -> Column {
    Column { id: "plain_so".into(), context: 1, kind: ColumnKind::PlainSo }
}

/// The column's clean evaluation fields (deterministic per config).
pub fn column_fields(
    cfg: &ExperimentConfig,
    col: &Column,
) -> Result<Vec<EvalField>, HarnessError> {
    match &col.kind {
        ColumnKind::AugmentedSo => Ok(aug_eval_set(
            cfg.seed,
            cfg.train.train_samples as u64,
            cfg.train.test_samples,
        )),
        ColumnKind::PlainSo => zoo_eval_set(
            SystemName::SimpleOscillator,
            cfg.test_size,
            derive(cfg.seed, tags::PLAIN_EVAL),
        ),
        ColumnKind::Zoo(name) => {
            zoo_eval_set(*name, cfg.test_size, derive(cfg.seed, tags::ZOO_EVAL + col.context))
        }
    }
}

fn sigma_key(sigma: f64) -> u64 {
    (sigma * 1_000_000.0).round() as u64
}

/// Reads a cached cell or computes and stores it.
fn cell<T, F>(cfg: &ExperimentConfig, experiment: &str, key: &str, compute: F) -> Result<T, HarnessError>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<T, HarnessError>,
{
    let dir: PathBuf = cfg.out_dir.join("cells").join(cfg.hash()).join(experiment);
    let path = dir.join(format!("{key}.json"));
    if path.is_file() {
        return Ok(serde_json::from_str(&std::fs::read_to_string(&path)?)?);
    }
    let value = compute()?;
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&path, serde_json::to_string(&value)?)?;
    Ok(value)
}

/// Lyapunov cycle/point threshold, fit once per config on a calibration
/// range of the augmented SO stream (indices past train and test).
pub fn lyapunov_threshold(cfg: &ExperimentConfig) -> Result<f64, HarnessError> {
    cell(cfg, "calibration", "lyapunov_threshold", || {
        let start = (cfg.train.train_samples + cfg.train.test_samples) as u64;
        let fields = aug_eval_set(cfg.seed, start, cfg.train.calibration_samples);
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for (i, f) in fields.iter().enumerate() {
            let seed = derive(derive(cfg.seed, tags::LYAP), i as u64);
            // Unscorable trajectories are skipped at fit time; at evaluation
            // they fall back to the point class.
            if let Ok(score) = lyapunov_score_field(&f.clean, seed, Projection::X) {
                scores.push(score);
                labels.push(f.label);
            }
        }
        Ok(fit_threshold_roc(&scores, &labels)?.threshold)
    })
}

/// Coefficient-space baseline, fit once per config on the augmented SO
/// training split (noiseless, like the network's training data).
pub fn parameters_baseline(cfg: &ExperimentConfig) -> Result<LinearClassifier, HarnessError> {
    #[derive(Serialize, Deserialize)]
    struct Stored {
        weights: Vec<f64>,
        bias: f64,
        mean: Vec<f64>,
        std: Vec<f64>,
    }
    let stored = cell(cfg, "calibration", "parameters_fit", || {
        let mut features = Vec::with_capacity(cfg.train.train_samples);
        let mut labels = Vec::with_capacity(cfg.train.train_samples);
        for i in 0..cfg.train.train_samples {
            let (sample, _) = augmented_sample(cfg.seed, i as u64, 0.0);
            let (u, v) = sample.raw.as_ref().expect("generator keeps raw rasters");
            let grid = GridSpec::square64(SystemName::SimpleOscillator.extent().unwrap());
            let field = VectorField {
                u: u.iter().map(|&x| x as f64).collect(),
                v: v.iter().map(|&x| x as f64).collect(),
                grid,
            };
            features.push(polyfit_coeffs(&field).coeffs.to_vec());
            labels.push(sample.label.expect("augmented samples are labeled"));
        }
        let fit = linear_fit(&features, &labels, &LinearOpts::default())?;
        Ok(Stored { weights: fit.weights, bias: fit.bias, mean: fit.mean, std: fit.std })
    })?;
    Ok(LinearClassifier {
        weights: stored.weights,
        bias: stored.bias,
        mean: stored.mean,
        std: stored.std,
    })
}

/// Per-run accuracies of one method on one column at one noise scale. Our
/// model yields one accuracy per training re-run; the deterministic
/// baselines yield a single value and need no ensemble.
#[allow(clippy::too_many_arguments)]
fn method_accuracies(
    cfg: &ExperimentConfig,
    ens: Option<&Ensemble>,
    col: &Column,
    fields: &[EvalField],
    method: Method,
    sigma: f64,
    threshold: f64,
    params_fit: &LinearClassifier,
) -> Result<Vec<f64>, HarnessError> {
    let truths: Vec<DynClass> = fields.iter().map(|f| f.label).collect();
    let noisy_fields: Vec<VectorField> = fields
        .iter()
        .enumerate()
        .map(|(i, f)| noisy(&f.clean, sigma, noise_seed(cfg.seed, col.context, sigma, i as u64)))
        .collect();

    match method {
        Method::Ours => {
            let ens = ens.ok_or_else(|| {
                HarnessError::Config("model evaluation needs a trained ensemble".into())
            })?;
            let mode = ens.variant.input_mode();
            let inputs: Vec<_> = noisy_fields.iter().map(|f| input_tensor(mode, f)).collect();
            let mut accs = Vec::with_capacity(ens.models.len());
            for (run, model) in ens.models.iter().enumerate() {
                let nw = model.normalized_weights();
                let mut preds = Vec::with_capacity(inputs.len());
                for (i, input) in inputs.iter().enumerate() {
                    let sample_id = col.context * 0x10_0000 + i as u64;
                    let seed = ens.predict_seed(run, sample_id);
                    let out = model.predict_with(&nw, input, cfg.mc_passes, seed)?;
                    preds.push(class_from_index(out.label));
                }
                accs.push(stats::accuracy(&preds, &truths));
            }
            Ok(accs)
        }
        Method::CriticalPoints => {
            let preds: Vec<DynClass> = noisy_fields.iter().map(classify_critical).collect();
            Ok(vec![stats::accuracy(&preds, &truths)])
        }
        Method::Lyapunov => {
            let mut preds = Vec::with_capacity(noisy_fields.len());
            for (i, f) in noisy_fields.iter().enumerate() {
                let seed =
                    derive(derive(cfg.seed, tags::LYAP + 1 + col.context), i as u64);
                // A trajectory too degenerate to score reads as no sustained
                // oscillation.
                let pred = match lyapunov_score_field(f, seed, Projection::X) {
                    Ok(score) => baselines::lyapunov::label(score, threshold),
                    Err(_) => DynClass::PointAttractor,
                };
                preds.push(pred);
            }
            Ok(vec![stats::accuracy(&preds, &truths)])
        }
        Method::Parameters => {
            let preds: Vec<DynClass> = noisy_fields
                .iter()
                .map(|f| linear_predict(params_fit, &polyfit_coeffs(f).coeffs))
                .collect();
            Ok(vec![stats::accuracy(&preds, &truths)])
        }
    }
}

fn class_from_index(label: usize) -> DynClass {
    if label == 1 {
        DynClass::PeriodicAttractor
    } else {
        DynClass::PointAttractor
    }
}

/// Accuracy rows for every (column, method) pair at one noise scale.
pub struct AccuracyTable {
    pub sigma: f64,
    /// (column id, method id) → per-run accuracies.
    pub cells: BTreeMap<(String, String), Vec<f64>>,
    pub table: Table,
}

fn result_table() -> Table {
    Table::new(vec!["system", "method", "sigma", "mean", "std", "runs", "config", "seed"])
}

pub fn run_accuracy_table(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    sigma: f64,
) -> Result<AccuracyTable, HarnessError> {
    let threshold = lyapunov_threshold(cfg)?;
    let params_fit = parameters_baseline(cfg)?;
    let hash = cfg.hash();
    let mut cells = BTreeMap::new();
    let mut table = result_table();

    for col in table_columns(cfg)? {
        let fields = column_fields(cfg, &col)?;
        for method in METHODS {
            let key = format!("{}_{}_{}", col.id, method.id(), sigma_key(sigma));
            let accs = cell(cfg, "accuracy", &key, || {
                method_accuracies(cfg, Some(ens), &col, &fields, method, sigma, threshold, &params_fit)
            })?;
            let (mean, std) = mean_std(&accs);
            table.push(vec![
                col.id.clone(),
                method.id().to_string(),
                fmt_f64(sigma),
                fmt_f64(mean),
                fmt_f64(std),
                accs.len().to_string(),
                hash.clone(),
                cfg.seed.to_string(),
            ]);
            cells.insert((col.id.clone(), method.id().to_string()), accs);
        }
    }
    Ok(AccuracyTable { sigma, cells, table })
}

/// One method on one column, by column id (the CLI's `baseline` entry).
/// Returns the mean accuracy over the method's runs.
pub fn baseline_accuracy(
    cfg: &ExperimentConfig,
    ens: Option<&Ensemble>,
    method: Method,
    column_id: &str,
    sigma: f64,
) -> Result<f64, HarnessError> {
    let col = table_columns(cfg)?
        .into_iter()
        .find(|c| c.id == column_id)
        .ok_or_else(|| HarnessError::Config(format!("unknown column `{column_id}`")))?;
    let fields = column_fields(cfg, &col)?;
    let threshold = lyapunov_threshold(cfg)?;
    let params_fit = parameters_baseline(cfg)?;
    let key = format!("{}_{}_{}", col.id, method.id(), sigma_key(sigma));
    let accs = cell(cfg, "accuracy", &key, || {
        method_accuracies(cfg, ens, &col, &fields, method, sigma, threshold, &params_fit)
    })?;
    Ok(mean_std(&accs).0)
}

/// Accuracy of every method on the augmented SO test split across the
/// config's noise scales. The clean fields are fixed; each σ draws fresh
/// noise, and cells are shared with `run_accuracy_table`.
pub struct NoiseSweep {
    /// (σ in micro-units, method id) → per-run accuracies.
    pub cells: BTreeMap<(u64, String), Vec<f64>>,
    pub table: Table,
}

pub fn run_noise_sweep(cfg: &ExperimentConfig, ens: &Ensemble) -> Result<NoiseSweep, HarnessError> {
    let threshold = lyapunov_threshold(cfg)?;
    let params_fit = parameters_baseline(cfg)?;
    let hash = cfg.hash();
    let col = &table_columns(cfg)?[0];
    let fields = column_fields(cfg, col)?;
    let mut cells = BTreeMap::new();
    let mut table = result_table();

    for &sigma in &cfg.noise_sigmas {
        for method in METHODS {
            let key = format!("{}_{}_{}", col.id, method.id(), sigma_key(sigma));
            let accs = cell(cfg, "accuracy", &key, || {
                method_accuracies(cfg, Some(ens), col, &fields, method, sigma, threshold, &params_fit)
            })?;
            let (mean, std) = mean_std(&accs);
            table.push(vec![
                col.id.clone(),
                method.id().to_string(),
                fmt_f64(sigma),
                fmt_f64(mean),
                fmt_f64(std),
                accs.len().to_string(),
                hash.clone(),
                cfg.seed.to_string(),
            ]);
            cells.insert((sigma_key(sigma), method.id().to_string()), accs);
        }
    }
    Ok(NoiseSweep { cells, table })
}

/// Mean cycle prediction over a parameter grid, with the analytic boundary
/// as overlay polylines.
#[derive(Debug)]
pub struct BoundaryMap {
    pub x_ticks: Vec<f64>,
    pub y_ticks: Vec<f64>,
    /// Row-major; row r pairs with `y_ticks[r]`, column c with `x_ticks[c]`.
    pub cells: Vec<f64>,
    pub overlay: Vec<Vec<[f64; 2]>>,
}

impl BoundaryMap {
    pub fn to_table(&self, cfg: &ExperimentConfig, x_name: &str, y_name: &str) -> Table {
        let mut t = Table::new(vec![x_name, y_name, "cycle_rate", "config", "seed"]);
        let hash = cfg.hash();
        for (r, &y) in self.y_ticks.iter().enumerate() {
            for (c, &x) in self.x_ticks.iter().enumerate() {
                t.push(vec![
                    fmt_f64(x),
                    fmt_f64(y),
                    fmt_f64(self.cells[r * self.x_ticks.len() + c]),
                    hash.clone(),
                    cfg.seed.to_string(),
                ]);
            }
        }
        t
    }
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64).collect()
}

/// Mean binary cycle prediction of the ensemble on one clean field.
fn ensemble_cycle_rate(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    field: &VectorField,
    sample_id: u64,
) -> Result<f64, HarnessError> {
    let input = input_tensor(ens.variant.input_mode(), field);
    let mut cycles = 0usize;
    for (run, model) in ens.models.iter().enumerate() {
        let out = model.predict(&input, cfg.mc_passes, ens.predict_seed(run, sample_id))?;
        cycles += out.label;
    }
    Ok(cycles as f64 / ens.models.len() as f64)
}

/// Sweeps a two-parameter system over its sampling ranges and records the
/// ensemble's mean cycle prediction per cell.
pub fn run_boundary_map(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    name: SystemName,
    nx: usize,
    ny: usize,
) -> Result<BoundaryMap, HarnessError> {
    let ranges = name.param_ranges();
    if ranges.len() != 2 {
        return Err(HarnessError::Config(format!(
            "boundary maps need a two-parameter system; `{}` has {}",
            name.id(),
            ranges.len()
        )));
    }
    let x_ticks = linspace(ranges[0], nx);
    let y_ticks = linspace(ranges[1], ny);
    let mut cells = vec![0.0; nx * ny];
    for (r, &y) in y_ticks.iter().enumerate() {
        for (c, &x) in x_ticks.iter().enumerate() {
            let key = format!("{}_{r}_{c}", name.id());
            cells[r * nx + c] = cell(cfg, "boundary", &key, || {
                let system = make_system(name, &[x, y])?;
                let grid = GridSpec::square64(system.extent().expect("planar system"));
                let field = rasterize(&system, &grid)?;
                ensemble_cycle_rate(cfg, ens, &field, (r * nx + c) as u64)
            })?;
        }
    }
    Ok(BoundaryMap { x_ticks, y_ticks, cells, overlay: boundary_curve(name, 64)? })
}

/// Cycle probability against signed boundary distance: Spearman ρ plus a
/// per-class binned curve.
pub struct ConfidenceStudy {
    pub spearman: Option<f64>,
    pub curve: Table,
}

pub fn confidence_vs_distance(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    name: SystemName,
) -> Result<ConfidenceStudy, HarnessError> {
    let col = table_columns(cfg)?
        .into_iter()
        .find(|c| c.id == name.id())
        .ok_or_else(|| {
            HarnessError::Config(format!("system `{}` is not in the config", name.id()))
        })?;
    let fields = column_fields(cfg, &col)?;

    // Stored as (distance, cycle probability, class byte); the class byte
    // mirrors the dataset encoding (0 point, 1 cycle).
    let stored: Vec<(f64, f64, u8)> = cell(cfg, "confidence", name.id(), || {
        let mut out = Vec::new();
        for (i, f) in fields.iter().enumerate() {
            let Some(dist) = f.boundary_distance else { continue };
            let input = input_tensor(ens.variant.input_mode(), &f.clean);
            let mut prob = 0.0;
            for (run, model) in ens.models.iter().enumerate() {
                let sample_id = col.context * 0x10_0000 + i as u64;
                let pred = model.predict(&input, cfg.mc_passes, ens.predict_seed(run, sample_id))?;
                prob += pred.probs[1];
            }
            let class = u8::from(f.label == DynClass::PeriodicAttractor);
            out.push((dist, prob / ens.models.len() as f64, class));
        }
        Ok(out)
    })?;
    let pairs: Vec<(f64, f64, DynClass)> =
        stored.iter().map(|&(d, p, c)| (d, p, class_from_index(c as usize))).collect();

    let dists: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let probs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rho = stats::spearman(&dists, &probs);

    let mut curve = Table::new(vec![
        "system", "class", "bin_center", "mean", "std", "n", "config", "seed",
    ]);
    let hash = cfg.hash();
    for class in [DynClass::PointAttractor, DynClass::PeriodicAttractor] {
        let subset: Vec<(f64, f64)> =
            pairs.iter().filter(|p| p.2 == class).map(|p| (p.0, p.1)).collect();
        if subset.is_empty() {
            continue;
        }
        let lo = subset.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = subset.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let bins = 8usize;
        let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
        for b in 0..bins {
            let (blo, bhi) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
            let members: Vec<f64> = subset
                .iter()
                .filter(|p| p.0 >= blo && (p.0 < bhi || (b == bins - 1 && p.0 <= bhi)))
                .map(|p| p.1)
                .collect();
            if members.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&members);
            curve.push(vec![
                name.id().to_string(),
                class_id(class).to_string(),
                fmt_f64(0.5 * (blo + bhi)),
                fmt_f64(mean),
                fmt_f64(std),
                members.len().to_string(),
                hash.clone(),
                cfg.seed.to_string(),
            ]);
        }
    }
    Ok(ConfidenceStudy { spearman: rho, curve })
}

fn class_id(c: DynClass) -> &'static str {
    match c {
        DynClass::PointAttractor => "point",
        DynClass::PeriodicAttractor => "cycle",
    }
}

/// Repressilator grid study: per-cell simulated snapshot → interpolation →
/// prediction, scored against the analytic Hopf window.
pub struct RepressilatorStudy {
    pub map: BoundaryMap,
    pub accuracy: f64,
    /// Per-cell (truth, predicted) classes, row-major like the map.
    pub outcomes: Vec<(DynClass, DynClass)>,
}

pub fn run_repressilator_study(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    nx: usize,
    ny: usize,
) -> Result<RepressilatorStudy, HarnessError> {
    const ALPHA_MAX: f64 = 30.0;
    const BETA_MAX: f64 = 10.0;
    // Cell centers keep α, β inside their open ranges.
    let x_ticks: Vec<f64> =
        (0..nx).map(|i| ALPHA_MAX * (i as f64 + 0.5) / nx as f64).collect();
    let y_ticks: Vec<f64> =
        (0..ny).map(|j| BETA_MAX * (j as f64 + 0.5) / ny as f64).collect();

    let mut cells = vec![0.0; nx * ny];
    let mut outcomes = Vec::with_capacity(nx * ny);
    let mut correct = 0usize;
    for (r, &beta) in y_ticks.iter().enumerate() {
        for (c, &alpha) in x_ticks.iter().enumerate() {
            let idx = r * nx + c;
            let rate = cell(cfg, "repressilator", &format!("{r}_{c}"), || {
                let seed = derive(cfg.seed, tags::REP + idx as u64);
                let scattered = simulate_repressilator_sample(alpha, beta, 100, 0.5, seed)?;
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for p in &scattered.points {
                    for d in 0..2 {
                        lo[d] = lo[d].min(p[d]);
                        hi[d] = hi[d].max(p[d]);
                    }
                }
                for d in 0..2 {
                    // Collapsed clouds still need a proper window.
                    if hi[d] - lo[d] < 1e-9 {
                        lo[d] -= 0.5;
                        hi[d] += 0.5;
                    }
                }
                let grid = GridSpec::square64([[lo[0], hi[0]], [lo[1], hi[1]]]);
                let field = interpolate_scattered(&scattered, &grid, 8, 2.0);
                ensemble_cycle_rate(cfg, ens, &field, 0x52_45_50_00 + idx as u64)
            })?;
            cells[idx] = rate;
            let truth = repressilator_label(alpha, beta);
            let pred = class_from_index(usize::from(rate > 0.5));
            if truth == pred {
                correct += 1;
            }
            outcomes.push((truth, pred));
        }
    }

    // Overlay: the two Hopf branches over a dense α sweep, clipped to the
    // plotted β range.
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for i in 0..=300 {
        let alpha = ALPHA_MAX * (i as f64 + 0.5) / 301.0;
        if let Ok((b1, b2)) = repressilator_boundary(alpha) {
            if (0.0..=BETA_MAX).contains(&b1) {
                lower.push([alpha, b1]);
            }
            if (0.0..=BETA_MAX).contains(&b2) {
                upper.push([alpha, b2]);
            }
        }
    }

    Ok(RepressilatorStudy {
        map: BoundaryMap {
            x_ticks,
            y_ticks,
            cells,
            overlay: vec![lower, upper],
        },
        accuracy: correct as f64 / (nx * ny) as f64,
        outcomes,
    })
}

/// Ablation table: every variant (the full model included) evaluated on the
/// plain SO, augmented SO, and zoo columns at σ = 0.1.
pub struct AblationTable {
    /// (variant id, column id) → per-run accuracies.
    pub cells: BTreeMap<(String, String), Vec<f64>>,
    pub table: Table,
}

pub const ABLATION_SIGMA: f64 = 0.1;

pub fn run_ablations(
    cfg: &ExperimentConfig,
    full: &Ensemble,
) -> Result<AblationTable, HarnessError> {
    let threshold = lyapunov_threshold(cfg)?;
    let params_fit = parameters_baseline(cfg)?;
    let hash = cfg.hash();
    let mut columns = table_columns(cfg)?;
    columns.insert(0, plain_so_column());

    let mut cells = BTreeMap::new();
    let mut table =
        Table::new(vec!["variant", "system", "sigma", "mean", "std", "runs", "config", "seed"]);

    let mut eval = |ens: &Ensemble, variant: Variant| -> Result<(), HarnessError> {
        for col in &columns {
            let fields = column_fields(cfg, col)?;
            // The full model's cells are shared with the accuracy table.
            let key_method = if variant == Variant::Full { "ours".to_string() } else {
                variant.id().to_string()
            };
            let key = format!("{}_{}_{}", col.id, key_method, sigma_key(ABLATION_SIGMA));
            let accs = cell(cfg, "accuracy", &key, || {
                method_accuracies(
                    cfg,
                    Some(ens),
                    col,
                    &fields,
                    Method::Ours,
                    ABLATION_SIGMA,
                    threshold,
                    &params_fit,
                )
            })?;
            let (mean, std) = mean_std(&accs);
            table.push(vec![
                variant.id().to_string(),
                col.id.clone(),
                fmt_f64(ABLATION_SIGMA),
                fmt_f64(mean),
                fmt_f64(std),
                accs.len().to_string(),
                hash.clone(),
                cfg.seed.to_string(),
            ]);
            cells.insert((variant.id().to_string(), col.id.clone()), accs);
        }
        Ok(())
    };

    eval(full, Variant::Full)?;
    for variant in ABLATIONS {
        let ens = ensure_ensemble(cfg, variant, cfg.ablation_runs)?;
        eval(&ens, variant)?;
    }
    Ok(AblationTable { cells, table })
}

/// Mean point logit of the ensemble on subcritical-Hopf fields at fixed μ,
/// the remaining parameters drawn uniformly.
pub fn probe_subhopf(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    mus: &[f64],
    samples_per_mu: usize,
) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut out = Vec::with_capacity(mus.len());
    for (mi, &mu) in mus.iter().enumerate() {
        let key = format!("mu_{}", (mu * 1000.0).round() as i64);
        let mean_logit: f64 = cell(cfg, "subhopf", &key, || {
            let mut rng = rng_from(derive(cfg.seed, tags::SUBHOPF + mi as u64));
            let mut acc = 0.0;
            let mut count = 0usize;
            for (i, mut params) in
                sample_params(SystemName::SubHopf, samples_per_mu, &mut rng).into_iter().enumerate()
            {
                params[0] = mu;
                let system = make_system(SystemName::SubHopf, &params)?;
                let grid = GridSpec::square64(system.extent().expect("planar system"));
                let field = rasterize(&system, &grid)?;
                let input = input_tensor(ens.variant.input_mode(), &field);
                for (run, model) in ens.models.iter().enumerate() {
                    let sample_id = 0x53_55_42_00 + (mi * samples_per_mu + i) as u64;
                    let pred =
                        model.predict(&input, cfg.mc_passes, ens.predict_seed(run, sample_id))?;
                    acc += pred.point_logit;
                    count += 1;
                }
            }
            Ok(acc / count as f64)
        })?;
        out.push((mu, mean_logit));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_cover_aug_plus_zoo_with_distinct_contexts() {
        let cfg = ExperimentConfig::desk(1, "x".into());
        let cols = table_columns(&cfg).unwrap();
        assert_eq!(cols.len(), 9);
        assert_eq!(cols[0].id, "aug_so");
        let mut contexts: Vec<u64> = cols.iter().map(|c| c.context).collect();
        contexts.push(plain_so_column().context);
        contexts.sort_unstable();
        contexts.dedup();
        assert_eq!(contexts.len(), 10, "contexts must be unique");
    }

    #[test]
    fn cells_cache_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::desk(1, dir.path().into());
        let mut calls = 0;
        let v1: Vec<f64> = cell(&cfg, "t", "k", || {
            calls += 1;
            Ok(vec![0.5])
        })
        .unwrap();
        let v2: Vec<f64> = cell(&cfg, "t", "k", || {
            calls += 1;
            Ok(vec![0.9])
        })
        .unwrap();
        assert_eq!(calls, 1);
        assert_eq!(v1, v2);

        // A different config hash owns a different store.
        let mut cfg2 = ExperimentConfig::desk(2, dir.path().into());
        cfg2.out_dir = dir.path().into();
        let v3: Vec<f64> = cell(&cfg2, "t", "k", || Ok(vec![0.9])).unwrap();
        assert_eq!(v3, vec![0.9]);
    }

    #[test]
    fn linspace_hits_both_endpoints() {
        let xs = linspace([-0.5, 0.5], 21);
        assert_eq!(xs.len(), 21);
        assert_eq!(xs[0], -0.5);
        assert_eq!(xs[20], 0.5);
        assert!((xs[10] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_map_rejects_one_parameter_systems() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::desk(1, dir.path().into());
        let ens = Ensemble {
            variant: Variant::Full,
            models: vec![],
            seeds: vec![],
        };
        let err = run_boundary_map(&cfg, &ens, SystemName::VanDerPol, 3, 3).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn repressilator_truth_grid_has_both_classes() {
        // Sanity on the study's ground truth at the default desk grid.
        let mut cycles = 0;
        for j in 0..10 {
            for i in 0..10 {
                let alpha = 30.0 * (i as f64 + 0.5) / 10.0;
                let beta = 10.0 * (j as f64 + 0.5) / 10.0;
                if repressilator_label(alpha, beta) == DynClass::PeriodicAttractor {
                    cycles += 1;
                }
            }
        }
        assert!(cycles >= 10 && cycles <= 90, "window covers {cycles}/100 cells");
    }
}
