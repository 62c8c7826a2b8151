//! Command-line front end: dataset generation, training, prediction, the
//! comparison experiments, and report emission.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dynamics::dataset::{read_dataset, write_dataset, Dataset, Manifest, Sample};
use dynamics::ode::{interpolate_scattered, read_scattered_csv};
use dynamics::raster::{to_angles, GridSpec};
use dynamics::seed::derive;
use dynamics::warp::{make_augmented_dataset, AugmentOptions};
use dynamics::zoo::SystemName;
use harness::config::ExperimentConfig;
use harness::emit::{emit_csv, fmt_f64, write_heatmap, Heatmap, Table};
use harness::ensemble::{ensure_ensemble, Ensemble, Variant};
use harness::evalsets::{angles_tensor, noisy, zoo_eval_set};
use harness::experiments::{
    baseline_accuracy, confidence_vs_distance, probe_subhopf, run_ablations, run_accuracy_table,
    run_boundary_map, run_noise_sweep, run_repressilator_study, BoundaryMap, Method,
};
use harness::HarnessError;

#[derive(Parser)]
#[command(
    name = "hopfscan",
    about = "Attractor classification for planar vector fields: data, training, benchmarks"
)]
struct Cli {
    /// Config preset: `paper` or `desk`.
    #[arg(long, global = true, default_value = "desk")]
    profile: String,
    /// Master seed; every derived stream is keyed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory (checkpoints, resume cells, reports).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config overriding the preset; `--seed`/`--out` still win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker count, recorded in provenance; this build computes on one.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a zoo-system evaluation dataset (TWAF).
    Generate {
        #[arg(long)]
        system: String,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Write the augmented SO train/test pair (TWAF).
    Augment {
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Train (or resume) the re-run ensemble and report test accuracy.
    Train {
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Predict a TWAF dataset or a scattered-velocity CSV with one run.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Interpolate a scattered-velocity CSV into a one-sample TWAF dataset.
    Interp {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate one classical baseline on one test column.
    Baseline {
        /// `critical_points`, `lyapunov`, or `parameters`.
        #[arg(long)]
        method: String,
        /// Column id: `aug_so` or a zoo system id.
        #[arg(long, default_value = "aug_so")]
        system: String,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Mean cycle prediction over a two-parameter grid (CSV + SVG).
    Boundary {
        #[arg(long, default_value = "simple_oscillator")]
        system: String,
        #[arg(long, default_value_t = 21)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        ny: usize,
    },
    /// The (α, β) repressilator grid study (CSV + SVG).
    Repressilator {
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 10)]
        ny: usize,
    },
    /// Train and evaluate the ablated model variants.
    Ablate,
    /// Emit every table and map: accuracy, sweep, boundary, repressilator,
    /// ablations, confidence, and the subcritical probe.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(
            &cli.profile,
            cli.seed.unwrap_or(7),
            cli.out.clone().unwrap_or_else(|| PathBuf::from("runs")),
        )?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let cfg = resolve_config(&cli)?;
    // Every invocation records its exact configuration next to the outputs.
    cfg.save(&cfg.out_dir.join("config.json"))?;
    let reports = cfg.out_dir.join("reports");

    match cli.cmd {
        Cmd::Generate { system, count, sigma } => {
            let name = SystemName::from_id(&system)?;
            let count = count.unwrap_or(cfg.test_size);
            let dataset = generate_dataset(&cfg, name, count, sigma)?;
            let path = cfg.out_dir.join("datasets").join(format!("{system}.twaf"));
            write_dataset(&dataset, &path)?;
            println!("wrote {count} samples to {}", path.display());
        }
        Cmd::Augment { train, test, sigma } => {
            let opts = AugmentOptions {
                n_train: train.unwrap_or(cfg.train.train_samples),
                n_test: test.unwrap_or(cfg.train.test_samples),
                seed: cfg.seed,
                sigma,
            };
            let (train_set, test_set) = make_augmented_dataset(&opts);
            let dir = cfg.out_dir.join("datasets");
            write_dataset(&train_set, &dir.join("aug_so_train.twaf"))?;
            write_dataset(&test_set, &dir.join("aug_so_test.twaf"))?;
            println!(
                "wrote {} train / {} test samples to {}",
                opts.n_train,
                opts.n_test,
                dir.display()
            );
        }
        Cmd::Train { runs } => {
            let runs = runs.unwrap_or(cfg.runs);
            let ens = ensure_ensemble(&cfg, Variant::Full, runs)?;
            let table = run_accuracy_table(&cfg, &ens, 0.0)?;
            let accs = &table.cells[&("aug_so".to_string(), "ours".to_string())];
            for (run, acc) in accs.iter().enumerate() {
                println!("run {run}: augmented SO test accuracy {acc:.3}");
            }
            emit_csv(&table.table, &reports.join("accuracy_sigma0.csv"))?;
        }
        Cmd::Predict { input, run } => {
            let model = load_run(&cfg, run)?;
            let is_csv = input.extension().map(|e| e == "csv").unwrap_or(false);
            let tensors: Vec<nnet::tensor::Tensor<f32>> = if is_csv {
                let scattered = read_scattered_csv(&input)?;
                let field = interpolate_to_field(&scattered);
                vec![angles_tensor(&field)]
            } else {
                let dataset = read_dataset(&input)?;
                dataset
                    .samples
                    .iter()
                    .map(|s| {
                        nnet::tensor::Tensor::new(
                            vec![1, dataset.height, dataset.width],
                            s.angles.clone(),
                        )
                    })
                    .collect()
            };
            for (i, t) in tensors.iter().enumerate() {
                let seed = derive(derive(cfg.seed, 0x50_43_4C), i as u64);
                let pred = model.predict(t, cfg.mc_passes, seed)?;
                println!(
                    "{{\"index\":{i},\"label\":\"{}\",\"point_prob\":{},\"cycle_prob\":{}}}",
                    if pred.label == 1 { "cycle" } else { "point" },
                    fmt_f64(pred.probs[0]),
                    fmt_f64(pred.probs[1]),
                );
            }
        }
        Cmd::Interp { input } => {
            let scattered = read_scattered_csv(&input)?;
            let field = interpolate_to_field(&scattered);
            let angles = to_angles(&field);
            let sample = Sample {
                label: None,
                params: vec![],
                boundary_distance: f64::NAN,
                angles: angles.phi.iter().map(|&p| p as f32).collect(),
                raw: Some((
                    field.u.iter().map(|&x| x as f32).collect(),
                    field.v.iter().map(|&x| x as f32).collect(),
                )),
            };
            let dataset = Dataset {
                manifest: Manifest {
                    seed: cfg.seed,
                    system: "external".into(),
                    param_names: vec![],
                    sigma: 0.0,
                    split: "external".into(),
                    extent: field.grid.extent,
                    augment: None,
                },
                height: field.grid.height,
                width: field.grid.width,
                samples: vec![sample],
            };
            let path = cfg.out_dir.join("datasets").join("interp.twaf");
            write_dataset(&dataset, &path)?;
            println!("wrote 1 interpolated sample to {}", path.display());
        }
        Cmd::Baseline { method, system, sigma } => {
            let method = match method.as_str() {
                "critical_points" => Method::CriticalPoints,
                "lyapunov" => Method::Lyapunov,
                "parameters" => Method::Parameters,
                other => {
                    return Err(HarnessError::Config(format!("unknown method `{other}`")))
                }
            };
            let acc = baseline_accuracy(&cfg, None, method, &system, sigma)?;
            println!("{system} {method:?} sigma {sigma}: accuracy {acc:.3}");
        }
        Cmd::Boundary { system, nx, ny } => {
            let name = SystemName::from_id(&system)?;
            let ens = ensure_ensemble(&cfg, Variant::Full, cfg.runs)?;
            let map = run_boundary_map(&cfg, &ens, name, nx, ny)?;
            let names = name.param_names();
            emit_csv(
                &map.to_table(&cfg, names[0], names[1]),
                &reports.join(format!("boundary_{system}.csv")),
            )?;
            write_map_svg(
                &cfg,
                &map,
                &format!("{system} mean cycle prediction"),
                names[0],
                names[1],
                &reports.join(format!("boundary_{system}.svg")),
            )?;
            println!("boundary map written for {system} ({nx}×{ny})");
        }
        Cmd::Repressilator { nx, ny } => {
            let ens = ensure_ensemble(&cfg, Variant::Full, cfg.runs)?;
            let study = run_repressilator_study(&cfg, &ens, nx, ny)?;
            emit_csv(
                &study.map.to_table(&cfg, "alpha", "beta"),
                &reports.join("repressilator.csv"),
            )?;
            write_map_svg(
                &cfg,
                &study.map,
                "repressilator mean cycle prediction",
                "alpha",
                "beta",
                &reports.join("repressilator.svg"),
            )?;
            println!("repressilator {nx}×{ny} accuracy: {:.3}", study.accuracy);
        }
        Cmd::Ablate => {
            let ens = ensure_ensemble(&cfg, Variant::Full, cfg.runs)?;
            let table = run_ablations(&cfg, &ens)?;
            emit_csv(&table.table, &reports.join("ablations.csv"))?;
            println!("ablation table written ({} rows)", table.table.rows.len());
        }
        Cmd::Report => {
            let ens = ensure_ensemble(&cfg, Variant::Full, cfg.runs)?;
            for sigma in [0.0, 0.1] {
                let t = run_accuracy_table(&cfg, &ens, sigma)?;
                let tag = (sigma * 10.0).round() as u32;
                emit_csv(&t.table, &reports.join(format!("accuracy_sigma0{tag}.csv")))?;
            }
            let sweep = run_noise_sweep(&cfg, &ens)?;
            emit_csv(&sweep.table, &reports.join("noise_sweep.csv"))?;

            let map = run_boundary_map(&cfg, &ens, SystemName::SimpleOscillator, 21, 21)?;
            emit_csv(&map.to_table(&cfg, "a", "omega"), &reports.join("boundary_simple_oscillator.csv"))?;
            write_map_svg(
                &cfg,
                &map,
                "simple_oscillator mean cycle prediction",
                "a",
                "omega",
                &reports.join("boundary_simple_oscillator.svg"),
            )?;

            let study = run_repressilator_study(&cfg, &ens, 10, 10)?;
            emit_csv(&study.map.to_table(&cfg, "alpha", "beta"), &reports.join("repressilator.csv"))?;
            write_map_svg(
                &cfg,
                &study.map,
                "repressilator mean cycle prediction",
                "alpha",
                "beta",
                &reports.join("repressilator.svg"),
            )?;

            let conf = confidence_vs_distance(&cfg, &ens, SystemName::SimpleOscillator)?;
            emit_csv(&conf.curve, &reports.join("confidence_simple_oscillator.csv"))?;

            let abl = run_ablations(&cfg, &ens)?;
            emit_csv(&abl.table, &reports.join("ablations.csv"))?;

            let probe = probe_subhopf(&cfg, &ens, &[-0.4, -0.1, 0.3], 20)?;
            let mut t = Table::new(vec!["mu", "mean_point_logit", "config", "seed"]);
            for (mu, logit) in &probe {
                t.push(vec![
                    fmt_f64(*mu),
                    fmt_f64(*logit),
                    cfg.hash(),
                    cfg.seed.to_string(),
                ]);
            }
            emit_csv(&t, &reports.join("subhopf_probe.csv"))?;

            println!(
                "report written to {} (spearman SO: {}, repressilator accuracy: {:.3})",
                reports.display(),
                conf.spearman.map_or("NA".into(), |r| format!("{r:.3}")),
                study.accuracy,
            );
        }
    }
    Ok(())
}

/// Zoo dataset with per-sample seeded noise, written in the TWAF container.
fn generate_dataset(
    cfg: &ExperimentConfig,
    name: SystemName,
    count: usize,
    sigma: f64,
) -> Result<Dataset, HarnessError> {
    let gen_seed = derive(cfg.seed, 0x47_45_4E);
    let fields = zoo_eval_set(name, count, gen_seed)?;
    let extent = name.extent().ok_or_else(|| {
        HarnessError::Config(format!("system `{}` has no planar extent", name.id()))
    })?;
    let samples: Vec<Sample> = fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let noisy_field = noisy(&f.clean, sigma, derive(gen_seed, i as u64));
            let angles = to_angles(&noisy_field);
            Sample {
                label: Some(f.label),
                params: f.params.clone(),
                boundary_distance: f.boundary_distance.unwrap_or(f64::NAN),
                angles: angles.phi.iter().map(|&p| p as f32).collect(),
                raw: Some((
                    noisy_field.u.iter().map(|&x| x as f32).collect(),
                    noisy_field.v.iter().map(|&x| x as f32).collect(),
                )),
            }
        })
        .collect();
    Ok(Dataset {
        manifest: Manifest {
            seed: cfg.seed,
            system: name.id().into(),
            param_names: name.param_names().iter().map(|s| s.to_string()).collect(),
            sigma,
            split: "eval".into(),
            extent,
            augment: None,
        },
        height: 64,
        width: 64,
        samples,
    })
}

fn interpolate_to_field(
    scattered: &dynamics::ode::ScatteredVelocities,
) -> dynamics::raster::VectorField {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &scattered.points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    for d in 0..2 {
        if hi[d] - lo[d] < 1e-9 {
            lo[d] -= 0.5;
            hi[d] += 0.5;
        }
    }
    let grid = GridSpec::square64([[lo[0], hi[0]], [lo[1], hi[1]]]);
    interpolate_scattered(scattered, &grid, 8, 2.0)
}

fn load_run(cfg: &ExperimentConfig, run: usize) -> Result<nnet::model::Model<f32>, HarnessError> {
    let path = cfg
        .out_dir
        .join("models")
        .join(cfg.hash())
        .join(Variant::Full.id())
        .join(format!("run{run}.ckpt"));
    if !path.is_file() {
        return Err(HarnessError::Config(format!(
            "no checkpoint at {}; run `hopfscan train` first",
            path.display()
        )));
    }
    Ok(nnet::checkpoint::load(&path)?.0)
}

fn write_map_svg(
    cfg: &ExperimentConfig,
    map: &BoundaryMap,
    title: &str,
    x_label: &str,
    y_label: &str,
    path: &std::path::Path,
) -> Result<(), HarnessError> {
    let note = format!("config {} seed {}", cfg.hash(), cfg.seed);
    let h = Heatmap {
        values: &map.cells,
        rows: map.y_ticks.len(),
        cols: map.x_ticks.len(),
        x_range: [map.x_ticks[0], *map.x_ticks.last().unwrap()],
        y_range: [map.y_ticks[0], *map.y_ticks.last().unwrap()],
        x_label,
        y_label,
        title,
        overlay: &map.overlay,
        note: &note,
    };
    write_heatmap(&h, path)?;
    Ok(())
}

// Unused only when every subcommand handles ensembles itself.
#[allow(dead_code)]
fn full_ensemble(cfg: &ExperimentConfig) -> Result<Ensemble, HarnessError> {
    ensure_ensemble(cfg, Variant::Full, cfg.runs)
}
