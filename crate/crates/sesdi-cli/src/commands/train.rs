use std::path::{Path, PathBuf};

use clap::Parser;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::manifest::Manifest;
use sesdi_core::io::{sdi, spk, vel};
use sesdi_core::model::SesdiSpec;
use sesdi_core::survey::query_context;
use sesdi_core::train::{train, Dataset, Sample, SubsampleMode, TrainConfig};

use crate::ctx::{check_keys, resolve, resolve_opt};

const KEYS: &[&str] = &[
    "lr",
    "beta1",
    "beta2",
    "epochs",
    "batch_size",
    "subsample",
    "fraction",
    "spread",
    "seed",
    "eval_every",
    "spec",
];

#[derive(Parser)]
pub struct Args {
    /// Training manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Optional held-out manifest evaluated every eval-every epochs.
    #[arg(long)]
    test_manifest: Option<PathBuf>,
    /// Output directory (checkpoints and metrics.csv).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// none | uniform | contiguous
    #[arg(long)]
    subsample: Option<String>,
    /// Mean kept fraction for uniform subsampling.
    #[arg(long)]
    fraction: Option<f64>,
    /// Half-width of the per-visit fraction draw.
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eval_every: Option<usize>,
    /// Network preset: desk (sized to the labels) or paper.
    #[arg(long)]
    spec: Option<String>,
}

/// Load a manifest into an in-memory dataset.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest = Manifest::read(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut ds = Dataset::default();
    for rel in &manifest.surveys {
        ds.surveys.push(sdi::read_survey(&dir.join(rel))?);
    }
    for ms in &manifest.samples {
        let label = vel::read_velocity(&dir.join(&ms.label))?;
        let survey = &ds.surveys[ms.survey];
        let context = query_context(survey, (ms.q.0, ms.q.1), ms.w)?;
        if context.is_empty() {
            return Err(Error::EmptyContext(format!(
                " for manifest sample at ({}, {})",
                ms.q.0, ms.q.1
            )));
        }
        ds.samples.push(Sample {
            survey_id: ms.survey,
            q: ms.q,
            w: ms.w,
            label: label.grid,
            depth_bin: ms.bin,
            context,
        });
    }
    if ds.is_empty() {
        return Err(Error::param("manifest holds no samples"));
    }
    Ok(ds)
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let dataset = load_dataset(&args.manifest)?;
    let test = args
        .test_manifest
        .as_deref()
        .map(load_dataset)
        .transpose()?;

    let label_dims = dataset.samples[0].label.dims.clone();
    let trace_len = dataset.surveys[0].traces()[0].data.len();
    let spec_name = resolve(args.spec, cfg, "spec", String::from("desk"))?;
    let spec = match spec_name.as_str() {
        "desk" => {
            if label_dims.len() != 2 {
                return Err(Error::param("desk spec predicts 2D blocks"));
            }
            let mut s = SesdiSpec::desk_2d(label_dims[0], label_dims[1]);
            if trace_len != s.trace_len {
                // width the trace branch to whatever the dataset carries
                s.trace_len = trace_len;
                s.f_d = sesdi_core::nn::MlpSpec::all_relu(&[trace_len, 512, 256]);
            }
            s
        }
        "paper" => SesdiSpec::paper_2d(),
        other => return Err(Error::param(format!("unknown spec preset {other}"))),
    };

    let mode = resolve(args.subsample, cfg, "subsample", String::from("uniform"))?;
    let fraction = resolve(args.fraction, cfg, "fraction", 0.8)?;
    let spread = resolve(args.spread, cfg, "spread", 0.0)?;
    let subsample = match mode.as_str() {
        "none" => SubsampleMode::None,
        "uniform" => SubsampleMode::Uniform { fraction, spread },
        "contiguous" => SubsampleMode::Contiguous,
        other => return Err(Error::param(format!("unknown subsample mode {other}"))),
    };
    let tc = TrainConfig {
        lr: resolve(args.lr, cfg, "lr", 1e-4)?,
        beta1: resolve(None, cfg, "beta1", 0.9)?,
        beta2: resolve(None, cfg, "beta2", 0.999)?,
        epochs: resolve(args.epochs, cfg, "epochs", 300)?,
        batch_size: resolve(args.batch_size, cfg, "batch_size", 4)?,
        subsample,
        seed: resolve(args.seed, cfg, "seed", 0)?,
        eval_every: resolve_opt(args.eval_every, cfg, "eval_every")?.unwrap_or(25),
        checkpoint_dir: Some(args.out.clone()),
    };

    std::fs::create_dir_all(&args.out)?;
    let outcome = train(&dataset, test.as_ref(), &spec, &tc)?;
    spk::write_sesdi(&args.out.join("last.ckpt"), &outcome.params)?;
    spk::write_sesdi(&args.out.join("best.ckpt"), &outcome.best)?;
    outcome.log.write_csv(&args.out.join("metrics.csv"))?;
    if let Some(row) = outcome.log.rows.last() {
        println!(
            "finished {} epochs, final train l1 {:.2} m/s",
            tc.epochs, row.l1
        );
    }
    println!("checkpoints and metrics.csv in {}", args.out.display());
    Ok(())
}
