use std::path::PathBuf;

use clap::Parser;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::manifest::{Manifest, ManifestSample};
use sesdi_core::io::{sdi, vel};
use sesdi_core::pipeline::prepare_raw_survey;

use crate::commands::files_with_ext;
use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &["trace_len"];

#[derive(Parser)]
pub struct Args {
    /// Directory of label models (model_*.vel), sorted order.
    #[arg(long)]
    models: PathBuf,
    /// Directory of raw surveys (*.sdi), sorted order, one per model.
    #[arg(long)]
    surveys: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Downsampled trace length fed to the network.
    #[arg(long)]
    trace_len: Option<usize>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let trace_len = resolve(args.trace_len, cfg, "trace_len", 400)?;
    let models = files_with_ext(&args.models, "vel")?;
    let surveys = files_with_ext(&args.surveys, "sdi")?;
    if models.len() != surveys.len() {
        return Err(Error::param(format!(
            "{} models vs {} surveys",
            models.len(),
            surveys.len()
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let mut manifest = Manifest::default();
    for (i, (model_path, survey_path)) in models.iter().zip(&surveys).enumerate() {
        let model = vel::read_velocity(model_path)?;
        let raw = sdi::read_survey(survey_path)?;
        let prepared = prepare_raw_survey(&raw, trace_len)?;
        let prep_name = format!("prepared_{i:03}.sdi");
        sdi::write_survey(&args.out.join(&prep_name), &prepared)?;
        let label_name = format!("label_{i:03}.vel");
        vel::write_velocity(&args.out.join(&label_name), &model)?;

        let w_p = model.width_m();
        let d = model.depth_m();
        manifest.surveys.push(PathBuf::from(prep_name));
        manifest.samples.push(ManifestSample {
            survey: i,
            label: PathBuf::from(label_name),
            q: (w_p / 2.0, 0.0, d / 2.0),
            w: 4.0 * w_p,
            w_p,
            d,
            bin: 1,
        });
    }
    let path = args.out.join("dataset.manifest");
    manifest.write(&path)?;
    println!(
        "wrote {} ({} samples)",
        path.display(),
        manifest.samples.len()
    );
    Ok(())
}
