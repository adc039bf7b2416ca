use std::path::PathBuf;

use clap::Parser;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::{atomic_write, vel};
use sesdi_core::metrics::{evaluate, l1_loss, psnr, ssim, DEFAULT_PEAK};

use crate::commands::files_with_ext;
use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &["peak"];

#[derive(Parser)]
pub struct Args {
    /// Directory of predicted models (*.vel).
    #[arg(long)]
    pred: PathBuf,
    /// Directory of label models (*.vel), paired by sorted order.
    #[arg(long)]
    label: PathBuf,
    /// Output CSV report.
    #[arg(long)]
    out: PathBuf,
    /// PSNR/SSIM peak (velocity dynamic range).
    #[arg(long)]
    peak: Option<f64>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let peak = resolve(args.peak, cfg, "peak", DEFAULT_PEAK)?;
    let pred_files = files_with_ext(&args.pred, "vel")?;
    let label_files = files_with_ext(&args.label, "vel")?;
    if pred_files.len() != label_files.len() {
        return Err(Error::param(format!(
            "{} predictions vs {} labels",
            pred_files.len(),
            label_files.len()
        )));
    }
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    let mut csv = String::from("name,l1,psnr,ssim\n");
    for (p, l) in pred_files.iter().zip(&label_files) {
        let pred = vel::read_velocity(p)?.grid;
        let label = vel::read_velocity(l)?.grid;
        let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        csv.push_str(&format!(
            "{name},{},{},{}\n",
            l1_loss(&pred, &label)?,
            psnr(&pred, &label, peak)?,
            ssim(&pred, &label, peak)?
        ));
        preds.push(pred);
        labels.push(label);
    }
    let report = evaluate(&preds, &labels, peak)?;
    csv.push_str(&format!("mean,{},{},{}\n", report.l1, report.psnr, report.ssim));
    atomic_write(&args.out, csv.as_bytes())?;
    println!(
        "l1 {:.4} m/s  psnr {:.4} dB  ssim {:.6}  ({} pairs) -> {}",
        report.l1,
        report.psnr,
        report.ssim,
        preds.len(),
        args.out.display()
    );
    Ok(())
}
