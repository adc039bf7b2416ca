use std::path::PathBuf;

use clap::Parser;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::{sdi, spk, vel};
use sesdi_core::model::predict_block;
use sesdi_core::survey::query_context;
use sesdi_core::velocity::VelocityModel;

use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &["qx", "qy", "w", "spacing"];

#[derive(Parser)]
pub struct Args {
    /// Trained checkpoint.
    #[arg(long)]
    ckpt: PathBuf,
    /// Prepared survey (SDI1, downsampled traces).
    #[arg(long)]
    survey: PathBuf,
    /// Output block (VEL1).
    #[arg(long)]
    out: PathBuf,
    /// Context center x, metres.
    #[arg(long)]
    qx: Option<f64>,
    /// Context center y, metres.
    #[arg(long)]
    qy: Option<f64>,
    /// Context width, metres.
    #[arg(long)]
    w: Option<f64>,
    /// Cell size recorded in the output file.
    #[arg(long)]
    spacing: Option<f64>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let params = spk::read_sesdi(&args.ckpt)?;
    let survey = sdi::read_survey(&args.survey)?;
    let (lo, hi) = survey.bounds();
    let qx = resolve(args.qx, cfg, "qx", 0.5 * (lo[0] + hi[0]))?;
    let qy = resolve(args.qy, cfg, "qy", 0.5 * (lo[1] + hi[1]))?;
    let w = resolve(args.w, cfg, "w", 4.0 * (hi[0] - lo[0]).max(1.0))?;
    let spacing = resolve(args.spacing, cfg, "spacing", 10.0)?;

    let ctx = query_context(&survey, (qx, qy), w)?;
    if ctx.is_empty() {
        return Err(Error::EmptyContext(format!(" at ({qx}, {qy}) width {w}")));
    }
    let traces = survey.resolve(&ctx);
    let block = predict_block(&params, &traces)?;
    vel::write_velocity(&args.out, &VelocityModel::new(block, spacing)?)?;
    println!(
        "wrote {} from a context of {} traces",
        args.out.display(),
        ctx.len()
    );
    Ok(())
}
