use std::path::PathBuf;

use clap::Parser;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::{atomic_write, sdi, spk, vel};
use sesdi_core::stitch::{feather_seams, predict_full, ModelBank, RegionSpec, WidthSchedule};

use crate::commands::files_with_ext;
use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &[
    "nz", "ny", "nx", "spacing", "wp", "d", "total_depth", "w0", "alpha", "fill", "blend_band",
];

#[derive(Parser)]
pub struct Args {
    /// Directory of per-bin checkpoints (*.ckpt), sorted order = bins 1..n.
    #[arg(long)]
    bank: PathBuf,
    /// Survey to query contexts from (SDI1, prepared traces).
    #[arg(long)]
    survey: PathBuf,
    /// Output stitched model (VEL1).
    #[arg(long)]
    out: PathBuf,
    /// Output coverage mask (CSV).
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
    /// Horizontal tile width, metres.
    #[arg(long)]
    wp: Option<f64>,
    /// Block depth d, metres.
    #[arg(long)]
    d: Option<f64>,
    /// Total depth D, metres (default nz * spacing).
    #[arg(long)]
    total_depth: Option<f64>,
    /// Context width for bin 1, metres.
    #[arg(long)]
    w0: Option<f64>,
    /// Linear width growth per bin.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fill velocity for tiles with empty contexts, m/s.
    #[arg(long)]
    fill: Option<f64>,
    /// Cosine cross-fade band at tile seams, cells (0 = hard tiles).
    #[arg(long)]
    blend_band: Option<usize>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let ckpts = files_with_ext(&args.bank, "ckpt")?;
    let models = ckpts
        .iter()
        .map(|p| spk::read_sesdi(p))
        .collect::<Result<Vec<_>>>()?;
    let survey = sdi::read_survey(&args.survey)?;

    let nz = resolve(args.nz, cfg, "nz", 0)?;
    let ny = resolve(args.ny, cfg, "ny", 0)?;
    let nx = resolve(args.nx, cfg, "nx", 0)?;
    if nz == 0 || ny == 0 || nx == 0 {
        return Err(Error::param("region dims nz, ny, nx are required"));
    }
    let spacing = resolve(args.spacing, cfg, "spacing", 10.0)?;
    let wp = resolve(args.wp, cfg, "wp", 0.0)?;
    let d = resolve(args.d, cfg, "d", 0.0)?;
    if wp <= 0.0 || d <= 0.0 {
        return Err(Error::param("tile extents wp and d are required"));
    }
    let total_depth = resolve(args.total_depth, cfg, "total_depth", nz as f64 * spacing)?;
    let w0 = resolve(args.w0, cfg, "w0", 5.0 * wp)?;
    let alpha = resolve(args.alpha, cfg, "alpha", 0.0)?;
    let fill = resolve(args.fill, cfg, "fill", 3250.0)?;

    let bank = ModelBank {
        models,
        block_depth: d,
        total_depth,
        widths: WidthSchedule { w0, alpha },
        fill_velocity: fill,
    };
    let region = RegionSpec {
        dims: [nz, ny, nx],
        spacing,
    };
    let (mut full, mask) = predict_full(&survey, &bank, &region, wp)?;
    let blend_band = resolve(args.blend_band, cfg, "blend_band", 0)?;
    if blend_band > 0 {
        let tw_cells = (wp / spacing).round() as usize;
        let td_cells = (d / spacing).round() as usize;
        feather_seams(&mut full, [td_cells, tw_cells, tw_cells], blend_band);
    }
    vel::write_velocity(&args.out, &full)?;
    atomic_write(&args.mask, mask.to_csv().as_bytes())?;
    println!(
        "wrote {} and {} ({} of {} tiles empty)",
        args.out.display(),
        args.mask.display(),
        mask.empty_count(),
        mask.empty.len()
    );
    Ok(())
}
