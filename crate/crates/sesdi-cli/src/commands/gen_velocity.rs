use std::path::PathBuf;

use clap::Parser;

use sesdi_core::error::Result;
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::vel::write_velocity;
use sesdi_core::pipeline::random_model;

use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &["count", "nz", "nx", "spacing", "salt", "seed"];

#[derive(Parser)]
pub struct Args {
    /// Output directory for model_*.vel files.
    #[arg(long)]
    out: PathBuf,
    /// Number of models to generate.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    /// Cell size in metres.
    #[arg(long)]
    spacing: Option<f64>,
    /// Insert a salt body into each model.
    #[arg(long)]
    salt: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let count = resolve(args.count, cfg, "count", 1)?;
    let nz = resolve(args.nz, cfg, "nz", 51)?;
    let nx = resolve(args.nx, cfg, "nx", 76)?;
    let spacing = resolve(args.spacing, cfg, "spacing", 10.0)?;
    let salt = resolve(args.salt, cfg, "salt", true)?;
    let seed = resolve(args.seed, cfg, "seed", 0)?;

    for i in 0..count {
        let model = random_model(&[nz, nx], spacing, seed.wrapping_add(i as u64), salt)?;
        let path = args.out.join(format!("model_{i:03}.vel"));
        write_velocity(&path, &model)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
