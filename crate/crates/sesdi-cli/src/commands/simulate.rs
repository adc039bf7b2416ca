use std::path::PathBuf;

use clap::Parser;

use sesdi_core::error::Result;
use sesdi_core::io::config::KeyValues;
use sesdi_core::io::{sdi, vel};
use sesdi_core::pipeline::uniform_acquisition;
use sesdi_core::survey::Survey;
use sesdi_core::wavesim::{simulate_survey, SimConfig, SpaceOrder};

use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &[
    "shots",
    "receivers",
    "f0",
    "total_time",
    "record_dt",
    "dt",
    "order",
    "boundary_width",
    "damping",
];

#[derive(Parser)]
pub struct Args {
    /// Input velocity model (VEL1).
    #[arg(long)]
    model: PathBuf,
    /// Output survey file (SDI1) with raw traces.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    receivers: Option<usize>,
    /// Ricker peak frequency, Hz.
    #[arg(long)]
    f0: Option<f64>,
    #[arg(long)]
    total_time: Option<f64>,
    #[arg(long)]
    record_dt: Option<f64>,
    /// Solver step; must divide record_dt.
    #[arg(long)]
    dt: Option<f64>,
    /// Spatial order: 2, 4 or 8.
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    boundary_width: Option<usize>,
    /// Peak sponge damping rate, 1/s.
    #[arg(long)]
    damping: Option<f64>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let model = vel::read_velocity(&args.model)?;
    let sim = SimConfig {
        dx: model.spacing,
        dt_sim: resolve(args.dt, cfg, "dt", 5e-4)?,
        record_dt: resolve(args.record_dt, cfg, "record_dt", 1e-3)?,
        total_time: resolve(args.total_time, cfg, "total_time", 2.0)?,
        source_freq: resolve(args.f0, cfg, "f0", 25.0)?,
        boundary_width: resolve(args.boundary_width, cfg, "boundary_width", 20)?,
        damping_coeff: resolve(args.damping, cfg, "damping", 400.0)?,
        space_order: SpaceOrder::from_int(resolve(args.order, cfg, "order", 8)?)?,
    };
    let shots = uniform_acquisition(
        &model,
        resolve(args.shots, cfg, "shots", 8)?,
        resolve(args.receivers, cfg, "receivers", 60)?,
    );
    let records = simulate_survey(&model, &shots, &sim)?;
    let survey = Survey::from_shot_records(&records)?;
    sdi::write_survey(&args.out, &survey)?;
    println!(
        "wrote {} ({} traces x {} samples)",
        args.out.display(),
        survey.len(),
        survey.traces()[0].data.len()
    );
    Ok(())
}
