use clap::Parser;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::KeyValues;
use sesdi_core::model::{grad_check_sesdi, SesdiSpec};
use sesdi_core::nn::{grad_check, MlpSpec};

use crate::ctx::{check_keys, resolve};

const KEYS: &[&str] = &["seed", "epsilon", "tolerance"];

#[derive(Parser)]
pub struct Args {
    #[arg(long)]
    seed: Option<u64>,
    /// Central-difference step.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Pass threshold on the max relative error.
    #[arg(long)]
    tolerance: Option<f64>,
}

pub fn run(args: Args, cfg: &KeyValues) -> Result<()> {
    check_keys(cfg, KEYS)?;
    let seed = resolve(args.seed, cfg, "seed", 7)?;
    let epsilon = resolve(args.epsilon, cfg, "epsilon", 1e-5)?;
    let tolerance = resolve(args.tolerance, cfg, "tolerance", 1e-5)?;

    let mlp = grad_check(&MlpSpec::relu_head(&[6, 12, 10, 4]), seed, epsilon)?;
    println!("mlp 3-layer relu: max rel err {mlp:.3e}");
    let full = grad_check_sesdi(&SesdiSpec::tiny(), seed, 1e-6)?;
    println!("set-embedding network (tiny spec, n=3): max rel err {full:.3e}");

    if mlp < tolerance && full < tolerance {
        println!("PASS (tolerance {tolerance:.1e})");
        Ok(())
    } else {
        Err(Error::numeric(format!(
            "gradient check failed: mlp {mlp:.3e}, full {full:.3e}, tolerance {tolerance:.1e}"
        )))
    }
}
