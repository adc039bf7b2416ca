//! Procedural velocity models: layered backgrounds with optional salt bodies,
//! plus block extraction for training labels.
//!
//! Values are quantized to f32 at generation time so the on-disk format
//! (single precision) round-trips bit-exactly.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::seed::rng_for;

pub const V_MIN: f64 = 2000.0;
pub const V_MAX: f64 = 4500.0;
pub const SALT_VELOCITY: f64 = 4500.0;
/// Layered backgrounds stay below this so salt is always the fastest material.
pub const BACKGROUND_V_MAX: f64 = 4000.0;

/// Discretized subsurface velocity field in m/s. `grid.dims` is
/// `[nz, nx]` (2D) or `[nz, ny, nx]` (3D); `spacing` is metres per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    pub grid: Grid,
    pub spacing: f64,
}

impl VelocityModel {
    pub fn new(grid: Grid, spacing: f64) -> Result<Self> {
        if spacing <= 0.0 {
            return Err(Error::param("spacing must be positive"));
        }
        if !grid.is_finite() {
            return Err(Error::numeric("velocity grid contains non-finite values"));
        }
        Ok(VelocityModel { grid, spacing })
    }

    pub fn uniform(dims: Vec<usize>, spacing: f64, v: f64) -> Result<Self> {
        VelocityModel::new(Grid::constant(dims, quantize(v)), spacing)
    }

    pub fn max_velocity(&self) -> f64 {
        self.grid.data.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min_velocity(&self) -> f64 {
        self.grid.data.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Extent of the x axis in metres, `nx * spacing`.
    pub fn width_m(&self) -> f64 {
        *self.grid.dims.last().unwrap() as f64 * self.spacing
    }

    pub fn depth_m(&self) -> f64 {
        self.grid.dims[0] as f64 * self.spacing
    }
}

/// Elliptical salt body with a harmonically perturbed boundary.
#[derive(Debug, Clone)]
pub struct SaltBodySpec {
    /// Cell coordinates of the center, z first (matching grid dims).
    pub center: Vec<usize>,
    /// Horizontal and vertical radii in metres.
    pub radii: (f64, f64),
    /// Relative boundary perturbation amplitude (0 = perfect ellipse).
    pub perturb_amp: f64,
    /// Number of harmonics in the boundary perturbation.
    pub harmonics: usize,
    /// Body velocity in m/s.
    pub velocity: f64,
}

impl SaltBodySpec {
    pub fn centered(dims: &[usize], radii: (f64, f64)) -> Self {
        SaltBodySpec {
            center: dims.iter().map(|d| d / 2).collect(),
            radii,
            perturb_amp: 0.15,
            harmonics: 3,
            velocity: SALT_VELOCITY,
        }
    }
}

fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

/// Horizontal layers with random thicknesses; layer velocities strictly
/// increase with depth from 2000 m/s and stay at or below 4000 m/s.
pub fn gen_layered_background(
    dims: &[usize],
    spacing: f64,
    n_layers: usize,
    seed: u64,
) -> Result<VelocityModel> {
    if dims.len() != 2 && dims.len() != 3 {
        return Err(Error::param("velocity model is 2D or 3D"));
    }
    let nz = dims[0];
    if n_layers == 0 {
        return Err(Error::param("need at least one layer"));
    }
    if nz < n_layers {
        return Err(Error::param(format!(
            "{n_layers} layers do not fit {nz} depth cells"
        )));
    }
    if n_layers == 1 {
        return VelocityModel::uniform(dims.to_vec(), spacing, V_MIN);
    }

    let mut rng = rng_for(seed, "velocity.layers");

    // n_layers - 1 distinct cut depths in 1..nz
    let mut cuts: Vec<usize> = (1..nz).collect();
    for i in 0..cuts.len() {
        let j = i + (rng.random::<u64>() as usize) % (cuts.len() - i);
        cuts.swap(i, j);
    }
    let mut cuts: Vec<usize> = cuts[..n_layers - 1].to_vec();
    cuts.sort_unstable();
    cuts.push(nz);

    let n = n_layers as f64;
    let span = BACKGROUND_V_MAX - V_MIN;
    let velocities: Vec<f64> = (0..n_layers)
        .map(|k| {
            if k == 0 {
                quantize(V_MIN)
            } else {
                let jitter: f64 = rng.random_range(0.0..0.8);
                quantize(V_MIN + span * (k as f64 + jitter) / n)
            }
        })
        .collect();

    let plane: usize = dims[1..].iter().product();
    let mut data = Vec::with_capacity(nz * plane);
    let mut layer = 0;
    for iz in 0..nz {
        while iz >= cuts[layer] {
            layer += 1;
        }
        data.extend(std::iter::repeat_n(velocities[layer], plane));
    }
    VelocityModel::new(Grid::new(dims.to_vec(), data)?, spacing)
}

/// Paint the salt body into a copy of the model. Cells inside the perturbed
/// ellipse are set to exactly `spec.velocity`; everything else is untouched.
pub fn add_salt_body(model: &VelocityModel, spec: &SaltBodySpec, seed: u64) -> Result<VelocityModel> {
    let dims = &model.grid.dims;
    if spec.center.len() != dims.len() {
        return Err(Error::param("salt center rank does not match model"));
    }
    let (a, b) = spec.radii;
    if a == 0.0 || b == 0.0 {
        return Ok(model.clone());
    }
    if a < 0.0 || b < 0.0 {
        return Err(Error::param("salt radii must be non-negative"));
    }

    // worst-case boundary excursion is 2 * amp with the per-harmonic scaling
    let reach = 1.0 + 2.0 * spec.perturb_amp.max(0.0);
    for (axis, &c) in spec.center.iter().enumerate() {
        if c >= dims[axis] {
            return Err(Error::param("salt center outside grid"));
        }
        let r_m = if axis == 0 { b } else { a } * reach;
        let r_cells = r_m / model.spacing;
        if (c as f64) - r_cells < -0.5 || (c as f64) + r_cells > dims[axis] as f64 - 0.5 {
            return Err(Error::param("salt body escapes the grid"));
        }
    }

    let mut rng = rng_for(seed, "velocity.salt");
    let h = spec.harmonics.max(1);
    let coeffs: Vec<(f64, f64)> = (0..h)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let amp = spec.perturb_amp / h as f64;
    let perturb = |theta: f64| -> f64 {
        let p: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, (c, s))| {
                let k = (i + 1) as f64;
                c * (k * theta).cos() + s * (k * theta).sin()
            })
            .sum();
        (amp * p).max(-0.95)
    };

    let mut out = model.clone();
    let salt = quantize(spec.velocity);
    let s = model.spacing;
    match dims.len() {
        2 => {
            let (nz, nx) = (dims[0], dims[1]);
            let (cz, cx) = (spec.center[0] as f64, spec.center[1] as f64);
            for iz in 0..nz {
                let dz = (iz as f64 - cz) * s / b;
                for ix in 0..nx {
                    let dx = (ix as f64 - cx) * s / a;
                    let theta = dz.atan2(dx);
                    if (dx * dx + dz * dz).sqrt() <= 1.0 + perturb(theta) {
                        out.grid.data[iz * nx + ix] = salt;
                    }
                }
            }
        }
        3 => {
            let (nz, ny, nx) = (dims[0], dims[1], dims[2]);
            let (cz, cy, cx) = (
                spec.center[0] as f64,
                spec.center[1] as f64,
                spec.center[2] as f64,
            );
            for iz in 0..nz {
                let dz = (iz as f64 - cz) * s / b;
                for iy in 0..ny {
                    let dy = (iy as f64 - cy) * s / a;
                    for ix in 0..nx {
                        let dx = (ix as f64 - cx) * s / a;
                        let horiz = (dx * dx + dy * dy).sqrt();
                        let theta = dz.atan2(horiz);
                        if (horiz * horiz + dz * dz).sqrt() <= 1.0 + perturb(theta) {
                            out.grid.data[(iz * ny + iy) * nx + ix] = salt;
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Extract the block of horizontal width `w_p` and depth extent `d`
/// (both metres) centered at `q = (x, y, depth)`.
pub fn extract_block(model: &VelocityModel, q: (f64, f64, f64), w_p: f64, d: f64) -> Result<Grid> {
    let s = model.spacing;
    let dims = &model.grid.dims;
    let n_side = (w_p / s).round() as i64;
    let n_depth = (d / s).round() as i64;
    if n_side < 1 || n_depth < 1 {
        return Err(Error::param("block extents below one cell"));
    }
    let x0 = ((q.0 - w_p / 2.0) / s).round() as i64;
    let z0 = ((q.2 - d / 2.0) / s).round() as i64;
    let check = |start: i64, count: i64, dim: usize, name: &str| -> Result<usize> {
        if start < 0 || start + count > dim as i64 {
            Err(Error::param(format!(
                "block {name} range [{start}, {}) outside grid of {dim}",
                start + count
            )))
        } else {
            Ok(start as usize)
        }
    };
    match dims.len() {
        2 => {
            let x0 = check(x0, n_side, dims[1], "x")?;
            let z0 = check(z0, n_depth, dims[0], "z")?;
            let (nzc, nxc) = (n_depth as usize, n_side as usize);
            let mut data = Vec::with_capacity(nzc * nxc);
            for iz in z0..z0 + nzc {
                let row = iz * dims[1];
                data.extend_from_slice(&model.grid.data[row + x0..row + x0 + nxc]);
            }
            Grid::new(vec![nzc, nxc], data)
        }
        3 => {
            let y0 = ((q.1 - w_p / 2.0) / s).round() as i64;
            let x0 = check(x0, n_side, dims[2], "x")?;
            let y0 = check(y0, n_side, dims[1], "y")?;
            let z0 = check(z0, n_depth, dims[0], "z")?;
            let (nzc, nyc, nxc) = (n_depth as usize, n_side as usize, n_side as usize);
            let mut data = Vec::with_capacity(nzc * nyc * nxc);
            for iz in z0..z0 + nzc {
                for iy in y0..y0 + nyc {
                    let row = (iz * dims[1] + iy) * dims[2];
                    data.extend_from_slice(&model.grid.data[row + x0..row + x0 + nxc]);
                }
            }
            Grid::new(vec![nzc, nyc, nxc], data)
        }
        _ => Err(Error::param("velocity model is 2D or 3D")),
    }
}
