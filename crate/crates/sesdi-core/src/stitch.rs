//! Full-model inference: a depth-binned bank of trained networks, block-wise
//! traversal of a target region, and stitching block predictions into one
//! velocity model. Tiles are hard-edged (no blending) so each stitched block
//! is bit-identical to its standalone prediction; an optional cosine
//! cross-fade exists behind a flag and is off by default.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{predict_block, SesdiParams};
use crate::survey::{query_context, Survey};
use crate::velocity::VelocityModel;

/// Context width per depth bin: `w0 * (1 + alpha * (bin - 1))`, constant by
/// default (alpha = 0) and non-decreasing with depth for alpha >= 0.
#[derive(Debug, Clone, Copy)]
pub struct WidthSchedule {
    pub w0: f64,
    pub alpha: f64,
}

impl WidthSchedule {
    pub fn constant(w0: f64) -> Self {
        WidthSchedule { w0, alpha: 0.0 }
    }

    pub fn width(&self, bin: usize) -> f64 {
        self.w0 * (1.0 + self.alpha * (bin.saturating_sub(1)) as f64)
    }
}

/// One trained network per depth slab, ceil(D / d) in total.
pub struct ModelBank {
    pub models: Vec<SesdiParams>,
    /// Block depth d in metres.
    pub block_depth: f64,
    /// Total depth D in metres.
    pub total_depth: f64,
    pub widths: WidthSchedule,
    /// Velocity used for tiles whose context is empty.
    pub fill_velocity: f64,
}

impl ModelBank {
    pub fn bins_for(total_depth: f64, block_depth: f64) -> usize {
        (total_depth / block_depth).ceil() as usize
    }

    pub fn n_bins(&self) -> usize {
        self.models.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_depth <= 0.0 || self.total_depth <= 0.0 {
            return Err(Error::param("depths must be positive"));
        }
        let expect = Self::bins_for(self.total_depth, self.block_depth);
        if self.models.len() != expect {
            return Err(Error::param(format!(
                "bank holds {} models, depth needs ceil(D/d) = {expect}",
                self.models.len()
            )));
        }
        if self.widths.w0 <= 0.0 || self.widths.alpha < 0.0 {
            return Err(Error::param(
                "width schedule must be positive and non-decreasing",
            ));
        }
        Ok(())
    }
}

/// Depth bin for a query depth: ceil(q_z / d), 1-based; q_z = 0 maps to
/// bin 1 and slab edges belong to the shallower bin.
pub fn select_model(bank: &ModelBank, q_z: f64) -> Result<usize> {
    if q_z < 0.0 || q_z > bank.total_depth {
        return Err(Error::param(format!(
            "depth {q_z} outside [0, {}]",
            bank.total_depth
        )));
    }
    let bin = (q_z / bank.block_depth).ceil() as usize;
    Ok(bin.clamp(1, bank.n_bins()))
}

/// Region to reconstruct: `[nz, ny, nx]` cells at a uniform spacing.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub dims: [usize; 3],
    pub spacing: f64,
}

/// Per-tile coverage flags; `true` marks a tile filled by the fallback
/// velocity because its context was empty.
#[derive(Debug, Clone)]
pub struct CoverageMask {
    pub tile_dims: [usize; 3],
    pub empty: Vec<bool>,
}

impl CoverageMask {
    pub fn empty_count(&self) -> usize {
        self.empty.iter().filter(|&&e| e).count()
    }

    pub fn to_csv(&self) -> String {
        let [kz, ky, kx] = self.tile_dims;
        let mut out = String::from("tile_z,tile_y,tile_x,empty\n");
        for z in 0..kz {
            for y in 0..ky {
                for x in 0..kx {
                    let e = self.empty[(z * ky + y) * kx + x];
                    out.push_str(&format!("{z},{y},{x},{}\n", u8::from(e)));
                }
            }
        }
        out
    }
}

/// Predict a full region by tiling it into `w_p`-wide, `d`-deep blocks, each
/// predicted by its depth bin's model from the context at the tile center.
/// Tiles with empty contexts are flagged and filled with the bank's fill
/// velocity. Tiles must partition the region exactly.
pub fn predict_full(
    survey: &Survey,
    bank: &ModelBank,
    region: &RegionSpec,
    w_p: f64,
) -> Result<(VelocityModel, CoverageMask)> {
    bank.validate()?;
    let s = region.spacing;
    if s <= 0.0 {
        return Err(Error::param("region spacing must be positive"));
    }
    let tw = (w_p / s).round() as usize;
    let td = (bank.block_depth / s).round() as usize;
    if tw == 0 || td == 0 {
        return Err(Error::param("tile extents below one cell"));
    }
    let [nz, ny, nx] = region.dims;
    if nx % tw != 0 || ny % tw != 0 || nz % td != 0 {
        return Err(Error::param(format!(
            "tiles {td}x{tw}x{tw} do not partition region {nz}x{ny}x{nx}"
        )));
    }
    let (kz, ky, kx) = (nz / td, ny / tw, nx / tw);
    for params in &bank.models {
        if params.spec.output_dims != vec![td, tw, tw] {
            return Err(Error::shape(format!(
                "bank model predicts {:?}, tiles are [{td}, {tw}, {tw}]",
                params.spec.output_dims
            )));
        }
    }

    let tiles: Vec<(usize, usize, usize)> = (0..kz)
        .flat_map(|z| (0..ky).flat_map(move |y| (0..kx).map(move |x| (z, y, x))))
        .collect();
    let predictions: Vec<Option<Grid>> = tiles
        .par_iter()
        .map(|&(z, y, x)| -> Result<Option<Grid>> {
            let q_z = (z as f64 + 0.5) * td as f64 * s;
            let bin = select_model(bank, q_z)?;
            let q = (
                (x as f64 + 0.5) * tw as f64 * s,
                (y as f64 + 0.5) * tw as f64 * s,
            );
            let ctx = query_context(survey, q, bank.widths.width(bin))?;
            if ctx.is_empty() {
                return Ok(None);
            }
            let traces = survey.resolve(&ctx);
            predict_block(&bank.models[bin - 1], &traces).map(Some)
        })
        .collect::<Result<_>>()?;

    if predictions.iter().all(Option::is_none) {
        return Err(Error::EmptyContext(String::from(
            ": every tile of the region",
        )));
    }

    let mut out = Grid::constant(vec![nz, ny, nx], bank.fill_velocity);
    let mut empty = vec![false; tiles.len()];
    for (ti, (&(z, y, x), pred)) in tiles.iter().zip(&predictions).enumerate() {
        match pred {
            None => empty[ti] = true,
            Some(block) => {
                for bz in 0..td {
                    for by in 0..tw {
                        let src_row = (bz * tw + by) * tw;
                        let dst = ((z * td + bz) * ny + (y * tw + by)) * nx + x * tw;
                        out.data[dst..dst + tw]
                            .copy_from_slice(&block.data[src_row..src_row + tw]);
                    }
                }
            }
        }
    }
    Ok((
        VelocityModel::new(out, s)?,
        CoverageMask {
            tile_dims: [kz, ky, kx],
            empty,
        },
    ))
}

/// Optional cosmetic pass (off by default): cosine cross-fade across internal
/// tile seams, blending each cell within `band` cells of a seam toward its
/// mirror on the other side. Cells farther than `band` from every seam are
/// untouched, so the hard-tiling invariants hold whenever this is skipped.
pub fn feather_seams(model: &mut VelocityModel, tile_cells: [usize; 3], band: usize) {
    if band == 0 {
        return;
    }
    let dims = [
        model.grid.dims[0],
        model.grid.dims[1],
        model.grid.dims[2],
    ];
    let idx = |z: usize, y: usize, x: usize| (z * dims[1] + y) * dims[2] + x;
    for axis in 0..3 {
        let tile = tile_cells[axis];
        if tile == 0 || dims[axis] <= tile {
            continue;
        }
        let band = band.min(tile / 2).max(1);
        let mut seam = tile;
        while seam < dims[axis] {
            for j in 0..band {
                let lam = 0.5 * (0.5 + 0.5 * (std::f64::consts::PI * (j as f64 + 0.5) / band as f64).cos());
                let (lo, hi) = (seam - 1 - j, seam + j);
                // iterate the seam plane
                let (da, db) = match axis {
                    0 => (dims[1], dims[2]),
                    1 => (dims[0], dims[2]),
                    _ => (dims[0], dims[1]),
                };
                for a in 0..da {
                    for b in 0..db {
                        let (il, ih) = match axis {
                            0 => (idx(lo, a, b), idx(hi, a, b)),
                            1 => (idx(a, lo, b), idx(a, hi, b)),
                            _ => (idx(a, b, lo), idx(a, b, hi)),
                        };
                        let (vl, vh) = (model.grid.data[il], model.grid.data[ih]);
                        model.grid.data[il] = (1.0 - lam) * vl + lam * vh;
                        model.grid.data[ih] = (1.0 - lam) * vh + lam * vl;
                    }
                }
            }
            seam += tile;
        }
    }
}
