//! Leapfrog time stepping over a sponge-padded grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::velocity::VelocityModel;
use crate::wavesim::{ricker, ShotRecord, ShotSpec, SimConfig};

/// Padded wavefield state plus the precomputed per-cell update factors.
pub struct WaveField {
    nz: usize,
    nx: usize,
    pad: usize,
    half: usize,
    u_prev: Vec<f64>,
    u_curr: Vec<f64>,
    /// v^2 dt^2 per cell.
    v2dt2: Vec<f64>,
    /// 1 - gamma dt / 2 per cell.
    a_minus: Vec<f64>,
    /// 1 / (1 + gamma dt / 2) per cell.
    inv_a_plus: Vec<f64>,
    coeffs: Vec<f64>,
    inv_dx2: f64,
    dt: f64,
    step: usize,
}

impl WaveField {
    /// Build the padded field for a 2D model. The model occupies the
    /// interior; velocity is edge-replicated into the pad.
    pub fn new(model: &VelocityModel, cfg: &SimConfig) -> Result<Self> {
        if model.grid.dims.len() != 2 {
            return Err(Error::param("wave solver expects a 2D velocity model"));
        }
        cfg.validate(model.max_velocity())?;
        if (model.spacing - cfg.dx).abs() > 1e-9 * cfg.dx {
            return Err(Error::param(format!(
                "model spacing {} does not match config dx {}",
                model.spacing, cfg.dx
            )));
        }
        let (mz, mx) = (model.grid.dims[0], model.grid.dims[1]);
        let pad = cfg.boundary_width;
        let (nz, nx) = (mz + 2 * pad, mx + 2 * pad);
        let dt = cfg.dt_sim;

        let mut v2dt2 = vec![0.0; nz * nx];
        let mut a_minus = vec![0.0; nz * nx];
        let mut inv_a_plus = vec![0.0; nz * nx];
        for iz in 0..nz {
            let miz = iz.saturating_sub(pad).min(mz - 1);
            for ix in 0..nx {
                let mix = ix.saturating_sub(pad).min(mx - 1);
                let v = model.grid.at2(miz, mix);
                v2dt2[iz * nx + ix] = v * v * dt * dt;
                // cosine taper from 0 at the interior edge of the pad to
                // damping_coeff at the outer edge
                let depth_z = if iz < pad {
                    pad - iz
                } else if iz >= nz - pad {
                    iz - (nz - pad - 1)
                } else {
                    0
                };
                let depth_x = if ix < pad {
                    pad - ix
                } else if ix >= nx - pad {
                    ix - (nx - pad - 1)
                } else {
                    0
                };
                let depth = depth_z.max(depth_x);
                let gamma = if depth == 0 {
                    0.0
                } else {
                    let s = depth as f64 / pad as f64;
                    cfg.damping_coeff * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
                };
                a_minus[iz * nx + ix] = 1.0 - 0.5 * gamma * dt;
                inv_a_plus[iz * nx + ix] = 1.0 / (1.0 + 0.5 * gamma * dt);
            }
        }

        Ok(WaveField {
            nz,
            nx,
            pad,
            half: cfg.space_order.coefficients().len() - 1,
            u_prev: vec![0.0; nz * nx],
            u_curr: vec![0.0; nz * nx],
            v2dt2,
            a_minus,
            inv_a_plus,
            coeffs: cfg.space_order.coefficients().to_vec(),
            inv_dx2: 1.0 / (cfg.dx * cfg.dx),
            dt,
            step: 0,
        })
    }

    /// Snap a model-space position (metres) to a padded grid index.
    /// `z` is depth, `x` along the surface; `y` must be ~0 for 2D.
    pub fn grid_index(&self, pos: [f64; 3], dx: f64) -> Result<usize> {
        let ix = (pos[0] / dx).round() as i64;
        let iz = (pos[2] / dx).round() as i64;
        let (mz, mx) = (
            (self.nz - 2 * self.pad) as i64,
            (self.nx - 2 * self.pad) as i64,
        );
        if ix < 0 || ix >= mx || iz < 0 || iz >= mz {
            return Err(Error::param(format!(
                "position ({}, {}, {}) outside the model interior",
                pos[0], pos[1], pos[2]
            )));
        }
        Ok((iz as usize + self.pad) * self.nx + ix as usize + self.pad)
    }

    /// Advance one time step, injecting `source_amp` (already scaled by the
    /// caller's wavelet) at the flat index `source_idx`.
    pub fn step(&mut self, source_idx: usize, source_amp: f64) {
        let (nz, nx, half) = (self.nz, self.nx, self.half);
        let coeffs = &self.coeffs;
        let inv_dx2 = self.inv_dx2;
        let c0 = 2.0 * coeffs[0] * inv_dx2;
        let u = &self.u_curr;
        let up = &mut self.u_prev;
        let v2dt2 = &self.v2dt2;
        let a_minus = &self.a_minus;
        let inv_a_plus = &self.inv_a_plus;

        // u_prev is overwritten in place with u_next; the stencil only reads
        // u_curr, and the leapfrog term reads the same cell before the write.
        for iz in half..nz - half {
            let row = iz * nx;
            for ix in half..nx - half {
                let idx = row + ix;
                let uc = u[idx];
                let mut lap = c0 * uc;
                for (k, &ck) in coeffs.iter().enumerate().skip(1) {
                    lap += ck
                        * inv_dx2
                        * (u[idx + k] + u[idx - k] + u[idx + k * nx] + u[idx - k * nx]);
                }
                up[idx] = (2.0 * uc - a_minus[idx] * up[idx] + v2dt2[idx] * lap)
                    * inv_a_plus[idx];
            }
        }
        up[source_idx] += v2dt2[source_idx] * source_amp * inv_a_plus[source_idx];
        std::mem::swap(&mut self.u_prev, &mut self.u_curr);
        self.step += 1;
    }

    /// Total discrete field energy, sum of u^2 over the padded grid.
    pub fn energy(&self) -> f64 {
        self.u_curr.iter().map(|v| v * v).sum()
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        self.u_curr[idx]
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

/// Propagate one shot and record traces at each receiver every `record_dt`.
/// Sample `i` of a trace is the field at time `i * record_dt`, starting from
/// the quiescent state at t = 0.
pub fn simulate_shot(model: &VelocityModel, shot: &ShotSpec, cfg: &SimConfig) -> Result<ShotRecord> {
    let mut field = WaveField::new(model, cfg)?;
    let src_idx = field.grid_index(shot.source, cfg.dx)?;
    let rcv_idx: Vec<usize> = shot
        .receivers
        .iter()
        .map(|&p| field.grid_index(p, cfg.dx))
        .collect::<Result<_>>()?;

    let stride = cfg.record_stride()?;
    let samples = cfg.samples_per_trace();
    let mut traces = vec![Vec::with_capacity(samples); rcv_idx.len()];
    for t in traces.iter_mut() {
        t.push(0.0); // t = 0
    }
    let t0 = 1.0 / cfg.source_freq;
    let total_steps = (samples.saturating_sub(1)) * stride;
    for n in 0..total_steps {
        let t_now = n as f64 * cfg.dt_sim;
        field.step(src_idx, ricker(t_now, cfg.source_freq, t0));
        if (n + 1) % stride == 0 {
            for (trace, &ri) in traces.iter_mut().zip(&rcv_idx) {
                trace.push(field.value_at(ri));
            }
        }
    }
    Ok(ShotRecord {
        source: shot.source,
        receivers: shot.receivers.clone(),
        record_dt: cfg.record_dt,
        traces,
    })
}

/// Independent per-shot simulation; results are gathered in input order, so
/// the output is invariant to scheduling.
pub fn simulate_survey(
    model: &VelocityModel,
    shots: &[ShotSpec],
    cfg: &SimConfig,
) -> Result<Vec<ShotRecord>> {
    shots
        .par_iter()
        .map(|s| simulate_shot(model, s, cfg))
        .collect()
}
