//! End-to-end glue: acquisition layouts, survey preparation (downsampling and
//! amplitude normalization), and the desk-scale experiment configuration used
//! by the command-line tools.

use rand::Rng;

use crate::error::Result;
use crate::seed::rng_for;
use crate::survey::{downsample_trace, GeometryAwareTrace, Survey};
use crate::velocity::{add_salt_body, gen_layered_background, SaltBodySpec, VelocityModel};
use crate::wavesim::{ShotRecord, ShotSpec, SimConfig, SpaceOrder};

/// A randomized 2D model: increasing layered background with one perturbed
/// salt body whose placement and size scale with the grid.
pub fn random_model(dims: &[usize], spacing: f64, seed: u64, salt: bool) -> Result<VelocityModel> {
    let mut rng = rng_for(seed, "pipeline.model");
    let n_layers = 7 + (rng.random::<u64>() % 6) as usize;
    let base = gen_layered_background(dims, spacing, n_layers.min(dims[0]), seed)?;
    if !salt {
        return Ok(base);
    }
    let nz = dims[0] as f64;
    let nx = *dims.last().unwrap() as f64;
    let center_frac_z = rng.random_range(0.43..0.70);
    let center_frac_x = rng.random_range(0.28..0.70);
    let center: Vec<usize> = match dims.len() {
        2 => vec![
            (center_frac_z * nz) as usize,
            (center_frac_x * nx) as usize,
        ],
        _ => vec![
            (center_frac_z * nz) as usize,
            (rng.random_range(0.35..0.65) * dims[1] as f64) as usize,
            (center_frac_x * nx) as usize,
        ],
    };
    // shrink radii so the perturbed boundary (reach factor 1.3) always fits
    let fit = |c: usize, dim: usize| -> f64 {
        let margin = c.min(dim - 1 - c) as f64 * spacing;
        0.98 * margin / 1.3
    };
    let a = (rng.random_range(0.13..0.24) * nx * spacing).min(fit(*center.last().unwrap(), dims[dims.len() - 1]));
    let b = (rng.random_range(0.12..0.21) * nz * spacing).min(fit(center[0], dims[0]));
    let spec = SaltBodySpec {
        center,
        radii: (a, b),
        perturb_amp: 0.15,
        harmonics: 3,
        velocity: crate::velocity::SALT_VELOCITY,
    };
    add_salt_body(&base, &spec, seed ^ 0x5a17)
}

/// Evenly spaced surface acquisition: `n_shots` sources and `n_receivers`
/// receivers per shot, all at depth 0, spanning the model width inset by
/// half a cell on each side. Every receiver listens to every shot.
pub fn uniform_acquisition(model: &VelocityModel, n_shots: usize, n_receivers: usize) -> Vec<ShotSpec> {
    let width = model.width_m() - model.spacing;
    let pos = |i: usize, n: usize| -> f64 {
        if n == 1 {
            width / 2.0
        } else {
            width * i as f64 / (n - 1) as f64
        }
    };
    let receivers: Vec<[f64; 3]> = (0..n_receivers).map(|r| [pos(r, n_receivers), 0.0, 0.0]).collect();
    (0..n_shots)
        .map(|s| ShotSpec {
            source: [pos(s, n_shots), 0.0, 0.0],
            receivers: receivers.clone(),
        })
        .collect()
}

/// Simulation settings for the desk-scale experiment: 10 m grid, 1 kHz
/// recording for 2 s (2000 samples per trace), 25 Hz source.
pub fn desk_sim_config() -> SimConfig {
    SimConfig {
        dx: 10.0,
        dt_sim: 5e-4,
        record_dt: 1e-3,
        total_time: 2.0,
        source_freq: 25.0,
        boundary_width: 20,
        damping_coeff: 400.0,
        space_order: SpaceOrder::Eight,
    }
}

/// Spherical-spreading gain applied before downsampling: sample i is scaled
/// by (t_i)^GAIN_POWER so late reflections are not drowned by the direct
/// arrival once the survey is normalized.
pub const GAIN_POWER: f64 = 1.0;

/// Gain-correct one raw trace and decimate it to `trace_len` block means.
pub fn gain_and_downsample(data: &[f64], record_dt: f64, trace_len: usize) -> Result<Vec<f64>> {
    let gained: Vec<f64> = data
        .iter()
        .enumerate()
        .map(|(i, v)| v * ((i as f64 + 1.0) * record_dt).powf(GAIN_POWER))
        .collect();
    downsample_trace(&gained, trace_len)
}

fn normalize_survey_peak(traces: &mut [GeometryAwareTrace]) {
    let peak = traces
        .iter()
        .flat_map(|t| t.data.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = 1.0 / peak;
        for t in traces.iter_mut() {
            for v in &mut t.data {
                *v *= scale;
            }
        }
    }
}

/// Turn raw shot records into a model-ready survey: traces are gain
/// corrected, decimated to `trace_len` samples by block means, and
/// normalized by the survey-wide peak (so one survey's traces live in
/// [-1, 1]).
pub fn prepare_survey(records: &[ShotRecord], trace_len: usize) -> Result<Survey> {
    let mut traces = Vec::new();
    let mut record_dt = 0.0;
    for (si, rec) in records.iter().enumerate() {
        record_dt = rec.record_dt;
        for (ri, (pos, data)) in rec.receivers.iter().zip(&rec.traces).enumerate() {
            traces.push(GeometryAwareTrace {
                data: gain_and_downsample(data, rec.record_dt, trace_len)?,
                src: rec.source,
                rcv: *pos,
                shot_id: si as u32,
                rcv_index: ri as u32,
            });
        }
    }
    normalize_survey_peak(&mut traces);
    let effective_dt = record_dt * (records[0].traces[0].len() / trace_len) as f64;
    Survey::new(traces, effective_dt)
}

/// Same preparation applied to an already-loaded raw survey.
pub fn prepare_raw_survey(raw: &Survey, trace_len: usize) -> Result<Survey> {
    let mut traces: Vec<GeometryAwareTrace> = raw
        .traces()
        .iter()
        .map(|t| {
            Ok(GeometryAwareTrace {
                data: gain_and_downsample(&t.data, raw.record_dt, trace_len)?,
                ..t.clone()
            })
        })
        .collect::<Result<_>>()?;
    normalize_survey_peak(&mut traces);
    let factor = raw.traces()[0].data.len() / trace_len;
    Survey::new(traces, raw.record_dt * factor as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_models_are_bounded_and_reproducible() {
        for seed in 0..12 {
            let m = random_model(&[51, 76], 10.0, seed, true).unwrap();
            assert!(m
                .grid
                .data
                .iter()
                .all(|&v| (2000.0..=4500.0).contains(&v)));
            let again = random_model(&[51, 76], 10.0, seed, true).unwrap();
            assert_eq!(m.grid.data, again.grid.data);
            let salt = m
                .grid
                .data
                .iter()
                .filter(|&&v| v == crate::velocity::SALT_VELOCITY)
                .count();
            assert!(salt > 0, "seed {seed}: no salt painted");
        }
        let a = random_model(&[51, 76], 10.0, 1, true).unwrap();
        let b = random_model(&[51, 76], 10.0, 2, true).unwrap();
        assert_ne!(a.grid.data, b.grid.data);
    }

    #[test]
    fn acquisition_spans_the_surface() {
        let model = VelocityModel::uniform(vec![51, 76], 10.0, 2500.0).unwrap();
        let shots = uniform_acquisition(&model, 8, 60);
        assert_eq!(shots.len(), 8);
        assert_eq!(shots[0].receivers.len(), 60);
        assert_eq!(shots[0].source[0], 0.0);
        assert_eq!(shots[7].source[0], 750.0);
        assert!(shots.iter().all(|s| s.source[2] == 0.0));
    }

    #[test]
    fn paper_scale_layout_shapes() {
        // 29 shots x 301 receivers x 2000 samples per trace
        let model = VelocityModel::uniform(vec![201, 301], 10.0, 3000.0).unwrap();
        let shots = uniform_acquisition(&model, 29, 301);
        assert_eq!(shots.len(), 29);
        assert!(shots.iter().all(|s| s.receivers.len() == 301));
        assert_eq!(desk_sim_config().samples_per_trace(), 2000);
    }

    #[test]
    fn prepared_survey_is_normalized_and_decimated() {
        let rec = ShotRecord {
            source: [0.0, 0.0, 0.0],
            receivers: vec![[10.0, 0.0, 0.0], [20.0, 0.0, 0.0]],
            record_dt: 1e-3,
            traces: vec![
                (0..2000).map(|i| (i as f64 * 0.01).sin() * 4.0).collect(),
                (0..2000).map(|i| (i as f64 * 0.007).cos()).collect(),
            ],
        };
        let survey = prepare_survey(&[rec], 400).unwrap();
        assert_eq!(survey.len(), 2);
        assert!(survey.traces().iter().all(|t| t.data.len() == 400));
        let peak = survey
            .traces()
            .iter()
            .flat_map(|t| t.data.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
        assert_eq!(survey.record_dt, 5e-3);
    }
}
