//! Dataset assembly and the training loop: per-epoch context subsampling,
//! batched L1 gradients, Adam updates, and a CSV metric log.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::atomic_write;
use crate::metrics::{self, MetricReport};
use crate::model::{
    backward_context, predict_block, predict_block_cached, LocScale, SesdiAdam, SesdiGrads,
    SesdiParams, SesdiSpec,
};
use crate::seed::rng_for;
use crate::survey::{query_context, subsample_contiguous, subsample_uniform, Context, Survey};
use crate::velocity::{extract_block, VelocityModel};

/// How each visit's context is re-drawn during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsampleMode {
    None,
    /// Keep a uniformly drawn fraction `mean +- spread` of the members.
    Uniform { fraction: f64, spread: f64 },
    /// Per-shot contiguous receiver strips (realistic acquisition).
    Contiguous,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub subsample: SubsampleMode,
    pub seed: u64,
    /// Evaluate on the held-out set every this many epochs (0 = never).
    pub eval_every: usize,
    /// When set, best/last checkpoints are written at every eval point.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epochs: 100,
            batch_size: 4,
            subsample: SubsampleMode::Uniform {
                fraction: 0.8,
                spread: 0.0,
            },
            seed: 0,
            eval_every: 25,
            checkpoint_dir: None,
        }
    }
}

/// One training pair: a context reference into a survey plus its label block.
#[derive(Debug, Clone)]
pub struct Sample {
    pub survey_id: usize,
    pub q: (f64, f64, f64),
    pub w: f64,
    pub label: Grid,
    pub depth_bin: usize,
    /// Full (non-subsampled) context, precomputed at assembly time.
    pub context: Context,
}

#[derive(Debug, Default)]
pub struct Dataset {
    pub surveys: Vec<Survey>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Append another survey with its samples, reindexing survey ids.
    pub fn push_survey(&mut self, survey: Survey, mut samples: Vec<Sample>) {
        let id = self.surveys.len();
        for s in &mut samples {
            s.survey_id = id;
        }
        self.surveys.push(survey);
        self.samples.extend(samples);
    }
}

/// Depth bin of a block centered at `q_z`: ceil(q_z / d), 1-based, with the
/// surface mapping to bin 1.
pub fn depth_bin(q_z: f64, d: f64) -> usize {
    ((q_z / d).ceil() as usize).max(1)
}

/// Build (context, block) pairs for one survey over a grid of query centers.
/// Centers whose context is empty are dropped; the second return value counts
/// them. Every center empty is an error.
pub fn make_training_pairs(
    survey: &Survey,
    model: &VelocityModel,
    q_grid: &[(f64, f64, f64)],
    w: f64,
    w_p: f64,
    d: f64,
) -> Result<(Vec<Sample>, usize)> {
    if q_grid.is_empty() {
        return Err(Error::param("no query centers"));
    }
    let mut samples = Vec::new();
    let mut dropped = 0usize;
    for &q in q_grid {
        let ctx = query_context(survey, (q.0, q.1), w)?;
        if ctx.is_empty() {
            dropped += 1;
            continue;
        }
        let label = extract_block(model, q, w_p, d)?;
        samples.push(Sample {
            survey_id: 0,
            q,
            w,
            label,
            depth_bin: depth_bin(q.2, d),
            context: ctx,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyContext(format!(
            " for all {} query centers",
            q_grid.len()
        )));
    }
    Ok((samples, dropped))
}

/// The 2D whole-model pair: one sample whose context is the entire survey
/// and whose label is the full velocity grid.
pub fn make_2d_sample(survey: &Survey, model: &VelocityModel) -> Result<Sample> {
    let w_p = model.width_m();
    let d = model.depth_m();
    let q = (w_p / 2.0, 0.0, d / 2.0);
    // a width covering every source/receiver regardless of layout
    let (lo, hi) = survey.bounds();
    let w = 4.0 * (hi[0] - lo[0]).abs().max(w_p) + 1.0;
    let (mut samples, _) = make_training_pairs(survey, model, &[q], w, w_p, d)?;
    let mut s = samples.remove(0);
    if s.context.len() != survey.len() {
        return Err(Error::param(
            "2D sample context must cover the whole survey",
        ));
    }
    s.depth_bin = 1;
    Ok(s)
}

/// Location normalization fitted over every survey in a dataset.
pub fn fit_loc_scale(surveys: &[Survey]) -> LocScale {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in surveys {
        let (slo, shi) = s.bounds();
        for a in 0..3 {
            lo[a] = lo[a].min(slo[a]);
            hi[a] = hi[a].max(shi[a]);
        }
    }
    let mut center = [0.0; 3];
    let mut half = [1.0; 3];
    for a in 0..3 {
        center[a] = 0.5 * (lo[a] + hi[a]);
        half[a] = (0.5 * (hi[a] - lo[a])).max(1.0);
    }
    LocScale { center, half }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct LogRow {
    pub epoch: usize,
    pub split: Split,
    pub l1: f64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Default)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
    /// Order-independent hash of the subsampled contexts seen each epoch.
    pub epoch_context_hashes: Vec<u64>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,split,l1,psnr,ssim\n");
        for r in &self.rows {
            let split = match r.split {
                Split::Train => "train",
                Split::Test => "test",
            };
            let fmt = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch,
                split,
                fmt(r.l1),
                fmt(r.psnr),
                fmt(r.ssim)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_csv().as_bytes())
    }

    pub fn test_rows(&self) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(|r| r.split == Split::Test)
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: SesdiParams,
    /// Best-by-test-l1 parameters (equals `params` when never evaluated).
    pub best: SesdiParams,
    pub log: TrainLog,
    pub adam_steps: u64,
}

fn hash_members(sample_idx: usize, members: &[u32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ (sample_idx as u64).wrapping_mul(31);
    for &m in members {
        h ^= u64::from(m).wrapping_add(1);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

fn visit_context(
    mode: SubsampleMode,
    survey: &Survey,
    full: &Context,
    visit_seed: u64,
) -> Result<Context> {
    let ctx = match mode {
        SubsampleMode::None => full.clone(),
        SubsampleMode::Uniform { fraction, spread } => {
            let f = if spread > 0.0 {
                let mut rng = rng_for(visit_seed, "train.fraction");
                (fraction + rng.random_range(-spread..spread)).clamp(0.05, 1.0)
            } else {
                fraction
            };
            subsample_uniform(full, f, visit_seed)?
        }
        SubsampleMode::Contiguous => subsample_contiguous(survey, full, None, visit_seed)?,
    };
    // never train on an emptied context; fall back to the full one
    Ok(if ctx.is_empty() { full.clone() } else { ctx })
}

/// Mean full-context metrics of `params` over a dataset.
pub fn evaluate_on(params: &SesdiParams, ds: &Dataset, peak: f64) -> Result<MetricReport> {
    if ds.is_empty() {
        return Err(Error::param("empty evaluation dataset"));
    }
    let pairs: Vec<(Grid, &Grid)> = ds
        .samples
        .par_iter()
        .map(|s| {
            let traces = ds.surveys[s.survey_id].resolve(&s.context);
            predict_block(params, &traces).map(|pred| (pred, &s.label))
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Grid> = pairs.iter().map(|(p, _)| p.clone()).collect();
    let labels: Vec<Grid> = pairs.iter().map(|(_, l)| (*l).clone()).collect();
    metrics::evaluate(&preds, &labels, peak)
}

/// Train a network on (context, block) pairs.
///
/// Each epoch visits every sample once in seeded shuffled order, re-drawing
/// the subsampled context per visit. Batch gradients are the mean of
/// per-sample gradients, accumulated in canonical visit order; Adam updates
/// follow each batch. Training aborts if the loss goes non-finite.
pub fn train(
    dataset: &Dataset,
    eval: Option<&Dataset>,
    spec: &SesdiSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::param("empty training dataset"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::param("batch size must be positive"));
    }
    spec.validate()?;
    for s in &dataset.samples {
        if s.label.data.len() != spec.rho.output_dim() {
            return Err(Error::shape(format!(
                "label with {} cells does not match network output {}",
                s.label.data.len(),
                spec.rho.output_dim()
            )));
        }
        if s.context.is_empty() {
            return Err(Error::EmptyContext(String::from(" in training sample")));
        }
    }

    let loc_scale = fit_loc_scale(&dataset.surveys);
    let mut init_rng = rng_for(cfg.seed, "train.init");
    let mut params = SesdiParams::init(spec, loc_scale, &mut init_rng)?;
    let mut adam = SesdiAdam::new(spec, cfg.lr, cfg.beta1, cfg.beta2)?;
    let mut order_rng = rng_for(cfg.seed, "train.shuffle");
    let mut visit_rng = rng_for(cfg.seed, "train.visits");

    let n = dataset.len();
    let cells = spec.rho.output_dim() as f64;
    let mut log = TrainLog::default();
    let mut best: Option<(f64, SesdiParams)> = None;
    let mut adam_steps = 0u64;

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = i + (order_rng.random::<u64>() as usize) % (n - i);
            order.swap(i, j);
        }
        let visit_seeds: Vec<u64> = (0..n).map(|_| visit_rng.random()).collect();

        let mut epoch_l1 = 0.0;
        let mut epoch_hash = 0u64;
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<(f64, SesdiGrads, u64)> = batch
                .par_iter()
                .enumerate()
                .map(|(k, &si)| {
                    let sample = &dataset.samples[si];
                    let survey = &dataset.surveys[sample.survey_id];
                    let seed = visit_seeds[bi * cfg.batch_size + k];
                    let ctx = visit_context(cfg.subsample, survey, &sample.context, seed)?;
                    let hash = hash_members(si, &ctx.members);
                    let traces = survey.resolve(&ctx);
                    let (pred, cache) = predict_block_cached(&params, &traces)?;
                    let mut grad = vec![0.0; pred.data.len()];
                    let mut l1 = 0.0;
                    for (g, (p, l)) in grad
                        .iter_mut()
                        .zip(pred.data.iter().zip(&sample.label.data))
                    {
                        let diff = p - l;
                        l1 += diff.abs();
                        *g = diff.signum() / (cells * spec.v_half);
                    }
                    l1 /= cells;
                    let grads = backward_context(&params, &cache, &grad)?;
                    Ok((l1, grads, hash))
                })
                .collect::<Result<_>>()?;

            let mut acc = SesdiGrads::zeros(&params)?;
            let scale = 1.0 / results.len() as f64;
            for (l1, grads, hash) in &results {
                if !l1.is_finite() {
                    return Err(Error::numeric(format!(
                        "training diverged at epoch {epoch}: non-finite loss"
                    )));
                }
                epoch_l1 += l1;
                epoch_hash = epoch_hash.wrapping_add(*hash);
                acc.add_scaled(grads, scale);
            }
            if !acc.is_finite() {
                return Err(Error::numeric(format!(
                    "training diverged at epoch {epoch}: non-finite gradients"
                )));
            }
            adam.step(&mut params, &acc)?;
            adam_steps += 1;
        }
        log.epoch_context_hashes.push(epoch_hash);
        log.rows.push(LogRow {
            epoch,
            split: Split::Train,
            l1: epoch_l1 / n as f64,
            psnr: f64::NAN,
            ssim: f64::NAN,
        });

        let eval_now = cfg.eval_every > 0 && epoch % cfg.eval_every == 0;
        if eval_now {
            if let Some(test) = eval {
                let report = evaluate_on(&params, test, metrics::DEFAULT_PEAK)?;
                log.rows.push(LogRow {
                    epoch,
                    split: Split::Test,
                    l1: report.l1,
                    psnr: report.psnr,
                    ssim: report.ssim,
                });
                let improved = best.as_ref().is_none_or(|(l1, _)| report.l1 < *l1);
                if improved {
                    best = Some((report.l1, params.clone()));
                }
                if let Some(dir) = &cfg.checkpoint_dir {
                    crate::io::spk::write_sesdi(&dir.join("last.ckpt"), &params)?;
                    if let Some((_, b)) = &best {
                        crate::io::spk::write_sesdi(&dir.join("best.ckpt"), b)?;
                    }
                }
            }
        }
    }

    let best_params = best.map(|(_, p)| p).unwrap_or_else(|| params.clone());
    Ok(TrainOutcome {
        params,
        best: best_params,
        log,
        adam_steps,
    })
}
