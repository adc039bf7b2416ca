//! Geometry-aware trace storage, spatial context queries, and subsampling.
//!
//! A survey owns its traces in canonical (shot_id, rcv_index) order. Context
//! queries return traces whose source AND receiver both lie inside a closed
//! square around the query point; results are index lists into the survey, in
//! canonical order regardless of how the survey was assembled.


use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::wavesim::ShotRecord;

/// One trace: the recorded amplitude series plus its acquisition geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryAwareTrace {
    pub data: Vec<f64>,
    pub src: [f64; 3],
    pub rcv: [f64; 3],
    pub shot_id: u32,
    pub rcv_index: u32,
}

impl GeometryAwareTrace {
    /// Amplitude accessor (the D(t) view of the trace).
    pub fn amplitudes(&self) -> &[f64] {
        &self.data
    }

    /// Acquisition accessor (the A(t) view): (source, receiver) positions.
    pub fn acquisition(&self) -> ([f64; 3], [f64; 3]) {
        (self.src, self.rcv)
    }
}

/// Uniform grid over (x, y), mapping cells to trace ids by their source and
/// receiver endpoints. Queries over-approximate with candidate cells and then
/// filter exactly, so correctness never depends on the cell size.
#[derive(Debug, Clone)]
struct GridIndex {
    cell: f64,
    origin: (f64, f64),
    nx: usize,
    ny: usize,
    by_src: Vec<Vec<u32>>,
    by_rcv: Vec<Vec<u32>>,
}

impl GridIndex {
    fn build(traces: &[GeometryAwareTrace], cell: f64) -> Self {
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in traces {
            for p in [t.src, t.rcv] {
                min.0 = min.0.min(p[0]);
                min.1 = min.1.min(p[1]);
                max.0 = max.0.max(p[0]);
                max.1 = max.1.max(p[1]);
            }
        }
        if traces.is_empty() {
            return GridIndex {
                cell: 1.0,
                origin: (0.0, 0.0),
                nx: 0,
                ny: 0,
                by_src: Vec::new(),
                by_rcv: Vec::new(),
            };
        }
        let cell = cell.max(1e-9);
        let nx = (((max.0 - min.0) / cell).floor() as usize) + 1;
        let ny = (((max.1 - min.1) / cell).floor() as usize) + 1;
        let mut by_src = vec![Vec::new(); nx * ny];
        let mut by_rcv = vec![Vec::new(); nx * ny];
        let cell_of = |p: [f64; 3]| -> usize {
            let cx = (((p[0] - min.0) / cell).floor() as usize).min(nx - 1);
            let cy = (((p[1] - min.1) / cell).floor() as usize).min(ny - 1);
            cy * nx + cx
        };
        for (i, t) in traces.iter().enumerate() {
            by_src[cell_of(t.src)].push(i as u32);
            by_rcv[cell_of(t.rcv)].push(i as u32);
        }
        GridIndex {
            cell,
            origin: min,
            nx,
            ny,
            by_src,
            by_rcv,
        }
    }

    /// Candidate trace ids whose source (or receiver) cell intersects the
    /// closed square; ascending, deduplicated.
    fn candidates(&self, q: (f64, f64), w: f64) -> Vec<u32> {
        if self.nx == 0 {
            return Vec::new();
        }
        let half = w / 2.0;
        let lo_x = (((q.0 - half - self.origin.0) / self.cell).floor()).max(0.0) as usize;
        let lo_y = (((q.1 - half - self.origin.1) / self.cell).floor()).max(0.0) as usize;
        let hi_x = ((((q.0 + half - self.origin.0) / self.cell).floor()) as i64)
            .clamp(-1, self.nx as i64 - 1);
        let hi_y = ((((q.1 + half - self.origin.1) / self.cell).floor()) as i64)
            .clamp(-1, self.ny as i64 - 1);
        if hi_x < lo_x as i64 || hi_y < lo_y as i64 {
            return Vec::new();
        }
        // count candidate cells for both endpoint maps, walk the cheaper one
        let mut ids = Vec::new();
        let (hi_x, hi_y) = (hi_x as usize, hi_y as usize);
        let src_len: usize = self.cells(lo_x, hi_x, lo_y, hi_y, &self.by_src);
        let rcv_len: usize = self.cells(lo_x, hi_x, lo_y, hi_y, &self.by_rcv);
        let table = if src_len <= rcv_len {
            &self.by_src
        } else {
            &self.by_rcv
        };
        for cy in lo_y..=hi_y {
            for cx in lo_x..=hi_x {
                ids.extend_from_slice(&table[cy * self.nx + cx]);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn cells(&self, lo_x: usize, hi_x: usize, lo_y: usize, hi_y: usize, t: &[Vec<u32>]) -> usize {
        let mut n = 0;
        for cy in lo_y..=hi_y {
            for cx in lo_x..=hi_x {
                n += t[cy * self.nx + cx].len();
            }
        }
        n
    }
}

/// Immutable collection of traces with a spatial index.
#[derive(Debug, Clone)]
pub struct Survey {
    traces: Vec<GeometryAwareTrace>,
    index: GridIndex,
    pub record_dt: f64,
}

impl Survey {
    /// Build a survey; traces are sorted into canonical
    /// (shot_id, rcv_index) order, so insertion order never matters.
    pub fn new(mut traces: Vec<GeometryAwareTrace>, record_dt: f64) -> Result<Self> {
        if let Some(bad) = traces.iter().find(|t| t.data.is_empty()) {
            return Err(Error::param(format!(
                "trace shot {} rcv {} has no samples",
                bad.shot_id, bad.rcv_index
            )));
        }
        if traces
            .iter()
            .any(|t| t.data.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::numeric("trace amplitudes must be finite"));
        }
        traces.sort_by_key(|t| (t.shot_id, t.rcv_index));
        let extent = traces
            .iter()
            .flat_map(|t| [t.src[0], t.rcv[0]])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let span = (extent.1 - extent.0).max(1.0);
        let index = GridIndex::build(&traces, span / 32.0);
        Ok(Survey {
            traces,
            index,
            record_dt,
        })
    }

    /// Flatten simulator output into a survey; shot ids follow record order.
    pub fn from_shot_records(records: &[ShotRecord]) -> Result<Self> {
        let mut traces = Vec::new();
        let mut record_dt = 0.0;
        for (si, rec) in records.iter().enumerate() {
            record_dt = rec.record_dt;
            for (ri, (pos, data)) in rec.receivers.iter().zip(&rec.traces).enumerate() {
                traces.push(GeometryAwareTrace {
                    data: data.clone(),
                    src: rec.source,
                    rcv: *pos,
                    shot_id: si as u32,
                    rcv_index: ri as u32,
                });
            }
        }
        Survey::new(traces, record_dt)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn traces(&self) -> &[GeometryAwareTrace] {
        &self.traces
    }

    pub fn trace(&self, id: usize) -> &GeometryAwareTrace {
        &self.traces[id]
    }

    /// Axis-aligned bounds over all source and receiver positions.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for t in &self.traces {
            for p in [t.src, t.rcv] {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        (lo, hi)
    }

    pub fn resolve<'a>(&'a self, ctx: &Context) -> Vec<&'a GeometryAwareTrace> {
        ctx.members.iter().map(|&i| &self.traces[i as usize]).collect()
    }
}

/// A context query result: trace ids (canonical order) whose source and
/// receiver both lie inside the closed w x w square centered at `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub center: (f64, f64),
    pub width: f64,
    pub members: Vec<u32>,
}

impl Context {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn inside(p: [f64; 3], q: (f64, f64), half: f64) -> bool {
    (p[0] - q.0).abs() <= half && (p[1] - q.1).abs() <= half
}

/// All traces whose source AND receiver lie in the closed square
/// `[q.x +- w/2] x [q.y +- w/2]`. An empty result is legal.
pub fn query_context(survey: &Survey, q: (f64, f64), w: f64) -> Result<Context> {
    if w <= 0.0 {
        return Err(Error::param("context width must be positive"));
    }
    let half = w / 2.0;
    let members = survey
        .index
        .candidates(q, w)
        .into_iter()
        .filter(|&id| {
            let t = &survey.traces[id as usize];
            inside(t.src, q, half) && inside(t.rcv, q, half)
        })
        .collect();
    Ok(Context {
        center: q,
        width: w,
        members,
    })
}

/// Reference implementation used by the index-equivalence oracle.
pub fn query_context_brute(survey: &Survey, q: (f64, f64), w: f64) -> Result<Context> {
    if w <= 0.0 {
        return Err(Error::param("context width must be positive"));
    }
    let half = w / 2.0;
    let members = (0..survey.traces.len() as u32)
        .filter(|&id| {
            let t = &survey.traces[id as usize];
            inside(t.src, q, half) && inside(t.rcv, q, half)
        })
        .collect();
    Ok(Context {
        center: q,
        width: w,
        members,
    })
}

/// Keep `round(fraction * n)` members chosen uniformly without replacement;
/// canonical order is preserved.
pub fn subsample_uniform(ctx: &Context, fraction: f64, seed: u64) -> Result<Context> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("fraction {fraction} not in (0, 1]")));
    }
    let n = ctx.members.len();
    let k = ((fraction * n as f64).round() as usize).min(n);
    let mut pool = ctx.members.clone();
    let mut rng = rng_for(seed, "survey.subsample.uniform");
    for i in 0..k {
        let j = i + (rng.random::<u64>() as usize) % (n - i);
        pool.swap(i, j);
    }
    let mut members = pool[..k].to_vec();
    members.sort_unstable();
    Ok(Context {
        members,
        ..ctx.clone()
    })
}

/// Fraction draw for realistic acquisition: uniform in 0.7 +- 0.25.
pub fn draw_contiguous_fraction(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.45..0.95)
}

/// Per shot, keep one contiguous run of receivers. The run length is
/// `round(f * n)` with `f` drawn by [`draw_contiguous_fraction`] (or fixed
/// via `fraction`), placed at a uniformly random feasible offset.
/// Single-receiver shots are kept as-is.
pub fn subsample_contiguous(
    survey: &Survey,
    ctx: &Context,
    fraction: Option<f64>,
    seed: u64,
) -> Result<Context> {
    if let Some(f) = fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::param(format!("fraction {f} not in (0, 1]")));
        }
    }
    let mut rng = rng_for(seed, "survey.subsample.contiguous");
    let mut members = Vec::new();
    let mut i = 0;
    while i < ctx.members.len() {
        let shot = survey.traces[ctx.members[i] as usize].shot_id;
        let mut j = i;
        while j < ctx.members.len() && survey.traces[ctx.members[j] as usize].shot_id == shot {
            j += 1;
        }
        let group = &ctx.members[i..j];
        let n = group.len();
        if n == 1 {
            members.push(group[0]);
        } else {
            let f = fraction.unwrap_or_else(|| draw_contiguous_fraction(&mut rng));
            let k = ((f * n as f64).round() as usize).clamp(1, n);
            let start = (rng.random::<u64>() as usize) % (n - k + 1);
            members.extend_from_slice(&group[start..start + k]);
        }
        i = j;
    }
    Ok(Context {
        members,
        ..ctx.clone()
    })
}

/// Decimate a trace to `target_len` samples by block means.
pub fn downsample_trace(u: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if target_len == 0 {
        return Err(Error::param("target length must be positive"));
    }
    if !u.len().is_multiple_of(target_len) {
        return Err(Error::param(format!(
            "length {} not divisible into {} blocks",
            u.len(),
            target_len
        )));
    }
    let factor = u.len() / target_len;
    Ok(u.chunks_exact(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect())
}
