//! Forward and backward passes over a context of traces.
//!
//! Members are processed as matrix rows in canonical (shot_id, rcv_index)
//! order no matter how the caller arranged them, and the aggregation loop
//! runs in that order too, so predictions are bit-identical under member
//! permutation.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{Aggregate, SesdiParams};
use crate::nn::{mlp_backward_batch, mlp_forward_batch, Matrix, MlpCache, MlpParams};
use crate::survey::GeometryAwareTrace;

/// Forward-pass state kept for the backward pass.
pub struct ContextCache {
    n: usize,
    f_d: MlpCache,
    f_aq: MlpCache,
    f_t: MlpCache,
    rho: MlpCache,
    /// Normalized network output (before the affine velocity mapping).
    pub z: Vec<f64>,
}

/// Gradients for every block, shapes mirroring [`SesdiParams`].
#[derive(Debug, Clone)]
pub struct SesdiGrads {
    pub f_d: MlpParams,
    pub f_aq: MlpParams,
    pub f_t: MlpParams,
    pub rho: MlpParams,
}

impl SesdiGrads {
    pub fn zeros(params: &SesdiParams) -> Result<Self> {
        Ok(SesdiGrads {
            f_d: MlpParams::zeros(&params.spec.f_d)?,
            f_aq: MlpParams::zeros(&params.spec.f_aq)?,
            f_t: MlpParams::zeros(&params.spec.f_t)?,
            rho: MlpParams::zeros(&params.spec.rho)?,
        })
    }

    pub fn add_scaled(&mut self, other: &SesdiGrads, alpha: f64) {
        self.f_d.add_scaled(&other.f_d, alpha);
        self.f_aq.add_scaled(&other.f_aq, alpha);
        self.f_t.add_scaled(&other.f_t, alpha);
        self.rho.add_scaled(&other.rho, alpha);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.f_d.scale(alpha);
        self.f_aq.scale(alpha);
        self.f_t.scale(alpha);
        self.rho.scale(alpha);
    }

    pub fn is_finite(&self) -> bool {
        self.f_d.is_finite() && self.f_aq.is_finite() && self.f_t.is_finite() && self.rho.is_finite()
    }
}

/// Canonical processing order of the members.
fn canonical_order(traces: &[&GeometryAwareTrace]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by_key(|&i| (traces[i].shot_id, traces[i].rcv_index));
    order
}

fn member_matrices(
    params: &SesdiParams,
    traces: &[&GeometryAwareTrace],
) -> Result<(Matrix, Matrix)> {
    let spec = &params.spec;
    let order = canonical_order(traces);
    let n = traces.len();
    let mut data = Vec::with_capacity(n * spec.trace_len);
    let mut locs = Vec::with_capacity(n * spec.loc_dim);
    for &i in &order {
        let t = traces[i];
        if t.data.len() != spec.trace_len {
            return Err(Error::shape(format!(
                "trace has {} samples, network expects {}",
                t.data.len(),
                spec.trace_len
            )));
        }
        data.extend_from_slice(&t.data);
        locs.extend_from_slice(&params.loc_vector(t.src, t.rcv));
    }
    Ok((
        Matrix::from_vec(n, spec.trace_len, data)?,
        Matrix::from_vec(n, spec.loc_dim, locs)?,
    ))
}

/// Run the whole network over a context, returning the normalized output and
/// the cache needed for an exact backward pass.
pub fn forward_context(
    params: &SesdiParams,
    traces: &[&GeometryAwareTrace],
) -> Result<ContextCache> {
    if traces.is_empty() {
        return Err(Error::EmptyContext(String::new()));
    }
    let spec = &params.spec;
    let n = traces.len();
    let (data, locs) = member_matrices(params, traces)?;

    let (d_out, f_d_cache) = mlp_forward_batch(&params.f_d, &data, &spec.f_d)?;
    let (aq_out, f_aq_cache) = mlp_forward_batch(&params.f_aq, &locs, &spec.f_aq)?;

    // phi input: [F_aq | F_d] per member
    let aq_w = spec.f_aq.output_dim();
    let d_w = spec.f_d.output_dim();
    let mut concat = Matrix::zeros(n, aq_w + d_w);
    for r in 0..n {
        let row = concat.row_mut(r);
        row[..aq_w].copy_from_slice(aq_out.row(r));
        row[aq_w..].copy_from_slice(d_out.row(r));
    }
    let (phi, f_t_cache) = mlp_forward_batch(&params.f_t, &concat, &spec.f_t)?;

    // aggregate member embeddings in row (canonical) order
    let width = spec.f_t.output_dim();
    let mut agg = vec![0.0; width];
    for r in 0..n {
        for (a, v) in agg.iter_mut().zip(phi.row(r)) {
            *a += v;
        }
    }
    if spec.aggregate == Aggregate::Mean {
        for a in &mut agg {
            *a /= n as f64;
        }
    }

    let e = Matrix::from_vec(1, width, agg)?;
    let (z, rho_cache) = mlp_forward_batch(&params.rho, &e, &spec.rho)?;
    Ok(ContextCache {
        n,
        f_d: f_d_cache,
        f_aq: f_aq_cache,
        f_t: f_t_cache,
        rho: rho_cache,
        z: z.data().to_vec(),
    })
}

/// Information-aligned embedding of a single trace.
pub fn embed_trace(params: &SesdiParams, trace: &GeometryAwareTrace) -> Result<Vec<f64>> {
    embed_context(params, &[trace])
}

/// Context embedding: elementwise mean of member embeddings (or sum under
/// the ablation flag).
pub fn embed_context(params: &SesdiParams, traces: &[&GeometryAwareTrace]) -> Result<Vec<f64>> {
    if traces.is_empty() {
        return Err(Error::EmptyContext(String::new()));
    }
    let spec = &params.spec;
    let n = traces.len();
    let (data, locs) = member_matrices(params, traces)?;
    let (d_out, _) = mlp_forward_batch(&params.f_d, &data, &spec.f_d)?;
    let (aq_out, _) = mlp_forward_batch(&params.f_aq, &locs, &spec.f_aq)?;
    let aq_w = spec.f_aq.output_dim();
    let d_w = spec.f_d.output_dim();
    let mut concat = Matrix::zeros(n, aq_w + d_w);
    for r in 0..n {
        let row = concat.row_mut(r);
        row[..aq_w].copy_from_slice(aq_out.row(r));
        row[aq_w..].copy_from_slice(d_out.row(r));
    }
    let (phi, _) = mlp_forward_batch(&params.f_t, &concat, &spec.f_t)?;
    let width = spec.f_t.output_dim();
    let mut agg = vec![0.0; width];
    for r in 0..n {
        for (a, v) in agg.iter_mut().zip(phi.row(r)) {
            *a += v;
        }
    }
    if spec.aggregate == Aggregate::Mean {
        for a in &mut agg {
            *a /= n as f64;
        }
    }
    Ok(agg)
}

/// Predicted velocity block in m/s, shaped per the spec's output dims.
pub fn predict_block(params: &SesdiParams, traces: &[&GeometryAwareTrace]) -> Result<Grid> {
    let cache = forward_context(params, traces)?;
    Ok(block_from_z(params, &cache.z))
}

/// Prediction plus the cache for a following [`backward_context`].
pub fn predict_block_cached(
    params: &SesdiParams,
    traces: &[&GeometryAwareTrace],
) -> Result<(Grid, ContextCache)> {
    let cache = forward_context(params, traces)?;
    let grid = block_from_z(params, &cache.z);
    Ok((grid, cache))
}

fn block_from_z(params: &SesdiParams, z: &[f64]) -> Grid {
    let spec = &params.spec;
    Grid {
        dims: spec.output_dims.clone(),
        data: z.iter().map(|v| spec.v_mid + spec.v_half * v).collect(),
    }
}

/// Exact gradients of a scalar loss with respect to every parameter, given
/// the loss gradient on the predicted block (in m/s units). The aggregation
/// node distributes gradient / n to each member's path; block gradients
/// accumulate over members in canonical order.
pub fn backward_context(
    params: &SesdiParams,
    cache: &ContextCache,
    grad_block: &[f64],
) -> Result<SesdiGrads> {
    let spec = &params.spec;
    if grad_block.len() != cache.z.len() {
        return Err(Error::shape(format!(
            "grad_block has {} cells, prediction has {}",
            grad_block.len(),
            cache.z.len()
        )));
    }
    let n = cache.n;
    // chain through v = v_mid + v_half * z
    let dz: Vec<f64> = grad_block.iter().map(|g| g * spec.v_half).collect();
    let dz = Matrix::from_vec(1, dz.len(), dz)?;
    let (rho_grads, de) = mlp_backward_batch(&params.rho, &cache.rho, &dz)?;

    let width = spec.f_t.output_dim();
    let share = match spec.aggregate {
        Aggregate::Mean => 1.0 / n as f64,
        Aggregate::Sum => 1.0,
    };
    let mut d_phi = Matrix::zeros(n, width);
    for r in 0..n {
        for (dv, g) in d_phi.row_mut(r).iter_mut().zip(de.row(0)) {
            *dv = g * share;
        }
    }
    let (f_t_grads, d_concat) = mlp_backward_batch(&params.f_t, &cache.f_t, &d_phi)?;

    let aq_w = spec.f_aq.output_dim();
    let d_w = spec.f_d.output_dim();
    let mut d_aq = Matrix::zeros(n, aq_w);
    let mut d_d = Matrix::zeros(n, d_w);
    for r in 0..n {
        let row = d_concat.row(r);
        d_aq.row_mut(r).copy_from_slice(&row[..aq_w]);
        d_d.row_mut(r).copy_from_slice(&row[aq_w..]);
    }
    let (f_aq_grads, _) = mlp_backward_batch(&params.f_aq, &cache.f_aq, &d_aq)?;
    let (f_d_grads, _) = mlp_backward_batch(&params.f_d, &cache.f_d, &d_d)?;

    Ok(SesdiGrads {
        f_d: f_d_grads,
        f_aq: f_aq_grads,
        f_t: f_t_grads,
        rho: rho_grads,
    })
}

/// End-to-end finite-difference check of [`backward_context`] on a randomly
/// initialized network with a 3-member random context. The probe loss is a
/// fixed random linear functional of the block, scaled by 1 / v_half so its
/// conditioning matches the normalized output space. Returns the max
/// relative error over every parameter of every block.
pub fn grad_check_sesdi(
    spec: &crate::model::SesdiSpec,
    seed: u64,
    epsilon: f64,
) -> Result<f64> {
    use crate::seed::rng_for;
    use rand::Rng;

    if epsilon <= 0.0 {
        return Err(Error::param("epsilon must be positive"));
    }
    spec.validate()?;
    let mut rng = rng_for(seed, "model.gradcheck");
    let mut params = SesdiParams::init(spec, crate::model::LocScale::identity(), &mut rng)?;
    let n_members = 3;
    let traces: Vec<GeometryAwareTrace> = (0..n_members)
        .map(|i| GeometryAwareTrace {
            data: (0..spec.trace_len)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            src: [rng.random_range(-1.0..1.0), 0.0, rng.random_range(0.0..1.0)],
            rcv: [rng.random_range(-1.0..1.0), 0.0, 0.0],
            shot_id: i as u32,
            rcv_index: 0,
        })
        .collect();
    let refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
    let cells: usize = spec.output_dims.iter().product();
    let coeffs: Vec<f64> = (0..cells)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 } / spec.v_half)
        .collect();

    let cache = forward_context(&params, &refs)?;
    let grads = backward_context(&params, &cache, &coeffs)?;

    let loss = |p: &SesdiParams, refs: &[&GeometryAwareTrace]| -> Result<f64> {
        let block = predict_block(p, refs)?;
        let l: f64 = block.data.iter().zip(&coeffs).map(|(v, c)| v * c).sum();
        if !l.is_finite() {
            return Err(Error::numeric("non-finite probe loss"));
        }
        Ok(l)
    };

    let rel = |an: f64, fd: f64| (an - fd).abs() / an.abs().max(fd.abs()).max(1e-4);
    let mut max_err: f64 = 0.0;
    type ParamsAccessor = fn(&mut SesdiParams) -> &mut MlpParams;
    type GradsAccessor = fn(&SesdiGrads) -> &MlpParams;
    let blocks: [(ParamsAccessor, GradsAccessor); 4] = [
        (|p| &mut p.f_d, |g| &g.f_d),
        (|p| &mut p.f_aq, |g| &g.f_aq),
        (|p| &mut p.f_t, |g| &g.f_t),
        (|p| &mut p.rho, |g| &g.rho),
    ];
    for (get_mut, get_grad) in blocks {
        let n_layers = get_mut(&mut params).layers.len();
        for li in 0..n_layers {
            let (rows, cols) = {
                let w = &get_mut(&mut params).layers[li].weights;
                (w.rows(), w.cols())
            };
            for r in 0..rows {
                for c in 0..cols {
                    let orig = get_mut(&mut params).layers[li].weights.at(r, c);
                    get_mut(&mut params).layers[li].weights.set(r, c, orig + epsilon);
                    let up = loss(&params, &refs)?;
                    get_mut(&mut params).layers[li].weights.set(r, c, orig - epsilon);
                    let down = loss(&params, &refs)?;
                    get_mut(&mut params).layers[li].weights.set(r, c, orig);
                    let fd = (up - down) / (2.0 * epsilon);
                    max_err = max_err.max(rel(get_grad(&grads).layers[li].weights.at(r, c), fd));
                }
            }
            for b in 0..get_mut(&mut params).layers[li].bias.len() {
                let orig = get_mut(&mut params).layers[li].bias[b];
                get_mut(&mut params).layers[li].bias[b] = orig + epsilon;
                let up = loss(&params, &refs)?;
                get_mut(&mut params).layers[li].bias[b] = orig - epsilon;
                let down = loss(&params, &refs)?;
                get_mut(&mut params).layers[li].bias[b] = orig;
                let fd = (up - down) / (2.0 * epsilon);
                max_err = max_err.max(rel(get_grad(&grads).layers[li].bias[b], fd));
            }
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocScale, SesdiSpec};
    use crate::seed::rng_for;
    use rand::Rng;

    fn tiny_params(seed: u64) -> SesdiParams {
        let spec = SesdiSpec::tiny();
        let mut rng = rng_for(seed, "model.test");
        SesdiParams::init(&spec, LocScale::identity(), &mut rng).unwrap()
    }

    fn random_traces(seed: u64, n: usize, len: usize) -> Vec<GeometryAwareTrace> {
        let mut rng = rng_for(seed, "model.traces");
        (0..n)
            .map(|i| GeometryAwareTrace {
                data: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
                src: [rng.random_range(-1.0..1.0), 0.0, 0.0],
                rcv: [rng.random_range(-1.0..1.0), 0.0, 0.0],
                shot_id: (i / 4) as u32,
                rcv_index: (i % 4) as u32,
            })
            .collect()
    }

    #[test]
    fn identical_traces_embed_identically() {
        let params = tiny_params(1);
        let traces = random_traces(2, 1, 8);
        let copy = traces[0].clone();
        let a = embed_trace(&params, &traces[0]).unwrap();
        let b = embed_trace(&params, &copy).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_params_give_zero_embedding() {
        let params = SesdiParams::zeros(&SesdiSpec::tiny()).unwrap();
        let traces = random_traces(3, 1, 8);
        let e = embed_trace(&params, &traces[0]).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_width_matches_spec() {
        let params = tiny_params(1);
        let traces = random_traces(2, 3, 8);
        let refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
        let e = embed_context(&params, &refs).unwrap();
        assert_eq!(e.len(), params.spec.embed_dim());
    }

    #[test]
    fn singleton_context_equals_trace_embedding() {
        let params = tiny_params(4);
        let traces = random_traces(5, 1, 8);
        let a = embed_trace(&params, &traces[0]).unwrap();
        let b = embed_context(&params, &[&traces[0]]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_member_matches_singleton() {
        let params = tiny_params(6);
        let traces = random_traces(7, 1, 8);
        let single = embed_context(&params, &[&traces[0]]).unwrap();
        let double = embed_context(&params, &[&traces[0], &traces[0]]).unwrap();
        assert_eq!(single, double);
    }

    #[test]
    fn permutation_leaves_prediction_bit_identical() {
        let params = tiny_params(8);
        let traces = random_traces(9, 12, 8);
        let mut refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
        let base = predict_block(&params, &refs).unwrap();
        let mut rng = rng_for(10, "model.perm");
        for _ in 0..8 {
            for i in 0..refs.len() {
                let j = i + (rng.random::<u64>() as usize) % (refs.len() - i);
                refs.swap(i, j);
            }
            let shuffled = predict_block(&params, &refs).unwrap();
            assert_eq!(base.data, shuffled.data);
        }
    }

    #[test]
    fn empty_context_is_an_error() {
        let params = tiny_params(1);
        assert!(matches!(
            predict_block(&params, &[]),
            Err(Error::EmptyContext(_))
        ));
    }

    #[test]
    fn zero_rho_with_bias_gives_uniform_block() {
        let mut params = SesdiParams::zeros(&SesdiSpec::tiny()).unwrap();
        // output bias chosen so the block reads 3000 m/s
        let bias = (3000.0 - params.spec.v_mid) / params.spec.v_half;
        for b in params.rho.layers.last_mut().unwrap().bias.iter_mut() {
            *b = bias;
        }
        let traces = random_traces(3, 4, 8);
        let refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
        let block = predict_block(&params, &refs).unwrap();
        assert_eq!(block.dims, vec![2, 3]);
        for v in &block.data {
            assert!((v - 3000.0).abs() < 1e-9);
        }
    }

    #[test]
    fn geometry_shift_changes_prediction() {
        let params = tiny_params(11);
        let mut traces = random_traces(12, 6, 8);
        let refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
        let base = predict_block(&params, &refs).unwrap();
        // move one member's source and receiver by 100 m
        traces[2].src[0] += 100.0;
        traces[2].rcv[0] += 100.0;
        let refs: Vec<&GeometryAwareTrace> = traces.iter().collect();
        let moved = predict_block(&params, &refs).unwrap();
        assert_ne!(base.data, moved.data);
    }

    #[test]
    fn duplicated_member_gradients_match_singleton() {
        let params = tiny_params(13);
        let traces = random_traces(14, 1, 8);
        let grad = vec![0.25; 6];
        let single = {
            let cache = forward_context(&params, &[&traces[0]]).unwrap();
            backward_context(&params, &cache, &grad).unwrap()
        };
        let double = {
            let cache = forward_context(&params, &[&traces[0], &traces[0]]).unwrap();
            backward_context(&params, &cache, &grad).unwrap()
        };
        for (a, b) in single.f_d.layers.iter().zip(&double.f_d.layers) {
            assert_eq!(a.weights.data(), b.weights.data());
            assert_eq!(a.bias, b.bias);
        }
        for (a, b) in single.rho.layers.iter().zip(&double.rho.layers) {
            assert_eq!(a.weights.data(), b.weights.data());
        }
    }

    #[test]
    fn full_model_gradients_match_finite_differences() {
        let err = grad_check_sesdi(&SesdiSpec::tiny(), 15, 1e-6).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }
}
