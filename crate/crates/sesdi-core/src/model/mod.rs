//! The set-embedding network: information-aligned trace embeddings, mean
//! aggregation over a context, and a downstream head that maps the context
//! embedding to a velocity block.
//!
//! Per trace t the embedding is `F_t([F_aq(A(t)), F_d(D(t))])`; a context is
//! embedded as the elementwise mean of its member embeddings, and the block
//! prediction is `rho` applied to that mean.

mod net;

pub use net::{
    backward_context, embed_context, embed_trace, forward_context, grad_check_sesdi,
    predict_block, predict_block_cached, ContextCache, SesdiGrads,
};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{AdamState, MlpParams, MlpSpec};
use crate::survey::Survey;

/// Velocity midpoint of the affine output mapping `v = v_mid + z * v_half`.
pub const V_MID: f64 = 3250.0;
/// Velocity half-range of the affine output mapping.
pub const V_HALF: f64 = 1250.0;

/// How member embeddings combine into the context embedding. Mean is the
/// default; Sum exists for ablation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SesdiSpec {
    /// Samples per (downsampled) trace fed to F_d.
    pub trace_len: usize,
    /// Location vector width fed to F_aq: 4 in 2D (src x/z, rcv x/z),
    /// 6 in 3D (both full positions).
    pub loc_dim: usize,
    pub f_d: MlpSpec,
    pub f_aq: MlpSpec,
    pub f_t: MlpSpec,
    pub rho: MlpSpec,
    /// Shape of the predicted block, e.g. [nz, nx].
    pub output_dims: Vec<usize>,
    pub aggregate: Aggregate,
    pub v_mid: f64,
    pub v_half: f64,
}

impl SesdiSpec {
    /// Desk-scale 2D network for a given output grid.
    pub fn desk_2d(nz: usize, nx: usize) -> Self {
        SesdiSpec {
            trace_len: 400,
            loc_dim: 4,
            f_d: MlpSpec::all_relu(&[400, 512, 256]),
            f_aq: MlpSpec::all_relu(&[4, 64, 64]),
            f_t: MlpSpec::all_relu(&[320, 256, 256]),
            rho: MlpSpec::relu_head(&[256, 512, nz * nx]),
            output_dims: vec![nz, nx],
            aggregate: Aggregate::Mean,
            v_mid: V_MID,
            v_half: V_HALF,
        }
    }

    /// Full-scale 2D network (201x301 output): 400-sample traces embedded to
    /// 10240 then squeezed to 4096, locations embedded to 512, five hidden
    /// layers of 4096 after the concat, one output layer.
    pub fn paper_2d() -> Self {
        SesdiSpec {
            trace_len: 400,
            loc_dim: 4,
            f_d: MlpSpec::all_relu(&[400, 10240, 4096, 4096, 4096]),
            f_aq: MlpSpec::all_relu(&[4, 512, 512, 512, 512]),
            f_t: MlpSpec::all_relu(&[4096 + 512, 4096, 4096, 4096, 4096, 4096]),
            rho: MlpSpec::relu_head(&[4096, 201 * 301]),
            output_dims: vec![201, 301],
            aggregate: Aggregate::Mean,
            v_mid: V_MID,
            v_half: V_HALF,
        }
    }

    /// Small spec for end-to-end gradient checks.
    pub fn tiny() -> Self {
        SesdiSpec {
            trace_len: 8,
            loc_dim: 4,
            f_d: MlpSpec::all_relu(&[8, 12, 10]),
            f_aq: MlpSpec::all_relu(&[4, 6, 6]),
            f_t: MlpSpec::all_relu(&[16, 12, 12]),
            rho: MlpSpec::relu_head(&[12, 14, 6]),
            output_dims: vec![2, 3],
            aggregate: Aggregate::Mean,
            v_mid: V_MID,
            v_half: V_HALF,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.f_d.validate()?;
        self.f_aq.validate()?;
        self.f_t.validate()?;
        self.rho.validate()?;
        if self.f_d.input_dim() != self.trace_len {
            return Err(Error::param("F_d input must equal trace_len"));
        }
        if self.loc_dim != 4 && self.loc_dim != 6 {
            return Err(Error::param("loc_dim must be 4 (2D) or 6 (3D)"));
        }
        if self.f_aq.input_dim() != self.loc_dim {
            return Err(Error::param("F_aq input must equal loc_dim"));
        }
        if self.f_t.input_dim() != self.f_d.output_dim() + self.f_aq.output_dim() {
            return Err(Error::param(
                "F_t input must equal F_aq output + F_d output",
            ));
        }
        if self.rho.input_dim() != self.f_t.output_dim() {
            return Err(Error::param("rho input must equal F_t output"));
        }
        let cells: usize = self.output_dims.iter().product();
        if self.rho.output_dim() != cells || self.output_dims.is_empty() {
            return Err(Error::param("rho output must equal the block cell count"));
        }
        if self.v_half <= 0.0 {
            return Err(Error::param("v_half must be positive"));
        }
        Ok(())
    }

    /// Width of a trace embedding (F_t output).
    pub fn embed_dim(&self) -> usize {
        self.f_t.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.f_d.param_count()
            + self.f_aq.param_count()
            + self.f_t.param_count()
            + self.rho.param_count()
    }
}

/// Per-axis affine normalization of positions to roughly [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LocScale {
    pub center: [f64; 3],
    pub half: [f64; 3],
}

impl LocScale {
    pub fn identity() -> Self {
        LocScale {
            center: [0.0; 3],
            half: [1.0; 3],
        }
    }

    /// Fit to the survey's acquisition bounds. Degenerate axes (all positions
    /// equal) get a unit half-extent so they normalize to zero.
    pub fn from_survey(survey: &Survey) -> Self {
        let (lo, hi) = survey.bounds();
        let mut center = [0.0; 3];
        let mut half = [1.0; 3];
        for a in 0..3 {
            center[a] = 0.5 * (lo[a] + hi[a]);
            half[a] = (0.5 * (hi[a] - lo[a])).max(1.0);
        }
        LocScale { center, half }
    }

    pub fn normalize(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.center[0]) / self.half[0],
            (p[1] - self.center[1]) / self.half[1],
            (p[2] - self.center[2]) / self.half[2],
        ]
    }
}

/// The full parameter bank: one MLP per functional block plus the location
/// normalization fitted at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct SesdiParams {
    pub spec: SesdiSpec,
    pub f_d: MlpParams,
    pub f_aq: MlpParams,
    pub f_t: MlpParams,
    pub rho: MlpParams,
    pub loc_scale: LocScale,
}

impl SesdiParams {
    pub fn init(spec: &SesdiSpec, loc_scale: LocScale, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        Ok(SesdiParams {
            spec: spec.clone(),
            f_d: MlpParams::init(&spec.f_d, rng)?,
            f_aq: MlpParams::init(&spec.f_aq, rng)?,
            f_t: MlpParams::init(&spec.f_t, rng)?,
            rho: MlpParams::init(&spec.rho, rng)?,
            loc_scale,
        })
    }

    pub fn zeros(spec: &SesdiSpec) -> Result<Self> {
        spec.validate()?;
        Ok(SesdiParams {
            spec: spec.clone(),
            f_d: MlpParams::zeros(&spec.f_d)?,
            f_aq: MlpParams::zeros(&spec.f_aq)?,
            f_t: MlpParams::zeros(&spec.f_t)?,
            rho: MlpParams::zeros(&spec.rho)?,
            loc_scale: LocScale::identity(),
        })
    }

    /// Location input for one trace, normalized.
    pub fn loc_vector(&self, src: [f64; 3], rcv: [f64; 3]) -> Vec<f64> {
        let s = self.loc_scale.normalize(src);
        let r = self.loc_scale.normalize(rcv);
        match self.spec.loc_dim {
            4 => vec![s[0], s[2], r[0], r[2]],
            _ => vec![s[0], s[1], s[2], r[0], r[1], r[2]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.f_d.is_finite() && self.f_aq.is_finite() && self.f_t.is_finite() && self.rho.is_finite()
    }

    pub fn param_count(&self) -> usize {
        self.f_d.param_count()
            + self.f_aq.param_count()
            + self.f_t.param_count()
            + self.rho.param_count()
    }
}

/// Adam over the four blocks, stepped together.
#[derive(Debug, Clone)]
pub struct SesdiAdam {
    pub f_d: AdamState,
    pub f_aq: AdamState,
    pub f_t: AdamState,
    pub rho: AdamState,
}

impl SesdiAdam {
    pub fn new(spec: &SesdiSpec, lr: f64, beta1: f64, beta2: f64) -> Result<Self> {
        Ok(SesdiAdam {
            f_d: AdamState::new(&spec.f_d, lr)?.with_betas(beta1, beta2),
            f_aq: AdamState::new(&spec.f_aq, lr)?.with_betas(beta1, beta2),
            f_t: AdamState::new(&spec.f_t, lr)?.with_betas(beta1, beta2),
            rho: AdamState::new(&spec.rho, lr)?.with_betas(beta1, beta2),
        })
    }

    pub fn step(&mut self, params: &mut SesdiParams, grads: &SesdiGrads) -> Result<()> {
        crate::nn::adam_step(&mut self.f_d, &mut params.f_d, &grads.f_d)?;
        crate::nn::adam_step(&mut self.f_aq, &mut params.f_aq, &grads.f_aq)?;
        crate::nn::adam_step(&mut self.f_t, &mut params.f_t, &grads.f_t)?;
        crate::nn::adam_step(&mut self.rho, &mut params.rho, &grads.rho)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_spec_validates() {
        assert!(SesdiSpec::desk_2d(51, 76).validate().is_ok());
        assert!(SesdiSpec::tiny().validate().is_ok());
    }

    #[test]
    fn paper_spec_shapes() {
        let spec = SesdiSpec::paper_2d();
        spec.validate().unwrap();
        assert_eq!(spec.embed_dim(), 4096);
        assert_eq!(spec.output_dims, vec![201, 301]);
        assert_eq!(spec.rho.output_dim(), 201 * 301);
        assert_eq!(spec.f_t.input_dim(), 4096 + 512);
    }

    #[test]
    fn inconsistent_spec_rejected() {
        let mut spec = SesdiSpec::tiny();
        spec.f_t = crate::nn::MlpSpec::all_relu(&[15, 12, 12]);
        assert!(spec.validate().is_err());
    }
}
