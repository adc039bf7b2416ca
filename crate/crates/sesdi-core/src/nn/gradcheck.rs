//! Finite-difference verification of the analytic backward pass.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::mlp::{mlp_backward, mlp_forward, MlpParams, MlpSpec};
use crate::seed::rng_for;

/// Relative-error floor: differences below this scale are treated as noise.
const REL_FLOOR: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Scalar probe loss: a fixed random linear functional of the outputs. Keeps
/// the loss piecewise linear in each parameter, so central differences are
/// exact away from ReLU kinks.
fn probe_loss(params: &MlpParams, spec: &MlpSpec, input: &[f64], coeffs: &[f64]) -> Result<f64> {
    let (out, _) = mlp_forward(params, spec, input)?;
    let loss = out.iter().zip(coeffs).map(|(o, c)| o * c).sum::<f64>();
    if !loss.is_finite() {
        return Err(Error::numeric("non-finite loss in gradient check"));
    }
    Ok(loss)
}

fn pre_activations_clear_of_kinks(params: &MlpParams, spec: &MlpSpec, input: &[f64]) -> bool {
    let Ok((_, cache)) = mlp_forward(params, spec, input) else {
        return false;
    };
    cache
        .pre_acts
        .iter()
        .all(|z| z.data().iter().all(|v| v.abs() >= 1e-3))
}

/// Max relative error between analytic gradients and central finite
/// differences over every parameter of a randomly initialized network.
pub fn grad_check(spec: &MlpSpec, seed: u64, epsilon: f64) -> Result<f64> {
    grad_check_with(spec, seed, epsilon, false)
}

/// Negative control: flips the sign of one analytic weight gradient before
/// comparing, which must blow the reported error up.
pub fn grad_check_corrupted(spec: &MlpSpec, seed: u64, epsilon: f64) -> Result<f64> {
    grad_check_with(spec, seed, epsilon, true)
}

fn grad_check_with(spec: &MlpSpec, seed: u64, epsilon: f64, corrupt: bool) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::param("epsilon must be positive"));
    }
    spec.validate()?;
    let mut rng = rng_for(seed, "gradcheck");
    let params = MlpParams::init(&spec.clone(), &mut rng)?;
    let in_dim = spec.input_dim();
    let out_dim = spec.output_dim();

    // Draw inputs until every pre-activation sits away from the ReLU kink.
    let mut input: Vec<f64> = (0..in_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    for _ in 0..64 {
        if pre_activations_clear_of_kinks(&params, spec, &input) {
            break;
        }
        input = (0..in_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    }
    let coeffs: Vec<f64> = (0..out_dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    let (_, cache) = mlp_forward(&params, spec, &input)?;
    let (mut analytic, _) = mlp_backward(&params, &cache, &coeffs)?;
    if corrupt {
        // flip the largest-magnitude weight gradient of the first layer so
        // the corruption always lands on a live path
        let w = analytic.layers[0].weights.data_mut();
        let mut largest = 0;
        for (i, v) in w.iter().enumerate() {
            if v.abs() > w[largest].abs() {
                largest = i;
            }
        }
        w[largest] = -w[largest];
    }

    let mut max_err: f64 = 0.0;
    for li in 0..params.layers.len() {
        let (rows, cols) = (
            params.layers[li].weights.rows(),
            params.layers[li].weights.cols(),
        );
        for r in 0..rows {
            for c in 0..cols {
                let mut plus = params.clone();
                let v = plus.layers[li].weights.at(r, c);
                plus.layers[li].weights.set(r, c, v + epsilon);
                let mut minus = params.clone();
                minus.layers[li].weights.set(r, c, v - epsilon);
                let fd = (probe_loss(&plus, spec, &input, &coeffs)?
                    - probe_loss(&minus, spec, &input, &coeffs)?)
                    / (2.0 * epsilon);
                max_err = max_err.max(relative_error(analytic.layers[li].weights.at(r, c), fd));
            }
        }
        for b in 0..params.layers[li].bias.len() {
            let mut plus = params.clone();
            plus.layers[li].bias[b] += epsilon;
            let mut minus = params.clone();
            minus.layers[li].bias[b] -= epsilon;
            let fd = (probe_loss(&plus, spec, &input, &coeffs)?
                - probe_loss(&minus, spec, &input, &coeffs)?)
                / (2.0 * epsilon);
            max_err = max_err.max(relative_error(analytic.layers[li].bias[b], fd));
        }
    }
    Ok(max_err)
}
