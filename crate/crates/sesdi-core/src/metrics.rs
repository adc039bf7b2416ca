//! Evaluation metrics: per-cell L1 in m/s, PSNR, and single-scale SSIM.
//!
//! 3D grids are scored slice by slice along depth and averaged, which reduces
//! to the plain 2D metric on single-slice volumes.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Default PSNR/SSIM peak: the velocity dynamic range 4500 - 2000 m/s.
pub const DEFAULT_PEAK: f64 = 2500.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Mean absolute error per cell, m/s.
    pub l1: f64,
    /// Peak signal-to-noise ratio, dB (+inf for identical inputs).
    pub psnr: f64,
    /// Mean local structural similarity, in [-1, 1].
    pub ssim: f64,
}

fn check_shapes(pred: &Grid, label: &Grid) -> Result<()> {
    if pred.dims != label.dims {
        return Err(Error::shape(format!(
            "prediction {:?} vs label {:?}",
            pred.dims, label.dims
        )));
    }
    Ok(())
}

/// Mean over cells of |pred - label|.
pub fn l1_loss(pred: &Grid, label: &Grid) -> Result<f64> {
    check_shapes(pred, label)?;
    let n = pred.len() as f64;
    Ok(pred
        .data
        .iter()
        .zip(&label.data)
        .map(|(p, l)| (p - l).abs())
        .sum::<f64>()
        / n)
}

fn mse_2d(pred: &Grid, label: &Grid) -> f64 {
    let n = pred.len() as f64;
    pred.data
        .iter()
        .zip(&label.data)
        .map(|(p, l)| (p - l) * (p - l))
        .sum::<f64>()
        / n
}

/// `10 log10(peak^2 / MSE)`; +inf when the inputs are identical.
pub fn psnr(pred: &Grid, label: &Grid, peak: f64) -> Result<f64> {
    check_shapes(pred, label)?;
    if peak <= 0.0 {
        return Err(Error::param("peak must be positive"));
    }
    let slices_p = pred.depth_slices();
    let slices_l = label.depth_slices();
    let mut acc = 0.0;
    for (p, l) in slices_p.iter().zip(&slices_l) {
        let mse = mse_2d(p, l);
        if mse == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += 10.0 * (peak * peak / mse).log10();
    }
    Ok(acc / slices_p.len() as f64)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian filter keeping only positions where the full window
/// fits; output is (h - 10) x (w - 10).
fn blur_valid(img: &[f64], h: usize, w: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let half = SSIM_WINDOW / 2;
    let wv = w - 2 * half;
    // horizontal pass
    let mut tmp = vec![0.0; h * wv];
    for r in 0..h {
        let row = &img[r * w..(r + 1) * w];
        for c in 0..wv {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * row[c + k];
            }
            tmp[r * wv + c] = acc;
        }
    }
    // vertical pass
    let hv = h - 2 * half;
    let mut out = vec![0.0; hv * wv];
    for r in 0..hv {
        for c in 0..wv {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * tmp[(r + k) * wv + c];
            }
            out[r * wv + c] = acc;
        }
    }
    out
}

fn ssim_2d(pred: &Grid, label: &Grid, peak: f64) -> Result<f64> {
    let (h, w) = (pred.dims[0], pred.dims[1]);
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::param(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images, got {h}x{w}"
        )));
    }
    let kernel = gaussian_kernel();
    let x = &pred.data;
    let y = &label.data;
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = blur_valid(x, h, w, &kernel);
    let mu_y = blur_valid(y, h, w, &kernel);
    let e_xx = blur_valid(&xx, h, w, &kernel);
    let e_yy = blur_valid(&yy, h, w, &kernel);
    let e_xy = blur_valid(&xy, h, w, &kernel);

    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);
    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let sx = e_xx[i] - mx * mx;
        let sy = e_yy[i] - my * my;
        let sxy = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
        let den = (mx * mx + my * my + c1) * (sx + sy + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5) and
/// valid-window cropping at the borders.
pub fn ssim(pred: &Grid, label: &Grid, peak: f64) -> Result<f64> {
    check_shapes(pred, label)?;
    if peak <= 0.0 {
        return Err(Error::param("peak must be positive"));
    }
    let slices_p = pred.depth_slices();
    let slices_l = label.depth_slices();
    let mut acc = 0.0;
    for (p, l) in slices_p.iter().zip(&slices_l) {
        acc += ssim_2d(p, l, peak)?;
    }
    Ok(acc / slices_p.len() as f64)
}

/// Arithmetic means of the per-pair metrics over a set of predictions.
pub fn evaluate(preds: &[Grid], labels: &[Grid], peak: f64) -> Result<MetricReport> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::param(format!(
            "evaluate needs matching non-empty sets, got {} vs {}",
            preds.len(),
            labels.len()
        )));
    }
    let mut report = MetricReport {
        l1: 0.0,
        psnr: 0.0,
        ssim: 0.0,
    };
    for (p, l) in preds.iter().zip(labels) {
        report.l1 += l1_loss(p, l)?;
        report.psnr += psnr(p, l, peak)?;
        report.ssim += ssim(p, l, peak)?;
    }
    let n = preds.len() as f64;
    report.l1 /= n;
    report.psnr /= n;
    report.ssim /= n;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    fn random_grid(seed: u64, h: usize, w: usize, lo: f64, hi: f64) -> Grid {
        let mut rng = rng_for(seed, "metrics.grid");
        Grid {
            dims: vec![h, w],
            data: (0..h * w).map(|_| rng.random_range(lo..hi)).collect(),
        }
    }

    /// Direct 2D-window reference, deliberately not sharing the separable
    /// filtering path of the implementation.
    fn ssim_reference(x: &Grid, y: &Grid, peak: f64) -> f64 {
        let (h, w) = (x.dims[0], x.dims[1]);
        let half = SSIM_WINDOW / 2;
        let k1d = gaussian_kernel();
        let mut weights = vec![0.0; SSIM_WINDOW * SSIM_WINDOW];
        for r in 0..SSIM_WINDOW {
            for c in 0..SSIM_WINDOW {
                weights[r * SSIM_WINDOW + c] = k1d[r] * k1d[c];
            }
        }
        let c1 = (SSIM_K1 * peak).powi(2);
        let c2 = (SSIM_K2 * peak).powi(2);
        let mut acc = 0.0;
        let mut count = 0;
        for cr in half..h - half {
            for cc in half..w - half {
                let (mut mx, mut my, mut exx, mut eyy, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for r in 0..SSIM_WINDOW {
                    for c in 0..SSIM_WINDOW {
                        let wgt = weights[r * SSIM_WINDOW + c];
                        let xv = x.at2(cr - half + r, cc - half + c);
                        let yv = y.at2(cr - half + r, cc - half + c);
                        mx += wgt * xv;
                        my += wgt * yv;
                        exx += wgt * xv * xv;
                        eyy += wgt * yv * yv;
                        exy += wgt * xv * yv;
                    }
                }
                let (sx, sy, sxy) = (exx - mx * mx, eyy - my * my, exy - mx * my);
                acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
                    / ((mx * mx + my * my + c1) * (sx + sy + c2));
                count += 1;
            }
        }
        acc / count as f64
    }

    fn psnr_reference(x: &Grid, y: &Grid, peak: f64) -> f64 {
        let mse = x
            .data
            .iter()
            .zip(&y.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / x.len() as f64;
        20.0 * peak.log10() - 10.0 * mse.log10()
    }

    #[test]
    fn l1_basics() {
        let a = random_grid(1, 12, 14, 2000.0, 4500.0);
        assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        for v in &mut b.data {
            *v += 100.0;
        }
        assert!((l1_loss(&b, &a).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_zero_db_at_peak_mse() {
        // constant error exactly equal to peak: MSE = peak^2 -> 0 dB
        let a = Grid::constant(vec![16, 16], 0.0);
        let b = Grid::constant(vec![16, 16], 2500.0);
        assert_eq!(psnr(&a, &b, 2500.0).unwrap(), 0.0);
    }

    #[test]
    fn psnr_infinite_for_identical() {
        let a = random_grid(2, 16, 16, 2000.0, 4500.0);
        assert!(psnr(&a, &a, DEFAULT_PEAK).unwrap().is_infinite());
    }

    #[test]
    fn halving_rmse_adds_six_db() {
        let label = Grid::constant(vec![16, 16], 3000.0);
        let mut p1 = label.clone();
        let mut p2 = label.clone();
        for (i, (v1, v2)) in p1.data.iter_mut().zip(&mut p2.data).enumerate() {
            let e = if i % 2 == 0 { 100.0 } else { -100.0 };
            *v1 += e;
            *v2 += e / 2.0;
        }
        let d = psnr(&p2, &label, DEFAULT_PEAK).unwrap() - psnr(&p1, &label, DEFAULT_PEAK).unwrap();
        assert!((d - 20.0 * 2.0f64.log10()).abs() < 1e-9, "delta {d}");
    }

    #[test]
    fn psnr_decreases_with_mse() {
        let label = random_grid(3, 16, 16, 2000.0, 4500.0);
        let mut noisy = label.clone();
        let mut noisier = label.clone();
        for (i, (a, b)) in noisy.data.iter_mut().zip(&mut noisier.data).enumerate() {
            let e = if i % 2 == 0 { 1.0 } else { -1.0 };
            *a += 50.0 * e;
            *b += 150.0 * e;
        }
        assert!(
            psnr(&noisy, &label, DEFAULT_PEAK).unwrap()
                > psnr(&noisier, &label, DEFAULT_PEAK).unwrap()
        );
    }

    #[test]
    fn ssim_self_is_exactly_one() {
        let a = random_grid(4, 20, 24, 2000.0, 4500.0);
        assert_eq!(ssim(&a, &a, DEFAULT_PEAK).unwrap(), 1.0);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = random_grid(5, 16, 20, 2000.0, 4500.0);
        let b = random_grid(6, 16, 20, 2000.0, 4500.0);
        let xy = ssim(&a, &b, DEFAULT_PEAK).unwrap();
        let yx = ssim(&b, &a, DEFAULT_PEAK).unwrap();
        assert!((xy - yx).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_offset_closed_form() {
        // uniform fields mu and mu + c have zero variances, so local SSIM is
        // (2 mu (mu + c) + C1) / (mu^2 + (mu + c)^2 + C1) everywhere
        let peak = DEFAULT_PEAK;
        let mu = 3000.0;
        let c = 0.1 * peak;
        let a = Grid::constant(vec![16, 16], mu);
        let b = Grid::constant(vec![16, 16], mu + c);
        let c1 = (SSIM_K1 * peak).powi(2);
        let expected = (2.0 * mu * (mu + c) + c1) / (mu * mu + (mu + c) * (mu + c) + c1);
        let got = ssim(&a, &b, peak).unwrap();
        assert!((got - expected).abs() < 1e-6, "got {got}, want {expected}");
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = Grid::constant(vec![8, 8], 1.0);
        assert!(ssim(&a, &a, DEFAULT_PEAK).is_err());
    }

    #[test]
    fn matches_independent_references() {
        for seed in 0..6 {
            let a = random_grid(100 + seed, 18, 22, 2000.0, 4500.0);
            let b = random_grid(200 + seed, 18, 22, 2000.0, 4500.0);
            let s = ssim(&a, &b, DEFAULT_PEAK).unwrap();
            let s_ref = ssim_reference(&a, &b, DEFAULT_PEAK);
            assert!((s - s_ref).abs() < 1e-9, "ssim {s} vs {s_ref}");
            let p = psnr(&a, &b, DEFAULT_PEAK).unwrap();
            let p_ref = psnr_reference(&a, &b, DEFAULT_PEAK);
            assert!((p - p_ref).abs() < 1e-9, "psnr {p} vs {p_ref}");
        }
    }

    #[test]
    fn ssim_invariant_under_rescale() {
        let a = random_grid(7, 16, 20, 2000.0, 4500.0);
        let b = random_grid(8, 16, 20, 2000.0, 4500.0);
        let base = ssim(&a, &b, DEFAULT_PEAK).unwrap();
        for scale in [0.001, 0.5, 3.0, 1000.0] {
            let a2 = Grid {
                dims: a.dims.clone(),
                data: a.data.iter().map(|v| v * scale).collect(),
            };
            let b2 = Grid {
                dims: b.dims.clone(),
                data: b.data.iter().map(|v| v * scale).collect(),
            };
            let scaled = ssim(&a2, &b2, DEFAULT_PEAK * scale).unwrap();
            assert!((scaled - base).abs() < 1e-9, "scale {scale}: {scaled} vs {base}");
        }
    }

    #[test]
    fn three_d_equals_two_d_on_single_slice() {
        let a2 = random_grid(9, 16, 20, 2000.0, 4500.0);
        let b2 = random_grid(10, 16, 20, 2000.0, 4500.0);
        let a3 = Grid {
            dims: vec![1, 16, 20],
            data: a2.data.clone(),
        };
        let b3 = Grid {
            dims: vec![1, 16, 20],
            data: b2.data.clone(),
        };
        assert_eq!(
            ssim(&a2, &b2, DEFAULT_PEAK).unwrap(),
            ssim(&a3, &b3, DEFAULT_PEAK).unwrap()
        );
        assert_eq!(
            psnr(&a2, &b2, DEFAULT_PEAK).unwrap(),
            psnr(&a3, &b3, DEFAULT_PEAK).unwrap()
        );
    }

    #[test]
    fn evaluate_means() {
        let a = random_grid(11, 16, 20, 2000.0, 4500.0);
        let b = random_grid(12, 16, 20, 2000.0, 4500.0);
        let single = evaluate(std::slice::from_ref(&a), std::slice::from_ref(&b), DEFAULT_PEAK).unwrap();
        assert_eq!(single.l1, l1_loss(&a, &b).unwrap());
        let ident = evaluate(&[a.clone(), b.clone()], &[a, b], DEFAULT_PEAK).unwrap();
        assert_eq!(ident.ssim, 1.0);
        assert_eq!(ident.l1, 0.0);
    }
}
