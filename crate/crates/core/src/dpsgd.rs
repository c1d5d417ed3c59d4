//! Clipping, noising and the parameter update of one DP-SGD step.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_arg, Result};
use crate::math;

pub fn l2_norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

/// Scales `g` in place to norm at most `clip`; returns the norm afterwards.
///
/// Rounding can leave `c/‖g‖·g` a few ulps above `clip`, so the factor is
/// nudged down until the recomputed norm is within the bound.
pub fn clip_in_place(g: &mut [f64], clip: f64) -> f64 {
    let norm = l2_norm(g);
    if norm <= clip {
        return norm;
    }
    let factor = clip / norm;
    for v in g.iter_mut() {
        *v *= factor;
    }
    let mut norm = l2_norm(g);
    while norm > clip {
        for v in g.iter_mut() {
            *v *= 1.0 - f64::EPSILON;
        }
        norm = l2_norm(g);
    }
    norm
}

pub fn clip_gradients(mut grads: Vec<Vec<f64>>, clip: f64) -> Result<Vec<Vec<f64>>> {
    if !(clip > 0.0) {
        return Err(invalid_arg!("clip norm must be positive, got {clip}"));
    }
    for g in &mut grads {
        clip_in_place(g, clip);
    }
    Ok(grads)
}

/// Adds one `N(0, σ²C²)` draw per coordinate to `sum` and divides by `m`.
pub fn noise_and_normalize<R: Rng + ?Sized>(
    sum: &mut [f64],
    sigma: f64,
    clip: f64,
    m: f64,
    rng: &mut R,
) -> Result<()> {
    if !(sigma >= 0.0) || !(clip > 0.0) || !(m >= 1.0) {
        return Err(invalid_arg!(
            "need sigma >= 0, clip > 0 and normalizer >= 1 (got {sigma}, {clip}, {m})"
        ));
    }
    let scale = sigma * clip;
    for v in sum.iter_mut() {
        if scale > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            *v += scale * z;
        }
        *v /= m;
    }
    Ok(())
}

/// `(Σ clipped + N(0, σ²C²I)) / m`.
pub fn noisy_aggregate<R: Rng + ?Sized>(
    clipped: &[Vec<f64>],
    dim: usize,
    sigma: f64,
    clip: f64,
    m: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; dim];
    for g in clipped {
        if g.len() != dim {
            return Err(invalid_arg!("gradient of length {} in a batch of dimension {dim}", g.len()));
        }
        for (s, v) in sum.iter_mut().zip(g) {
            *s += v;
        }
    }
    noise_and_normalize(&mut sum, sigma, clip, m, rng)?;
    Ok(sum)
}

pub fn sgd_step(theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if theta.len() != grad.len() {
        return Err(invalid_arg!(
            "parameter length {} does not match gradient length {}",
            theta.len(),
            grad.len()
        ));
    }
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= lr * g;
    }
    Ok(())
}
