//! Random generators shared by unit tests, property tests, and the
//! acceptance suite. Not part of the public API.

use ndarray::prelude::*;
use ndarray_linalg::QR;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::bogoliubov::BogoliubovTransform;

/// Standard normal via Box-Muller.
pub fn randn<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_cvec<R: Rng>(rng: &mut R, n: usize) -> Array1<C64> {
    Array1::from_iter((0..n).map(|_| C64::new(randn(rng), randn(rng))))
}

pub fn random_rvec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| scale * randn(rng)))
}

/// Haar-ish random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Array2<C64> {
    let g = Array2::from_shape_fn((n, n), |_| C64::new(randn(rng), randn(rng)));
    let (q, r) = g.qr().expect("qr of random matrix");
    let mut q = q;
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q.column_mut(k).mapv_inplace(|v| v * phase);
    }
    q
}

/// Random real orthogonal matrix (QR of a real Ginibre matrix).
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Array2<f64> {
    let g = Array2::from_shape_fn((n, n), |_| randn(rng));
    let (q, r) = g.qr().expect("qr of random matrix");
    let mut q = q;
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).mapv_inplace(|v| -v);
        }
    }
    q
}

/// Random valid transform built by composing displacement, squeezing, and
/// rotation primitives; constraint residuals stay at machine precision.
pub fn random_transform<R: Rng>(rng: &mut R, dim: usize, depth: usize) -> BogoliubovTransform {
    let mut t = BogoliubovTransform::identity(dim);
    for _ in 0..depth {
        let p = match rng.random_range(0..3u8) {
            0 => BogoliubovTransform::from_displacement(&random_cvec(rng, dim)),
            1 => BogoliubovTransform::from_squeezing(&random_rvec(rng, dim, 0.7)),
            _ => BogoliubovTransform::from_rotation(&random_unitary(rng, dim), 1e-8)
                .expect("random unitary is unitary"),
        };
        t = p.compose(&t).expect("same dims");
    }
    t
}
