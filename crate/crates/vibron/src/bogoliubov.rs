//! Bogoliubov transforms: the linear action of a Gaussian unitary on the
//! creation-operator vector, `a'† = X a + Y a† + z`.
//!
//! The identity element is `X = 0, Y = I` (a passive rotation has `Y = U`),
//! so the canonical-commutation constraints read `YY† − XX† = I` and
//! `XYᵗ = YXᵗ`.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default tolerance for the two canonical constraints.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Default tolerance for decomposition reconstruction residuals.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Tolerances used when validating transforms and their decompositions.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Max-abs residual allowed on `YY† − XX† − I` and `XYᵗ − YXᵗ`.
    pub constraint: f64,
    /// Max-abs residual allowed when reconstructing `X`, `Y` from factors.
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            constraint: CONSTRAINT_TOL,
            reconstruction: RECONSTRUCTION_TOL,
        }
    }
}

/// A Gaussian unitary's action on the creation operators of `dim` modes.
///
/// Immutable after construction; all operations return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovTransform {
    x: Array2<C64>,
    y: Array2<C64>,
    z: Array1<C64>,
}

impl BogoliubovTransform {
    /// Build from raw matrices without checking the canonical constraints.
    pub fn from_parts(x: Array2<C64>, y: Array2<C64>, z: Array1<C64>) -> Result<Self> {
        let dim = z.len();
        for m in [&x, &y] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(Self { x, y, z })
    }

    /// The identity transform on `dim` modes: `X = 0, Y = I, z = 0`.
    pub fn identity(dim: usize) -> Self {
        Self {
            x: Array2::zeros((dim, dim)),
            y: Array2::eye(dim),
            z: Array1::zeros(dim),
        }
    }

    /// Transform of the displacement operator `D(α)`: `a† → a† + α*`.
    pub fn from_displacement(alpha: &Array1<C64>) -> Self {
        let dim = alpha.len();
        Self {
            x: Array2::zeros((dim, dim)),
            y: Array2::eye(dim),
            z: alpha.mapv(|a| a.conj()),
        }
    }

    /// Transform of the diagonal squeezing operator `S(σ)`:
    /// `a† → sinh(σ) a + cosh(σ) a†`.
    pub fn from_squeezing(sigma: &Array1<f64>) -> Self {
        let dim = sigma.len();
        let mut x = Array2::zeros((dim, dim));
        let mut y = Array2::zeros((dim, dim));
        for (k, &s) in sigma.iter().enumerate() {
            x[(k, k)] = C64::new(s.sinh(), 0.0);
            y[(k, k)] = C64::new(s.cosh(), 0.0);
        }
        Self {
            x,
            y,
            z: Array1::zeros(dim),
        }
    }

    /// Transform of the rotation operator `R(U)`: `a† → U a†`.
    ///
    /// Fails with [`Error::NonUnitary`] if `U` is not unitary within `tol`.
    pub fn from_rotation(u: &Array2<C64>, tol: f64) -> Result<Self> {
        let residual = unitarity_residual(u);
        if residual > tol {
            return Err(Error::NonUnitary { residual, tol });
        }
        let dim = u.nrows();
        Ok(Self {
            x: Array2::zeros((dim, dim)),
            y: u.clone(),
            z: Array1::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn x(&self) -> &Array2<C64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<C64> {
        &self.y
    }

    pub fn z(&self) -> &Array1<C64> {
        &self.z
    }

    /// Compose with another transform: `self` is applied after `inner` at the
    /// operator level, so the result describes `U_outer · U_inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.dim() != inner.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: inner.dim(),
            });
        }
        let x1c = inner.x.mapv(|v| v.conj());
        let y1c = inner.y.mapv(|v| v.conj());
        let z1c = inner.z.mapv(|v| v.conj());
        let x = self.x.dot(&y1c) + self.y.dot(&inner.x);
        let y = self.x.dot(&x1c) + self.y.dot(&inner.y);
        let z = self.x.dot(&z1c) + self.y.dot(&inner.z) + &self.z;
        Ok(Self { x, y, z })
    }

    /// Max-abs residuals of the two canonical constraints,
    /// `(‖YY† − XX† − I‖_max, ‖XYᵗ − YXᵗ‖_max)`.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let xd = self.x.mapv(|v| v.conj()).reversed_axes();
        let yd = self.y.mapv(|v| v.conj()).reversed_axes();
        let mut hyp = self.y.dot(&yd) - self.x.dot(&xd);
        for k in 0..self.dim() {
            hyp[(k, k)] -= C64::new(1.0, 0.0);
        }
        let xt = self.x.t();
        let yt = self.y.t();
        let sym = self.x.dot(&yt) - self.y.dot(&xt);
        (max_abs(&hyp), max_abs(&sym))
    }

    /// Check both constraints against `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let (hyperbolic, symmetric) = self.constraint_residuals();
        if hyperbolic > tol || symmetric > tol {
            return Err(Error::ConstraintViolation {
                hyperbolic,
                symmetric,
                tol,
            });
        }
        Ok(())
    }
}

/// Max-abs entry of `U†U − I`.
pub fn unitarity_residual(u: &Array2<C64>) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let ud = u.mapv(|v| v.conj()).reversed_axes();
    let mut g = ud.dot(u);
    for k in 0..u.nrows() {
        g[(k, k)] -= C64::new(1.0, 0.0);
    }
    max_abs(&g)
}

pub(crate) fn max_abs<D: Dimension>(a: &Array<C64, D>) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub(crate) fn max_abs_real<D: Dimension>(a: &Array<f64, D>) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
