//! Rotation–squeezing–rotation factorization of a Bogoliubov transform and
//! relocation of its displacement to the input side.
//!
//! A valid transform factors as `X = C_L sinh(S) C_Rᵗ`, `Y = C_L cosh(S) C_R†`
//! with unitary `C_L`, `C_R` and non-negative squeezing parameters `S`. Both
//! identities share one singular-vector pair, so a single SVD of `Y` is phase-
//! aligned against `X` instead of decomposing the two matrices independently.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, Solve, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::bogoliubov::{max_abs, BogoliubovTransform, Tolerances};
use crate::error::{Error, Result};

/// Relative gap under which singular values are treated as one degenerate
/// cluster and factored jointly.
const CLUSTER_TOL: f64 = 1e-6;
/// Below this squeezing magnitude a mode carries no `X` weight and its column
/// phase is free.
const ZERO_SQUEEZE_TOL: f64 = 1e-12;

/// Interferometer–squeezer–interferometer factors of a Gaussian unitary,
/// together with the displacement in its three forms: as measured on the
/// output (`gamma`), moved to the input side (`gamma_prime`), and rotated
/// into the squeezer frame (`gamma_dprime`).
#[derive(Debug, Clone)]
pub struct GaussianDecomposition {
    c_l: Array2<C64>,
    s: Array1<f64>,
    c_r: Array2<C64>,
    gamma: Array1<C64>,
    gamma_prime: Array1<C64>,
    gamma_dprime: Array1<C64>,
}

impl GaussianDecomposition {
    /// Assemble from already-known factors (e.g. a stored circuit file).
    /// No constraints are checked here.
    pub fn from_parts(
        c_l: Array2<C64>,
        s: Array1<f64>,
        c_r: Array2<C64>,
        gamma: Array1<C64>,
        gamma_prime: Array1<C64>,
        gamma_dprime: Array1<C64>,
    ) -> Self {
        Self {
            c_l,
            s,
            c_r,
            gamma,
            gamma_prime,
            gamma_dprime,
        }
    }

    pub fn c_l(&self) -> &Array2<C64> {
        &self.c_l
    }

    /// Squeezing parameters, non-negative and sorted descending.
    pub fn s(&self) -> &Array1<f64> {
        &self.s
    }

    pub fn c_r(&self) -> &Array2<C64> {
        &self.c_r
    }

    pub fn gamma(&self) -> &Array1<C64> {
        &self.gamma
    }

    pub fn gamma_prime(&self) -> &Array1<C64> {
        &self.gamma_prime
    }

    pub fn gamma_dprime(&self) -> &Array1<C64> {
        &self.gamma_dprime
    }

    /// Rebuild `(X, Y)` from the factors.
    pub fn reconstruct(&self) -> (Array2<C64>, Array2<C64>) {
        let sh = Array2::from_diag(&self.s.mapv(|v| C64::new(v.sinh(), 0.0)));
        let ch = Array2::from_diag(&self.s.mapv(|v| C64::new(v.cosh(), 0.0)));
        let x = self.c_l.dot(&sh).dot(&self.c_r.t());
        let y = self
            .c_l
            .dot(&ch)
            .dot(&self.c_r.mapv(|v| v.conj()).reversed_axes());
        (x, y)
    }

    /// Max-abs residuals `(‖X − X̂‖, ‖Y − Ŷ‖)` against a transform.
    pub fn reconstruction_residuals(&self, t: &BogoliubovTransform) -> (f64, f64) {
        let (x, y) = self.reconstruct();
        (max_abs(&(t.x() - &x)), max_abs(&(t.y() - &y)))
    }
}

/// Move the displacement of `a'† = X a + Y a† + γ` from the output to the
/// input side: returns `γ'` with `γ = X γ' + Y γ'*`.
///
/// Splitting real and imaginary parts turns that condition into a real
/// `2n × 2n` linear system, solved directly.
pub fn relocate_displacement(
    x: &Array2<C64>,
    y: &Array2<C64>,
    gamma: &Array1<C64>,
) -> Result<Array1<C64>> {
    let n = gamma.len();
    if x.nrows() != n || x.ncols() != n || y.nrows() != n || y.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.nrows(),
        });
    }
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let mut m = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = x[(i, j)].re + y[(i, j)].re;
            m[(i, n + j)] = -x[(i, j)].im + y[(i, j)].im;
            m[(n + i, j)] = x[(i, j)].im + y[(i, j)].im;
            m[(n + i, n + j)] = x[(i, j)].re - y[(i, j)].re;
        }
    }
    let rhs = Array1::from_iter(gamma.iter().map(|v| v.re).chain(gamma.iter().map(|v| v.im)));
    let sol = m.solve(&rhs).map_err(|_| Error::SingularSystem)?;
    // a solution from a near-singular factorization is rejected by residual
    let resid = (&m.dot(&sol) - &rhs).mapv(f64::abs).sum();
    let scale = rhs.mapv(f64::abs).sum().max(1.0);
    if !resid.is_finite() || resid > 1e-8 * scale {
        return Err(Error::SingularSystem);
    }
    let gp = Array1::from_iter((0..n).map(|i| C64::new(sol[i], sol[n + i])));
    Ok(gp)
}

/// Factor a valid transform into `C_L · diag(S) · C_R` form with the
/// displacement relocated and rotated (`γ' `, `γ'' = C_Rᵗ γ'`).
///
/// Ties all gauge freedom down so the result is deterministic: singular
/// values sort descending, degenerate clusters are resolved by a Takagi
/// factorization of the cluster block of `C_L† X C_R*`, and each column pair
/// is phase- or sign-normalized on the largest entry of the `C_L` column.
pub fn decompose(t: &BogoliubovTransform) -> Result<GaussianDecomposition> {
    decompose_with(t, &Tolerances::default())
}

pub fn decompose_with(t: &BogoliubovTransform, tol: &Tolerances) -> Result<GaussianDecomposition> {
    t.validate(tol.constraint)?;
    let n = t.dim();

    let (u, cosh, vt) = t
        .y()
        .svd(true, true)
        .map_err(|e| Error::NumericalFailure(format!("SVD of Y failed: {e}")))?;
    let u = u.expect("left vectors requested");
    let vt = vt.expect("right vectors requested");
    let mut c_l = u;
    let mut c_r = vt.mapv(|v| v.conj()).reversed_axes();

    // Q = C_L† X C_R*: diagonal with entries sinh(s) e^{iφ} up to degenerate
    // cluster mixing, by the shared-vector structure of the two identities.
    let q = c_l
        .mapv(|v| v.conj())
        .reversed_axes()
        .dot(t.x())
        .dot(&c_r.mapv(|v| v.conj()));

    let scale = cosh.get(0).copied().unwrap_or(1.0).max(1.0);
    let mut s = Array1::<f64>::zeros(n);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (cosh[i] - cosh[j]).abs() < CLUSTER_TOL * scale {
            j += 1;
        }
        if j - i == 1 {
            let qd = q[(i, i)];
            let mag = qd.norm();
            if mag > ZERO_SQUEEZE_TOL {
                let p = (qd / mag).sqrt();
                scale_column(&mut c_l, i, p);
                scale_column(&mut c_r, i, p);
            }
            s[i] = mag.asinh();
        } else {
            resolve_cluster(&q, &mut c_l, &mut c_r, &mut s, i, j)?;
        }
        i = j;
    }

    // Takagi can reorder within a cluster; restore the global descending order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    let s = Array1::from_iter(order.iter().map(|&k| s[k]));
    let c_l = reorder_columns(&c_l, &order);
    let c_r = reorder_columns(&c_r, &order);
    let (mut c_l, mut c_r) = (c_l, c_r);
    fix_column_signs(&mut c_l, &mut c_r, &s);

    let gamma = t.z().clone();
    let gamma_prime = relocate_displacement(t.x(), t.y(), &gamma)?;
    let gamma_dprime = c_r.t().dot(&gamma_prime);

    let dec = GaussianDecomposition {
        c_l,
        s,
        c_r,
        gamma,
        gamma_prime,
        gamma_dprime,
    };
    let (rx, ry) = dec.reconstruction_residuals(t);
    if rx > tol.reconstruction || ry > tol.reconstruction {
        return Err(Error::NumericalFailure(format!(
            "decomposition reconstruction residuals ({rx:.3e}, {ry:.3e}) exceed {:.1e}",
            tol.reconstruction
        )));
    }
    Ok(dec)
}

fn scale_column(m: &mut Array2<C64>, k: usize, p: C64) {
    m.column_mut(k).mapv_inplace(|v| v * p);
}

fn reorder_columns(m: &Array2<C64>, order: &[usize]) -> Array2<C64> {
    let n = m.nrows();
    Array2::from_shape_fn((n, order.len()), |(i, j)| m[(i, order[j])])
}

/// Resolve a degenerate singular-value cluster `[i, j)`. The cluster block of
/// `Q` is complex symmetric with nearly equal row norms; its Takagi factor
/// `Q_c = V diag(q) Vᵗ` gives the shared column rotation and the per-mode
/// squeezing magnitudes.
fn resolve_cluster(
    q: &Array2<C64>,
    c_l: &mut Array2<C64>,
    c_r: &mut Array2<C64>,
    s: &mut Array1<f64>,
    i: usize,
    j: usize,
) -> Result<()> {
    let m = j - i;
    let qc = q.slice(s![i..j, i..j]).to_owned();
    let qnorm = max_abs(&qc);
    if qnorm <= ZERO_SQUEEZE_TOL {
        for k in i..j {
            s[k] = 0.0;
        }
        return Ok(());
    }
    // symmetrize (exact symmetry holds only up to input constraint residuals)
    let qsym = (&qc + &qc.t()) * C64::new(0.5, 0.0);
    let sinh_c = row_norm_mean(&qsym);
    let v = takagi_unitary_symmetric(&qsym.mapv(|x| x / sinh_c))?;
    // rotate the cluster columns of both factors by V
    let vl = c_l.slice(s![.., i..j]).dot(&v);
    c_l.slice_mut(s![.., i..j]).assign(&vl);
    let vr = c_r.slice(s![.., i..j]).dot(&v);
    c_r.slice_mut(s![.., i..j]).assign(&vr);
    // per-mode magnitudes: diag(V† Q_c V*)
    let d = v
        .mapv(|x| x.conj())
        .reversed_axes()
        .dot(&qsym)
        .dot(&v.mapv(|x| x.conj()));
    for k in 0..m {
        s[i + k] = d[(k, k)].norm().asinh();
    }
    Ok(())
}

fn row_norm_mean(q: &Array2<C64>) -> f64 {
    let n = q.nrows();
    let total: f64 = (0..n)
        .map(|i| q.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum();
    (total / n as f64).sqrt()
}

/// Takagi factorization `Ω = V Vᵗ` of a unitary symmetric matrix.
///
/// Writing `Ω = R + iI` with both parts real symmetric, unitarity forces
/// `R I = I R` and `R² + I² = 1`, so the pair diagonalizes simultaneously in
/// a real orthogonal basis `O`; then `Ω = O diag(e^{iφ}) Oᵗ` and
/// `V = O diag(e^{iφ/2})`.
fn takagi_unitary_symmetric(omega: &Array2<C64>) -> Result<Array2<C64>> {
    let n = omega.nrows();
    let r = omega.mapv(|v| v.re);
    let im = omega.mapv(|v| v.im);
    let (w, mut o) = r
        .eigh(UPLO::Lower)
        .map_err(|e| Error::NumericalFailure(format!("Takagi eigh failed: {e}")))?;
    // diagonalize I within degenerate eigenspaces of R
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (w[j] - w[i]).abs() < 1e-8 {
            j += 1;
        }
        if j - i > 1 {
            let block = o.slice(s![.., i..j]).to_owned();
            let ib = block.t().dot(&im).dot(&block);
            let (_, oi) = ib
                .eigh(UPLO::Lower)
                .map_err(|e| Error::NumericalFailure(format!("Takagi eigh failed: {e}")))?;
            let rotated = block.dot(&oi);
            o.slice_mut(s![.., i..j]).assign(&rotated);
        }
        i = j;
    }
    let rd = o.t().dot(&r).dot(&o);
    let id = o.t().dot(&im).dot(&o);
    let mut v = o.mapv(|x| C64::new(x, 0.0));
    for k in 0..n {
        let d = C64::new(rd[(k, k)], id[(k, k)]);
        let half = if d.norm() > 0.0 {
            (d / d.norm()).sqrt()
        } else {
            C64::new(1.0, 0.0)
        };
        v.column_mut(k).mapv_inplace(|x| x * half);
    }
    Ok(v)
}

/// Residual gauge after phase alignment: a joint sign per column pair (a full
/// joint phase where the squeezing vanishes). Normalize on the largest-
/// magnitude entry of each `C_L` column so repeated runs agree.
fn fix_column_signs(c_l: &mut Array2<C64>, c_r: &mut Array2<C64>, s: &Array1<f64>) {
    let n = c_l.nrows();
    for k in 0..c_l.ncols() {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for i in 0..n {
            let m = c_l[(i, k)].norm();
            if m > best_mag + 1e-15 {
                best_mag = m;
                best = i;
            }
        }
        let e = c_l[(best, k)];
        if best_mag <= 0.0 {
            continue;
        }
        let factor = if s[k] <= ZERO_SQUEEZE_TOL {
            (e / e.norm()).conj()
        } else if e.re < -1e-12 * best_mag || (e.re.abs() <= 1e-12 * best_mag && e.im < 0.0) {
            C64::new(-1.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        if factor != C64::new(1.0, 0.0) {
            scale_column(c_l, k, factor);
            scale_column(c_r, k, factor);
        }
    }
}
