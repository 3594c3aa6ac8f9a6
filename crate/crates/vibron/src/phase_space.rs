//! Gaussian-state verification oracle: covariance matrix and mean vector from
//! Bogoliubov parameters, Husimi Q evaluation, partial trace, and photon
//! moments.
//!
//! Convention: `q = a + a†`, `p = −i(a − a†)`, vacuum covariance `V = I`.
//! Vectors are ordered `(q₁…q_M, p₁…p_M)`.

use ndarray::prelude::*;
use ndarray_linalg::{Determinant, Eigh, Solve, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::bogoliubov::BogoliubovTransform;
use crate::error::{Error, Result};

/// Mean vector and covariance matrix of a Gaussian state.
#[derive(Debug, Clone)]
pub struct GaussianState {
    mean: Array1<f64>,
    cov: Array2<f64>,
}

impl GaussianState {
    pub fn new(mean: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        let n = mean.len();
        if n % 2 != 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cov.nrows(),
            });
        }
        let asym = crate::bogoliubov::max_abs_real(&(&cov - &cov.t()));
        if asym > 1e-10 {
            return Err(Error::NumericalFailure(format!(
                "covariance not symmetric (residual {asym:.3e})"
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            mean: Array1::zeros(2 * modes),
            cov: Array2::eye(2 * modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    /// Mean in `(q…, p…)` ordering.
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Array2<f64> {
        &self.cov
    }

    /// Symplectic eigenvalues: the `modes` distinct singular values of
    /// `V^{1/2} Ω V^{1/2}` (each doubled), all ≥ 1 for a physical state and
    /// all = 1 for a pure one.
    pub fn symplectic_eigenvalues(&self) -> Result<Array1<f64>> {
        let n = self.mean.len();
        let m = self.modes();
        let (w, o) = self
            .cov
            .eigh(UPLO::Lower)
            .map_err(|e| Error::NumericalFailure(format!("covariance eigh failed: {e}")))?;
        if let Some(&min) = w
            .iter()
            .min_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"))
        {
            if min < -1e-9 {
                return Err(Error::Unphysical(min));
            }
        }
        let sqrt_w = w.mapv(|v| v.max(0.0).sqrt());
        let root = o.dot(&Array2::from_diag(&sqrt_w)).dot(&o.t());
        let omega = symplectic_form(m);
        let k = root.dot(&omega).dot(&root);
        let (_, sv, _) = k
            .svd(false, false)
            .map_err(|e| Error::NumericalFailure(format!("symplectic SVD failed: {e}")))?;
        // singular values come in equal pairs; keep every other one
        let mut nus = Vec::with_capacity(m);
        let mut i = 0;
        while i < n {
            nus.push(sv[i]);
            i += 2;
        }
        Ok(Array1::from_vec(nus))
    }

    /// Physicality check `V + iΩ ⪰ 0`, via symplectic eigenvalues ≥ 1 − tol.
    pub fn is_physical(&self, tol: f64) -> Result<bool> {
        let nus = self.symplectic_eigenvalues()?;
        Ok(nus.iter().all(|&v| v >= 1.0 - tol))
    }
}

/// The standard symplectic form in `(q…, p…)` ordering, `[q_j, p_k] = 2iδ`:
/// Ω = [[0, I], [−I, 0]].
fn symplectic_form(modes: usize) -> Array2<f64> {
    let n = 2 * modes;
    let mut o = Array2::zeros((n, n));
    for k in 0..modes {
        o[(k, modes + k)] = 1.0;
        o[(modes + k, k)] = -1.0;
    }
    o
}

/// Covariance and mean of the state `U (ρ_th ⊗ …) U†` for the transform `U`
/// with parameters `(X, Y, z)` over per-mode thermal occupations.
///
/// `V = ½ L† W Ξ Wᵗ L*` with `W = [[Y*, X*], [X, Y]]` and
/// `Ξ = [[0, diag ν], [diag ν, 0]]`, `ν = 2n̄ + 1`; the mean follows from
/// `⟨a⟩ = z*`.
pub fn state_from_transform(
    t: &BogoliubovTransform,
    occupations: &Array1<f64>,
) -> Result<GaussianState> {
    let m = t.dim();
    if occupations.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: occupations.len(),
        });
    }
    t.validate(crate::bogoliubov::CONSTRAINT_TOL)?;
    let n = 2 * m;
    let mut w = Array2::<C64>::zeros((n, n));
    for i in 0..m {
        for j in 0..m {
            w[(i, j)] = t.y()[(i, j)].conj();
            w[(i, m + j)] = t.x()[(i, j)].conj();
            w[(m + i, j)] = t.x()[(i, j)];
            w[(m + i, m + j)] = t.y()[(i, j)];
        }
    }
    let mut xi = Array2::<C64>::zeros((n, n));
    for k in 0..m {
        let nu = C64::new(2.0 * occupations[k] + 1.0, 0.0);
        xi[(k, m + k)] = nu;
        xi[(m + k, k)] = nu;
    }
    let core = w.dot(&xi).dot(&w.t());
    // V = ½ L† (core) L* in the (q,p) basis; entries come out real
    let mut v = Array2::<f64>::zeros((n, n));
    let i_ = C64::i();
    for a in 0..n {
        for b in 0..n {
            // L† rows: (q_k) = row k of [I, I]; (p_k) = row k of [−iI, iI]
            let (la1, la2) = if a < m {
                (C64::new(1.0, 0.0), C64::new(1.0, 0.0))
            } else {
                (-i_, i_)
            };
            let (lb1, lb2) = if b < m {
                (C64::new(1.0, 0.0), C64::new(1.0, 0.0))
            } else {
                (-i_, i_)
            };
            let (ia, ib) = (a % m, b % m);
            // right factor L* carries the rows of L† untransposed:
            // V[a,b] = ½ Σ L†[a,c]·core[c,d]·L†[b,d]
            let val = la1 * lb1 * core[(ia, ib)]
                + la1 * lb2 * core[(ia, m + ib)]
                + la2 * lb1 * core[(m + ia, ib)]
                + la2 * lb2 * core[(m + ia, m + ib)];
            v[(a, b)] = 0.5 * val.re;
        }
    }
    let mut mean = Array1::<f64>::zeros(n);
    for k in 0..m {
        let a_mean = t.z()[k].conj(); // ⟨a_k⟩ on the output state
        mean[k] = 2.0 * a_mean.re;
        mean[m + k] = 2.0 * a_mean.im;
    }
    GaussianState::new(mean, v)
}

/// Husimi Q function `⟨α|ρ|α⟩ / π^M` evaluated at a coherent point.
pub fn husimi_q(state: &GaussianState, alpha: &Array1<C64>) -> Result<f64> {
    let m = state.modes();
    if alpha.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: alpha.len(),
        });
    }
    let n = 2 * m;
    let vp = &state.cov + &Array2::<f64>::eye(n);
    let det = vp
        .det()
        .map_err(|e| Error::NumericalFailure(format!("det(V+I) failed: {e}")))?;
    if !(det > 1e-300) {
        return Err(Error::SingularCovariance);
    }
    let mut d = Array1::<f64>::zeros(n);
    for k in 0..m {
        d[k] = 2.0 * alpha[k].re - state.mean[k];
        d[m + k] = 2.0 * alpha[k].im - state.mean[m + k];
    }
    let sol = vp.solve(&d).map_err(|_| Error::SingularCovariance)?;
    let quad = d.dot(&sol);
    let pi = std::f64::consts::PI;
    Ok(2f64.powi(m as i32) / (pi.powi(m as i32) * det.sqrt()) * (-0.5 * quad).exp())
}

/// Probability of measuring vacuum on every mode, `π^M · Q(0)`.
pub fn vacuum_probability(state: &GaussianState) -> Result<f64> {
    let q0 = husimi_q(state, &Array1::zeros(state.modes()))?;
    Ok(q0 * std::f64::consts::PI.powi(state.modes() as i32))
}

/// Partial trace: keep the listed modes (indices into 0..modes), restricting
/// mean and covariance to the kept `(q, p)` rows and columns.
pub fn reduce(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    let m = state.modes();
    if keep.is_empty() {
        return Err(Error::InvalidConfig("cannot reduce to zero modes".into()));
    }
    if keep.iter().any(|&k| k >= m) {
        return Err(Error::InvalidConfig(format!(
            "mode index out of range (modes = {m})"
        )));
    }
    let sel: Vec<usize> = keep
        .iter()
        .map(|&k| k)
        .chain(keep.iter().map(|&k| m + k))
        .collect();
    let mean = Array1::from_iter(sel.iter().map(|&i| state.mean[i]));
    let cov = Array2::from_shape_fn((sel.len(), sel.len()), |(i, j)| {
        state.cov[(sel[i], sel[j])]
    });
    GaussianState::new(mean, cov)
}

/// Per-mode photon means and the photon-number covariance matrix, from the
/// quadrature moments via Gaussian (Wick) factorization.
pub fn photon_moments(state: &GaussianState) -> (Array1<f64>, Array2<f64>) {
    let m = state.modes();
    let v = &state.cov;
    // complex fluctuation moments A_jk = ⟨δa_j† δa_k⟩, B_jk = ⟨δa_j δa_k⟩
    let mut a = Array2::<C64>::zeros((m, m));
    let mut b = Array2::<C64>::zeros((m, m));
    for j in 0..m {
        for k in 0..m {
            let vqq = v[(j, k)];
            let vpp = v[(m + j, m + k)];
            let vqp = v[(j, m + k)];
            let vpq = v[(m + j, k)];
            let delta = if j == k { 2.0 } else { 0.0 };
            a[(j, k)] = C64::new(vqq + vpp - delta, vqp - vpq) * 0.25;
            b[(j, k)] = C64::new(vqq - vpp, vqp + vpq) * 0.25;
        }
    }
    let mu = Array1::from_shape_fn(m, |k| {
        C64::new(state.mean[k], state.mean[m + k]) * 0.5
    });
    let mean = Array1::from_shape_fn(m, |k| a[(k, k)].re + mu[k].norm_sqr());
    let cov = Array2::from_shape_fn((m, m), |(j, k)| {
        let mut c = a[(j, k)].norm_sqr() + b[(j, k)].norm_sqr()
            + 2.0 * (mu[j] * mu[k].conj() * a[(j, k)]).re
            + 2.0 * (mu[j].conj() * mu[k].conj() * b[(j, k)]).re;
        if j == k {
            c += a[(j, j)].re + mu[j].norm_sqr();
        }
        c
    });
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::BogoliubovTransform;
    use crate::test_support::{random_cvec, random_transform};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn identity_transform_gives_vacuum() {
        let t = BogoliubovTransform::identity(2);
        let st = state_from_transform(&t, &Array1::zeros(2)).unwrap();
        assert!(crate::bogoliubov::max_abs_real(&(st.cov() - &Array2::<f64>::eye(4))) < 1e-14);
        assert!(st.mean().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_squeezing_covariance() {
        let s = 0.7;
        let t = BogoliubovTransform::from_squeezing(&array![s]);
        let st = state_from_transform(&t, &array![0.0]).unwrap();
        assert_abs_diff_eq!(st.cov()[(0, 0)], (2.0 * s).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(st.cov()[(1, 1)], (-2.0 * s).exp(), epsilon = 1e-12);
        assert!(st.cov()[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn thermal_covariance_scales_with_nu() {
        let t = BogoliubovTransform::identity(1);
        let st = state_from_transform(&t, &array![1.5]).unwrap();
        assert_abs_diff_eq!(st.cov()[(0, 0)], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.cov()[(1, 1)], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_states_have_unit_symplectic_spectrum() {
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        for _ in 0..10 {
            let t = random_transform(&mut rng, 3, 4);
            let st = state_from_transform(&t, &Array1::zeros(3)).unwrap();
            let nus = st.symplectic_eigenvalues().unwrap();
            for &nu in nus.iter() {
                assert_abs_diff_eq!(nu, 1.0, epsilon = 1e-8);
            }
            assert!(st.is_physical(1e-8).unwrap());
        }
    }

    #[test]
    fn thermal_symplectic_eigenvalue_is_nu() {
        let t = BogoliubovTransform::identity(1);
        let st = state_from_transform(&t, &array![0.75]).unwrap();
        let nus = st.symplectic_eigenvalues().unwrap();
        assert_abs_diff_eq!(nus[0], 2.5, epsilon = 1e-10);
    }

    #[test]
    fn husimi_vacuum_at_origin() {
        let st = GaussianState::vacuum(3);
        let q = husimi_q(&st, &Array1::zeros(3)).unwrap();
        assert_abs_diff_eq!(q, 1.0 / std::f64::consts::PI.powi(3), epsilon = 1e-14);
    }

    #[test]
    fn husimi_vacuum_matches_coherent_overlap() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let st = GaussianState::vacuum(2);
        let alpha = random_cvec(&mut rng, 2);
        let q = husimi_q(&st, &alpha).unwrap();
        let expect = (-alpha.iter().map(|v| v.norm_sqr()).sum::<f64>()).exp()
            / std::f64::consts::PI.powi(2);
        assert_abs_diff_eq!(q, expect, epsilon = 1e-12 * expect.max(1e-30));
    }

    #[test]
    fn husimi_thermal_at_origin() {
        // 1/(π(n̄+1)) for a single thermal mode
        let nbar = 0.5826;
        let t = BogoliubovTransform::identity(1);
        let st = state_from_transform(&t, &array![nbar]).unwrap();
        let q = husimi_q(&st, &Array1::zeros(1)).unwrap();
        assert_abs_diff_eq!(
            q,
            1.0 / (std::f64::consts::PI * (nbar + 1.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn husimi_normalizes_under_quadrature() {
        // midpoint quadrature over a wide box, one squeezed displaced mode
        let t = BogoliubovTransform::from_squeezing(&array![0.5])
            .compose(&BogoliubovTransform::from_displacement(&array![C64::new(
                0.4, -0.3
            )]))
            .unwrap();
        let st = state_from_transform(&t, &array![0.2]).unwrap();
        let l = 7.0;
        let n = 400;
        let h = 2.0 * l / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let re = -l + (i as f64 + 0.5) * h;
                let im = -l + (j as f64 + 0.5) * h;
                total += husimi_q(&st, &array![C64::new(re, im)]).unwrap();
            }
        }
        total *= h * h;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn reduce_keeping_all_modes_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let t = random_transform(&mut rng, 3, 3);
        let st = state_from_transform(&t, &Array1::zeros(3)).unwrap();
        let red = reduce(&st, &[0, 1, 2]).unwrap();
        assert!(crate::bogoliubov::max_abs_real(&(red.cov() - st.cov())) < 1e-14);
    }

    #[test]
    fn two_mode_squeezed_vacuum_reduces_to_thermal() {
        // purification: keep one arm of V(β), occupations read sinh²(θ/2)
        let theta: f64 = 1.3;
        let nbar = (theta / 2.0).sinh().powi(2);
        let ext =
            crate::thermal::ThermalExtension::uniform(&array![451.4], temp_for_nbar(nbar, 451.4))
                .unwrap();
        let tms =
            crate::thermal::extend_transform(&BogoliubovTransform::identity(1), &ext).unwrap();
        let st = state_from_transform(&tms, &Array1::zeros(2)).unwrap();
        let red = reduce(&st, &[0]).unwrap();
        let (mean_n, _) = photon_moments(&red);
        assert_abs_diff_eq!(mean_n[0], ext.n_bar()[0], epsilon = 1e-10);
    }

    fn temp_for_nbar(nbar: f64, omega: f64) -> f64 {
        // invert n̄ = 1/(e^{C2 ω/T} − 1)
        crate::thermal::SECOND_RADIATION_CM_K * omega / (1.0 / nbar + 1.0).ln()
    }

    #[test]
    fn photon_moments_vacuum() {
        let st = GaussianState::vacuum(2);
        let (mean, cov) = photon_moments(&st);
        assert!(mean.iter().all(|&v| v.abs() < 1e-14));
        assert!(crate::bogoliubov::max_abs_real(&cov) < 1e-14);
    }

    #[test]
    fn photon_moments_coherent() {
        let g = C64::new(0.8, -0.6);
        let t = BogoliubovTransform::from_displacement(&array![g]);
        let st = state_from_transform(&t, &array![0.0]).unwrap();
        let (mean, cov) = photon_moments(&st);
        assert_abs_diff_eq!(mean[0], g.norm_sqr(), epsilon = 1e-12);
        // Poissonian: Var(n) = |γ|²
        assert_abs_diff_eq!(cov[(0, 0)], g.norm_sqr(), epsilon = 1e-12);
    }

    #[test]
    fn photon_moments_squeezed_vacuum() {
        let s: f64 = 0.9;
        let t = BogoliubovTransform::from_squeezing(&array![s]);
        let st = state_from_transform(&t, &array![0.0]).unwrap();
        let (mean, cov) = photon_moments(&st);
        assert_abs_diff_eq!(mean[0], s.sinh().powi(2), epsilon = 1e-12);
        // Var(n) = sinh²(2s)/2 for squeezed vacuum
        assert_abs_diff_eq!(cov[(0, 0)], (2.0 * s).sinh().powi(2) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_vector_encodes_displacement() {
        let g = C64::new(1.0, 2.0);
        let t = BogoliubovTransform::from_displacement(&array![g]);
        let st = state_from_transform(&t, &array![0.0]).unwrap();
        // ⟨a⟩ = γ for D(γ)|0⟩
        assert_abs_diff_eq!(st.mean()[0], 2.0 * g.re, epsilon = 1e-14);
        assert_abs_diff_eq!(st.mean()[1], 2.0 * g.im, epsilon = 1e-14);
    }

    #[test]
    fn husimi_singular_covariance_rejected() {
        // V = −I is far from physical; V + I is singular
        let st = GaussianState {
            mean: Array1::zeros(2),
            cov: -Array2::eye(2),
        };
        assert!(matches!(
            husimi_q(&st, &Array1::zeros(1)),
            Err(Error::SingularCovariance)
        ));
    }
}
