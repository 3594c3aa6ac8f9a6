//! Molecular model and the Doktorov construction: from normal-mode data to
//! the finite-temperature Bogoliubov transform and its optical circuit.

use ndarray::prelude::*;
use ndarray_linalg::{Solve, SVD};
use num_complex::Complex64 as C64;

use crate::bogoliubov::{max_abs_real, unitarity_residual, BogoliubovTransform, Tolerances};
use crate::decompose::{decompose_with, GaussianDecomposition};
use crate::error::{Error, Result};
use crate::thermal::{extend_transform, ThermalExtension};

/// Orthogonality tolerance for the Duschinsky matrix. Published rotation
/// matrices are typically rounded to four decimals, which already leaves
/// residuals near 2e-5; the pipeline itself only needs J invertible, so
/// the check guards against corrupt input rather than rounding.
pub const DUSCHINSKY_ORTHO_TOL: f64 = 1e-4;
/// Condition-number ceiling for inverting Jᵗ; past this the inverse carries
/// no significant digits in double precision.
pub const J_CONDITION_LIMIT: f64 = 1e12;

/// Harmonic data for a vibronic transition between two electronic states:
/// initial/final normal-mode frequencies (cm⁻¹), the Duschinsky rotation
/// between the mode sets, and the dimensionless displacement.
#[derive(Debug, Clone)]
pub struct MolecularSystem {
    omega_initial: Array1<f64>,
    omega_final: Array1<f64>,
    duschinsky: Array2<f64>,
    delta: Array1<f64>,
    label: String,
}

impl MolecularSystem {
    pub fn new(
        omega_initial: Array1<f64>,
        omega_final: Array1<f64>,
        duschinsky: Array2<f64>,
        delta: Array1<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let m = omega_initial.len();
        for (len, what) in [
            (omega_final.len(), "omega_final"),
            (duschinsky.nrows(), "duschinsky rows"),
            (duschinsky.ncols(), "duschinsky cols"),
            (delta.len(), "delta"),
        ] {
            if len != m {
                return Err(Error::InvalidConfig(format!(
                    "{what} has length {len}, expected {m}"
                )));
            }
        }
        if m == 0 {
            return Err(Error::InvalidConfig("molecule needs at least one mode".into()));
        }
        for &w in omega_initial.iter().chain(omega_final.iter()) {
            if !(w > 0.0) {
                return Err(Error::InvalidFrequency(w));
            }
        }
        let gram = duschinsky.t().dot(&duschinsky) - Array2::<f64>::eye(m);
        let resid = max_abs_real(&gram);
        if !(resid <= DUSCHINSKY_ORTHO_TOL) {
            return Err(Error::NonOrthogonal(resid));
        }
        Ok(Self {
            omega_initial,
            omega_final,
            duschinsky,
            delta,
            label: label.into(),
        })
    }

    pub fn modes(&self) -> usize {
        self.omega_initial.len()
    }

    pub fn omega_initial(&self) -> &Array1<f64> {
        &self.omega_initial
    }

    pub fn omega_final(&self) -> &Array1<f64> {
        &self.omega_final
    }

    pub fn duschinsky(&self) -> &Array2<f64> {
        &self.duschinsky
    }

    pub fn delta(&self) -> &Array1<f64> {
        &self.delta
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Frequency-scaled mode mixing J = Ω′ U Ω⁻¹ with Ω = diag(√ω).
    pub fn j_matrix(&self) -> Array2<f64> {
        let m = self.modes();
        let mut j = self.duschinsky.clone();
        for i in 0..m {
            let row_scale = self.omega_final[i].sqrt();
            for k in 0..m {
                j[(i, k)] *= row_scale / self.omega_initial[k].sqrt();
            }
        }
        j
    }

    /// The mode-space transform of the vibronic scattering at zero
    /// temperature: `X = ½(J − (Jᵗ)⁻¹), Y = ½(J + (Jᵗ)⁻¹), z = δ/√2`.
    pub fn doktorov_transform(&self) -> Result<BogoliubovTransform> {
        let j = self.j_matrix();
        let cond = condition_number(&j)?;
        if !(cond < J_CONDITION_LIMIT) {
            return Err(Error::SingularJ(cond));
        }
        let jt_inv = invert(&j.t().to_owned())?;
        let m = self.modes();
        let mut x = Array2::<C64>::zeros((m, m));
        let mut y = Array2::<C64>::zeros((m, m));
        for i in 0..m {
            for k in 0..m {
                x[(i, k)] = C64::new(0.5 * (j[(i, k)] - jt_inv[(i, k)]), 0.0);
                y[(i, k)] = C64::new(0.5 * (j[(i, k)] + jt_inv[(i, k)]), 0.0);
            }
        }
        let z = self.delta.mapv(|d| C64::new(d / std::f64::consts::SQRT_2, 0.0));
        BogoliubovTransform::from_parts(x, y, z)
    }

    /// Full `2M`-mode transform at `temperature` K: the Doktorov transform
    /// extended over the purified thermal input on the initial-state modes.
    pub fn vibronic_transform(&self, temperature: f64) -> Result<BogoliubovTransform> {
        let dok = self.doktorov_transform()?;
        let ext = ThermalExtension::uniform(&self.omega_initial, temperature)?;
        extend_transform(&dok, &ext)
    }

    /// Decompose the vibronic transform into an optical circuit.
    pub fn compile(&self, temperature: f64) -> Result<CircuitSpec> {
        self.compile_with(temperature, &Tolerances::default())
    }

    pub fn compile_with(&self, temperature: f64, tol: &Tolerances) -> Result<CircuitSpec> {
        let t = self.vibronic_transform(temperature)?;
        let dec = decompose_with(&t, tol)?;
        Ok(CircuitSpec::from_decomposition(
            self.modes(),
            temperature,
            self.label.clone(),
            &dec,
        ))
    }
}

/// SO₂⁻ → SO₂ photodetachment benchmark system (two modes).
pub fn sulfur_dioxide_anion() -> MolecularSystem {
    MolecularSystem::new(
        array![989.5, 451.4],
        array![1178.4, 518.9],
        array![[0.9979, 0.0646], [-0.0646, 0.9979]],
        array![-1.8830, 0.4551],
        "SO2- -> SO2",
    )
    .expect("benchmark parameters are valid")
}

fn condition_number(j: &Array2<f64>) -> Result<f64> {
    let (_, sv, _) = j
        .svd(false, false)
        .map_err(|e| Error::NumericalFailure(format!("SVD of J failed: {e}")))?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

fn invert(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let mut e = Array1::<f64>::zeros(n);
        e[k] = 1.0;
        let col = a
            .solve(&e)
            .map_err(|e| Error::NumericalFailure(format!("inverting J failed: {e}")))?;
        inv.column_mut(k).assign(&col);
    }
    Ok(inv)
}

/// Squeezing parameter expressed in decibels, `10·log₁₀(e^{−2s})`.
pub fn squeezing_db(s: f64) -> f64 {
    10.0 * (-2.0 * s * std::f64::consts::LOG10_E)
}

/// Optical realization of a vibronic transform: single-mode squeezed
/// coherent inputs `S(s_k)|γ''_k⟩` into the interferometer `C_L`.
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    system_modes: usize,
    temperature: f64,
    label: String,
    interferometer: Array2<C64>,
    squeezing: Array1<f64>,
    input_amplitudes: Array1<C64>,
    decomposition: GaussianDecomposition,
}

impl CircuitSpec {
    fn from_decomposition(
        system_modes: usize,
        temperature: f64,
        label: String,
        dec: &GaussianDecomposition,
    ) -> Self {
        Self {
            system_modes,
            temperature,
            label,
            interferometer: dec.c_l().clone(),
            squeezing: dec.s().clone(),
            input_amplitudes: dec.gamma_dprime().clone(),
            decomposition: dec.clone(),
        }
    }

    /// Rebuild a circuit from stored factors (used when re-ingesting an
    /// emitted circuit file). No decomposition is re-run.
    pub fn from_parts(
        system_modes: usize,
        temperature: f64,
        label: String,
        interferometer: Array2<C64>,
        squeezing: Array1<f64>,
        input_amplitudes: Array1<C64>,
        c_r: Array2<C64>,
        gamma: Array1<C64>,
        gamma_prime: Array1<C64>,
    ) -> Result<Self> {
        let modes = 2 * system_modes;
        for ok in [
            interferometer.nrows() == modes,
            interferometer.ncols() == modes,
            squeezing.len() == modes,
            input_amplitudes.len() == modes,
            c_r.nrows() == modes,
            c_r.ncols() == modes,
            gamma.len() == modes,
            gamma_prime.len() == modes,
        ] {
            if !ok {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    got: 0,
                });
            }
        }
        let dec = GaussianDecomposition::from_parts(
            interferometer.clone(),
            squeezing.clone(),
            c_r,
            gamma,
            gamma_prime,
            input_amplitudes.clone(),
        );
        Ok(Self {
            system_modes,
            temperature,
            label,
            interferometer,
            squeezing,
            input_amplitudes,
            decomposition: dec,
        })
    }

    /// Total optical modes (2M: system then ancilla).
    pub fn modes(&self) -> usize {
        2 * self.system_modes
    }

    pub fn system_modes(&self) -> usize {
        self.system_modes
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn interferometer(&self) -> &Array2<C64> {
        &self.interferometer
    }

    pub fn squeezing(&self) -> &Array1<f64> {
        &self.squeezing
    }

    /// Squeezing per mode in dB.
    pub fn squeezing_db(&self) -> Array1<f64> {
        self.squeezing.mapv(squeezing_db)
    }

    /// Coherent amplitudes γ'' of the squeezed inputs.
    pub fn input_amplitudes(&self) -> &Array1<C64> {
        &self.input_amplitudes
    }

    pub fn decomposition(&self) -> &GaussianDecomposition {
        &self.decomposition
    }

    /// Unitarity residual of the stored interferometer.
    pub fn interferometer_residual(&self) -> f64 {
        unitarity_residual(&self.interferometer)
    }
}
