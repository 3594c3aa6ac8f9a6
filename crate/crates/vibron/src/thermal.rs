//! Thermal-state purification: Bose occupations, two-mode squeezing angles,
//! and the embedding of an `M`-mode transform over a thermal input into a
//! `2M`-mode transform over the vacuum.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::bogoliubov::BogoliubovTransform;
use crate::error::{Error, Result};

/// Second radiation constant hc/k_B in cm·K; converts wavenumber and kelvin
/// into the dimensionless exponent βħω = C2·ω̃/T.
pub const SECOND_RADIATION_CM_K: f64 = 1.4387769;

/// Mean Bose occupation 1/(e^{βħω} − 1) for a mode of `omega` cm⁻¹ at
/// `temperature` K. Zero temperature is handled exactly.
pub fn mean_occupation(temperature: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidFrequency(omega));
    }
    if !(temperature >= 0.0) {
        return Err(Error::InvalidTemperature(temperature));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = SECOND_RADIATION_CM_K * omega / temperature;
    Ok(1.0 / x.exp_m1())
}

/// Per-mode purification data for a register of thermal oscillators: each
/// mode pairs with one vacuum ancilla through a two-mode squeezer of angle
/// θ_k with tanh(θ_k/2) = e^{−β_kħω_k/2}.
#[derive(Debug, Clone)]
pub struct ThermalExtension {
    omega: Array1<f64>,
    temperatures: Array1<f64>,
    n_bar: Array1<f64>,
    theta: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
}

impl ThermalExtension {
    /// All modes at one global temperature.
    pub fn uniform(omega: &Array1<f64>, temperature: f64) -> Result<Self> {
        let temps = Array1::from_elem(omega.len(), temperature);
        Self::with_mode_temperatures(omega, &temps)
    }

    /// Independent temperature per mode.
    pub fn with_mode_temperatures(
        omega: &Array1<f64>,
        temperatures: &Array1<f64>,
    ) -> Result<Self> {
        if omega.len() != temperatures.len() {
            return Err(Error::DimensionMismatch {
                expected: omega.len(),
                got: temperatures.len(),
            });
        }
        let mut n_bar = Array1::zeros(omega.len());
        for (k, (&w, &t)) in omega.iter().zip(temperatures.iter()).enumerate() {
            n_bar[k] = mean_occupation(t, w)?;
        }
        let theta = n_bar.mapv(|n| 2.0 * (n / (n + 1.0)).sqrt().atanh());
        let f = n_bar.mapv(|n| (n + 1.0).sqrt());
        let g = n_bar.mapv(f64::sqrt);
        Ok(Self {
            omega: omega.clone(),
            temperatures: temperatures.clone(),
            n_bar,
            theta,
            f,
            g,
        })
    }

    pub fn modes(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &Array1<f64> {
        &self.omega
    }

    pub fn temperatures(&self) -> &Array1<f64> {
        &self.temperatures
    }

    /// Mean occupations n̄_k.
    pub fn n_bar(&self) -> &Array1<f64> {
        &self.n_bar
    }

    /// Two-mode squeezing angles θ_k = 2 artanh(e^{−β_kħω_k/2}).
    pub fn purification_angles(&self) -> &Array1<f64> {
        &self.theta
    }

    /// diag entries √(n̄+1) = cosh(θ/2).
    pub fn f(&self) -> &Array1<f64> {
        &self.f
    }

    /// diag entries √n̄ = sinh(θ/2).
    pub fn g(&self) -> &Array1<f64> {
        &self.g
    }
}

/// Embed an `M`-mode transform acting on a thermal input into the `2M`-mode
/// transform acting on vacuum, with system modes first and one ancilla per
/// system mode after them:
///
/// ```text
/// X' = | X F   Y G |      Y' = | Y F   X G |      z' = | z |
///      |  G     0  |           |  0     F  |           | 0 |
/// ```
pub fn extend_transform(t: &BogoliubovTransform, ext: &ThermalExtension) -> Result<BogoliubovTransform> {
    let m = ext.modes();
    if t.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: t.dim(),
        });
    }
    let n = 2 * m;
    let mut x = Array2::<C64>::zeros((n, n));
    let mut y = Array2::<C64>::zeros((n, n));
    for i in 0..m {
        for j in 0..m {
            let f = C64::new(ext.f[j], 0.0);
            let g = C64::new(ext.g[j], 0.0);
            x[(i, j)] = t.x()[(i, j)] * f;
            x[(i, m + j)] = t.y()[(i, j)] * g;
            y[(i, j)] = t.y()[(i, j)] * f;
            y[(i, m + j)] = t.x()[(i, j)] * g;
        }
        x[(m + i, i)] = C64::new(ext.g[i], 0.0);
        y[(m + i, m + i)] = C64::new(ext.f[i], 0.0);
    }
    let mut z = Array1::<C64>::zeros(n);
    z.slice_mut(s![..m]).assign(t.z());
    BogoliubovTransform::from_parts(x, y, z)
}
