//! Desk-scale simulator for molecular vibronic spectra as Gaussian boson
//! sampling.
//!
//! A finite-temperature vibronic sampling problem over `M` molecular modes is
//! rewritten as a zero-temperature problem over `2M` optical modes: the
//! thermal input is purified with one vacuum ancilla per mode, the combined
//! Gaussian unitary is decomposed into interferometer–squeezer–interferometer
//! form with the displacement relocated to the input side, and the resulting
//! circuit of single-mode squeezed coherent states is simulated exactly on a
//! photon-number-truncated basis. An independent phase-space representation
//! (covariance matrix, Husimi function) cross-checks the Fock results.
//!
//! Module map:
//! - [`bogoliubov`]: the transform type, its constructors, and composition.
//! - [`decompose`]: SVD factorization and displacement relocation.
//! - [`thermal`]: Bose occupations, purification angles, mode doubling.
//! - [`vibronic`]: molecular data, the Doktorov transform, circuit output.
//! - [`fock`]: truncated Fock simulation, transition tables, spectra, sampling.
//! - [`phase_space`]: covariance/Husimi oracle used for verification.

pub mod bogoliubov;
pub mod decompose;
pub mod error;
pub mod fock;
pub mod phase_space;
pub mod thermal;
pub mod vibronic;

#[doc(hidden)]
pub mod test_support;

pub use bogoliubov::{BogoliubovTransform, Tolerances, CONSTRAINT_TOL, RECONSTRUCTION_TOL};
pub use decompose::{decompose, decompose_with, relocate_displacement, GaussianDecomposition};
pub use error::{Error, Result};
pub use fock::{
    apply_interferometer, build_fcp, sample, squeezed_coherent_state, transition_table, Spectrum,
    TransitionTable, TruncationPolicy,
};
pub use phase_space::{
    husimi_q, photon_moments, reduce, state_from_transform, vacuum_probability, GaussianState,
};
pub use thermal::{extend_transform, mean_occupation, ThermalExtension, SECOND_RADIATION_CM_K};
pub use vibronic::{squeezing_db, sulfur_dioxide_anion, CircuitSpec, MolecularSystem};
