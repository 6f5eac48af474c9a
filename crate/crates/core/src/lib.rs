//! Numerical laboratory for quasi-one-dimensional random Dirac operators
//! with Pauli-split potentials.
//!
//! The crate estimates Lyapunov spectra from transfer-matrix cocycles,
//! classifies the generated matrix Lie algebras by bracket closure, computes
//! finite-volume spectra and the integrated density of states by shooting,
//! checks the Thouless identity, and measures Green-kernel decay and the
//! associated regularity probabilities. The Schroedinger analogue on a strip
//! is carried along for the boundary-value machinery.

pub mod error;
pub mod expm;
pub mod green;
pub mod liealgebra;
pub mod linalg;
pub mod lyapunov;
pub mod matgroup;
pub mod model;
pub mod rng;
pub mod spectrum;

pub use error::{CoreError, Result};
pub use green::{
    boundary_solutions, dirac_green, dirac_green_log_norm, green_decay_fit,
    regularity_probability, schrodinger_green, BoundarySolution, DecayFit, Side,
};
pub use liealgebra::{
    classify, critical_energy_scan, disorder_threshold, generate_algebra, vertex_generators,
    AlgebraClass, CriticalScan, LieBasis, ThresholdReport,
};
pub use lyapunov::{
    contractivity_probe, degeneracy_residual, directional_sum_check, energy_scan, ldp_probability,
    lyapunov_spectrum, projected_singular_values, symmetry_residual, CocycleAccumulator,
    EnergyScan, FrameFlavor, LagrangianFrame, LyapunovEstimate,
};
pub use matgroup::{
    bracket_identity_check, is_spo, is_symplectic, is_symplectic_complex, kru_decompose,
    lie_bracket, s_transpose, spo_basis, GroupTag, KruDecomposition, StructuralSet,
};
pub use model::{
    case_coefficients, sample_word, schrodinger_cell_transfer, transfer_interval, DisorderLaw,
    DisorderWord, ModelSpec, OperatorKind, TransferMatrix,
};
pub use spectrum::{
    boundary_determinant, ids_estimate, restricted_eigenvalues, thouless_residual,
    wegner_probability, BoxSpec, IdsCurve, ThoulessReport,
};
