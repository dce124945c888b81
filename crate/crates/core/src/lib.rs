//! Collective dipole-dipole physics of 1D subwavelength atom arrays.
//!
//! The crate models `N` two-level atoms on a regular 1D lattice coupled
//! through the free-space radiation field. It provides
//!
//! * an excitation-number-truncated Hilbert space with spin and spin-wave
//!   operators ([`hilbert`]),
//! * the free-space dyadic Green's tensor, the complex single-excitation
//!   dispersion relation and the non-Hermitian effective Hamiltonian
//!   ([`lightfield`]),
//! * free-fermion (Slater) and free-boson ansatz states together with the
//!   solvable nearest-neighbor models they diagonalize ([`ansatz`]),
//! * Monte Carlo wave-function trajectory dynamics for the radiative master
//!   equation, with and without a coherent drive ([`dynamics`]),
//! * emission observables, fidelity scans, perturbation-bound and scaling-law
//!   diagnostics ([`observables`]).
//!
//! Units: all rates and energies are in units of the single-atom free-space
//! decay rate `γ0`, all lengths in units of the lattice spacing `d`. The
//! single dimensionless geometry parameter is `k0·d`.

extern crate blas_src;

pub mod ansatz;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod export;
pub mod hilbert;
pub mod lightfield;
pub mod observables;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
