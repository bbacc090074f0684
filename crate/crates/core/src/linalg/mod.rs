//! Dense complex linear algebra for the small Hilbert spaces this crate works
//! with (dimension 3 to 16).
//!
//! Matrices are stored row-major in a flat `Vec<Complex64>`. Nothing here is
//! tuned for large dimensions; the eigen solvers are Jacobi (Hermitian) and
//! shifted QR on a Hessenberg form (general).

mod eigen;
mod matrix;

pub use eigen::{
    eig_general, eig_hermitian, eigh_in_place, expm_unitary, psd_sqrt, HermitianSpectrum, Spectrum,
};
pub use matrix::{kron, ComplexMatrix, StateVector};

pub use num_complex::Complex64 as C64;

/// Numerical thresholds shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Frobenius distance from `H†` accepted as Hermitian.
    pub hermitian: f64,
    /// Frobenius distance of `U†U` from the identity accepted as unitary.
    pub unitary: f64,
    /// Allowed deviation of a state norm from 1.
    pub norm: f64,
    /// Most negative eigenvalue tolerated (and clamped) by `psd_sqrt`.
    pub psd_negative: f64,
    /// Most negative eigenvalue of `ρρ̃` tolerated before the concurrence square root.
    pub concurrence_negative: f64,
    /// Jacobi sweep cap for the Hermitian eigen solver.
    pub jacobi_max_sweeps: usize,
    /// QR iteration cap for the general eigen solver.
    pub qr_max_iterations: usize,
}

pub const TOL: Tolerances = Tolerances {
    hermitian: 1e-10,
    unitary: 1e-10,
    norm: 1e-9,
    psd_negative: 1e-9,
    concurrence_negative: 1e-8,
    jacobi_max_sweeps: 64,
    qr_max_iterations: 10_000,
};

/// Eigenvalues at or below this multiple of `n·ε·λ_max` are indistinguishable
/// from rounding noise and are treated as exact zeros before square roots.
pub(crate) const NOISE_FLOOR_FACTOR: f64 = 16.0;

pub(crate) fn noise_floor(n: usize, scale: f64) -> f64 {
    NOISE_FLOOR_FACTOR * n as f64 * f64::EPSILON * scale
}

/// The Pauli matrices in the `|e⟩ = (1,0)ᵀ, |g⟩ = (0,1)ᵀ` convention.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> ComplexMatrix {
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        ComplexMatrix::from_vec(2, 2, vec![z, -i, i, z])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }
}
