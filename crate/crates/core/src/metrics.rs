//! State fidelities, reduced states and two-qubit concurrence.
//!
//! Two-qubit matrices use the basis order `|ee⟩, |eg⟩, |ge⟩, |gg⟩`, i.e.
//! `kron(qubit₁, qubit₂)` with `|e⟩ = (1,0)ᵀ` and `|g⟩ = (0,1)ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, kron, noise_floor, pauli, psd_sqrt, ComplexMatrix, StateVector, C64, TOL,
};

/// Index of each two-qubit basis label in the `|ee⟩, |eg⟩, |ge⟩, |gg⟩` order.
pub mod two_qubit {
    pub const EE: usize = 0;
    pub const EG: usize = 1;
    pub const GE: usize = 2;
    pub const GG: usize = 3;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all within 1e-9).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let deviation = matrix.hermitian_deviation();
        if deviation > TOL.norm {
            return Err(Error::NonHermitianInput { deviation });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TOL.norm || trace.im.abs() > TOL.norm {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace is {trace}"
            )));
        }
        let spectrum = linalg::eig_hermitian(&symmetrize(&matrix))?;
        let smallest = *spectrum.values.last().expect("non-empty");
        if smallest < -TOL.psd_negative {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: smallest,
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self {
            matrix: ComplexMatrix::outer(psi, psi),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `⟨t|ρ|t⟩`
    pub fn expectation(&self, t: &StateVector) -> f64 {
        t.inner(&self.matrix.apply(t)).re
    }
}

fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// How each basis vector of a composite space splits into a traced-out label
/// and a kept-subsystem index. This covers plain tensor products as well as
/// invariant subspaces that are not products, such as a fixed-excitation
/// sector of atoms plus a cavity field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemSplit {
    kept_dim: usize,
    labels: Vec<(usize, usize)>,
}

impl SubsystemSplit {
    /// `labels[i] = (traced label, kept index)` for composite basis vector `i`.
    pub fn new(kept_dim: usize, labels: Vec<(usize, usize)>) -> Result<Self> {
        if kept_dim == 0 || labels.is_empty() {
            return Err(Error::DimensionMismatch("empty subsystem split".into()));
        }
        if labels.iter().any(|&(_, k)| k >= kept_dim) {
            return Err(Error::DimensionMismatch("kept index out of range".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::DimensionMismatch(
                "duplicate basis labels in split".into(),
            ));
        }
        Ok(Self { kept_dim, labels })
    }

    /// `traced ⊗ kept`, traced factor first: index `i = traced·kept_dim + kept`.
    pub fn tensor(traced_dim: usize, kept_dim: usize) -> Self {
        let labels = (0..traced_dim * kept_dim)
            .map(|i| (i / kept_dim, i % kept_dim))
            .collect();
        Self { kept_dim, labels }
    }

    pub fn composite_dim(&self) -> usize {
        self.labels.len()
    }

    pub fn kept_dim(&self) -> usize {
        self.kept_dim
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    /// Embeds a kept-subsystem ket with a fixed traced label, `|label⟩ ⊗ |φ⟩`.
    /// Fails if some component of `phi` has no basis vector with that label.
    pub fn embed(&self, traced: usize, phi: &StateVector) -> Result<StateVector> {
        let mut amps = vec![C64::new(0.0, 0.0); self.composite_dim()];
        for (k, &a) in phi.amplitudes().iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let i = self
                .labels
                .iter()
                .position(|&l| l == (traced, k))
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!("no basis vector ({traced}, {k})"))
                })?;
            amps[i] = a;
        }
        StateVector::new(amps)
    }
}

/// `|⟨a|b⟩|`
pub fn fidelity_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    for s in [a, b] {
        if (s.norm() - 1.0).abs() > TOL.norm {
            return Err(Error::InvalidParameter(format!(
                "state norm {} is not 1",
                s.norm()
            )));
        }
    }
    Ok(a.inner(b).norm())
}

/// Reduced density matrix of the kept subsystem of a pure composite state.
pub fn partial_trace(psi: &StateVector, split: &SubsystemSplit) -> Result<DensityMatrix> {
    if psi.dim() != split.composite_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match split dimension {}",
            psi.dim(),
            split.composite_dim()
        )));
    }
    let k = split.kept_dim;
    let mut rho = ComplexMatrix::zeros(k, k);
    for (i, &(fi, ai)) in split.labels.iter().enumerate() {
        for (j, &(fj, aj)) in split.labels.iter().enumerate() {
            if fi == fj {
                rho[(ai, aj)] += psi[i] * psi[j].conj();
            }
        }
    }
    Ok(DensityMatrix { matrix: rho })
}

/// `Tr √(√ρ σ √ρ)`
pub fn uhlmann_fidelity(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density matrices of dimension {} and {}",
            rho.dim(),
            target.dim()
        )));
    }
    let root = psd_sqrt(&rho.matrix)?;
    let inner = &(&root * &target.matrix) * &root;
    Ok(psd_sqrt(&symmetrize(&inner))?.trace().re)
}

/// `ρ̃ = (σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y)`
pub fn spin_flip(rho: &DensityMatrix) -> ComplexMatrix {
    let yy = kron(&pauli::y(), &pauli::y());
    &(&yy * &rho.matrix.conj()) * &yy
}

/// Wootters concurrence `max(0, λ₁ - λ₂ - λ₃ - λ₄)`, with `λᵢ` the square
/// roots of the eigenvalues of `ρρ̃` in decreasing order.
///
/// The spectrum is taken from the Hermitian matrix `√ρ ρ̃ √ρ`, which is similar
/// to `ρρ̃`. For separable pure states `ρρ̃` is nilpotent and a general
/// eigen solver only resolves its zero eigenvalues to about `√ε`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs a 4x4 state, got {}",
            rho.dim()
        )));
    }
    let flipped = spin_flip(rho);
    let root = psd_sqrt(&rho.matrix)?;
    let inner = symmetrize(&(&(&root * &flipped) * &root));
    let spectrum = linalg::eig_hermitian(&inner)?;
    // Scale of the factors, not of the product: for separable pure states the
    // product itself is pure rounding noise.
    let floor = noise_floor(4, rho.matrix.frobenius_norm() * flipped.frobenius_norm());
    let mut lambdas = Vec::with_capacity(4);
    for mu in spectrum.values {
        if mu < -TOL.concurrence_negative {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: mu });
        }
        lambdas.push(if mu <= floor { 0.0 } else { mu.sqrt() });
    }
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_general, expm_unitary, HermitianSpectrum};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bell() -> StateVector {
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[two_qubit::GG] = c(FRAC_1_SQRT_2, 0.0);
        amps[two_qubit::EE] = c(FRAC_1_SQRT_2, 0.0);
        StateVector::new(amps).unwrap()
    }

    fn state_from(raw: &[f64]) -> StateVector {
        let amps = raw.chunks(2).map(|p| c(p[0], p[1])).collect();
        StateVector::new(amps).unwrap().normalized()
    }

    fn random_state(dim: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec(-1.0f64..1.0, 2 * dim)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| state_from(&v))
    }

    /// Random full-rank mixed state from a Ginibre-like factor.
    fn random_mixed(dim: usize) -> impl Strategy<Value = DensityMatrix> {
        prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
            let g = ComplexMatrix::from_fn(dim, dim, |i, j| {
                c(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1])
            });
            let m = &(&g * &g.adjoint()) + &ComplexMatrix::identity(dim).scale_real(1e-3);
            let t = m.trace().re;
            DensityMatrix::new(symmetrize(&m.scale_real(1.0 / t))).unwrap()
        })
    }

    /// Eigenvalues of `R = √(√ρ ρ̃ √ρ)` through two matrix square roots.
    fn concurrence_via_r(rho: &DensityMatrix) -> f64 {
        let root = psd_sqrt(rho.matrix()).unwrap();
        let inner = &(&root * &spin_flip(rho)) * &root;
        let r = psd_sqrt(&symmetrize(&inner)).unwrap();
        let HermitianSpectrum { values, .. } = linalg::eig_hermitian(&symmetrize(&r)).unwrap();
        (values[0] - values[1] - values[2] - values[3]).max(0.0)
    }

    /// Square roots of the eigenvalues of the non-Hermitian product `ρρ̃`.
    /// Only trustworthy when `ρρ̃` is far from defective, e.g. full-rank `ρ`.
    fn concurrence_via_product(rho: &DensityMatrix) -> f64 {
        let spectrum = eig_general(&(rho.matrix() * &spin_flip(rho))).unwrap();
        let mut l: Vec<f64> = spectrum
            .values
            .iter()
            .map(|z| z.re.max(0.0).sqrt())
            .collect();
        l.sort_by(|a, b| b.total_cmp(a));
        (l[0] - l[1] - l[2] - l[3]).max(0.0)
    }

    #[test]
    fn pure_fidelities() {
        let psi = state_from(&[0.3, 0.1, -0.5, 0.2, 0.7, 0.0]);
        assert!((fidelity_pure(&psi, &psi).unwrap() - 1.0).abs() < 1e-15);
        let one = StateVector::basis(3, 0);
        let target = StateVector::from_real(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert_eq!(fidelity_pure(&one, &target).unwrap(), 0.0);
        let zero = StateVector::basis(2, 0);
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert!((fidelity_pure(&zero, &plus).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(fidelity_pure(&zero, &one).is_err());
        assert!(fidelity_pure(&StateVector::from_real(&[1.0, 1.0]), &zero).is_err());
    }

    #[test]
    fn concurrence_reference_states() {
        assert!((concurrence(&DensityMatrix::from_pure(&bell())).unwrap() - 1.0).abs() < 1e-12);
        let product = state_from(&[0.6, 0.0, 0.0, 0.8]).kron(&state_from(&[0.2, 0.3, -0.5, 0.1]));
        let cp = concurrence(&DensityMatrix::from_pure(&product)).unwrap();
        assert!(cp.abs() < 1e-12, "{cp}");

        let p = 0.5;
        let werner = &ComplexMatrix::outer(&bell(), &bell()).scale_real(p)
            + &ComplexMatrix::identity(4).scale_real((1.0 - p) / 4.0);
        let werner = DensityMatrix::new(werner).unwrap();
        let expected = ((3.0 * p - 1.0) / 2.0f64).max(0.0);
        assert!((concurrence(&werner).unwrap() - expected).abs() < 1e-12);
        assert!((concurrence_via_r(&werner) - expected).abs() < 1e-12);
    }

    #[test]
    fn bell_overlap_of_ground_state_product_eigenvalues() {
        let rho = DensityMatrix::from_pure(&bell());
        let spectrum = eig_general(&(rho.matrix() * &spin_flip(&rho))).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (z, e) in spectrum.values.iter().zip(expected) {
            assert!((z - c(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn concurrence_rejects_wrong_dimension() {
        let rho = DensityMatrix::from_pure(&StateVector::basis(3, 0));
        assert!(concurrence(&rho).is_err());
    }

    #[test]
    fn uhlmann_examples() {
        let psi = state_from(&[0.3, 0.1, -0.5, 0.2, 0.7, 0.0, 0.1, 0.1]);
        let rho = DensityMatrix::from_pure(&psi);
        assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let mixed = DensityMatrix::new(ComplexMatrix::identity(4).scale_real(0.25)).unwrap();
        let bell_rho = DensityMatrix::from_pure(&bell());
        assert!((uhlmann_fidelity(&mixed, &bell_rho).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diag(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn partial_trace_of_product_state_is_pure() {
        let field = state_from(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let atoms = state_from(&[0.1, 0.2, 0.3, -0.4, 0.5, 0.0, -0.2, 0.6]);
        let rho = partial_trace(&field.kron(&atoms), &SubsystemSplit::tensor(3, 4)).unwrap();
        assert!(rho.matrix().distance(&ComplexMatrix::outer(&atoms, &atoms)) < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_checks_dimensions() {
        let split = SubsystemSplit::tensor(2, 4);
        assert!(partial_trace(&StateVector::basis(4, 0), &split).is_err());
        assert!(SubsystemSplit::new(2, vec![(0, 0), (0, 0)]).is_err());
        assert!(SubsystemSplit::new(2, vec![(0, 2)]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn pure_state_concurrence_matches_closed_form(psi in random_state(4)) {
            let a = psi[two_qubit::EE];
            let b = psi[two_qubit::EG];
            let cc = psi[two_qubit::GE];
            let d = psi[two_qubit::GG];
            let closed = 2.0 * (a * d - b * cc).norm();
            let got = concurrence(&DensityMatrix::from_pure(&psi)).unwrap();
            prop_assert!((got - closed).abs() <= 1e-9, "{} vs {}", got, closed);
        }

        #[test]
        fn concurrence_routes_agree_on_mixed_states(rho in random_mixed(4)) {
            let a = concurrence(&rho).unwrap();
            let b = concurrence_via_r(&rho);
            let g = concurrence_via_product(&rho);
            prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
            prop_assert!((a - g).abs() <= 1e-8, "{} vs {}", a, g);
            prop_assert!((0.0..=1.0 + 1e-9).contains(&a));
        }

        #[test]
        fn concurrence_is_local_unitary_invariant(
            psi in random_state(4),
            h1 in prop::collection::vec(-2.0f64..2.0, 4),
            h2 in prop::collection::vec(-2.0f64..2.0, 4),
        ) {
            let herm = |v: &[f64]| ComplexMatrix::from_vec(2, 2, vec![c(v[0], 0.0), c(v[1], v[2]), c(v[1], -v[2]), c(v[3], 0.0)]);
            let u = kron(&expm_unitary(&herm(&h1), 1.0).unwrap(), &expm_unitary(&herm(&h2), 1.0).unwrap());
            let rho = DensityMatrix::from_pure(&psi);
            let rotated = DensityMatrix::new(symmetrize(&(&(&u * rho.matrix()) * &u.adjoint()))).unwrap();
            prop_assert!((concurrence(&rho).unwrap() - concurrence(&rotated).unwrap()).abs() <= 1e-9);
        }

        #[test]
        fn uhlmann_is_symmetric(a in random_mixed(4), b in random_mixed(4)) {
            let ab = uhlmann_fidelity(&a, &b).unwrap();
            let ba = uhlmann_fidelity(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!((0.0..=1.0 + 1e-9).contains(&ab));
        }

        #[test]
        fn uhlmann_with_pure_target(rho in random_mixed(4), t in random_state(4)) {
            let target = DensityMatrix::from_pure(&t);
            let f = uhlmann_fidelity(&rho, &target).unwrap();
            prop_assert!((f - rho.expectation(&t).sqrt()).abs() <= 1e-9);
            let f_rev = uhlmann_fidelity(&target, &rho).unwrap();
            prop_assert!((f_rev - rho.expectation(&t).sqrt()).abs() <= 1e-9);
        }

        #[test]
        fn partial_trace_preserves_trace_and_hermiticity(psi in random_state(12)) {
            let rho = partial_trace(&psi, &SubsystemSplit::tensor(3, 4)).unwrap();
            prop_assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(rho.matrix().hermitian_deviation() <= 1e-15);
        }
    }
}
