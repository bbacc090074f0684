//! The built-in systems: a V-type three-level atom (constant and
//! time-modulated uncertainty), two coupled superconducting charge qubits, and
//! two atoms sharing a cavity mode.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    sample_initial_control, Bounds, ControlField, HamiltonianModel, Term, TimeGrid,
    UncertaintyForm, Waveform,
};
use crate::error::{Error, Result};
use crate::linalg::{kron, pauli, ComplexMatrix, StateVector, C64};
use crate::metrics::{two_qubit, SubsystemSplit};
use crate::slc::{AugmentedSystem, TargetSpec, TrainConfig};
use crate::uncertainty::{draw_samples, grid_samples, ChannelSpec, Distribution, SampleSet};

/// Iteration cap shared by every built-in experiment.
pub const DEFAULT_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    VtypeSingle,
    VtypeTimevarying,
    /// The time-modulated V-type system trained on its nominal member only.
    VtypeNominalBaseline,
    Supercond,
    Cavity,
}

impl ExperimentId {
    pub const ALL: [Self; 5] = [
        Self::VtypeSingle,
        Self::VtypeTimevarying,
        Self::VtypeNominalBaseline,
        Self::Supercond,
        Self::Cavity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::VtypeSingle => "vtype_single",
            Self::VtypeTimevarying => "vtype_timevarying",
            Self::VtypeNominalBaseline => "vtype_nominal_baseline",
            Self::Supercond => "supercond",
            Self::Cavity => "cavity",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

/// How test draws are generated: one channel per parameter class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSampling {
    pub channels: Vec<ChannelSpec>,
    pub count: usize,
}

impl TestSampling {
    pub fn draw(&self, seed: u64) -> Result<SampleSet> {
        draw_samples(&self.channels, self.count, seed)
    }
}

/// Everything needed to train and test one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub model: HamiltonianModel,
    pub grid: TimeGrid,
    pub psi0: StateVector,
    pub target: TargetSpec,
    /// One grid channel per parameter class; the training set is their product.
    pub train_sampling: Vec<ChannelSpec>,
    pub test_sampling: TestSampling,
    pub train: TrainConfig,
    /// One waveform per control, sampled at interval midpoints.
    pub initial_control: Vec<Waveform>,
    #[serde(default)]
    pub bounds: Option<Vec<Bounds>>,
    /// Physical constants the model was built from, for the record.
    #[serde(default)]
    pub physical_params: BTreeMap<String, f64>,
}

impl ExperimentSpec {
    pub fn build(id: ExperimentId) -> Result<Self> {
        match id {
            ExperimentId::VtypeSingle => Ok(build_vtype_single()),
            ExperimentId::VtypeTimevarying => Ok(build_vtype_timevarying()),
            ExperimentId::VtypeNominalBaseline => Ok(build_vtype_nominal_baseline()),
            ExperimentId::Supercond => Ok(build_supercond()),
            ExperimentId::Cavity => build_cavity(&CavityParams::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.train.validate()?;
        let d = self.model.dim();
        if self.psi0.dim() != d || self.target.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "model dimension {d}, initial state {}, target {}",
                self.psi0.dim(),
                self.target.dim()
            )));
        }
        let classes = self.model.num_classes();
        for (what, channels) in [
            ("training", &self.train_sampling),
            ("test", &self.test_sampling.channels),
        ] {
            if channels.len() != classes {
                return Err(Error::DimensionMismatch(format!(
                    "model has {classes} parameter classes, {what} sampling has {} channels",
                    channels.len()
                )));
            }
            channels.iter().try_for_each(ChannelSpec::validate)?;
        }
        if self
            .train_sampling
            .iter()
            .any(|c| !matches!(c.distribution, Distribution::UniformGrid { .. }))
        {
            return Err(Error::InvalidParameter(
                "training channels must be grids".into(),
            ));
        }
        if self.test_sampling.count == 0 {
            return Err(Error::InvalidParameter(
                "test sample count must be at least 1".into(),
            ));
        }
        let m = self.model.num_controls();
        if self.initial_control.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{m} controls but {} initial waveforms",
                self.initial_control.len()
            )));
        }
        self.initial_controls()?;
        AugmentedSystem::new(
            self.model.clone(),
            self.training_samples()?,
            self.psi0.clone(),
            self.target.clone(),
        )?;
        Ok(())
    }

    pub fn training_samples(&self) -> Result<SampleSet> {
        grid_samples(&self.train_sampling)
    }

    pub fn test_samples(&self, seed: u64) -> Result<SampleSet> {
        self.test_sampling.draw(seed)
    }

    pub fn initial_controls(&self) -> Result<ControlField> {
        sample_initial_control(&self.initial_control, self.grid, self.bounds.clone())
    }

    pub fn augmented_system(&self) -> Result<AugmentedSystem> {
        AugmentedSystem::new(
            self.model.clone(),
            self.training_samples()?,
            self.psi0.clone(),
            self.target.clone(),
        )
    }

    /// Same experiment on a grid of `intervals` steps over the same duration.
    pub fn with_intervals(mut self, intervals: usize) -> Result<Self> {
        self.grid = TimeGrid::new(self.grid.duration, intervals)?;
        Ok(self)
    }

    /// Replaces the grid count of training channel `class`.
    pub fn with_grid_count(mut self, class: usize, count: usize) -> Result<Self> {
        let channel = self
            .train_sampling
            .get_mut(class)
            .ok_or_else(|| Error::DimensionMismatch(format!("no parameter class {class}")))?;
        channel.distribution = Distribution::UniformGrid { count };
        channel.validate()?;
        Ok(self)
    }
}

fn vtype_controls() -> [ComplexMatrix; 4] {
    let z = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        ComplexMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        ComplexMatrix::new(3, 3, vec![z, -i, z, i, z, z, z, z, z]).expect("3x3"),
        ComplexMatrix::from_real(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        ComplexMatrix::new(3, 3, vec![z, z, -i, z, z, z, i, z, z]).expect("3x3"),
    ]
}

fn vtype_spec(
    id: ExperimentId,
    drift_form: UncertaintyForm,
    control_class: Option<(UncertaintyForm, usize)>,
    train_sampling: Vec<ChannelSpec>,
    test_channels: Vec<ChannelSpec>,
) -> ExperimentSpec {
    let drift = vec![Term::new(
        ComplexMatrix::from_diag(&[1.5, 1.0, 0.0]),
        drift_form,
        Some(0),
    )];
    let controls = vtype_controls()
        .into_iter()
        .map(|h| match control_class {
            Some((form, class)) => Term::new(h, form, Some(class)),
            None => Term::certain(h),
        })
        .collect();
    ExperimentSpec {
        id,
        model: HamiltonianModel::new(3, drift, controls).expect("valid V-type model"),
        grid: TimeGrid::new(5.0, 200).expect("valid grid"),
        psi0: StateVector::basis(3, 0),
        target: TargetSpec::pure(StateVector::from_real(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]))
            .expect("normalized"),
        train_sampling,
        test_sampling: TestSampling {
            channels: test_channels,
            count: 200,
        },
        train: TrainConfig::new(0.2, DEFAULT_MAX_ITER),
        initial_control: vec![Waveform::sine(1.0, 0.0); 4],
        bounds: None,
        physical_params: BTreeMap::new(),
    }
}

/// V-type atom, `H₀ = diag(1.5, 1, 0)` scaled by `θ₀ ∈ [0.79, 1.21]`.
pub fn build_vtype_single() -> ExperimentSpec {
    vtype_spec(
        ExperimentId::VtypeSingle,
        UncertaintyForm::ConstantScale,
        None,
        vec![ChannelSpec::grid(0.21, 7)],
        vec![ChannelSpec::uniform(0.21)],
    )
}

fn timevarying_spec(id: ExperimentId, grid_count: usize) -> ExperimentSpec {
    let channel = |distribution| ChannelSpec {
        center: 0.0,
        bound: 0.21,
        distribution,
    };
    let grid = channel(Distribution::UniformGrid { count: grid_count });
    let uniform = channel(Distribution::UniformRandom);
    vtype_spec(
        id,
        UncertaintyForm::CosineModulated,
        Some((UncertaintyForm::CosineModulated, 1)),
        vec![grid, grid],
        vec![uniform, uniform],
    )
}

/// V-type atom with `1 - ϑ₀ cos t` on the drift and `1 - ϑ cos t` on every
/// control, `ϑ₀, ϑ ∈ [-0.21, 0.21]`.
pub fn build_vtype_timevarying() -> ExperimentSpec {
    timevarying_spec(ExperimentId::VtypeTimevarying, 7)
}

/// [`build_vtype_timevarying`] trained on the nominal system `ϑ₀ = ϑ = 0` alone.
pub fn build_vtype_nominal_baseline() -> ExperimentSpec {
    timevarying_spec(ExperimentId::VtypeNominalBaseline, 1)
}

/// Two charge qubits, `θ₁ = θ₂`, `θ₃ = θ₄` and `θ₅` on the five controls.
pub fn build_supercond() -> ExperimentSpec {
    let (x, y, z, id) = (
        pauli::x(),
        pauli::y(),
        pauli::z(),
        ComplexMatrix::identity(2),
    );
    let scaled =
        |h: ComplexMatrix, class| Term::new(h, UncertaintyForm::ConstantScale, Some(class));
    let controls = vec![
        scaled(kron(&z, &id), 0),
        scaled(kron(&id, &z), 0),
        scaled(kron(&x, &id).scale_real(-1.0), 1),
        scaled(kron(&id, &x).scale_real(-1.0), 1),
        scaled(kron(&y, &y).scale_real(-1.0), 2),
    ];
    let mut bell = vec![C64::new(0.0, 0.0); 4];
    bell[two_qubit::GG] = C64::new(FRAC_1_SQRT_2, 0.0);
    bell[two_qubit::EE] = C64::new(FRAC_1_SQRT_2, 0.0);
    let gaussian = ChannelSpec::truncated_gaussian(0.21, 1.0, 0.07);
    ExperimentSpec {
        id: ExperimentId::Supercond,
        model: HamiltonianModel::new(4, vec![], controls).expect("valid two-qubit model"),
        grid: TimeGrid::new(2.0, 200).expect("valid grid"),
        psi0: StateVector::basis(4, two_qubit::GG),
        target: TargetSpec::two_qubit(StateVector::new(bell).expect("finite")).expect("normalized"),
        train_sampling: vec![ChannelSpec::grid(0.21, 7); 3],
        test_sampling: TestSampling {
            channels: vec![gaussian; 3],
            count: 2000,
        },
        train: TrainConfig::new(0.1, DEFAULT_MAX_ITER),
        initial_control: vec![
            Waveform::sine(1.0, 5.0),
            Waveform::sine(1.0, 5.0),
            Waveform::sine(1.0, 5.0),
            Waveform::sine(1.0, 5.0),
            Waveform::sine(0.25, 0.0),
        ],
        bounds: Some(vec![
            Bounds::new(0.0, 50.2),
            Bounds::new(0.0, 50.2),
            Bounds::new(0.0, 11.1),
            Bounds::new(0.0, 11.1),
            Bounds::new(-0.5, 0.5),
        ]),
        physical_params: BTreeMap::new(),
    }
}

/// Constants of the two-atom cavity system. Only the atomic frequencies and
/// the dipole coupling are fixed by the published setup; the photon number,
/// cavity frequency and atom-field couplings are free choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityParams {
    pub photons: i64,
    pub omega_r: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub omega12: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            photons: 0,
            omega_r: 4.89,
            nu1: 0.05,
            nu2: 0.05,
            omega1: 6.44,
            omega2: 3.34,
            omega12: 0.0259,
        }
    }
}

impl CavityParams {
    fn photons(&self) -> Result<usize> {
        usize::try_from(self.photons).map_err(|_| Error::InvalidPhotonNumber(self.photons))
    }

    fn record(&self) -> BTreeMap<String, f64> {
        [
            ("photons", self.photons as f64),
            ("omega_r", self.omega_r),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("omega12", self.omega12),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Free, interaction and control operators of the cavity system.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityOperators {
    pub h0: ComplexMatrix,
    pub h_int: ComplexMatrix,
    /// `σ_z¹ + σ_z²`, `a†a`, dipole exchange, atom-1 coupling, atom-2 coupling.
    pub controls: Vec<ComplexMatrix>,
}

/// Basis `|n+2,g,g⟩, |n+1,e,g⟩, |n+1,g,e⟩, |n,e,e⟩` as (photons, atom pair).
fn cavity_basis(n: usize) -> [(usize, usize); 4] {
    [
        (n + 2, two_qubit::GG),
        (n + 1, two_qubit::EG),
        (n + 1, two_qubit::GE),
        (n, two_qubit::EE),
    ]
}

/// Field/atom split of the cavity subspace, for tracing out the field.
pub fn cavity_split(photons: i64) -> Result<SubsystemSplit> {
    let n = usize::try_from(photons).map_err(|_| Error::InvalidPhotonNumber(photons))?;
    SubsystemSplit::new(4, cavity_basis(n).to_vec())
}

/// Operators written down directly in the four-state subspace of fixed
/// excitation number.
pub fn cavity_subspace_operators(params: &CavityParams) -> Result<CavityOperators> {
    let n = params.photons()? as f64;
    let (hi, lo) = ((n + 2.0).sqrt(), (n + 1.0).sqrt());
    let sz1 = [-1.0, 1.0, -1.0, 1.0];
    let sz2 = [-1.0, -1.0, 1.0, 1.0];
    let number = [n + 2.0, n + 1.0, n + 1.0, n];
    let h0 = ComplexMatrix::from_diag(
        &(0..4)
            .map(|i| {
                0.5 * (params.omega1 * sz1[i] + params.omega2 * sz2[i]) + params.omega_r * number[i]
            })
            .collect::<Vec<_>>(),
    );
    let symmetric = |entries: &[(usize, usize, f64)]| {
        let mut m = ComplexMatrix::zeros(4, 4);
        for &(i, j, v) in entries {
            m[(i, j)] += C64::new(v, 0.0);
            m[(j, i)] += C64::new(v, 0.0);
        }
        m
    };
    let dipole = symmetric(&[(1, 2, 1.0)]);
    let atom1 = symmetric(&[(0, 1, hi), (2, 3, lo)]);
    let atom2 = symmetric(&[(0, 2, hi), (1, 3, lo)]);
    let h_int = &(&dipole.scale_real(params.omega12) + &atom1.scale_real(params.nu1))
        + &atom2.scale_real(params.nu2);
    let controls = vec![
        ComplexMatrix::from_diag(&[-2.0, 0.0, 0.0, 2.0]),
        ComplexMatrix::from_diag(&number),
        dipole,
        atom1,
        atom2,
    ];
    Ok(CavityOperators {
        h0,
        h_int,
        controls,
    })
}

/// Builds every cavity operator on the truncated Fock space `{0, …, n+2}`
/// tensored with both atoms, checks that the four-state subspace is invariant
/// and returns the projections.
pub fn fock_oracle_build(params: &CavityParams) -> Result<CavityOperators> {
    let n = params.photons()?;
    let levels = n + 3;
    let a = ComplexMatrix::from_fn(levels, levels, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a_dag = a.adjoint();
    let id_f = ComplexMatrix::identity(levels);
    let id_q = ComplexMatrix::identity(2);
    // |e⟩ = (1,0)ᵀ, |g⟩ = (0,1)ᵀ
    let lower = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let raise = lower.adjoint();
    let on =
        |field: &ComplexMatrix, q1: &ComplexMatrix, q2: &ComplexMatrix| kron(field, &kron(q1, q2));

    let sz1 = on(&id_f, &pauli::z(), &id_q);
    let sz2 = on(&id_f, &id_q, &pauli::z());
    let number = on(&(&a_dag * &a), &id_q, &id_q);
    let dipole = &on(&id_f, &raise, &lower) + &on(&id_f, &lower, &raise);
    let atom1 = &on(&a_dag, &lower, &id_q) + &on(&a, &raise, &id_q);
    let atom2 = &on(&a_dag, &id_q, &lower) + &on(&a, &id_q, &raise);
    let h0 = &(&sz1.scale_real(0.5 * params.omega1) + &sz2.scale_real(0.5 * params.omega2))
        + &number.scale_real(params.omega_r);
    let h_int = &(&dipole.scale_real(params.omega12) + &atom1.scale_real(params.nu1))
        + &atom2.scale_real(params.nu2);

    let index: Vec<usize> = cavity_basis(n).iter().map(|&(f, q)| f * 4 + q).collect();
    let project = |op: &ComplexMatrix| -> Result<ComplexMatrix> {
        let mut leakage = 0.0;
        for &j in &index {
            for r in (0..op.rows()).filter(|r| !index.contains(r)) {
                leakage += op[(r, j)].norm_sqr();
            }
        }
        let leakage = leakage.sqrt();
        if leakage > 1e-12 {
            return Err(Error::SubspaceNotInvariant { leakage });
        }
        Ok(ComplexMatrix::from_fn(4, 4, |i, j| {
            op[(index[i], index[j])]
        }))
    };
    Ok(CavityOperators {
        h0: project(&h0)?,
        h_int: project(&h_int)?,
        controls: [&(&sz1 + &sz2), &number, &dipole, &atom1, &atom2]
            .into_iter()
            .map(project)
            .collect::<Result<_>>()?,
    })
}

/// Two atoms in a cavity, restricted to the subspace reachable from
/// `|n+2, g, g⟩`. `θ₀` scales the free part, `θ_I` the interactions and
/// `θ_u` all five controls.
pub fn build_cavity(params: &CavityParams) -> Result<ExperimentSpec> {
    let ops = cavity_subspace_operators(params)?;
    let oracle = fock_oracle_build(params)?;
    let pairs = [(&ops.h0, &oracle.h0), (&ops.h_int, &oracle.h_int)]
        .into_iter()
        .chain(ops.controls.iter().zip(&oracle.controls));
    for (direct, projected) in pairs {
        let gap = direct.distance(projected);
        if gap > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "cavity operator differs from its Fock projection by {gap:.3e}"
            )));
        }
    }
    let scaled =
        |h: ComplexMatrix, class| Term::new(h, UncertaintyForm::ConstantScale, Some(class));
    let model = HamiltonianModel::new(
        4,
        vec![scaled(ops.h0, 0), scaled(ops.h_int, 1)],
        ops.controls.into_iter().map(|h| scaled(h, 2)).collect(),
    )?;
    let mut atoms = vec![C64::new(0.0, 0.0); 4];
    atoms[two_qubit::EG] = C64::new(FRAC_1_SQRT_2, 0.0);
    atoms[two_qubit::GE] = C64::new(FRAC_1_SQRT_2, 0.0);
    let n = params.photons()?;
    let target = TargetSpec::lifted(
        StateVector::new(atoms)?,
        cavity_split(params.photons)?,
        n + 1,
    )?;
    Ok(ExperimentSpec {
        id: ExperimentId::Cavity,
        model,
        grid: TimeGrid::new(2.0, 350)?,
        psi0: StateVector::basis(4, 0),
        target,
        train_sampling: vec![ChannelSpec::grid(0.2, 5); 3],
        test_sampling: TestSampling {
            channels: vec![ChannelSpec::uniform(0.2); 3],
            count: 500,
        },
        train: TrainConfig::new(0.1, DEFAULT_MAX_ITER),
        initial_control: vec![Waveform::sine(1.0, 0.0); 5],
        bounds: None,
        physical_params: params.record(),
    })
}
