//! Uncertain control Hamiltonians and their piecewise-constant propagation.
//!
//! A model is `H_Θ(t) = Σ_d f_d(θ, t)·H_d + Σ_m f_m(θ, t)·u_m(t)·H_m`, where
//! the drift terms `H_d` are control independent and every factor `f` reads
//! one entry of a [`ThetaSample`] (its parameter class). Several terms may
//! share a class, which is how tied parameters such as `θ₁ = θ₂` are
//! expressed. Controls are constant on each of the `W` intervals of a
//! [`TimeGrid`], and time-dependent factors are evaluated at interval
//! midpoints.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_in_place, expm_unitary, ComplexMatrix, StateVector, C64, TOL};
use crate::uncertainty::ThetaSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub duration: f64,
    pub intervals: usize,
}

impl TimeGrid {
    pub fn new(duration: f64, intervals: usize) -> Result<Self> {
        let grid = Self {
            duration,
            intervals,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals == 0 {
            return Err(Error::InvalidParameter(
                "time grid needs at least one interval".into(),
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.intervals as f64
    }

    /// `t_w = w·T/W`
    pub fn node(&self, w: usize) -> f64 {
        w as f64 * self.duration / self.intervals as f64
    }

    /// Midpoint of interval `w`, `(w + ½)·dt`.
    pub fn midpoint(&self, w: usize) -> f64 {
        (w as f64 + 0.5) * self.dt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// `M` piecewise-constant controls on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlField {
    grid: TimeGrid,
    values: Vec<Vec<f64>>,
    bounds: Option<Vec<Bounds>>,
}

impl ControlField {
    pub fn new(grid: TimeGrid, values: Vec<Vec<f64>>, bounds: Option<Vec<Bounds>>) -> Result<Self> {
        grid.validate()?;
        if values.iter().any(|row| row.len() != grid.intervals) {
            return Err(Error::DimensionMismatch(format!(
                "every control needs {} interval values",
                grid.intervals
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control field"));
        }
        if let Some(b) = &bounds {
            if b.len() != values.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} bounds for {} controls",
                    b.len(),
                    values.len()
                )));
            }
            if b.iter()
                .any(|b| b.lo.is_nan() || b.hi.is_nan() || b.lo > b.hi)
            {
                return Err(Error::InvalidParameter("control bound with lo > hi".into()));
            }
        }
        let field = Self {
            grid,
            values,
            bounds,
        };
        if !field.satisfies_bounds() {
            return Err(Error::InvalidParameter(
                "control values violate their bounds".into(),
            ));
        }
        Ok(field)
    }

    pub fn zeros(controls: usize, grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![vec![0.0; grid.intervals]; controls],
            bounds: None,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn num_controls(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, m: usize, w: usize) -> f64 {
        self.values[m][w]
    }

    pub fn bounds(&self) -> Option<&[Bounds]> {
        self.bounds.as_deref()
    }

    pub fn with_bounds(mut self, bounds: Option<Vec<Bounds>>) -> Result<Self> {
        self.bounds = bounds;
        Self::new(self.grid, self.values, self.bounds)
    }

    pub fn satisfies_bounds(&self) -> bool {
        match &self.bounds {
            None => true,
            Some(bounds) => self
                .values
                .iter()
                .zip(bounds)
                .all(|(row, b)| row.iter().all(|&v| b.contains(v))),
        }
    }

    /// `u ← u + step·direction`, then saturate at the bounds when `clip` is set.
    pub fn step(&mut self, direction: &[Vec<f64>], step: f64, clip: bool) {
        for (m, row) in self.values.iter_mut().enumerate() {
            for (v, d) in row.iter_mut().zip(&direction[m]) {
                *v += step * d;
            }
            if clip {
                if let Some(b) = self.bounds.as_ref().map(|b| b[m]) {
                    for v in row.iter_mut() {
                        *v = b.clip(*v);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveShape {
    Zero,
    #[serde(rename = "sin")]
    Sine,
    #[serde(rename = "cos")]
    Cosine,
}

impl FromStr for WaveShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" | "const" | "constant" => Ok(Self::Zero),
            "sin" | "sine" => Ok(Self::Sine),
            "cos" | "cosine" => Ok(Self::Cosine),
            other => Err(Error::UnknownWaveform(other.to_string())),
        }
    }
}

/// `amplitude·shape(t) + offset`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waveform {
    pub shape: WaveShape,
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default)]
    pub offset: f64,
}

fn unit() -> f64 {
    1.0
}

impl Waveform {
    pub fn new(shape: WaveShape, amplitude: f64, offset: f64) -> Self {
        Self {
            shape,
            amplitude,
            offset,
        }
    }

    pub fn sine(amplitude: f64, offset: f64) -> Self {
        Self::new(WaveShape::Sine, amplitude, offset)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(WaveShape::Zero, 0.0, value)
    }

    pub fn at(&self, t: f64) -> f64 {
        let base = match self.shape {
            WaveShape::Zero => 0.0,
            WaveShape::Sine => t.sin(),
            WaveShape::Cosine => t.cos(),
        };
        self.amplitude * base + self.offset
    }
}

/// Samples one waveform per control at the interval midpoints, then clips to
/// `bounds` when given.
pub fn sample_initial_control(
    waveforms: &[Waveform],
    grid: TimeGrid,
    bounds: Option<Vec<Bounds>>,
) -> Result<ControlField> {
    grid.validate()?;
    let mut values: Vec<Vec<f64>> = waveforms
        .iter()
        .map(|wf| {
            (0..grid.intervals)
                .map(|w| wf.at(grid.midpoint(w)))
                .collect()
        })
        .collect();
    if let Some(b) = &bounds {
        if b.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {} waveforms",
                b.len(),
                values.len()
            )));
        }
        for (row, b) in values.iter_mut().zip(b) {
            for v in row.iter_mut() {
                *v = b.clip(*v);
            }
        }
    }
    ControlField::new(grid, values, bounds)
}

/// Same as [`sample_initial_control`] with a waveform given by name.
pub fn sample_named_control(
    shape: &str,
    amplitude: f64,
    offset: f64,
    controls: usize,
    grid: TimeGrid,
) -> Result<ControlField> {
    let wf = Waveform::new(shape.parse()?, amplitude, offset);
    sample_initial_control(&vec![wf; controls], grid, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyForm {
    /// `f ≡ 1`
    Identity,
    /// `f(θ) = θ`
    ConstantScale,
    /// `f(θ, t) = 1 - θ·cos t`
    CosineModulated,
}

impl UncertaintyForm {
    pub fn factor(&self, theta: f64, t: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::ConstantScale => theta,
            Self::CosineModulated => 1.0 - theta * t.cos(),
        }
    }
}

/// One Hamiltonian term with its uncertainty factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub matrix: ComplexMatrix,
    pub form: UncertaintyForm,
    /// Index of the parameter class feeding `form`; `None` only for `Identity`.
    #[serde(default)]
    pub class: Option<usize>,
}

impl Term {
    pub fn new(matrix: ComplexMatrix, form: UncertaintyForm, class: Option<usize>) -> Self {
        Self {
            matrix,
            form,
            class,
        }
    }

    pub fn certain(matrix: ComplexMatrix) -> Self {
        Self::new(matrix, UncertaintyForm::Identity, None)
    }

    fn factor(&self, theta: &[f64], t: f64) -> f64 {
        match self.class {
            Some(c) => self.form.factor(theta[c], t),
            None => self.form.factor(1.0, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct HamiltonianModel {
    dim: usize,
    drift: Vec<Term>,
    controls: Vec<Term>,
    classes: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dim: usize,
    drift: Vec<Term>,
    controls: Vec<Term>,
    classes: usize,
}

impl TryFrom<RawModel> for HamiltonianModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let model = Self::new(raw.dim, raw.drift, raw.controls)?;
        if model.classes != raw.classes {
            return Err(Error::InvalidParameter(format!(
                "model declares {} parameter classes but its terms use {}",
                raw.classes, model.classes
            )));
        }
        Ok(model)
    }
}

impl HamiltonianModel {
    pub fn new(dim: usize, drift: Vec<Term>, controls: Vec<Term>) -> Result<Self> {
        let mut classes = 0;
        for term in drift.iter().chain(&controls) {
            let m = &term.matrix;
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "term is {}x{}, model dimension is {dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            let deviation = m.hermitian_deviation();
            if deviation > TOL.hermitian {
                return Err(Error::NonHermitianInput { deviation });
            }
            match (term.form, term.class) {
                (UncertaintyForm::Identity, _) => {}
                (_, None) => {
                    return Err(Error::InvalidParameter(
                        "uncertain term needs a parameter class".into(),
                    ))
                }
                _ => {}
            }
            if let Some(c) = term.class {
                classes = classes.max(c + 1);
            }
        }
        Ok(Self {
            dim,
            drift,
            controls,
            classes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    /// Number of independent uncertainty parameters a [`ThetaSample`] carries.
    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn drift(&self) -> &[Term] {
        &self.drift
    }

    pub fn controls(&self) -> &[Term] {
        &self.controls
    }

    pub(crate) fn check(&self, theta: &ThetaSample, u: &ControlField) -> Result<()> {
        if theta.len() != self.classes {
            return Err(Error::DimensionMismatch(format!(
                "model has {} parameter classes, sample has {}",
                self.classes,
                theta.len()
            )));
        }
        if u.num_controls() != self.controls.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} controls, field has {}",
                self.controls.len(),
                u.num_controls()
            )));
        }
        Ok(())
    }

    /// Control factor `f_m(θ, t̄_w)` for control `m` on interval `w`.
    pub fn control_factor(&self, theta: &ThetaSample, grid: &TimeGrid, m: usize, w: usize) -> f64 {
        self.controls[m].factor(theta.values(), grid.midpoint(w))
    }

    /// Writes `H_Θ` on interval `w` into `out` (row-major, `dim²` entries).
    pub(crate) fn fill_hamiltonian(
        &self,
        theta: &[f64],
        u: &ControlField,
        w: usize,
        out: &mut [C64],
    ) {
        let t = u.grid().midpoint(w);
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for term in &self.drift {
            let f = term.factor(theta, t);
            for (o, h) in out.iter_mut().zip(term.matrix.as_slice()) {
                *o += h * f;
            }
        }
        for (m, term) in self.controls.iter().enumerate() {
            let f = term.factor(theta, t) * u.value(m, w);
            if f == 0.0 {
                continue;
            }
            for (o, h) in out.iter_mut().zip(term.matrix.as_slice()) {
                *o += h * f;
            }
        }
    }

    pub fn hamiltonian_at(
        &self,
        theta: &ThetaSample,
        u: &ControlField,
        w: usize,
    ) -> Result<ComplexMatrix> {
        self.check(theta, u)?;
        if w >= u.grid().intervals {
            return Err(Error::DimensionMismatch(format!(
                "interval {w} outside grid of {}",
                u.grid().intervals
            )));
        }
        let mut data = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        self.fill_hamiltonian(theta.values(), u, w, &mut data);
        ComplexMatrix::new(self.dim, self.dim, data)
    }
}

/// Propagators `U(t_w)` and states `|ψ(t_w)⟩` at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub propagators: Vec<ComplexMatrix>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn final_propagator(&self) -> &ComplexMatrix {
        self.propagators
            .last()
            .expect("trajectory has at least one propagator")
    }
}

pub(crate) fn check_state(model: &HamiltonianModel, psi0: &StateVector) -> Result<()> {
    if psi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, model {}",
            psi0.dim(),
            model.dim()
        )));
    }
    if (psi0.norm() - 1.0).abs() > TOL.norm {
        return Err(Error::InvalidParameter(format!(
            "initial state norm {} is not 1",
            psi0.norm()
        )));
    }
    Ok(())
}

/// Full propagation keeping every intermediate propagator.
pub fn propagate(
    model: &HamiltonianModel,
    theta: &ThetaSample,
    u: &ControlField,
    psi0: &StateVector,
) -> Result<Trajectory> {
    model.check(theta, u)?;
    check_state(model, psi0)?;
    let grid = u.grid();
    let dt = grid.dt();
    let mut propagators = Vec::with_capacity(grid.intervals + 1);
    let mut states = Vec::with_capacity(grid.intervals + 1);
    propagators.push(ComplexMatrix::identity(model.dim()));
    states.push(psi0.clone());
    for w in 0..grid.intervals {
        let h = model.hamiltonian_at(theta, u, w)?;
        let step = expm_unitary(&h, dt)?;
        let next = &step * propagators.last().expect("non-empty");
        states.push(next.apply(psi0));
        propagators.push(next);
    }
    Ok(Trajectory {
        propagators,
        states,
    })
}

/// Forward sweep that keeps each interval's spectral data instead of full
/// propagators, which is all the exact gradient needs.
///
/// Step `w` maps `ψ_w` to `ψ_{w+1} = V_w · diag(e^{-iλ dt}) · V_w† · ψ_w`.
pub(crate) struct ForwardPass {
    pub dim: usize,
    pub steps: usize,
    pub dt: f64,
    /// Eigenvectors of each step Hamiltonian, `steps × dim²`, row-major columns.
    pub vectors: Vec<C64>,
    /// Eigenvalues, `steps × dim`.
    pub eigenvalues: Vec<f64>,
    /// States at every node, `(steps + 1) × dim`.
    pub states: Vec<C64>,
}

impl ForwardPass {
    pub fn run(
        model: &HamiltonianModel,
        theta: &ThetaSample,
        u: &ControlField,
        psi0: &StateVector,
    ) -> Result<Self> {
        let d = model.dim();
        let grid = u.grid();
        let steps = grid.intervals;
        let dt = grid.dt();
        let mut pass = Self {
            dim: d,
            steps,
            dt,
            vectors: vec![C64::new(0.0, 0.0); steps * d * d],
            eigenvalues: vec![0.0; steps * d],
            states: vec![C64::new(0.0, 0.0); (steps + 1) * d],
        };
        pass.states[..d].copy_from_slice(psi0.amplitudes());

        let mut h = vec![C64::new(0.0, 0.0); d * d];
        let mut coeff = vec![C64::new(0.0, 0.0); d];
        for w in 0..steps {
            model.fill_hamiltonian(theta.values(), u, w, &mut h);
            let vecs = &mut pass.vectors[w * d * d..(w + 1) * d * d];
            let vals = &mut pass.eigenvalues[w * d..(w + 1) * d];
            eigh_in_place(d, &mut h, vecs, vals)?;

            let (before, after) = pass.states.split_at_mut((w + 1) * d);
            let psi = &before[w * d..];
            let next = &mut after[..d];
            // coeff = diag(e^{-iλdt}) V† ψ
            for k in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    acc += vecs[i * d + k].conj() * psi[i];
                }
                coeff[k] = acc * C64::from_polar(1.0, -vals[k] * dt);
            }
            for i in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += vecs[i * d + k] * coeff[k];
                }
                next[i] = acc;
            }
        }
        Ok(pass)
    }

    pub fn state(&self, w: usize) -> &[C64] {
        &self.states[w * self.dim..(w + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[C64] {
        self.state(self.steps)
    }
}

/// Final state only, without keeping any trajectory.
pub fn final_state(
    model: &HamiltonianModel,
    theta: &ThetaSample,
    u: &ControlField,
    psi0: &StateVector,
) -> Result<StateVector> {
    model.check(theta, u)?;
    check_state(model, psi0)?;
    let pass = ForwardPass::run(model, theta, u, psi0)?;
    StateVector::new(pass.final_state().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn vtype_model(form0: UncertaintyForm, form: UncertaintyForm) -> HamiltonianModel {
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let h1 = ComplexMatrix::from_vec(3, 3, vec![z, one, z, one, z, z, z, z, z]);
        let h2 = ComplexMatrix::from_vec(3, 3, vec![z, -i, z, i, z, z, z, z, z]);
        let h3 = ComplexMatrix::from_vec(3, 3, vec![z, z, one, z, z, z, one, z, z]);
        let h4 = ComplexMatrix::from_vec(3, 3, vec![z, z, -i, z, z, z, i, z, z]);
        let class = |f: UncertaintyForm, c| {
            if f == UncertaintyForm::Identity {
                None
            } else {
                Some(c)
            }
        };
        let controls = [h1, h2, h3, h4]
            .into_iter()
            .map(|m| Term::new(m, form, class(form, 1)))
            .collect();
        let drift = vec![Term::new(
            ComplexMatrix::from_diag(&[1.5, 1.0, 0.0]),
            form0,
            class(form0, 0),
        )];
        HamiltonianModel::new(3, drift, controls).unwrap()
    }

    fn random_field(m: usize, grid: TimeGrid, seed: u64) -> ControlField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..m)
            .map(|_| {
                (0..grid.intervals)
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect()
            })
            .collect();
        ControlField::new(grid, values, None).unwrap()
    }

    #[test]
    fn nominal_zero_control_hamiltonian_is_drift() {
        let model = vtype_model(
            UncertaintyForm::ConstantScale,
            UncertaintyForm::ConstantScale,
        );
        let grid = TimeGrid::new(5.0, 10).unwrap();
        let u = ControlField::zeros(4, grid);
        let h = model
            .hamiltonian_at(&ThetaSample::new(vec![1.0, 1.0]), &u, 3)
            .unwrap();
        assert!(h.distance(&ComplexMatrix::from_diag(&[1.5, 1.0, 0.0])) < 1e-15);
        let h = model
            .hamiltonian_at(&ThetaSample::new(vec![1.18, 1.0]), &u, 0)
            .unwrap();
        assert!(h.distance(&ComplexMatrix::from_diag(&[1.77, 1.18, 0.0])) < 1e-14);
    }

    #[test]
    fn cosine_form_with_zero_parameter_is_nominal() {
        for t in [0.0, 0.3, 2.0, 4.9] {
            assert_eq!(UncertaintyForm::CosineModulated.factor(0.0, t), 1.0);
        }
        assert!((UncertaintyForm::CosineModulated.factor(0.2, 0.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_at_checks_dimensions() {
        let model = vtype_model(UncertaintyForm::ConstantScale, UncertaintyForm::Identity);
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let u = ControlField::zeros(4, grid);
        assert!(model
            .hamiltonian_at(&ThetaSample::new(vec![1.0, 1.0]), &u, 0)
            .is_err());
        assert!(model
            .hamiltonian_at(&ThetaSample::new(vec![1.0]), &u, 4)
            .is_err());
        let u3 = ControlField::zeros(3, grid);
        assert!(model
            .hamiltonian_at(&ThetaSample::new(vec![1.0]), &u3, 0)
            .is_err());
    }

    #[test]
    fn diagonal_evolution_picks_up_phase() {
        let model = vtype_model(UncertaintyForm::Identity, UncertaintyForm::Identity);
        let grid = TimeGrid::new(5.0, 200).unwrap();
        let u = ControlField::zeros(4, grid);
        let traj = propagate(
            &model,
            &ThetaSample::new(vec![]),
            &u,
            &StateVector::basis(3, 0),
        )
        .unwrap();
        let expected = StateVector::basis(3, 0).scale(C64::from_polar(1.0, -7.5));
        assert!(traj.final_state().distance(&expected) < 1e-12);
        assert_eq!(traj.states.len(), 201);
        assert_eq!(traj.propagators.len(), 201);
    }

    #[test]
    fn fast_and_full_propagation_agree() {
        let model = vtype_model(
            UncertaintyForm::CosineModulated,
            UncertaintyForm::CosineModulated,
        );
        let grid = TimeGrid::new(5.0, 40).unwrap();
        let u = random_field(4, grid, 3);
        let theta = ThetaSample::new(vec![0.1, -0.15]);
        let psi0 = StateVector::basis(3, 0);
        let traj = propagate(&model, &theta, &u, &psi0).unwrap();
        let fast = final_state(&model, &theta, &u, &psi0).unwrap();
        assert!(traj.final_state().distance(&fast) < 1e-12);
    }

    #[test]
    fn sine_initial_control() {
        let grid = TimeGrid::new(2.0 * PI, 4).unwrap();
        let u = sample_named_control("sin", 1.0, 0.0, 2, grid).unwrap();
        for w in 0..4 {
            assert_eq!(u.value(1, w), ((w as f64 + 0.5) * PI / 2.0).sin());
        }
        let zero = sample_named_control("zero", 1.0, 0.0, 3, grid).unwrap();
        assert!(zero.values().iter().flatten().all(|&v| v == 0.0));
        assert!(matches!(
            sample_named_control("sawtooth", 1.0, 0.0, 1, grid),
            Err(Error::UnknownWaveform(_))
        ));
    }

    #[test]
    fn offset_sine_on_two_nanoseconds() {
        let grid = TimeGrid::new(2.0, 200).unwrap();
        let u = sample_initial_control(&[Waveform::sine(1.0, 5.0)], grid, None).unwrap();
        assert_eq!(u.values()[0].len(), 200);
        // sin t peaks at t = π/2 inside [0, 2], so the range is [5, 6].
        assert!(u.values()[0].iter().all(|&v| (5.0..=6.0).contains(&v)));
        let max = u.values()[0].iter().copied().fold(f64::MIN, f64::max);
        assert!(max > 5.9999);
    }

    #[test]
    fn initial_control_is_clipped() {
        let grid = TimeGrid::new(2.0, 20).unwrap();
        let u = sample_initial_control(
            &[Waveform::sine(1.0, 5.0)],
            grid,
            Some(vec![Bounds::new(0.0, 5.5)]),
        )
        .unwrap();
        assert!(u.values()[0].iter().all(|&v| v <= 5.5));
        assert!(u.values()[0].contains(&5.5));
    }

    #[test]
    fn step_clips() {
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let mut u = ControlField::new(
            grid,
            vec![vec![0.0, 0.1, 0.2]],
            Some(vec![Bounds::new(-0.5, 0.5)]),
        )
        .unwrap();
        u.step(&[vec![1.0, -1.0, 0.0]], 1.0, true);
        assert_eq!(u.values()[0], vec![0.5, -0.5, 0.2]);
        assert!(u.satisfies_bounds());
    }

    #[test]
    fn grid_refinement_leaves_propagator_unchanged() {
        let model = vtype_model(
            UncertaintyForm::ConstantScale,
            UncertaintyForm::ConstantScale,
        );
        let coarse_grid = TimeGrid::new(5.0, 25).unwrap();
        let fine_grid = TimeGrid::new(5.0, 50).unwrap();
        let coarse = random_field(4, coarse_grid, 11);
        let fine_values = coarse
            .values()
            .iter()
            .map(|row| row.iter().flat_map(|&v| [v, v]).collect())
            .collect();
        let fine = ControlField::new(fine_grid, fine_values, None).unwrap();
        let theta = ThetaSample::new(vec![0.9, 1.1]);
        let psi0 = StateVector::basis(3, 0);
        let a = propagate(&model, &theta, &coarse, &psi0).unwrap();
        let b = propagate(&model, &theta, &fine, &psi0).unwrap();
        assert!(a.final_propagator().distance(b.final_propagator()) < 1e-9);
    }

    #[test]
    fn cosine_forms_converge_at_second_order() {
        let model = vtype_model(
            UncertaintyForm::CosineModulated,
            UncertaintyForm::CosineModulated,
        );
        let theta = ThetaSample::new(vec![0.2, -0.2]);
        let psi0 = StateVector::basis(3, 0);
        // Smooth constant controls so only the factor discretisation matters.
        let run = |w: usize| {
            let grid = TimeGrid::new(5.0, w).unwrap();
            let u = ControlField::new(
                grid,
                vec![vec![0.7; w], vec![-0.4; w], vec![0.3; w], vec![0.5; w]],
                None,
            )
            .unwrap();
            propagate(&model, &theta, &u, &psi0)
                .unwrap()
                .final_propagator()
                .clone()
        };
        let (u1, u2, u4, u8) = (run(25), run(50), run(100), run(200));
        let e1 = u1.distance(&u8);
        let e2 = u2.distance(&u8);
        let e4 = u4.distance(&u8);
        // Errors against the finest grid; ~4.2 and ~4.7 for a second-order scheme.
        assert!(e2 < e1 && e4 < e2);
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
        assert!(e2 / e4 > 3.5, "ratio {}", e2 / e4);
    }

    #[test]
    fn model_validation() {
        let not_hermitian = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(HamiltonianModel::new(2, vec![Term::certain(not_hermitian)], vec![]).is_err());
        assert!(HamiltonianModel::new(3, vec![Term::certain(pauli::x())], vec![]).is_err());
        assert!(HamiltonianModel::new(
            2,
            vec![Term::new(pauli::z(), UncertaintyForm::ConstantScale, None)],
            vec![]
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn unitarity_norm_and_reversibility(seed in 0u64..1000, t0 in 0.8f64..1.2, t1 in 0.8f64..1.2) {
            let model = vtype_model(UncertaintyForm::ConstantScale, UncertaintyForm::ConstantScale);
            let grid = TimeGrid::new(5.0, 30).unwrap();
            let u = random_field(4, grid, seed);
            let theta = ThetaSample::new(vec![t0, t1]);
            let psi0 = StateVector::from_real(&[0.6, 0.0, 0.8]);
            let traj = propagate(&model, &theta, &u, &psi0).unwrap();
            for (p, s) in traj.propagators.iter().zip(&traj.states) {
                prop_assert!(p.is_unitary(1e-9));
                prop_assert!((s.norm() - 1.0).abs() <= 1e-9);
                prop_assert!(p.apply(&psi0).distance(s) <= 1e-9);
            }
            let back = traj.final_propagator().adjoint().apply(traj.final_state());
            prop_assert!(back.distance(&psi0) <= 1e-9);
        }
    }
}
