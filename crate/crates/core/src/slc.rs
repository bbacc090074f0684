//! Sampling-based learning control: one control field shared by `N` copies of
//! the system, each with its own draw of the uncertainty parameters, trained
//! by gradient ascent on the mean transfer probability and then tested on
//! fresh draws.

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_state, ControlField, ForwardPass, HamiltonianModel};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::linalg::{StateVector, C64, TOL};
use crate::metrics::{self, DensityMatrix, SubsystemSplit};
use crate::uncertainty::{SampleSet, ThetaSample};

/// A drop of `J_N` larger than this in one iteration halves the learning rate.
pub const DIVERGENCE_DROP: f64 = 0.1;

pub const HISTOGRAM_BINS: usize = 20;

/// Target of the transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTarget", into = "RawTarget")]
pub enum TargetSpec {
    /// A pure state of the full system. `two_qubit` enables concurrence reporting.
    PureState { state: StateVector, two_qubit: bool },
    /// A pure state of a subsystem, reached when the traced-out part ends up in
    /// the basis label `traced_label`. `lifted` is the full-space vector that
    /// puts `target` on that label.
    LiftedSubsystemPure {
        target: StateVector,
        split: SubsystemSplit,
        traced_label: usize,
        lifted: StateVector,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTarget {
    PureState {
        state: StateVector,
        #[serde(default)]
        two_qubit: bool,
    },
    LiftedSubsystemPure {
        target: StateVector,
        split: SubsystemSplit,
        traced_label: usize,
    },
}

impl TryFrom<RawTarget> for TargetSpec {
    type Error = Error;

    fn try_from(raw: RawTarget) -> Result<Self> {
        match raw {
            RawTarget::PureState { state, two_qubit } => {
                let spec = Self::pure(state)?;
                if two_qubit {
                    spec.into_two_qubit()
                } else {
                    Ok(spec)
                }
            }
            RawTarget::LiftedSubsystemPure {
                target,
                split,
                traced_label,
            } => Self::lifted(target, split, traced_label),
        }
    }
}

impl From<TargetSpec> for RawTarget {
    fn from(spec: TargetSpec) -> Self {
        match spec {
            TargetSpec::PureState { state, two_qubit } => Self::PureState { state, two_qubit },
            TargetSpec::LiftedSubsystemPure {
                target,
                split,
                traced_label,
                ..
            } => Self::LiftedSubsystemPure {
                target,
                split,
                traced_label,
            },
        }
    }
}

fn require_normalized(state: &StateVector) -> Result<()> {
    if (state.norm() - 1.0).abs() > TOL.norm {
        return Err(Error::InvalidParameter(format!(
            "target norm {} is not 1",
            state.norm()
        )));
    }
    Ok(())
}

impl TargetSpec {
    pub fn pure(state: StateVector) -> Result<Self> {
        require_normalized(&state)?;
        Ok(Self::PureState {
            state,
            two_qubit: false,
        })
    }

    /// A pure two-qubit target; testing also reports concurrence.
    pub fn two_qubit(state: StateVector) -> Result<Self> {
        Self::pure(state)?.into_two_qubit()
    }

    fn into_two_qubit(self) -> Result<Self> {
        match self {
            Self::PureState { state, .. } if state.dim() == 4 => Ok(Self::PureState {
                state,
                two_qubit: true,
            }),
            _ => Err(Error::DimensionMismatch(
                "two-qubit target needs dimension 4".into(),
            )),
        }
    }

    pub fn lifted(target: StateVector, split: SubsystemSplit, traced_label: usize) -> Result<Self> {
        require_normalized(&target)?;
        if target.dim() != split.kept_dim() {
            return Err(Error::DimensionMismatch(format!(
                "target dimension {} does not match kept dimension {}",
                target.dim(),
                split.kept_dim()
            )));
        }
        let lifted = split.embed(traced_label, &target)?;
        let reduced = metrics::partial_trace(&lifted, &split)?;
        let f = metrics::uhlmann_fidelity(&reduced, &DensityMatrix::from_pure(&target))?;
        if (f - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "lifted target has fidelity {f}"
            )));
        }
        Ok(Self::LiftedSubsystemPure {
            target,
            split,
            traced_label,
            lifted,
        })
    }

    /// The full-space vector the transfer probability is measured against.
    pub fn vector(&self) -> &StateVector {
        match self {
            Self::PureState { state, .. } => state,
            Self::LiftedSubsystemPure { lifted, .. } => lifted,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector().dim()
    }

    pub fn reports_concurrence(&self) -> bool {
        match self {
            Self::PureState { two_qubit, .. } => *two_qubit,
            Self::LiftedSubsystemPure { split, .. } => split.kept_dim() == 4,
        }
    }

    /// `|⟨ψ|ψ_tgt⟩|` for full-space targets, the Uhlmann fidelity of the
    /// reduced state for subsystem targets.
    pub fn fidelity(&self, psi: &StateVector) -> Result<f64> {
        match self {
            Self::PureState { state, .. } => metrics::fidelity_pure(psi, state),
            Self::LiftedSubsystemPure { target, split, .. } => {
                let reduced = metrics::partial_trace(psi, split)?;
                metrics::uhlmann_fidelity(&reduced, &DensityMatrix::from_pure(target))
            }
        }
    }

    pub fn concurrence(&self, psi: &StateVector) -> Result<Option<f64>> {
        if !self.reports_concurrence() {
            return Ok(None);
        }
        let rho = match self {
            Self::PureState { .. } => DensityMatrix::from_pure(psi),
            Self::LiftedSubsystemPure { split, .. } => metrics::partial_trace(psi, split)?,
        };
        metrics::concurrence(&rho).map(Some)
    }
}

/// How the derivative of one step propagator is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientRule {
    /// Exact derivative of the piecewise-constant propagator product.
    #[default]
    Exact,
    /// Continuous-time density with `H_m` inserted at the interval midpoint.
    Midpoint,
    /// Continuous-time density with `H_m` inserted at the start of the interval.
    Endpoint,
}

/// Non-zero entries `(p·d + q, h_pq)` of each control matrix.
fn sparse_controls(model: &HamiltonianModel) -> Vec<Vec<(usize, C64)>> {
    model
        .controls()
        .iter()
        .map(|term| {
            term.matrix
                .as_slice()
                .iter()
                .enumerate()
                .filter(|(_, h)| h.norm() != 0.0)
                .map(|(i, &h)| (i, h))
                .collect()
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

struct SampleEval {
    cost: f64,
    gradient: Option<Vec<Vec<f64>>>,
}

/// Transfer probability `|⟨tgt|ψ(T)⟩|²` and, when `rule` is given, its
/// gradient density with respect to every control value.
///
/// The backward sweep carries `χ_w = U_w† ⋯ U_{W-1}† |tgt⟩` and differentiates
/// each step in its own eigenbasis: with `a = V†χ_{w+1}`, `b = V†ψ_w`,
/// `∂⟨tgt|ψ(T)⟩ = -i·dt·f_m·Σ_pq (H_m)_pq (V̄ X Vᵀ)_pq`, `X_jk = ā_j G_jk b_k`.
fn evaluate_sample(
    model: &HamiltonianModel,
    sparse: &[Vec<(usize, C64)>],
    theta: &ThetaSample,
    u: &ControlField,
    psi0: &StateVector,
    target: &[C64],
    rule: Option<GradientRule>,
) -> Result<SampleEval> {
    let pass = ForwardPass::run(model, theta, u, psi0)?;
    let z: C64 = target
        .iter()
        .zip(pass.final_state())
        .map(|(t, p)| t.conj() * p)
        .sum();
    let cost = z.norm_sqr();
    let Some(rule) = rule else {
        return Ok(SampleEval {
            cost,
            gradient: None,
        });
    };

    let (d, dt, steps) = (pass.dim, pass.dt, pass.steps);
    let grid = u.grid();
    let zero = C64::new(0.0, 0.0);
    let mut gradient = vec![vec![0.0; steps]; sparse.len()];
    let mut chi = target.to_vec();
    let mut a = vec![zero; d];
    let mut b = vec![zero; d];
    let mut x = vec![zero; d * d];
    let mut t = vec![zero; d * d];
    let mut y = vec![zero; d * d];
    let mut g = vec![zero; d * d];
    let mut half = vec![zero; d];

    for w in (0..steps).rev() {
        let v = &pass.vectors[w * d * d..(w + 1) * d * d];
        let lam = &pass.eigenvalues[w * d..(w + 1) * d];
        let psi = pass.state(w);
        for k in 0..d {
            let (mut ak, mut bk) = (zero, zero);
            for i in 0..d {
                let vik = v[i * d + k].conj();
                ak += vik * chi[i];
                bk += vik * psi[i];
            }
            a[k] = ak;
            b[k] = bk;
        }
        for (p, l) in half.iter_mut().zip(lam) {
            *p = C64::from_polar(1.0, -l * dt / 2.0);
        }
        for j in 0..d {
            for k in 0..d {
                g[j * d + k] = match rule {
                    GradientRule::Exact if k < j => g[k * d + j],
                    GradientRule::Exact => half[j] * half[k] * sinc((lam[j] - lam[k]) * dt / 2.0),
                    GradientRule::Midpoint => half[j] * half[k],
                    GradientRule::Endpoint => half[j] * half[j],
                };
            }
        }
        for j in 0..d {
            let aj = a[j].conj();
            for k in 0..d {
                x[j * d + k] = aj * g[j * d + k] * b[k];
            }
        }
        // t = X Vᵀ, y = V̄ t
        for j in 0..d {
            for q in 0..d {
                t[j * d + q] = (0..d).map(|k| x[j * d + k] * v[q * d + k]).sum();
            }
        }
        for p in 0..d {
            for q in 0..d {
                y[p * d + q] = (0..d).map(|j| v[p * d + j].conj() * t[j * d + q]).sum();
            }
        }
        for (m, entries) in sparse.iter().enumerate() {
            if entries.is_empty() {
                continue;
            }
            let s: C64 = entries.iter().map(|&(i, h)| h * y[i]).sum();
            let f = model.control_factor(theta, &grid, m, w);
            gradient[m][w] = 2.0 * f * (z.conj() * s).im;
        }
        // χ_w = V diag(e^{iλdt}) a
        for (k, ak) in a.iter_mut().enumerate() {
            *ak *= C64::from_polar(1.0, lam[k] * dt);
        }
        for i in 0..d {
            chi[i] = (0..d).map(|k| v[i * d + k] * a[k]).sum();
        }
    }
    Ok(SampleEval {
        cost,
        gradient: Some(gradient),
    })
}

fn check_target(model: &HamiltonianModel, target: &StateVector) -> Result<()> {
    if target.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target has dimension {}, model {}",
            target.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// `|⟨ψ_Θ(T)|ψ_tgt⟩|²` for one parameter draw.
pub fn sample_cost(
    model: &HamiltonianModel,
    theta: &ThetaSample,
    u: &ControlField,
    psi0: &StateVector,
    target: &StateVector,
) -> Result<f64> {
    model.check(theta, u)?;
    check_state(model, psi0)?;
    check_target(model, target)?;
    Ok(evaluate_sample(
        model,
        &sparse_controls(model),
        theta,
        u,
        psi0,
        target.amplitudes(),
        None,
    )?
    .cost)
}

/// Gradient density `δ_m(t̄_w)` of the single-sample cost, an `M × W` array.
/// The parameter derivative `∂J/∂u_m[w]` is `δ_m(t̄_w)·dt`.
pub fn sample_gradient(
    model: &HamiltonianModel,
    theta: &ThetaSample,
    u: &ControlField,
    psi0: &StateVector,
    target: &StateVector,
    rule: GradientRule,
) -> Result<Vec<Vec<f64>>> {
    model.check(theta, u)?;
    check_state(model, psi0)?;
    check_target(model, target)?;
    let eval = evaluate_sample(
        model,
        &sparse_controls(model),
        theta,
        u,
        psi0,
        target.amplitudes(),
        Some(rule),
    )?;
    Ok(eval.gradient.expect("gradient requested"))
}

/// Element-wise mean of equally shaped arrays, summed in slice order.
fn ordered_mean(arrays: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let mut sum = arrays[0].clone();
    for array in &arrays[1..] {
        for (row, other) in sum.iter_mut().zip(array) {
            for (s, o) in row.iter_mut().zip(other) {
                *s += o;
            }
        }
    }
    let n = arrays.len() as f64;
    for s in sum.iter_mut().flatten() {
        *s /= n;
    }
    sum
}

/// `J_N(u)` and its gradient density.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub gradient: Vec<Vec<f64>>,
}

/// The `N` sampled copies of one model that share a control field.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    model: HamiltonianModel,
    samples: SampleSet,
    psi0: StateVector,
    target: TargetSpec,
    exec: ExecMode,
    sparse: Vec<Vec<(usize, C64)>>,
}

impl AugmentedSystem {
    pub fn new(
        model: HamiltonianModel,
        samples: SampleSet,
        psi0: StateVector,
        target: TargetSpec,
    ) -> Result<Self> {
        check_state(&model, &psi0)?;
        check_target(&model, target.vector())?;
        let sparse = sparse_controls(&model);
        let mut aug = Self {
            model,
            samples: SampleSet::single(ThetaSample::new(vec![])),
            psi0,
            target,
            exec: ExecMode::default(),
            sparse,
        };
        aug.set_samples(samples)?;
        Ok(aug)
    }

    fn set_samples(&mut self, samples: SampleSet) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "augmented system needs at least one sample".into(),
            ));
        }
        if let Some(bad) = samples
            .samples
            .iter()
            .find(|s| s.len() != self.model.num_classes())
        {
            return Err(Error::DimensionMismatch(format!(
                "model has {} parameter classes, sample has {}",
                self.model.num_classes(),
                bad.len()
            )));
        }
        self.samples = samples;
        Ok(())
    }

    /// Same model, start and target with a different training set.
    pub fn with_samples(mut self, samples: SampleSet) -> Result<Self> {
        self.set_samples(samples)?;
        Ok(self)
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn exec(&self) -> ExecMode {
        self.exec
    }

    fn check_field(&self, u: &ControlField) -> Result<()> {
        self.model.check(&self.samples.samples[0], u)
    }

    fn evaluate_all(
        &self,
        u: &ControlField,
        rule: Option<GradientRule>,
    ) -> Result<Vec<SampleEval>> {
        self.check_field(u)?;
        let target = self.target.vector().amplitudes();
        self.exec
            .map(&self.samples.samples, |theta| {
                evaluate_sample(
                    &self.model,
                    &self.sparse,
                    theta,
                    u,
                    &self.psi0,
                    target,
                    rule,
                )
            })
            .into_iter()
            .collect()
    }

    /// `J_N(u) = (1/N) Σ_n |⟨ψ_n(T)|ψ_tgt⟩|²`
    pub fn performance(&self, u: &ControlField) -> Result<f64> {
        let evals = self.evaluate_all(u, None)?;
        Ok(evals.iter().map(|e| e.cost).sum::<f64>() / evals.len() as f64)
    }

    pub fn gradient(&self, u: &ControlField) -> Result<Vec<Vec<f64>>> {
        Ok(self.evaluate(u)?.gradient)
    }

    pub fn evaluate(&self, u: &ControlField) -> Result<Evaluation> {
        self.evaluate_with(u, GradientRule::Exact)
    }

    pub fn evaluate_with(&self, u: &ControlField, rule: GradientRule) -> Result<Evaluation> {
        let evals = self.evaluate_all(u, Some(rule))?;
        let cost = evals.iter().map(|e| e.cost).sum::<f64>() / evals.len() as f64;
        let gradients: Vec<_> = evals
            .into_iter()
            .map(|e| e.gradient.expect("gradient requested"))
            .collect();
        Ok(Evaluation {
            cost,
            gradient: ordered_mean(&gradients),
        })
    }

    pub fn train(&self, u0: &ControlField, cfg: &TrainConfig) -> Result<TrainRecord> {
        self.train_observed(u0, cfg, |_| {})
    }

    /// Gradient ascent `u ← u + η·δ`, projected onto the control bounds when
    /// clipping is on. `observer` sees every iteration as it is recorded.
    pub fn train_observed(
        &self,
        u0: &ControlField,
        cfg: &TrainConfig,
        mut observer: impl FnMut(&Progress),
    ) -> Result<TrainRecord> {
        cfg.validate()?;
        self.check_field(u0)?;
        let clip = cfg.bounds_mode == BoundsMode::Clip && u0.bounds().is_some();
        let mut u = u0.clone();
        let mut eta = cfg.eta;
        let mut j_history: Vec<f64> = Vec::new();
        let mut eta_history = Vec::new();
        let mut eta_halvings = 0;
        let mut k = 0;
        let terminated_by = loop {
            let eval = match self.evaluate(&u) {
                Ok(e) => e,
                Err(_) if u.values().iter().flatten().any(|v| !v.is_finite()) => {
                    return Err(Error::NonFiniteCost { iteration: k })
                }
                Err(e) => return Err(e),
            };
            if !eval.cost.is_finite() || eval.gradient.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteCost { iteration: k });
            }
            if let Some(&prev) = j_history.last() {
                if prev - eval.cost > DIVERGENCE_DROP {
                    eta *= 0.5;
                    eta_halvings += 1;
                }
            }
            j_history.push(eval.cost);
            eta_history.push(eta);
            observer(&Progress {
                iteration: k,
                cost: eval.cost,
                eta,
            });

            if k >= cfg.patience && (j_history[k] - j_history[k - cfg.patience]).abs() < cfg.epsilon
            {
                break Termination::Patience;
            }
            if k >= cfg.max_iter {
                break Termination::MaxIter;
            }
            u.step(&eval.gradient, eta, clip);
            assert!(
                !clip || u.satisfies_bounds(),
                "clipped controls left their bounds"
            );
            k += 1;
        };
        Ok(TrainRecord {
            j_history,
            eta_history,
            final_controls: u,
            iterations: k,
            terminated_by,
            eta_halvings,
        })
    }

    /// Applies `u` to every sample of `samples` and reports fidelity (and
    /// concurrence for two-qubit targets) per sample.
    pub fn test(&self, u: &ControlField, samples: &SampleSet) -> Result<TestReport> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empty test set".into()));
        }
        for theta in &samples.samples {
            self.model.check(theta, u)?;
        }
        let per_sample: Vec<(f64, Option<f64>)> = self
            .exec
            .map(&samples.samples, |theta| -> Result<_> {
                let pass = ForwardPass::run(&self.model, theta, u, &self.psi0)?;
                let psi = StateVector::new(pass.final_state().to_vec())?;
                Ok((self.target.fidelity(&psi)?, self.target.concurrence(&psi)?))
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let fidelities: Vec<f64> = per_sample.iter().map(|p| p.0).collect();
        let concurrences: Option<Vec<f64>> = per_sample.iter().map(|p| p.1).collect();
        Ok(TestReport {
            fidelity: Stats::of(&fidelities),
            concurrence: concurrences.as_deref().map(Stats::of),
            histogram: Histogram::of(&fidelities, HISTOGRAM_BINS),
            fidelities,
            concurrences,
            seed: samples.seed,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMode {
    #[default]
    Clip,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub eta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
    pub max_iter: usize,
    #[serde(default)]
    pub bounds_mode: BoundsMode,
}

fn default_epsilon() -> f64 {
    1e-4
}

fn default_patience() -> usize {
    100
}

impl TrainConfig {
    pub fn new(eta: f64, max_iter: usize) -> Self {
        Self {
            eta,
            epsilon: default_epsilon(),
            patience: default_patience(),
            max_iter,
            bounds_mode: BoundsMode::Clip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.eta
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidParameter(
                "patience must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub cost: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Patience,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    /// `J_N(u^k)` for `k = 0..=iterations`.
    pub j_history: Vec<f64>,
    /// Learning rate applied after evaluating iteration `k`.
    pub eta_history: Vec<f64>,
    pub final_controls: ControlField,
    /// Number of updates applied; `final_controls` is `u^iterations`.
    pub iterations: usize,
    pub terminated_by: Termination,
    pub eta_halvings: usize,
}

impl TrainRecord {
    pub fn final_cost(&self) -> f64 {
        *self.j_history.last().expect("at least one evaluation")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            // Exact for a constant column, where summation would round.
            return Self {
                mean: min,
                min,
                max,
                stddev: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            min,
            max,
            stddev: var.sqrt(),
        }
    }
}

/// Equal-width bins spanning `[min, max]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn of(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + i as f64 * width })
            .collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let i = if width > 0.0 {
                ((v - lo) / width) as usize
            } else {
                bins - 1
            };
            counts[i.min(bins - 1)] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub fidelities: Vec<f64>,
    pub concurrences: Option<Vec<f64>>,
    pub fidelity: Stats,
    pub concurrence: Option<Stats>,
    pub histogram: Histogram,
    pub seed: Option<u64>,
}
