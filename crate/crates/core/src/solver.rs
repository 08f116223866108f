//! Training loops for single bound states.
//!
//! Every epoch evaluates the network on the mesh, builds the trial spinor
//! (reconstructing `G` from `F` with the previous epoch's energy), takes the
//! Rayleigh quotient of the chosen operator, and applies one Adam step.

use std::time::Instant;

use crate::analytic::count_nodes_above;
use crate::error::{DiracError, Result};
use crate::gradient::{AdamState, Objective, OutputMode, TrialGraph};
use crate::mesh::RadialMesh;
use crate::network::{Architecture, NetParams, DEFAULT_WIDTH};
use crate::operator::{DiracOperator, RadialSpinor, ShiftedInverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Minimize the Rayleigh quotient of `(ε′ − H)⁻¹`.
    Inverse,
    /// As `Inverse`, after projecting out the supplied lower states.
    Orthonormal,
    /// Minimize the Rayleigh quotient of `H`. Unbounded below.
    Direct,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Inverse => "inverse",
            Method::Orthonormal => "orthonormal",
            Method::Direct => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inverse" => Some(Method::Inverse),
            "orthonormal" => Some(Method::Orthonormal),
            "direct" => Some(Method::Direct),
            _ => None,
        }
    }
}

/// Node-counting floor for trained states, relative to `max|F|`. The network
/// tail is smooth but not exactly zero (up to about `1e-2` of the peak in
/// large boxes), while the smallest lobe of a low-lying bound state is a
/// sizeable fraction of the peak.
pub const TRAINED_NODE_FLOOR: f64 = 5e-2;

/// Stopping tolerance on the energy spread for atomic units (Hartree).
pub const ATOMIC_TOLERANCE: f64 = 1e-9;
/// Stopping tolerance on the energy spread for nuclear units (MeV).
pub const NUCLEAR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub method: Method,
    /// `ε′`, the shift of the inverse Hamiltonian. For direct minimization
    /// it only serves as the first lagged energy and the collapse reference.
    pub shift: f64,
    pub max_epochs: usize,
    /// Number of trailing epochs over which the energy spread is measured.
    pub window: usize,
    /// Stop once `max − min` of the energy over the window falls below this.
    pub tolerance: f64,
    pub seed: u64,
    pub architecture: Architecture,
    pub width: usize,
    pub output: OutputMode,
    pub learning_rate: f64,
    /// Normalized, mutually orthogonal states of the same `κ` to project
    /// out. Only used by the orthonormal method.
    pub lower_states: Vec<RadialSpinor>,
}

impl SolveConfig {
    pub fn new(method: Method, shift: f64) -> Self {
        Self {
            method,
            shift,
            max_epochs: 200_000,
            window: 500,
            tolerance: ATOMIC_TOLERANCE,
            seed: 0,
            architecture: Architecture::FullyConnected,
            width: DEFAULT_WIDTH,
            output: OutputMode::RadialQuotient,
            learning_rate: AdamState::DEFAULT_LR,
            lower_states: Vec::new(),
        }
    }

    pub fn validate(&self, mesh: &RadialMesh) -> Result<()> {
        let bad = |m: String| Err(DiracError::InvalidConfig(m));
        if !self.shift.is_finite() {
            return bad(format!("shift {} is not finite", self.shift));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".into());
        }
        if self.window < 2 {
            return bad("convergence window must span at least two epochs".into());
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        if self.width == 0 {
            return bad("hidden width must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive".into());
        }
        match self.method {
            Method::Orthonormal => {
                if self.lower_states.is_empty() {
                    return bad("the orthonormal method needs at least one lower state".into());
                }
                check_orthonormal(&self.lower_states, mesh)?;
            }
            _ if !self.lower_states.is_empty() => {
                return bad(format!(
                    "lower states are only used by the orthonormal method, not `{}`",
                    self.method.name()
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_orthonormal(states: &[RadialSpinor], mesh: &RadialMesh) -> Result<()> {
    for (i, a) in states.iter().enumerate() {
        if a.len() != mesh.len() {
            return Err(DiracError::LengthMismatch {
                expected: mesh.len(),
                actual: a.len(),
            });
        }
        for (j, b) in states.iter().enumerate().take(i + 1) {
            let dot = a.inner(b, mesh);
            let expected = if i == j { 1.0 } else { 0.0 };
            if (dot - expected).abs() > 1e-8 {
                return Err(DiracError::InvalidConfig(format!(
                    "lower states are not orthonormal: <{i}|{j}> = {dot}"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub epoch: usize,
    pub epsilon: f64,
    pub loss: f64,
    /// Wall-clock time of this epoch.
    pub seconds: f64,
}

/// One entry per completed epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub entries: Vec<TraceEntry>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    pub fn epsilons(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.epsilon)
    }

    pub fn min_epsilon(&self) -> Option<f64> {
        self.epsilons().reduce(f64::min)
    }

    pub fn total_seconds(&self) -> f64 {
        self.entries.iter().map(|e| e.seconds).sum()
    }

    pub fn seconds_per_epoch(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.total_seconds() / self.entries.len() as f64
        }
    }

    /// `max − min` of the energy over the last `window` entries.
    pub fn spread(&self, window: usize) -> Option<f64> {
        if window == 0 || self.entries.len() < window {
            return None;
        }
        let tail = &self.entries[self.entries.len() - window..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e.epsilon), hi.max(e.epsilon))
            });
        Some(hi - lo)
    }
}

#[derive(Debug, Clone)]
pub struct SolvedState {
    pub epsilon: f64,
    /// Normalized with the mesh quadrature, first extremum of `F` positive.
    pub spinor: RadialSpinor,
    pub nodes: usize,
    pub epochs: usize,
    pub converged: bool,
    pub trace: ConvergenceTrace,
    pub params: NetParams,
}

/// Inverse-Hamiltonian Rayleigh quotient and the energy it implies.
pub fn inverse_loss(
    phi: &RadialSpinor,
    inverse: &ShiftedInverse,
    mesh: &RadialMesh,
) -> Result<(f64, f64)> {
    let v = phi.stacked();
    let norm = mesh.inner_product(&v, &v);
    if !(norm >= 1e-30) {
        return Err(DiracError::DegenerateTrialState { norm });
    }
    let loss = mesh.inner_product(&v, &inverse.apply_inverse(&v)) / norm;
    Ok((loss, inverse.shift() - 1.0 / loss))
}

/// `⟨φ|H|φ⟩ / ⟨φ|φ⟩`.
pub fn direct_loss(phi: &RadialSpinor, op: &DiracOperator) -> Result<f64> {
    let v = phi.stacked();
    let mesh = op.mesh();
    let norm = mesh.inner_product(&v, &v);
    if !(norm >= 1e-30) {
        return Err(DiracError::DegenerateTrialState { norm });
    }
    Ok(mesh.inner_product(&v, &op.apply(&v)) / norm)
}

/// `φ − Σ ⟨φ_i|φ⟩ φ_i` with the mesh inner product.
pub fn orthonormal_project(
    phi: &RadialSpinor,
    lower: &[RadialSpinor],
    mesh: &RadialMesh,
) -> Result<RadialSpinor> {
    let overlaps: Vec<f64> = lower.iter().map(|s| s.inner(phi, mesh)).collect();
    let mut out = phi.clone();
    for (s, c) in lower.iter().zip(overlaps) {
        out.f.iter_mut().zip(&s.f).for_each(|(a, b)| *a -= c * b);
        out.g.iter_mut().zip(&s.g).for_each(|(a, b)| *a -= c * b);
    }
    let norm = out.norm_squared(mesh).sqrt();
    if !(norm >= 1e-12) {
        return Err(DiracError::ProjectedToZero { norm });
    }
    Ok(out)
}

/// Train a fresh network for one state of `op`.
pub fn train_state(config: &SolveConfig, op: &DiracOperator) -> Result<SolvedState> {
    let params = NetParams::init(config.seed, config.architecture, config.width);
    train_from(config, op, params)
}

/// Continue training from the given parameters.
pub fn train_from(
    config: &SolveConfig,
    op: &DiracOperator,
    mut params: NetParams,
) -> Result<SolvedState> {
    config.validate(op.mesh())?;
    if params.architecture() != config.architecture || params.width() != config.width {
        return Err(DiracError::InvalidConfig(
            "initial parameters do not match the configured architecture".into(),
        ));
    }
    let inverse = match config.method {
        Method::Direct => None,
        _ => Some(op.factorize_shifted(config.shift)?),
    };
    let objective = match &inverse {
        Some(inv) => Objective::Inverse(inv),
        None => Objective::Direct,
    };
    let lower: &[RadialSpinor] = if config.method == Method::Orthonormal {
        &config.lower_states
    } else {
        &[]
    };
    let mut graph = TrialGraph::new(op, objective, config.output, lower)?;
    let mut adam = AdamState::with_lr(params.len(), config.learning_rate);
    let threshold = config.shift - op.units().dirac_gap();

    let mut trace = ConvergenceTrace::default();
    let mut eps_lag = config.shift;
    let mut converged = false;
    let mut last = None;
    for epoch in 1..=config.max_epochs {
        let start = Instant::now();
        let eval = graph.evaluate(&params, eps_lag, true)?;
        if !eval.loss.is_finite() || !eval.epsilon.is_finite() {
            return Err(DiracError::NonFinite {
                what: "loss",
                epoch,
            });
        }
        let grad = eval.gradient.as_deref().expect("gradient was requested");
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(DiracError::NonFinite {
                what: "gradient",
                epoch,
            });
        }
        adam.update(params.as_mut_slice(), grad);
        trace.entries.push(TraceEntry {
            epoch,
            epsilon: eval.epsilon,
            loss: eval.loss,
            seconds: start.elapsed().as_secs_f64(),
        });
        if eval.epsilon < threshold {
            return Err(DiracError::Collapse {
                epoch,
                energy: eval.epsilon,
                threshold,
                trace: Box::new(trace),
            });
        }
        eps_lag = eval.epsilon;
        last = Some(eval);
        if trace
            .spread(config.window)
            .is_some_and(|s| s < config.tolerance)
        {
            converged = true;
            break;
        }
    }

    let eval = last.expect("at least one epoch ran");
    let mut spinor = eval.spinor;
    spinor.normalize(op.mesh())?;
    spinor.align_phase();
    let nodes = count_nodes_above(&spinor.f, TRAINED_NODE_FLOOR)?;
    Ok(SolvedState {
        epsilon: eval.epsilon,
        spinor,
        nodes,
        epochs: trace.len(),
        converged,
        trace,
        params,
    })
}
