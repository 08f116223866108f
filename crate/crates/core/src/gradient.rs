//! Exact gradients of the training losses with respect to the network
//! parameters, and the Adam update.
//!
//! The loss graph is short enough to differentiate by hand:
//!
//! ```text
//! θ ─network→ f̃ ─(× r)→ F ─(small-component map)→ G ─→ φ = [F; G]
//!   ─(projection)→ φ′ ─→ λ = φ′ᵀ W B φ′ / φ′ᵀ W φ′
//! ```
//!
//! where `B` is `(ε′ − H)⁻¹` for the inverse method and `H` for direct
//! minimization. The quadratic form is differentiated as
//! `(W B + Bᵀ W) φ′`, so the inverse method needs one extra solve against the
//! transposed factorization. The lagged energy inside the small-component
//! map is a constant.

use crate::error::{DiracError, Result};
use crate::network::{Architecture, ForwardCache, NetParams};
use crate::operator::{DiracOperator, RadialSpinor, ShiftedInverse, SmallComponentMap};

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub const DEFAULT_LR: f64 = 1e-3;

    pub fn new(len: usize) -> Self {
        Self::with_lr(len, Self::DEFAULT_LR)
    }

    pub fn with_lr(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Which quadratic form the Rayleigh quotient is taken of.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// `(ε′ − H)⁻¹`; the energy estimate is `ε′ − 1/λ`.
    Inverse(&'a ShiftedInverse),
    /// `H` itself; the energy estimate is `λ`.
    Direct,
}

/// How the network output becomes the large component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputMode {
    /// The network models `f = F/r`.
    RadialQuotient,
    /// The network models `F` itself.
    LargeComponent,
}

impl OutputMode {
    pub fn name(self) -> &'static str {
        match self {
            OutputMode::RadialQuotient => "f_over_r",
            OutputMode::LargeComponent => "direct_f",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "f_over_r" => Some(OutputMode::RadialQuotient),
            "direct_f" => Some(OutputMode::LargeComponent),
            _ => None,
        }
    }
}

/// Loss value, energy estimate and the (projected, unnormalized) trial state.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub epsilon: f64,
    pub spinor: RadialSpinor,
    pub gradient: Option<Vec<f64>>,
}

/// `λ = φᵀ W B φ / φᵀ W φ` and, on request, `∂λ/∂φ`.
fn rayleigh_quotient(
    op: &DiracOperator,
    objective: Objective<'_>,
    phi: &[f64],
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let mesh = op.mesh();
    let wphi = mesh.weighted(phi);
    let denom: f64 = phi.iter().zip(&wphi).map(|(a, b)| a * b).sum();
    if !(denom >= 1e-30) {
        return Err(DiracError::DegenerateTrialState { norm: denom });
    }
    let image = match objective {
        Objective::Inverse(inv) => inv.apply_inverse(phi),
        Objective::Direct => op.apply(phi),
    };
    let numer: f64 = wphi.iter().zip(&image).map(|(a, b)| a * b).sum();
    let lambda = numer / denom;
    if !want_grad {
        return Ok((lambda, None));
    }
    let adjoint = match objective {
        Objective::Inverse(inv) => inv.apply_inverse_transpose(&wphi),
        Objective::Direct => op.apply_transpose(&wphi),
    };
    let wimage = mesh.weighted(&image);
    let grad = wimage
        .iter()
        .zip(&adjoint)
        .zip(&wphi)
        .map(|((a, b), w)| (a + b - 2.0 * lambda * w) / denom)
        .collect();
    Ok((lambda, Some(grad)))
}

/// Everything needed to turn parameters into a loss.
pub struct TrialGraph<'a> {
    op: &'a DiracOperator,
    objective: Objective<'a>,
    output: OutputMode,
    lower: &'a [RadialSpinor],
    weighted_lower: Vec<Vec<f64>>,
    stacked_lower: Vec<Vec<f64>>,
    cache: ForwardCache,
}

impl<'a> TrialGraph<'a> {
    /// `lower` holds normalized states to project out (empty for the
    /// inverse and direct methods).
    pub fn new(
        op: &'a DiracOperator,
        objective: Objective<'a>,
        output: OutputMode,
        lower: &'a [RadialSpinor],
    ) -> Result<Self> {
        for s in lower {
            if s.len() != op.points() {
                return Err(DiracError::LengthMismatch {
                    expected: op.points(),
                    actual: s.len(),
                });
            }
        }
        let stacked_lower: Vec<Vec<f64>> = lower.iter().map(RadialSpinor::stacked).collect();
        let weighted_lower = stacked_lower
            .iter()
            .map(|s| op.mesh().weighted(s))
            .collect();
        Ok(Self {
            op,
            objective,
            output,
            lower,
            weighted_lower,
            stacked_lower,
            cache: ForwardCache::default(),
        })
    }

    pub fn operator(&self) -> &DiracOperator {
        self.op
    }

    pub fn lower_states(&self) -> &[RadialSpinor] {
        self.lower
    }

    fn radial_factor(&self, out: &mut [f64]) {
        if self.output == OutputMode::RadialQuotient {
            for (x, r) in out.iter_mut().zip(self.op.mesh().points()) {
                *x *= r;
            }
        }
    }

    /// The trial spinor before projection.
    pub fn trial_spinor(&mut self, params: &NetParams, eps_lag: f64) -> Result<RadialSpinor> {
        let r = self.op.mesh().points();
        let mut heads = params.forward_cached(r, &mut self.cache).into_iter();
        let mut f = heads.next().expect("network has at least one head");
        self.radial_factor(&mut f);
        let g = match params.architecture() {
            Architecture::FullyConnected => SmallComponentMap::new(self.op, eps_lag)?.apply(&f),
            Architecture::SplitTwoHead => heads.next().expect("split network has two heads"),
        };
        Ok(RadialSpinor::new(f, g))
    }

    /// `φ − Σ ⟨φ_i|φ⟩ φ_i` on stacked samples.
    fn project(&self, phi: &mut [f64]) -> Result<()> {
        if self.lower.is_empty() {
            return Ok(());
        }
        let overlaps: Vec<f64> = self
            .weighted_lower
            .iter()
            .map(|ws| ws.iter().zip(phi.iter()).map(|(a, b)| a * b).sum())
            .collect();
        for (s, overlap) in self.stacked_lower.iter().zip(overlaps) {
            phi.iter_mut().zip(s).for_each(|(p, si)| *p -= overlap * si);
        }
        let norm = self.op.mesh().inner_product(phi, phi);
        if !(norm >= 1e-24) {
            return Err(DiracError::ProjectedToZero { norm: norm.sqrt() });
        }
        Ok(())
    }

    fn energy(&self, lambda: f64) -> f64 {
        match self.objective {
            Objective::Inverse(inv) => inv.shift() - 1.0 / lambda,
            Objective::Direct => lambda,
        }
    }

    /// Loss and energy estimate, with the parameter gradient on request.
    pub fn evaluate(
        &mut self,
        params: &NetParams,
        eps_lag: f64,
        want_grad: bool,
    ) -> Result<LossEval> {
        let trial = self.trial_spinor(params, eps_lag)?;
        let mut phi = trial.stacked();
        self.project(&mut phi)?;
        let (loss, grad_phi) = rayleigh_quotient(self.op, self.objective, &phi, want_grad)?;
        let epsilon = self.energy(loss);
        let spinor = RadialSpinor::from_stacked(&phi);
        let gradient = match grad_phi {
            Some(g) => Some(self.pull_back(params, eps_lag, g)?),
            None => None,
        };
        Ok(LossEval {
            loss,
            epsilon,
            spinor,
            gradient,
        })
    }

    /// Chain `∂λ/∂φ′` back to the parameters. Relies on the forward cache
    /// filled by the preceding [`Self::trial_spinor`] call.
    fn pull_back(&self, params: &NetParams, eps_lag: f64, mut grad: Vec<f64>) -> Result<Vec<f64>> {
        let n = self.op.points();
        // Projection is P = I − Σ s_i (W s_i)ᵀ, so the pull-back is Pᵀ.
        let overlaps: Vec<f64> = self
            .stacked_lower
            .iter()
            .map(|s| s.iter().zip(&grad).map(|(a, b)| a * b).sum())
            .collect();
        for (ws, overlap) in self.weighted_lower.iter().zip(overlaps) {
            grad.iter_mut().zip(ws).for_each(|(g, w)| *g -= overlap * w);
        }
        let (grad_f, grad_g) = grad.split_at_mut(n);
        let mut heads = Vec::with_capacity(2);
        match params.architecture() {
            Architecture::FullyConnected => {
                let map = SmallComponentMap::new(self.op, eps_lag)?;
                let mut through_g = vec![0.0; n];
                map.apply_transpose_into(grad_g, &mut through_g);
                let mut head: Vec<f64> =
                    grad_f.iter().zip(&through_g).map(|(a, b)| a + b).collect();
                self.radial_factor(&mut head);
                heads.push(head);
            }
            Architecture::SplitTwoHead => {
                let mut head_f = grad_f.to_vec();
                self.radial_factor(&mut head_f);
                heads.push(head_f);
                heads.push(grad_g.to_vec());
            }
        }
        Ok(params.backward(self.op.mesh().points(), &self.cache, &heads))
    }
}
