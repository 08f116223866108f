//! Variants of the trial function and loss that show why the production
//! setup is built the way it is.

use crate::compare::{compare_spinors, SpinorComparison};
use crate::error::{DiracError, Result};
use crate::gradient::OutputMode;
use crate::network::Architecture;
use crate::operator::{DiracOperator, RadialSpinor};
use crate::solver::{train_state, ConvergenceTrace, Method, SolveConfig, SolvedState};

/// How a run of the unshifted Rayleigh quotient ended.
#[derive(Debug, Clone)]
pub struct DirectOutcome {
    pub architecture: Architecture,
    pub trace: ConvergenceTrace,
    /// Epoch at which the energy passed below `ε′ − 2mc²`, if it did.
    pub collapse_epoch: Option<usize>,
}

impl DirectOutcome {
    pub fn min_epsilon(&self) -> f64 {
        self.trace.min_epsilon().unwrap_or(f64::NAN)
    }
}

/// Minimize `⟨H⟩` directly. A collapse into the negative-energy continuum is
/// an outcome here, not an error.
pub fn direct_minimization(
    base: &SolveConfig,
    op: &DiracOperator,
    architecture: Architecture,
) -> Result<DirectOutcome> {
    let config = SolveConfig {
        method: Method::Direct,
        architecture,
        ..base.clone()
    };
    match train_state(&config, op) {
        Ok(state) => Ok(DirectOutcome {
            architecture,
            trace: state.trace,
            collapse_epoch: None,
        }),
        Err(DiracError::Collapse { epoch, trace, .. }) => Ok(DirectOutcome {
            architecture,
            trace: *trace,
            collapse_epoch: Some(epoch),
        }),
        Err(e) => Err(e),
    }
}

/// The same network and settings trained with the inverse Hamiltonian.
/// A collapse here is reported as the error it is.
pub fn inverse_counterpart(
    base: &SolveConfig,
    op: &DiracOperator,
    architecture: Architecture,
) -> Result<SolvedState> {
    let config = SolveConfig {
        method: Method::Inverse,
        architecture,
        ..base.clone()
    };
    train_state(&config, op)
}

#[derive(Debug, Clone)]
pub struct ArchitectureComparison {
    pub fully_connected: SolvedState,
    pub split: SolvedState,
    pub fully_connected_error: SpinorComparison,
    pub split_error: SpinorComparison,
}

impl ArchitectureComparison {
    /// Split-network `G` error over the fully connected one.
    pub fn g_error_ratio(&self) -> f64 {
        self.split_error.g_max() / self.fully_connected_error.g_max()
    }
}

/// Inverse-method runs with `G` reconstructed from `F` and with `G` as a
/// second, independent network head.
pub fn compare_architectures(
    base: &SolveConfig,
    op: &DiracOperator,
    reference: &RadialSpinor,
) -> Result<ArchitectureComparison> {
    let fully_connected = inverse_counterpart(base, op, Architecture::FullyConnected)?;
    let split = inverse_counterpart(base, op, Architecture::SplitTwoHead)?;
    Ok(ArchitectureComparison {
        fully_connected_error: compare_spinors(&fully_connected.spinor, reference),
        split_error: compare_spinors(&split.spinor, reference),
        fully_connected,
        split,
    })
}

#[derive(Debug, Clone)]
pub struct OutputComparison {
    pub state: SolvedState,
    pub error: SpinorComparison,
    /// `|G(r₁)|` of the run over that of the reference.
    pub origin_ratio: f64,
}

/// Inverse-method run in which the network models `F` rather than `F/r`.
pub fn large_component_output(
    base: &SolveConfig,
    op: &DiracOperator,
    reference: &RadialSpinor,
) -> Result<OutputComparison> {
    let config = SolveConfig {
        method: Method::Inverse,
        architecture: Architecture::FullyConnected,
        output: OutputMode::LargeComponent,
        ..base.clone()
    };
    let state = train_state(&config, op)?;
    let error = compare_spinors(&state.spinor, reference);
    let origin_ratio = state.spinor.g[0].abs() / reference.g[0].abs();
    Ok(OutputComparison {
        state,
        error,
        origin_ratio,
    })
}
