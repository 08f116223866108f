//! Bound states of the spherically symmetric radial Dirac equation from a
//! neural-network trial function, with a shift-invert eigensolver and the
//! exact hydrogen solutions as references.

pub mod ablation;
pub mod analytic;
pub mod compare;
pub mod error;
pub mod gradient;
pub mod linalg;
pub mod mesh;
pub mod network;
pub mod operator;
pub mod oracle;
pub mod potential;
pub mod solver;
pub mod spectrum;

pub use compare::{compare_spinors, SpinorComparison};
pub use error::{DiracError, Result};
pub use gradient::{AdamState, OutputMode};
pub use mesh::{MeshKind, RadialMesh};
pub use network::{Architecture, NetParams};
pub use operator::{DiracOperator, RadialSpinor};
pub use potential::{PotentialSpec, Potentials, Units, WoodsSaxon};
pub use solver::{ConvergenceTrace, Method, SolveConfig, SolvedState};
