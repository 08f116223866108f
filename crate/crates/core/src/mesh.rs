//! Radial grids, their first-derivative stencils and quadrature weights.
//!
//! Only interior points are stored. Both endpoints carry Dirichlet conditions
//! and are dropped from every vector and matrix, so a mesh with `M` intervals
//! has `M - 1` points.

use nalgebra::DMatrix;

use crate::error::{DiracError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    /// `r(x) = e^x - e^{x0}` with `x` uniform.
    Log {
        x0: f64,
        dx: f64,
    },
    Uniform {
        dr: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    kind: MeshKind,
    intervals: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// `1 / (2 dr/dx · Δx)` per point: the off-diagonal magnitude of row `i` of `D`.
    stencil: Vec<f64>,
}

impl RadialMesh {
    /// Log mesh on `x ∈ [x0, x_max]` split into `intervals` steps.
    pub fn log(x0: f64, x_max: f64, intervals: usize) -> Result<Self> {
        if intervals < 3 {
            return Err(DiracError::InvalidMesh(format!(
                "need at least 3 intervals, got {intervals}"
            )));
        }
        if !(x0.is_finite() && x_max.is_finite() && x0 < x_max) {
            return Err(DiracError::InvalidMesh(format!(
                "log mesh bounds must satisfy x0 < x_max (got {x0}, {x_max})"
            )));
        }
        let dx = (x_max - x0) / intervals as f64;
        let origin = x0.exp();
        let mut points = Vec::with_capacity(intervals - 1);
        let mut weights = Vec::with_capacity(intervals - 1);
        let mut stencil = Vec::with_capacity(intervals - 1);
        for i in 1..intervals {
            let ex = (x0 + i as f64 * dx).exp();
            points.push(ex - origin);
            weights.push(ex * dx);
            stencil.push(1.0 / (2.0 * dx * ex));
        }
        Ok(Self {
            kind: MeshKind::Log { x0, dx },
            intervals,
            points,
            weights,
            stencil,
        })
    }

    /// Log mesh whose outer boundary sits at radius `r_max`.
    pub fn log_with_box(x0: f64, r_max: f64, intervals: usize) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(DiracError::InvalidMesh(format!(
                "box radius must be positive, got {r_max}"
            )));
        }
        Self::log(x0, (r_max + x0.exp()).ln(), intervals)
    }

    pub fn uniform(r_max: f64, intervals: usize) -> Result<Self> {
        if intervals < 3 {
            return Err(DiracError::InvalidMesh(format!(
                "need at least 3 intervals, got {intervals}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(DiracError::InvalidMesh(format!(
                "box radius must be positive, got {r_max}"
            )));
        }
        let dr = r_max / intervals as f64;
        let n = intervals - 1;
        Ok(Self {
            kind: MeshKind::Uniform { dr },
            intervals,
            points: (1..intervals).map(|i| i as f64 * dr).collect(),
            weights: vec![dr; n],
            stencil: vec![1.0 / (2.0 * dr); n],
        })
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    /// Number of intervals `M`; the mesh has `M - 1` interior points.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Outer Dirichlet boundary.
    pub fn r_max(&self) -> f64 {
        match self.kind {
            MeshKind::Log { x0, dx } => (x0 + self.intervals as f64 * dx).exp() - x0.exp(),
            MeshKind::Uniform { dr } => self.intervals as f64 * dr,
        }
    }

    pub(crate) fn stencil(&self) -> &[f64] {
        &self.stencil
    }

    /// Replace the quadrature weights, keeping points and stencil. Used to
    /// probe weight sensitivity of Rayleigh quotients.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(DiracError::LengthMismatch {
                expected: self.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(DiracError::InvalidMesh("weights must be positive".into()));
        }
        Ok(Self {
            weights,
            ..self.clone()
        })
    }

    /// `(D f)_i` with the 3-point central stencil and zero Dirichlet values
    /// outside the interior.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.derivative_into(f, &mut out);
        out
    }

    pub fn derivative_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(f.len(), n, "sample length must match mesh");
        assert_eq!(out.len(), n);
        for i in 0..n {
            let next = if i + 1 < n { f[i + 1] } else { 0.0 };
            let prev = if i > 0 { f[i - 1] } else { 0.0 };
            out[i] = self.stencil[i] * (next - prev);
        }
    }

    /// `(Dᵀ g)_j`.
    pub fn derivative_transpose_into(&self, g: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(g.len(), n, "sample length must match mesh");
        assert_eq!(out.len(), n);
        // D[i][i+1] = s_i and D[i][i-1] = -s_i, so column j collects
        // s_{j-1} g_{j-1} - s_{j+1} g_{j+1}.
        for j in 0..n {
            let from_prev = if j > 0 {
                self.stencil[j - 1] * g[j - 1]
            } else {
                0.0
            };
            let from_next = if j + 1 < n {
                self.stencil[j + 1] * g[j + 1]
            } else {
                0.0
            };
            out[j] = from_prev - from_next;
        }
    }

    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            if i + 1 < n {
                d[(i, i + 1)] = self.stencil[i];
            }
            if i > 0 {
                d[(i, i - 1)] = -self.stencil[i];
            }
        }
        d
    }

    /// `Σ_i w_i a_i b_i`. Accepts single-component samples (length `n`) or
    /// stacked spinors `[F; G]` (length `2n`), in which case the F·F and G·G
    /// sums are added.
    pub fn inner_product(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len(), "inner product of mismatched samples");
        let n = self.len();
        assert!(
            a.len() == n || a.len() == 2 * n,
            "samples of length {} do not live on a mesh of {n} points",
            a.len()
        );
        a.chunks(n)
            .zip(b.chunks(n))
            .map(|(ac, bc)| {
                ac.iter()
                    .zip(bc)
                    .zip(&self.weights)
                    .map(|((x, y), w)| w * x * y)
                    .sum::<f64>()
            })
            .sum()
    }

    /// `W v` for a single component or a stacked spinor.
    pub fn weighted(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        v.iter()
            .enumerate()
            .map(|(k, x)| self.weights[k % n] * x)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_log_mesh_box() {
        let mesh = RadialMesh::log(-10.0, 4.9, 1700).unwrap();
        assert_eq!(mesh.len(), 1699);
        let expected = 4.9f64.exp() - (-10.0f64).exp();
        assert!((mesh.r_max() - expected).abs() < 1e-10);
        // The conceptual r(x0) boundary is exactly zero.
        let x0: f64 = -10.0;
        assert_eq!(x0.exp() - x0.exp(), 0.0);
        assert!(mesh.points()[0] > 0.0);
    }

    #[test]
    fn small_log_mesh_point() {
        let mesh = RadialMesh::log(0.0, 1.0, 4).unwrap();
        assert!((mesh.points()[1] - (0.5f64.exp() - 1.0)).abs() < 1e-15);
        assert!((mesh.points()[1] - 0.648721).abs() < 1e-6);
    }

    #[test]
    fn log_with_box_hits_radius() {
        let mesh = RadialMesh::log_with_box(-10.0, 20.0, 1700).unwrap();
        assert!((mesh.r_max() - 20.0).abs() < 1e-10);
    }

    #[test]
    fn uniform_nuclear_spacing() {
        let mesh = RadialMesh::uniform(20.0, 2000).unwrap();
        match mesh.kind() {
            MeshKind::Uniform { dr } => assert!((dr - 0.01).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert_eq!(mesh.len(), 1999);
    }

    #[test]
    fn uniform_derivative_of_linear_function() {
        let mesh = RadialMesh::uniform(4.0, 4).unwrap();
        let d = mesh.derivative_matrix();
        assert_eq!(d[(0, 1)], 0.5);
        assert_eq!(d[(1, 0)], -0.5);
        let slope = mesh.derivative(mesh.points());
        assert_eq!(slope[1], 1.0);
    }

    #[test]
    fn uniform_derivative_is_antisymmetric() {
        let mesh = RadialMesh::uniform(3.7, 57).unwrap();
        let d = mesh.derivative_matrix();
        assert_eq!(d.transpose(), -d);
    }

    #[test]
    fn weighted_log_derivative_is_antisymmetric() {
        let mesh = RadialMesh::log(-6.0, 2.0, 40).unwrap();
        let d = mesh.derivative_matrix();
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(mesh.weights()));
        let wd = &w * &d;
        let asym = (&wd + wd.transpose()).abs().max();
        assert!(asym < 1e-14, "W D + (W D)^T = {asym}");
    }

    #[test]
    fn constant_riemann_sum() {
        let mesh = RadialMesh::uniform(1.0, 10).unwrap();
        let ones = vec![1.0; mesh.len()];
        assert!((mesh.inner_product(&ones, &ones) - 0.9).abs() < 1e-14);
    }

    #[test]
    fn transpose_matches_dense() {
        let mesh = RadialMesh::log(-3.0, 1.0, 12).unwrap();
        let g: Vec<f64> = (0..mesh.len()).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut out = vec![0.0; mesh.len()];
        mesh.derivative_transpose_into(&g, &mut out);
        let dense = mesh.derivative_matrix().transpose() * nalgebra::DVector::from_column_slice(&g);
        for (a, b) in out.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RadialMesh::log(1.0, 0.0, 10).is_err());
        assert!(RadialMesh::log(0.0, 1.0, 2).is_err());
        assert!(RadialMesh::uniform(0.0, 10).is_err());
        assert!(RadialMesh::uniform(-1.0, 10).is_err());
    }

    #[test]
    fn log_derivative_converges_at_second_order() {
        // Max error of D e^{-r} against -e^{-r} away from the boundaries.
        let err = |m: usize| {
            let mesh = RadialMesh::log(-6.0, 2.5, m).unwrap();
            let f: Vec<f64> = mesh.points().iter().map(|r| (-r).exp()).collect();
            let df = mesh.derivative(&f);
            mesh.points()
                .iter()
                .zip(&df)
                .skip(1)
                .take(mesh.len() - 2)
                .map(|(r, d)| (d + (-r).exp()).abs())
                .fold(0.0, f64::max)
        };
        let coarse = err(400);
        let fine = err(800);
        let order = (coarse / fine).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn log_quadrature_of_decaying_exponential() {
        let mesh = RadialMesh::log(-10.0, 4.9, 1700).unwrap();
        let f: Vec<f64> = mesh.points().iter().map(|r| (-2.0 * r).exp()).collect();
        let ones = vec![1.0; mesh.len()];
        let integral = mesh.inner_product(&f, &ones);
        let exact = 0.5 * (1.0 - (-2.0 * mesh.r_max()).exp());
        assert!((integral - exact).abs() < 1e-4, "{integral} vs {exact}");
    }
}
