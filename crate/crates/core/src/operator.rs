//! The discretized radial Dirac operator
//!
//! ```text
//!         ⎡ U                    kin·(−D + κ/r) ⎤
//!   H  =  ⎢                                     ⎥
//!         ⎣ kin·(D + κ/r)        W − 2mc²       ⎦
//! ```
//!
//! acting on stacked spinors `[F; G]`. `U = V + S`, `W = V − S`, and `kin` is
//! `c` or `ħc`. With the mesh quadrature weights `w`, `diag(w, w)·H` is
//! symmetric, so `H` is self-adjoint in the weighted inner product.
//!
//! The operator is stored by its diagonals. Factorizations of the shifted
//! matrix `ε′I − H` use an interleaved `(F_1, G_1, F_2, G_2, …)` ordering
//! in which the matrix is banded with three sub- and super-diagonals.

use nalgebra::DMatrix;

use crate::error::{DiracError, Result};
use crate::linalg::BandLu;
use crate::mesh::RadialMesh;
use crate::potential::{Potentials, Units};

/// Large and small radial components sampled on the interior mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpinor {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl RadialSpinor {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Self {
        assert_eq!(f.len(), g.len(), "F and G must share a mesh");
        Self { f, g }
    }

    /// Split a stacked `[F; G]` vector.
    pub fn from_stacked(v: &[f64]) -> Self {
        assert!(
            v.len().is_multiple_of(2),
            "stacked spinor must have even length"
        );
        let (f, g) = v.split_at(v.len() / 2);
        Self::new(f.to_vec(), g.to_vec())
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.f.len());
        v.extend_from_slice(&self.f);
        v.extend_from_slice(&self.g);
        v
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn inner(&self, other: &RadialSpinor, mesh: &RadialMesh) -> f64 {
        mesh.inner_product(&self.f, &other.f) + mesh.inner_product(&self.g, &other.g)
    }

    pub fn norm_squared(&self, mesh: &RadialMesh) -> f64 {
        self.inner(self, mesh)
    }

    pub fn scale(&mut self, factor: f64) {
        self.f
            .iter_mut()
            .chain(self.g.iter_mut())
            .for_each(|x| *x *= factor);
    }

    /// Scale to unit weighted norm.
    pub fn normalize(&mut self, mesh: &RadialMesh) -> Result<()> {
        let norm = self.norm_squared(mesh);
        if !(norm > 1e-300) {
            return Err(DiracError::DegenerateTrialState { norm });
        }
        self.scale(1.0 / norm.sqrt());
        Ok(())
    }

    /// Flip the global sign so that the first local extremum of `F` is positive.
    pub fn align_phase(&mut self) {
        if let Some(sign) = first_extremum_sign(&self.f) {
            if sign < 0.0 {
                self.scale(-1.0);
            }
        }
    }
}

fn first_extremum_sign(f: &[f64]) -> Option<f64> {
    let peak = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return None;
    }
    // Ignore boundary noise below a small fraction of the peak.
    let floor = 1e-3 * peak;
    for i in 1..f.len().saturating_sub(1) {
        let (a, b, c) = (f[i - 1], f[i], f[i + 1]);
        if b.abs() > floor && (b - a) * (c - b) <= 0.0 && b.abs() >= a.abs() {
            return Some(b.signum());
        }
    }
    f.iter().copied().find(|x| x.abs() > floor).map(f64::signum)
}

#[derive(Debug, Clone)]
pub struct DiracOperator {
    mesh: RadialMesh,
    kappa: i32,
    units: Units,
    u: Vec<f64>,
    w: Vec<f64>,
    /// `κ / r_i`
    centrifugal: Vec<f64>,
}

impl DiracOperator {
    pub fn assemble(
        mesh: &RadialMesh,
        potentials: &Potentials,
        kappa: i32,
        units: Units,
    ) -> Result<Self> {
        if kappa == 0 {
            return Err(DiracError::InvalidQuantumNumbers(
                "κ = 0 is not a Dirac quantum number".into(),
            ));
        }
        if potentials.len() != mesh.len() || potentials.w.len() != mesh.len() {
            return Err(DiracError::LengthMismatch {
                expected: mesh.len(),
                actual: potentials.len(),
            });
        }
        let centrifugal = mesh.points().iter().map(|r| kappa as f64 / r).collect();
        Ok(Self {
            mesh: mesh.clone(),
            kappa,
            units,
            u: potentials.u.clone(),
            w: potentials.w.clone(),
            centrifugal,
        })
    }

    pub fn mesh(&self) -> &RadialMesh {
        &self.mesh
    }

    pub fn kappa(&self) -> i32 {
        self.kappa
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn potentials(&self) -> Potentials {
        Potentials {
            u: self.u.clone(),
            w: self.w.clone(),
        }
    }

    /// Number of mesh points per component.
    pub fn points(&self) -> usize {
        self.mesh.len()
    }

    /// Dimension of the stacked spinor space.
    pub fn dim(&self) -> usize {
        2 * self.mesh.len()
    }

    /// Visit every nonzero `H[(row, col)]` in stacked indexing.
    fn for_each_entry(&self, mut sink: impl FnMut(usize, usize, f64)) {
        let n = self.points();
        let kin = self.units.kinetic;
        let gap = self.units.dirac_gap();
        let s = self.mesh.stencil();
        for i in 0..n {
            sink(i, i, self.u[i]);
            sink(i, n + i, kin * self.centrifugal[i]);
            sink(n + i, i, kin * self.centrifugal[i]);
            sink(n + i, n + i, self.w[i] - gap);
            if i + 1 < n {
                sink(i, n + i + 1, -kin * s[i]);
                sink(n + i, i + 1, kin * s[i]);
            }
            if i > 0 {
                sink(i, n + i - 1, kin * s[i]);
                sink(n + i, i - 1, -kin * s[i]);
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        self.for_each_entry(|i, j, v| h[(i, j)] += v);
        h
    }

    /// `H v` for a stacked spinor.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.points();
        assert_eq!(v.len(), 2 * n);
        let kin = self.units.kinetic;
        let gap = self.units.dirac_gap();
        let (f, g) = v.split_at(n);
        let mut df = vec![0.0; n];
        let mut dg = vec![0.0; n];
        self.mesh.derivative_into(f, &mut df);
        self.mesh.derivative_into(g, &mut dg);
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            out[i] = self.u[i] * f[i] + kin * (self.centrifugal[i] * g[i] - dg[i]);
            out[n + i] = kin * (df[i] + self.centrifugal[i] * f[i]) + (self.w[i] - gap) * g[i];
        }
        out
    }

    /// `Hᵀ v` for a stacked spinor.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let n = self.points();
        assert_eq!(v.len(), 2 * n);
        let kin = self.units.kinetic;
        let gap = self.units.dirac_gap();
        let (f, g) = v.split_at(n);
        let mut dtf = vec![0.0; n];
        let mut dtg = vec![0.0; n];
        self.mesh.derivative_transpose_into(f, &mut dtf);
        self.mesh.derivative_transpose_into(g, &mut dtg);
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            out[i] = self.u[i] * f[i] + kin * (dtg[i] + self.centrifugal[i] * g[i]);
            out[n + i] = kin * (self.centrifugal[i] * f[i] - dtf[i]) + (self.w[i] - gap) * g[i];
        }
        out
    }

    /// `(|H| |v|)`, the entrywise-absolute product used for backward errors.
    pub(crate) fn apply_abs(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.for_each_entry(|i, j, h| out[i] += (h * v[j]).abs());
        out
    }

    /// LU-factorize `ε′I − H` for repeated solves.
    pub fn factorize_shifted(&self, shift: f64) -> Result<ShiftedInverse> {
        let n = self.points();
        let inter = |k: usize| if k < n { 2 * k } else { 2 * (k - n) + 1 };
        let lu = BandLu::factorize(2 * n, 3, 3, |sink| {
            for k in 0..2 * n {
                sink(k, k, shift);
            }
            self.for_each_entry(|i, j, v| sink(inter(i), inter(j), -v));
        })
        .map_err(|_| DiracError::SingularShift { shift })?;
        Ok(ShiftedInverse { shift, n, lu })
    }

    /// The small component from the large one,
    /// `G = kin·(D F + κF/r) / (ε − W + 2mc²)`, with `ε` held fixed.
    pub fn reconstruct_small(&self, f: &[f64], energy: f64) -> Result<Vec<f64>> {
        Ok(SmallComponentMap::new(self, energy)?.apply(f))
    }
}

/// The linear map `F ↦ G` for a fixed lagged energy.
#[derive(Debug, Clone)]
pub struct SmallComponentMap<'a> {
    op: &'a DiracOperator,
    /// `kin / (ε − W + 2mc²)`
    factor: Vec<f64>,
}

impl<'a> SmallComponentMap<'a> {
    pub fn new(op: &'a DiracOperator, energy: f64) -> Result<Self> {
        let gap = op.units.dirac_gap();
        let mut factor = Vec::with_capacity(op.points());
        for (i, w) in op.w.iter().enumerate() {
            let denominator = energy - w + gap;
            if !(denominator > 0.0) {
                return Err(DiracError::NonPositiveDenominator {
                    r: op.mesh.points()[i],
                    energy,
                    denominator,
                });
            }
            factor.push(op.units.kinetic / denominator);
        }
        Ok(Self { op, factor })
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; f.len()];
        self.apply_into(f, &mut g);
        g
    }

    pub fn apply_into(&self, f: &[f64], g: &mut [f64]) {
        self.op.mesh.derivative_into(f, g);
        for ((gi, fi), (c, k)) in g
            .iter_mut()
            .zip(f)
            .zip(self.factor.iter().zip(&self.op.centrifugal))
        {
            *gi = c * (*gi + k * fi);
        }
    }

    /// Adjoint action `Lᵀ y`.
    pub fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        let scaled: Vec<f64> = y.iter().zip(&self.factor).map(|(a, c)| a * c).collect();
        self.op.mesh.derivative_transpose_into(&scaled, out);
        for ((o, s), k) in out.iter_mut().zip(&scaled).zip(&self.op.centrifugal) {
            *o += k * s;
        }
    }
}

/// Factorization of `ε′I − H`; applies the inverse Hamiltonian
/// `(ε′ − H)⁻¹` and its transpose.
#[derive(Debug, Clone)]
pub struct ShiftedInverse {
    shift: f64,
    n: usize,
    lu: BandLu,
}

impl ShiftedInverse {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        self.solve(v, false)
    }

    pub fn apply_inverse_transpose(&self, v: &[f64]) -> Vec<f64> {
        self.solve(v, true)
    }

    fn solve(&self, v: &[f64], transpose: bool) -> Vec<f64> {
        let n = self.n;
        assert_eq!(v.len(), 2 * n);
        let mut x = vec![0.0; 2 * n];
        for i in 0..n {
            x[2 * i] = v[i];
            x[2 * i + 1] = v[n + i];
        }
        if transpose {
            self.lu.solve_transpose_in_place(&mut x);
        } else {
            self.lu.solve_in_place(&mut x);
        }
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            out[i] = x[2 * i];
            out[n + i] = x[2 * i + 1];
        }
        out
    }
}
