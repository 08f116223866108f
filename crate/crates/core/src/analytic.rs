//! Exact bound states of the relativistic hydrogen-like atom (atomic units)
//! and node counting for state identification.
//!
//! The radial functions are `F, G = e^{-ρ} ρ^s Σ_q (a_q, b_q) ρ^q` with
//! `ρ = r √(c⁴ − E²)/c`, `s = √(κ² − (Z/c)²)` and
//! `μ = √((c² − E)/(c² + E))`. The coefficients share a common factor
//! `C_q` obeying `C_q = 2(q − n_r − 1)/(q(q + 2s)) C_{q−1}`, where
//! `n_r = n − j − 1/2` is the radial quantum number, and
//!
//! ```text
//! a_q = C_q ((s + q − κ)/μ + Z/c)
//! b_q = C_q (s + q + κ − Z/(cμ))
//! ```

use crate::error::{DiracError, Result};
use crate::mesh::RadialMesh;
use crate::operator::RadialSpinor;

#[derive(Debug, Clone, PartialEq)]
pub struct HydrogenState {
    pub n: u32,
    pub kappa: i32,
    pub charge: f64,
    pub c: f64,
    /// Total energy including the rest mass.
    pub total_energy: f64,
    /// `E − c²`.
    pub energy: f64,
    pub s: f64,
    /// `√(c⁴ − E²)/c`, so that `ρ = rho_scale · r`.
    pub rho_scale: f64,
    pub mu: f64,
    pub c_coeffs: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// `n_r = n − |κ|` when valid.
fn radial_quantum_number(n: u32, kappa: i32, charge: f64, c: f64) -> Result<u32> {
    if n == 0 {
        return Err(DiracError::InvalidQuantumNumbers("n must be ≥ 1".into()));
    }
    if kappa == 0 {
        return Err(DiracError::InvalidQuantumNumbers(
            "κ must be nonzero".into(),
        ));
    }
    let k = kappa.unsigned_abs();
    if k > n || (kappa > 0 && k == n) {
        return Err(DiracError::InvalidQuantumNumbers(format!(
            "κ = {kappa} is not allowed for n = {n}"
        )));
    }
    if !(charge > 0.0 && c > 0.0) {
        return Err(DiracError::InvalidQuantumNumbers(
            "charge and speed of light must be positive".into(),
        ));
    }
    if charge / c >= k as f64 {
        return Err(DiracError::InvalidQuantumNumbers(format!(
            "Zα = {} must be below |κ| = {k}",
            charge / c
        )));
    }
    Ok(n - k)
}

/// Bound-state energy `ε = E − c²` in Hartree.
pub fn hydrogen_energy(n: u32, kappa: i32, charge: f64, c: f64) -> Result<f64> {
    radial_quantum_number(n, kappa, charge, c)?;
    Ok(binding_energy(n, kappa, charge, c))
}

/// `x = (Zα)² / (n_r + s)²`, with `E = c² / √(1 + x)`.
fn energy_ratio(n: u32, kappa: i32, charge: f64, c: f64) -> f64 {
    // j + 1/2 = |κ|
    let za = charge / c;
    let k = kappa.unsigned_abs() as f64;
    let nr = n as f64 - k;
    let denom = nr + (k * k - za * za).sqrt();
    za * za / (denom * denom)
}

fn total_energy(n: u32, kappa: i32, charge: f64, c: f64) -> f64 {
    c * c / (1.0 + energy_ratio(n, kappa, charge, c)).sqrt()
}

/// `E − c²` without cancellation: `c²(1/√(1+x) − 1) = −c² x / (√(1+x)(1 + √(1+x)))`.
fn binding_energy(n: u32, kappa: i32, charge: f64, c: f64) -> f64 {
    let x = energy_ratio(n, kappa, charge, c);
    let root = (1.0 + x).sqrt();
    -c * c * x / (root * (1.0 + root))
}

impl HydrogenState {
    pub fn new(n: u32, kappa: i32, charge: f64, c: f64) -> Result<Self> {
        let nr = radial_quantum_number(n, kappa, charge, c)?;
        let total = total_energy(n, kappa, charge, c);
        let za = charge / c;
        let kf = kappa as f64;
        let s = (kf * kf - za * za).sqrt();
        let c2 = c * c;
        let rho_scale = (c2 * c2 - total * total).sqrt() / c;
        let mu = ((c2 - total) / (c2 + total)).sqrt();

        let mut c_coeffs = Vec::with_capacity(nr as usize + 1);
        c_coeffs.push(1.0);
        for q in 1..=nr {
            let qf = q as f64;
            let prev = c_coeffs[q as usize - 1];
            c_coeffs.push(2.0 * (qf - nr as f64 - 1.0) / (qf * (qf + 2.0 * s)) * prev);
        }
        let a = c_coeffs
            .iter()
            .enumerate()
            .map(|(q, cq)| cq * ((s + q as f64 - kf) / mu + za))
            .collect();
        let b = c_coeffs
            .iter()
            .enumerate()
            .map(|(q, cq)| cq * (s + q as f64 + kf - za / mu))
            .collect();
        Ok(Self {
            n,
            kappa,
            charge,
            c,
            total_energy: total,
            energy: binding_energy(n, kappa, charge, c),
            s,
            rho_scale,
            mu,
            c_coeffs,
            a,
            b,
        })
    }

    /// Orbital angular momentum `l`.
    pub fn l(&self) -> u32 {
        orbital_l(self.kappa)
    }

    /// Unnormalized `(F(r), G(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let rho = self.rho_scale * r;
        let envelope = (-rho).exp() * rho.powf(self.s);
        let (mut f, mut g, mut p) = (0.0, 0.0, 1.0);
        for (a, b) in self.a.iter().zip(&self.b) {
            f += a * p;
            g += b * p;
            p *= rho;
        }
        (envelope * f, envelope * g)
    }

    /// Unnormalized `(dF/dr, dG/dr)`.
    pub fn eval_derivative(&self, r: f64) -> (f64, f64) {
        let rho = self.rho_scale * r;
        let envelope = (-rho).exp() * rho.powf(self.s);
        let (mut df, mut dg) = (0.0, 0.0);
        for (q, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            // d/dρ [ρ^{s+q} e^{-ρ}] = ((s+q)/ρ − 1) ρ^{s+q} e^{-ρ}
            let term = ((self.s + q as f64) / rho - 1.0) * rho.powi(q as i32);
            df += a * term;
            dg += b * term;
        }
        (
            self.rho_scale * envelope * df,
            self.rho_scale * envelope * dg,
        )
    }

    /// Samples on the mesh, normalized with the mesh quadrature and with the
    /// first extremum of `F` positive.
    pub fn spinor(&self, mesh: &RadialMesh) -> Result<RadialSpinor> {
        let (f, g) = mesh.points().iter().map(|&r| self.eval(r)).unzip();
        let mut spinor = RadialSpinor::new(f, g);
        spinor.normalize(mesh)?;
        spinor.align_phase();
        Ok(spinor)
    }
}

pub fn hydrogen_wavefunction(
    n: u32,
    kappa: i32,
    charge: f64,
    c: f64,
    mesh: &RadialMesh,
) -> Result<RadialSpinor> {
    HydrogenState::new(n, kappa, charge, c)?.spinor(mesh)
}

/// `l` from `κ`: `l = −κ − 1` for negative `κ`, `l = κ` for positive.
pub fn orbital_l(kappa: i32) -> u32 {
    if kappa < 0 {
        (-kappa - 1) as u32
    } else {
        kappa as u32
    }
}

/// `2j + 1` from `κ`.
pub fn degeneracy(kappa: i32) -> u32 {
    2 * kappa.unsigned_abs()
}

/// Sign changes of `F` after discarding samples with magnitude below
/// `1e-6·max|F|`.
pub fn count_nodes(f: &[f64]) -> Result<usize> {
    count_nodes_above(f, 1e-6)
}

/// Sign changes of `F` among samples whose magnitude exceeds
/// `fraction·max|F|`.
pub fn count_nodes_above(f: &[f64], fraction: f64) -> Result<usize> {
    let peak = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(DiracError::ZeroInput);
    }
    let floor = fraction * peak;
    let mut last_sign = 0.0;
    let mut nodes = 0;
    for x in f.iter().filter(|x| x.abs() > floor) {
        let sign = x.signum();
        if last_sign != 0.0 && sign != last_sign {
            nodes += 1;
        }
        last_sign = sign;
    }
    Ok(nodes)
}
