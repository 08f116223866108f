//! Vector and scalar potentials for Coulomb and Woods-Saxon systems, and the
//! unit systems they are expressed in.
//!
//! Potentials are carried as the combinations `U = V + S` and `W = V - S`,
//! which is what enters the Dirac operator.

use crate::error::{DiracError, Result};
use crate::mesh::RadialMesh;

/// Speed of light in Hartree atomic units.
pub const SPEED_OF_LIGHT_AU: f64 = 137.035999;
/// ħc in MeV·fm.
pub const HBAR_C_MEV_FM: f64 = 197.32698;
/// Default nucleon rest energy in MeV.
pub const NUCLEON_MASS_MEV: f64 = 939.0;

/// Unit constants of the radial Dirac operator: the factor multiplying the
/// derivative blocks (`c` in a.u., `ħc` in MeV·fm) and the rest energy `mc²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub kinetic: f64,
    pub rest_energy: f64,
}

impl Units {
    /// Hartree atomic units with electron mass 1.
    pub fn atomic(c: f64) -> Self {
        Self {
            kinetic: c,
            rest_energy: c * c,
        }
    }

    pub fn nuclear(hbar_c: f64, rest_energy: f64) -> Self {
        Self {
            kinetic: hbar_c,
            rest_energy,
        }
    }

    pub fn dirac_gap(&self) -> f64 {
        2.0 * self.rest_energy
    }
}

impl Default for Units {
    fn default() -> Self {
        Self::atomic(SPEED_OF_LIGHT_AU)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WoodsSaxon {
    pub mass_number: u32,
    pub neutrons: u32,
    pub protons: u32,
    /// Depth parameter `V'` (MeV).
    pub depth: f64,
    /// Isospin asymmetry coefficient `κ'`.
    pub asymmetry: f64,
    pub r0: f64,
    pub diffuseness: f64,
    pub r0_ls: f64,
    pub diffuseness_ls: f64,
    /// Ratio `λ_n` between the `V - S` and `V + S` depths.
    pub lambda: f64,
}

impl WoodsSaxon {
    /// Neutron potential with the standard Koepf-Ring parameter set.
    pub fn neutron(neutrons: u32, protons: u32) -> Self {
        Self {
            mass_number: neutrons + protons,
            neutrons,
            protons,
            depth: -71.28,
            asymmetry: 0.462,
            r0: 1.233,
            diffuseness: 0.615,
            r0_ls: 1.144,
            diffuseness_ls: 0.648,
            lambda: 11.12,
        }
    }

    pub fn oxygen16() -> Self {
        Self::neutron(8, 8)
    }

    pub fn lead208() -> Self {
        Self::neutron(126, 82)
    }

    /// `V_N⁰ = V'(1 - κ'(N - Z)/(N + Z))`.
    pub fn central_depth(&self) -> f64 {
        let n = self.neutrons as f64;
        let z = self.protons as f64;
        self.depth * (1.0 - self.asymmetry * (n - z) / (n + z))
    }

    pub fn radius(&self) -> f64 {
        self.r0 * (self.mass_number as f64).cbrt()
    }

    pub fn radius_ls(&self) -> f64 {
        self.r0_ls * (self.mass_number as f64).cbrt()
    }

    pub fn u(&self, r: f64) -> f64 {
        self.central_depth() / (1.0 + ((r - self.radius()) / self.diffuseness).exp())
    }

    pub fn w(&self, r: f64) -> f64 {
        -self.lambda * self.central_depth()
            / (1.0 + ((r - self.radius_ls()) / self.diffuseness_ls).exp())
    }

    fn validate(&self) -> Result<()> {
        if self.mass_number != self.neutrons + self.protons {
            return Err(DiracError::InvalidPotential(format!(
                "A = {} but N + Z = {}",
                self.mass_number,
                self.neutrons + self.protons
            )));
        }
        if self.mass_number == 0 {
            return Err(DiracError::InvalidPotential("empty nucleus".into()));
        }
        if !(self.diffuseness > 0.0 && self.diffuseness_ls > 0.0) {
            return Err(DiracError::InvalidPotential(
                "diffuseness parameters must be positive".into(),
            ));
        }
        let all = [self.depth, self.asymmetry, self.r0, self.r0_ls, self.lambda];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DiracError::InvalidPotential("non-finite parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    /// `V = -Z/r`, `S = 0` in atomic units.
    Coulomb {
        charge: f64,
    },
    WoodsSaxon(WoodsSaxon),
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Coulomb { charge } => {
                if *charge > 0.0 && charge.is_finite() {
                    Ok(())
                } else {
                    Err(DiracError::InvalidPotential(format!(
                        "Coulomb charge must be positive, got {charge}"
                    )))
                }
            }
            PotentialSpec::WoodsSaxon(ws) => ws.validate(),
        }
    }

    /// `(V + S, V - S)` at radius `r`.
    pub fn at(&self, r: f64) -> (f64, f64) {
        match self {
            PotentialSpec::Coulomb { charge } => {
                let v = -charge / r;
                (v, v)
            }
            PotentialSpec::WoodsSaxon(ws) => (ws.u(r), ws.w(r)),
        }
    }

    pub fn evaluate(&self, mesh: &RadialMesh) -> Result<Potentials> {
        self.validate()?;
        let (u, w) = mesh.points().iter().map(|&r| self.at(r)).unzip();
        Ok(Potentials { u, w })
    }
}

/// `U = V + S` and `W = V - S` sampled on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl Potentials {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Zero potential, for free-particle checks.
    pub fn zero(mesh: &RadialMesh) -> Self {
        Self {
            u: vec![0.0; mesh.len()],
            w: vec![0.0; mesh.len()],
        }
    }
}
