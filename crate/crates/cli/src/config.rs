//! Run configuration: a sectioned TOML file whose every key is optional.
//! Missing keys take defaults that depend on the kind of system, so the
//! file is parsed into optional fields first and then resolved.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use diracnet_core::potential::{HBAR_C_MEV_FM, NUCLEON_MASS_MEV, SPEED_OF_LIGHT_AU};
use diracnet_core::solver::{ATOMIC_TOLERANCE, NUCLEAR_TOLERANCE};
use diracnet_core::{Architecture, Method, OutputMode, Units, WoodsSaxon};
use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    training: RawTraining,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    kind: Option<String>,
    kappa: Option<Vec<i32>>,
    particles: Option<u32>,
    charge: Option<f64>,
    speed_of_light: Option<f64>,
    nucleus: Option<String>,
    neutrons: Option<u32>,
    protons: Option<u32>,
    hbar_c: Option<f64>,
    nucleon_mass: Option<f64>,
    depth: Option<f64>,
    asymmetry: Option<f64>,
    r0: Option<f64>,
    diffuseness: Option<f64>,
    r0_ls: Option<f64>,
    diffuseness_ls: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    kind: Option<String>,
    x0: Option<f64>,
    intervals: Option<usize>,
    r_max: Option<f64>,
    boxes: Option<Vec<f64>>,
    orthonormal_box: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    architecture: Option<String>,
    width: Option<usize>,
    output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraining {
    method: Option<String>,
    n: Option<u32>,
    levels: Option<u32>,
    shift: Option<f64>,
    shifts: Option<Vec<ShiftEntry>>,
    max_epochs: Option<usize>,
    ground_epochs: Option<usize>,
    window: Option<usize>,
    tolerance: Option<f64>,
    learning_rate: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    wavefunctions: Option<bool>,
    traces: Option<bool>,
    checkpoints: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Hydrogen,
    WoodsSaxon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Log,
    Uniform,
}

/// `ε′` for one state, identified by `κ` and `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftEntry {
    pub kappa: i32,
    pub n: u32,
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub kappa: Vec<i32>,
    /// Particles placed by the `spectrum` command.
    pub particles: u32,
    pub charge: f64,
    pub speed_of_light: f64,
    pub nucleus: Option<String>,
    pub neutrons: u32,
    pub protons: u32,
    pub hbar_c: f64,
    pub nucleon_mass: f64,
    pub depth: f64,
    pub asymmetry: f64,
    pub r0: f64,
    pub diffuseness: f64,
    pub r0_ls: f64,
    pub diffuseness_ls: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshConfig {
    pub kind: MeshKind,
    pub x0: f64,
    pub intervals: usize,
    /// Box used for every state when set.
    pub r_max: Option<f64>,
    /// Per-`n` boxes for hydrogen when `r_max` is unset; the last entry
    /// covers higher `n`.
    pub boxes: Vec<f64>,
    /// Common box for orthonormal chains and spectra.
    pub orthonormal_box: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkConfig {
    pub architecture: String,
    pub width: usize,
    pub output: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingConfig {
    pub method: String,
    /// Principal quantum number (hydrogen) or position in the `κ` ladder
    /// (Woods-Saxon).
    pub n: u32,
    /// Levels per `κ` for the `benchmark` command.
    pub levels: u32,
    pub shift: Option<f64>,
    pub shifts: Vec<ShiftEntry>,
    pub max_epochs: usize,
    /// Epoch cap for the lowest state that seeds an orthonormal chain.
    pub ground_epochs: usize,
    pub window: usize,
    pub tolerance: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub wavefunctions: bool,
    pub traces: bool,
    pub checkpoints: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub system: SystemConfig,
    pub mesh: MeshConfig,
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    pub output: OutputConfig,
}

const HYDROGEN_SHIFTS: [f64; 6] = [-0.51, -0.13, -0.06, -0.04, -0.021, -0.015];
const HYDROGEN_BOXES: [f64; 6] = [20.0, 40.0, 40.0, 60.0, 90.0, 100.0];

fn nucleus_preset(name: &str) -> Result<(WoodsSaxon, Vec<ShiftEntry>)> {
    let entry = |kappa, n, shift| ShiftEntry { kappa, n, shift };
    match name {
        "o16" => Ok((
            WoodsSaxon::oxygen16(),
            vec![entry(-1, 1, -45.0), entry(-2, 1, -28.0), entry(1, 1, -20.0)],
        )),
        "pb208" => Ok((
            WoodsSaxon::lead208(),
            vec![
                entry(-1, 1, -60.0),
                entry(-1, 2, -45.0),
                entry(-1, 3, -20.0),
            ],
        )),
        other => bail!("unknown nucleus `{other}` (expected o16 or pb208)"),
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Self::parse(&text).with_context(|| format!("in config {}", p.display()))
            }
            None => Self::resolve(RawConfig::default()),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let kind = match raw.system.kind.as_deref().unwrap_or("hydrogen") {
            "hydrogen" => SystemKind::Hydrogen,
            "woods_saxon" => SystemKind::WoodsSaxon,
            other => bail!("system.kind must be `hydrogen` or `woods_saxon`, got `{other}`"),
        };
        let s = raw.system;
        let hydrogen = kind == SystemKind::Hydrogen;

        let (ws, preset_shifts, nucleus) = if hydrogen {
            (WoodsSaxon::lead208(), Vec::new(), None)
        } else {
            let name = s.nucleus.clone().unwrap_or_else(|| "pb208".into());
            let (ws, shifts) = nucleus_preset(&name)?;
            (ws, shifts, Some(name))
        };
        let neutrons = s.neutrons.unwrap_or(ws.neutrons);
        let protons = s.protons.unwrap_or(ws.protons);
        let default_kappa = if hydrogen {
            vec![-1]
        } else {
            vec![-1, 1, -2, 2, -3, 3, -4, 4, -5, 5, -6, 6, -7]
        };
        let system = SystemConfig {
            kind,
            kappa: s.kappa.unwrap_or(default_kappa),
            particles: s.particles.unwrap_or(if hydrogen { 1 } else { neutrons }),
            charge: s.charge.unwrap_or(1.0),
            speed_of_light: s.speed_of_light.unwrap_or(SPEED_OF_LIGHT_AU),
            nucleus,
            neutrons,
            protons,
            hbar_c: s.hbar_c.unwrap_or(HBAR_C_MEV_FM),
            nucleon_mass: s.nucleon_mass.unwrap_or(NUCLEON_MASS_MEV),
            depth: s.depth.unwrap_or(ws.depth),
            asymmetry: s.asymmetry.unwrap_or(ws.asymmetry),
            r0: s.r0.unwrap_or(ws.r0),
            diffuseness: s.diffuseness.unwrap_or(ws.diffuseness),
            r0_ls: s.r0_ls.unwrap_or(ws.r0_ls),
            diffuseness_ls: s.diffuseness_ls.unwrap_or(ws.diffuseness_ls),
            lambda: s.lambda.unwrap_or(ws.lambda),
        };

        let m = raw.mesh;
        let mesh_kind = match m
            .kind
            .as_deref()
            .unwrap_or(if hydrogen { "log" } else { "uniform" })
        {
            "log" => MeshKind::Log,
            "uniform" => MeshKind::Uniform,
            other => bail!("mesh.kind must be `log` or `uniform`, got `{other}`"),
        };
        let mesh = MeshConfig {
            kind: mesh_kind,
            x0: m.x0.unwrap_or(-10.0),
            intervals: m.intervals.unwrap_or(if hydrogen { 1700 } else { 2000 }),
            r_max: m.r_max.or(if hydrogen { None } else { Some(20.0) }),
            boxes: m.boxes.unwrap_or_else(|| HYDROGEN_BOXES.to_vec()),
            orthonormal_box: m
                .orthonormal_box
                .unwrap_or(if hydrogen { 100.0 } else { 20.0 }),
        };

        let n = raw.network;
        let network = NetworkConfig {
            architecture: n
                .architecture
                .unwrap_or_else(|| Architecture::FullyConnected.name().into()),
            width: n.width.unwrap_or(diracnet_core::network::DEFAULT_WIDTH),
            output: n
                .output
                .unwrap_or_else(|| OutputMode::RadialQuotient.name().into()),
        };

        let t = raw.training;
        let default_shifts = if hydrogen {
            HYDROGEN_SHIFTS
                .iter()
                .enumerate()
                .map(|(i, &shift)| ShiftEntry {
                    kappa: -1,
                    n: i as u32 + 1,
                    shift,
                })
                .collect()
        } else {
            preset_shifts
        };
        let max_epochs = t.max_epochs.unwrap_or(200_000);
        let training = TrainingConfig {
            method: t.method.unwrap_or_else(|| Method::Inverse.name().into()),
            n: t.n.unwrap_or(1),
            levels: t.levels.unwrap_or(if hydrogen { 6 } else { 1 }),
            shift: t.shift,
            shifts: t.shifts.unwrap_or(default_shifts),
            max_epochs,
            ground_epochs: t.ground_epochs.unwrap_or(max_epochs),
            window: t.window.unwrap_or(500),
            tolerance: t.tolerance.unwrap_or(if hydrogen {
                ATOMIC_TOLERANCE
            } else {
                NUCLEAR_TOLERANCE
            }),
            learning_rate: t.learning_rate.unwrap_or(1e-3),
            seed: t.seed.unwrap_or(0),
        };

        let o = raw.output;
        let output = OutputConfig {
            dir: o.dir.unwrap_or_else(|| PathBuf::from("out")),
            wavefunctions: o.wavefunctions.unwrap_or(true),
            traces: o.traces.unwrap_or(true),
            checkpoints: o.checkpoints.unwrap_or(true),
        };

        let config = Self {
            system,
            mesh,
            network,
            training,
            output,
        };
        config.validate()?;
        Ok(config)
    }

    /// Apply command-line overrides and re-check.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        out: Option<PathBuf>,
        max_epochs: Option<usize>,
    ) -> Result<Self> {
        if let Some(seed) = seed {
            self.training.seed = seed;
        }
        if let Some(out) = out {
            self.output.dir = out;
        }
        if let Some(m) = max_epochs {
            self.training.max_epochs = m;
            self.training.ground_epochs = self.training.ground_epochs.min(m);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.kappa.is_empty() {
            bail!("system.kappa must list at least one κ");
        }
        if let Some(k) = s.kappa.iter().find(|k| **k == 0) {
            bail!("system.kappa contains {k}; κ must be nonzero");
        }
        if s.particles == 0 {
            bail!("system.particles must be positive");
        }
        if self.hydrogen() {
            if !(s.charge > 0.0) {
                bail!("system.charge must be positive");
            }
            if !(s.speed_of_light > 0.0) {
                bail!("system.speed_of_light must be positive");
            }
        } else {
            if s.neutrons + s.protons == 0 {
                bail!("the nucleus must contain nucleons");
            }
            if !(s.hbar_c > 0.0 && s.nucleon_mass > 0.0) {
                bail!("system.hbar_c and system.nucleon_mass must be positive");
            }
        }
        let m = &self.mesh;
        if m.intervals < 4 {
            bail!("mesh.intervals must be at least 4");
        }
        if m.kind == MeshKind::Uniform && m.r_max.is_none() {
            bail!("a uniform mesh needs mesh.r_max");
        }
        if m.boxes.is_empty() || m.boxes.iter().chain(m.r_max.iter()).any(|b| !(*b > 0.0)) {
            bail!("mesh boxes must be positive");
        }
        if !(m.orthonormal_box > 0.0) {
            bail!("mesh.orthonormal_box must be positive");
        }
        self.architecture()?;
        self.output_mode()?;
        if self.network.width == 0 {
            bail!("network.width must be positive");
        }
        self.method()?;
        let t = &self.training;
        if t.n == 0 || t.levels == 0 {
            bail!("training.n and training.levels must be positive");
        }
        if t.max_epochs == 0 || t.ground_epochs == 0 {
            bail!("epoch caps must be positive");
        }
        if t.window < 2 {
            bail!("training.window must be at least 2");
        }
        if !(t.tolerance > 0.0) || !(t.learning_rate > 0.0) {
            bail!("training.tolerance and training.learning_rate must be positive");
        }
        Ok(())
    }

    pub fn hydrogen(&self) -> bool {
        self.system.kind == SystemKind::Hydrogen
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::parse(&self.network.architecture).with_context(|| {
            format!(
                "network.architecture must be `fully_connected` or `split_two_head`, got `{}`",
                self.network.architecture
            )
        })
    }

    pub fn output_mode(&self) -> Result<OutputMode> {
        OutputMode::parse(&self.network.output).with_context(|| {
            format!(
                "network.output must be `f_over_r` or `direct_f`, got `{}`",
                self.network.output
            )
        })
    }

    pub fn method(&self) -> Result<Method> {
        Method::parse(&self.training.method).with_context(|| {
            format!(
                "training.method must be `inverse`, `orthonormal` or `direct`, got `{}`",
                self.training.method
            )
        })
    }

    pub fn units(&self) -> Units {
        if self.hydrogen() {
            Units::atomic(self.system.speed_of_light)
        } else {
            Units::nuclear(self.system.hbar_c, self.system.nucleon_mass)
        }
    }

    pub fn woods_saxon(&self) -> WoodsSaxon {
        let s = &self.system;
        WoodsSaxon {
            mass_number: s.neutrons + s.protons,
            neutrons: s.neutrons,
            protons: s.protons,
            depth: s.depth,
            asymmetry: s.asymmetry,
            r0: s.r0,
            diffuseness: s.diffuseness,
            r0_ls: s.r0_ls,
            diffuseness_ls: s.diffuseness_ls,
            lambda: s.lambda,
        }
    }

    /// Box for a single inverse-method state.
    pub fn box_for(&self, n: u32) -> f64 {
        self.mesh.r_max.unwrap_or_else(|| {
            let i = (n as usize)
                .saturating_sub(1)
                .min(self.mesh.boxes.len() - 1);
            self.mesh.boxes[i]
        })
    }

    /// Box shared by the states of an orthonormal chain or a spectrum.
    pub fn common_box(&self) -> f64 {
        self.mesh.r_max.unwrap_or(self.mesh.orthonormal_box)
    }

    pub fn tabulated_shift(&self, kappa: i32, n: u32) -> Option<f64> {
        self.training
            .shifts
            .iter()
            .find(|e| e.kappa == kappa && e.n == n)
            .map(|e| e.shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_hydrogen_ground_state() {
        let c = Config::parse("").unwrap();
        assert!(c.hydrogen());
        assert_eq!(c.system.kappa, vec![-1]);
        assert_eq!(c.mesh.intervals, 1700);
        assert_eq!(c.box_for(1), 20.0);
        assert_eq!(c.box_for(6), 100.0);
        assert_eq!(c.box_for(9), 100.0);
        assert_eq!(c.tabulated_shift(-1, 4), Some(-0.04));
        assert_eq!(c.training.max_epochs, 200_000);
        assert_eq!(c.training.tolerance, 1e-9);
        assert_eq!(c.network.width, 16);
    }

    #[test]
    fn woods_saxon_defaults() {
        let c = Config::parse("[system]\nkind = \"woods_saxon\"\nnucleus = \"o16\"\n").unwrap();
        assert_eq!(c.system.neutrons, 8);
        assert_eq!(c.system.particles, 8);
        assert_eq!(c.mesh.kind, MeshKind::Uniform);
        assert_eq!(c.box_for(3), 20.0);
        assert_eq!(c.mesh.intervals, 2000);
        assert_eq!(c.tabulated_shift(-2, 1), Some(-28.0));
        assert_eq!(c.system.depth, -71.28);
        assert_eq!(c.training.tolerance, 1e-6);
    }

    #[test]
    fn rejects_unknown_keys_and_empty_kappa() {
        assert!(Config::parse("[system]\nkappas = [-1]\n").is_err());
        assert!(Config::parse("[sytem]\n").is_err());
        let err = Config::parse("[system]\nkappa = []\n").unwrap_err();
        assert!(err.to_string().contains("at least one"));
        assert!(Config::parse("[system]\nkappa = [0]\n").is_err());
        assert!(Config::parse("[network]\narchitecture = \"conv\"\n").is_err());
        assert!(Config::parse("[training]\nmethod = \"newton\"\n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let c = Config::parse("")
            .unwrap()
            .with_overrides(Some(9), Some("x".into()), Some(10))
            .unwrap();
        assert_eq!(c.training.seed, 9);
        assert_eq!(c.training.max_epochs, 10);
        assert_eq!(c.output.dir, PathBuf::from("x"));
    }

    #[test]
    fn explicit_shift_table() {
        let c =
            Config::parse("[training]\nshifts = [{ kappa = -2, n = 2, shift = -0.2 }]\n").unwrap();
        assert_eq!(c.tabulated_shift(-2, 2), Some(-0.2));
        assert_eq!(c.tabulated_shift(-1, 1), None);
    }
}
