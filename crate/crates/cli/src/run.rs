use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use diracnet_core::ablation::{
    compare_architectures, direct_minimization, large_component_output, DirectOutcome,
};
use diracnet_core::analytic::{hydrogen_energy, hydrogen_wavefunction, orbital_l};
use diracnet_core::oracle::{states_in_window, Eigenpair, OracleOptions};
use diracnet_core::spectrum::{
    fermi_fill, levels_for_kappa, shift_below, spectroscopic_label, Level,
};
use diracnet_core::{
    compare_spinors, Architecture, DiracOperator, Method, PotentialSpec, RadialMesh, RadialSpinor,
    SolveConfig, SolvedState,
};
use serde::Serialize;

use crate::config::{Config, MeshKind};
use crate::export::{Artifacts, Report};

/// One trained state as written to `energies.json`.
#[derive(Debug, Clone, Serialize)]
pub struct StateRecord {
    pub label: String,
    pub kappa: i32,
    pub n: u32,
    pub method: String,
    pub architecture: String,
    pub output: String,
    pub epsilon: f64,
    pub shift: f64,
    pub reference_energy: f64,
    pub reference_source: &'static str,
    pub oracle_energy: f64,
    pub relative_error: f64,
    pub oracle_relative_error: f64,
    pub epochs: usize,
    pub converged: bool,
    pub seconds_per_epoch: f64,
    pub nodes: usize,
    pub expected_nodes: usize,
    pub r_max: f64,
    pub max_f_error: f64,
    pub max_g_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthogonality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<u32>,
}

/// The exact or eigensolver answer a trained state is judged against.
struct Reference {
    energy: f64,
    spinor: RadialSpinor,
    source: &'static str,
    oracle_energy: f64,
}

pub struct Session {
    config: Config,
    potential: PotentialSpec,
    artifacts: Artifacts,
    oracle: OracleOptions,
}

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

impl Session {
    pub fn new(config: Config) -> Result<Self> {
        let potential = if config.hydrogen() {
            PotentialSpec::Coulomb {
                charge: config.system.charge,
            }
        } else {
            PotentialSpec::WoodsSaxon(config.woods_saxon())
        };
        potential.validate()?;
        let artifacts = Artifacts::create(&config.output)?;
        Ok(Self {
            config,
            potential,
            artifacts,
            oracle: OracleOptions::default(),
        })
    }

    fn mesh(&self, r_max: f64) -> Result<RadialMesh> {
        let m = &self.config.mesh;
        Ok(match m.kind {
            MeshKind::Log => RadialMesh::log_with_box(m.x0, r_max, m.intervals)?,
            MeshKind::Uniform => RadialMesh::uniform(r_max, m.intervals)?,
        })
    }

    fn operator(&self, mesh: &RadialMesh, kappa: i32) -> Result<DiracOperator> {
        let pot = self.potential.evaluate(mesh)?;
        Ok(DiracOperator::assemble(
            mesh,
            &pot,
            kappa,
            self.config.units(),
        )?)
    }

    /// The quantum number shown in labels: principal `n` for hydrogen,
    /// position in the `κ` ladder otherwise.
    fn display_n(&self, kappa: i32, index: u32) -> u32 {
        if self.config.hydrogen() {
            index + orbital_l(kappa)
        } else {
            index
        }
    }

    fn ladder_index(&self, kappa: i32, n: u32) -> Result<u32> {
        if !self.config.hydrogen() {
            return Ok(n);
        }
        let l = orbital_l(kappa);
        if n <= l {
            bail!("n = {n} is not allowed for κ = {kappa} (needs n > l = {l})");
        }
        Ok(n - l)
    }

    fn label(&self, kappa: i32, index: u32) -> String {
        spectroscopic_label(self.display_n(kappa, index), kappa)
    }

    /// A lower bound for every bound level of the system.
    fn spectrum_floor(&self, op: &DiracOperator) -> Result<f64> {
        if self.config.hydrogen() {
            let s = &self.config.system;
            Ok(1.5 * hydrogen_energy(1, -1, s.charge, s.speed_of_light)?)
        } else {
            let deepest = op.potentials().u.iter().copied().fold(0.0, f64::min);
            Ok(1.1 * deepest)
        }
    }

    fn oracle_levels(&self, op: &DiracOperator) -> Result<Vec<Eigenpair>> {
        let floor = self.spectrum_floor(op)?;
        Ok(states_in_window(op, floor, 0.0, &self.oracle)?)
    }

    fn reference(&self, op: &DiracOperator, levels: &[Eigenpair], index: u32) -> Result<Reference> {
        let kappa = op.kappa();
        let pair = levels.get(index as usize - 1).with_context(|| {
            format!(
                "the eigensolver finds only {} bound levels for κ = {kappa} in a {} box",
                levels.len(),
                op.mesh().r_max()
            )
        })?;
        self.reference_from(op, index, pair.energy, &pair.spinor)
    }

    fn reference_from(
        &self,
        op: &DiracOperator,
        index: u32,
        energy: f64,
        spinor: &RadialSpinor,
    ) -> Result<Reference> {
        let kappa = op.kappa();
        if self.config.hydrogen() {
            let s = &self.config.system;
            let n = self.display_n(kappa, index);
            Ok(Reference {
                energy: hydrogen_energy(n, kappa, s.charge, s.speed_of_light)?,
                spinor: hydrogen_wavefunction(n, kappa, s.charge, s.speed_of_light, op.mesh())?,
                source: "analytic",
                oracle_energy: energy,
            })
        } else {
            let mut spinor = spinor.clone();
            spinor.normalize(op.mesh())?;
            spinor.align_phase();
            Ok(Reference {
                energy,
                spinor,
                source: "oracle",
                oracle_energy: energy,
            })
        }
    }

    fn solve_config(&self, method: Method, shift: f64) -> Result<SolveConfig> {
        let t = &self.config.training;
        Ok(SolveConfig {
            method,
            shift,
            max_epochs: t.max_epochs,
            window: t.window,
            tolerance: t.tolerance,
            seed: t.seed,
            architecture: self.config.architecture()?,
            width: self.config.network.width,
            output: self.config.output_mode()?,
            learning_rate: t.learning_rate,
            lower_states: Vec::new(),
        })
    }

    /// `ε′` for the inverse method: tabulated value if any, else the rule
    /// placing it just below the oracle level.
    fn inverse_shift(&self, kappa: i32, index: u32, levels: &[Eigenpair]) -> Result<f64> {
        if let Some(s) = self
            .config
            .tabulated_shift(kappa, self.display_n(kappa, index))
        {
            return Ok(s);
        }
        let energies: Vec<f64> = levels.iter().map(|p| p.energy).collect();
        if energies.len() < index as usize {
            bail!("no bound level {index} for κ = {kappa}; set training.shift explicitly");
        }
        Ok(shift_below(&energies, index as usize - 1))
    }

    /// `ε′` shared by an orthonormal chain: just below the lowest level.
    fn chain_shift(&self, kappa: i32, levels: &[Eigenpair]) -> Result<f64> {
        if let Some(s) = self.config.tabulated_shift(kappa, self.display_n(kappa, 1)) {
            return Ok(s);
        }
        let ground = levels
            .first()
            .with_context(|| format!("no bound level for κ = {kappa}"))?
            .energy;
        Ok(ground - 0.02 * ground.abs())
    }

    fn record(
        &mut self,
        op: &DiracOperator,
        index: u32,
        config: &SolveConfig,
        state: &SolvedState,
        reference: &Reference,
        stem_suffix: &str,
    ) -> Result<StateRecord> {
        let kappa = op.kappa();
        let comparison = compare_spinors(&state.spinor, &reference.spinor);
        let orthogonality = (config.method == Method::Orthonormal).then(|| {
            config
                .lower_states
                .iter()
                .map(|s| s.inner(&state.spinor, op.mesh()).abs())
                .fold(0.0, f64::max)
        });
        let record = StateRecord {
            label: self.label(kappa, index),
            kappa,
            n: self.display_n(kappa, index),
            method: config.method.name().into(),
            architecture: config.architecture.name().into(),
            output: config.output.name().into(),
            epsilon: state.epsilon,
            shift: config.shift,
            reference_energy: reference.energy,
            reference_source: reference.source,
            oracle_energy: reference.oracle_energy,
            relative_error: relative(state.epsilon, reference.energy),
            oracle_relative_error: relative(state.epsilon, reference.oracle_energy),
            epochs: state.epochs,
            converged: state.converged,
            seconds_per_epoch: state.trace.seconds_per_epoch(),
            nodes: state.nodes,
            expected_nodes: index as usize - 1,
            r_max: op.mesh().r_max(),
            max_f_error: comparison.f_max(),
            max_g_error: comparison.g_max(),
            orthogonality,
            occupancy: None,
        };
        let stem = format!(
            "{}_{}{}",
            record.label.replace('/', "_"),
            record.method,
            stem_suffix
        );
        self.artifacts.state(
            &stem,
            op.mesh(),
            state,
            &reference.spinor,
            &comparison,
            &self.config.output,
        )?;
        println!(
            "{:<8} {:<12} ε = {:>20.12e}  ref = {:>20.12e}  rel = {:.3e}  nodes = {}  epochs = {}",
            record.label,
            record.method,
            record.epsilon,
            record.reference_energy,
            record.relative_error,
            record.nodes,
            record.epochs
        );
        Ok(record)
    }

    fn train_inverse(&mut self, kappa: i32, index: u32, shift: Option<f64>) -> Result<StateRecord> {
        let mesh = self.mesh(self.config.box_for(self.display_n(kappa, index)))?;
        let op = self.operator(&mesh, kappa)?;
        let levels = self.oracle_levels(&op)?;
        let shift = match shift {
            Some(s) => s,
            None => self.inverse_shift(kappa, index, &levels)?,
        };
        let reference = self.reference(&op, &levels, index)?;
        let config = self.solve_config(Method::Inverse, shift)?;
        let state = diracnet_core::solver::train_state(&config, &op)?;
        self.record(&op, index, &config, &state, &reference, "")
    }

    fn train_direct(&mut self, kappa: i32, index: u32) -> Result<StateRecord> {
        let mesh = self.mesh(self.config.box_for(self.display_n(kappa, index)))?;
        let op = self.operator(&mesh, kappa)?;
        let levels = self.oracle_levels(&op)?;
        let shift = match self.config.training.shift {
            Some(s) => s,
            None => self.inverse_shift(kappa, index, &levels)?,
        };
        let reference = self.reference(&op, &levels, index)?;
        let config = self.solve_config(Method::Direct, shift)?;
        let state = diracnet_core::solver::train_state(&config, &op)?;
        self.record(&op, index, &config, &state, &reference, "")
    }

    /// Ground state by the inverse method, then levels `2..=top` by the
    /// orthonormal method, all in the common box with one shared `ε′`.
    fn orthonormal_chain(&mut self, kappa: i32, top: u32) -> Result<Vec<StateRecord>> {
        let mesh = self.mesh(self.config.common_box())?;
        let op = self.operator(&mesh, kappa)?;
        let levels = self.oracle_levels(&op)?;
        let shift = match self.config.training.shift {
            Some(s) => s,
            None => self.chain_shift(kappa, &levels)?,
        };
        let mut ground_config = self.solve_config(Method::Inverse, shift)?;
        ground_config.max_epochs = self.config.training.ground_epochs;
        let ground = diracnet_core::solver::train_state(&ground_config, &op)?;
        let reference = self.reference(&op, &levels, 1)?;
        let mut records =
            vec![self.record(&op, 1, &ground_config, &ground, &reference, "_chain")?];
        let mut lower = vec![ground.spinor];
        for index in 2..=top {
            let mut config = self.solve_config(Method::Orthonormal, shift)?;
            config.lower_states = lower.clone();
            let state = diracnet_core::solver::train_state(&config, &op)?;
            let reference = self.reference(&op, &levels, index)?;
            records.push(self.record(&op, index, &config, &state, &reference, "")?);
            lower.push(state.spinor);
        }
        Ok(records)
    }

    pub fn solve(mut self) -> Result<()> {
        let start = Instant::now();
        let kappa = self.config.system.kappa[0];
        let index = self.ladder_index(kappa, self.config.training.n)?;
        let states = match self.config.method()? {
            Method::Inverse => {
                vec![self.train_inverse(kappa, index, self.config.training.shift)?]
            }
            Method::Direct => vec![self.train_direct(kappa, index)?],
            Method::Orthonormal => {
                if index < 2 {
                    bail!("the orthonormal method targets excited states; use n above the lowest level of κ");
                }
                self.orthonormal_chain(kappa, index)?
            }
        };
        self.finish("solve", states, None, start)
    }

    pub fn benchmark(mut self) -> Result<()> {
        let start = Instant::now();
        let levels = self.config.training.levels;
        let mut states = Vec::new();
        for kappa in self.config.system.kappa.clone() {
            for index in 1..=levels {
                states.push(self.train_inverse(kappa, index, None)?);
            }
            if levels >= 2 {
                states.extend(self.orthonormal_chain(kappa, levels)?);
            }
        }
        self.finish("benchmark", states, None, start)
    }

    pub fn spectrum(mut self) -> Result<()> {
        let start = Instant::now();
        let mesh = self.mesh(self.config.common_box())?;
        let mut ops = BTreeMap::new();
        let mut all: Vec<Level> = Vec::new();
        for kappa in self.config.system.kappa.clone() {
            let op = self.operator(&mesh, kappa)?;
            let floor = self.spectrum_floor(&op)?;
            all.extend(levels_for_kappa(&op, floor, 0.0, &self.oracle)?);
            ops.insert(kappa, op);
        }
        let occupied = fermi_fill(all, self.config.system.particles)?;
        println!("{} occupied levels", occupied.len());
        let mut states = Vec::new();
        for level in occupied {
            let op = &ops[&level.kappa];
            let shift = self
                .config
                .tabulated_shift(level.kappa, self.display_n(level.kappa, level.index))
                .unwrap_or(level.shift);
            let reference = self.reference_from(op, level.index, level.energy, &level.spinor)?;
            let config = self.solve_config(Method::Inverse, shift)?;
            let state = diracnet_core::solver::train_state(&config, op)?;
            let mut record = self.record(op, level.index, &config, &state, &reference, "")?;
            record.occupancy = Some(level.occupancy);
            states.push(record);
        }
        self.finish("spectrum", states, None, start)
    }

    pub fn ablation(mut self) -> Result<()> {
        let start = Instant::now();
        let kappa = self.config.system.kappa[0];
        let index = self.ladder_index(kappa, self.config.training.n)?;
        let mesh = self.mesh(self.config.box_for(self.display_n(kappa, index)))?;
        let op = self.operator(&mesh, kappa)?;
        let levels = self.oracle_levels(&op)?;
        let shift = match self.config.training.shift {
            Some(s) => s,
            None => self.inverse_shift(kappa, index, &levels)?,
        };
        let reference = self.reference(&op, &levels, index)?;
        let base = self.solve_config(Method::Inverse, shift)?;
        let threshold = reference.energy - self.config.units().dirac_gap();

        let mut collapse = Vec::new();
        for arch in [Architecture::SplitTwoHead, Architecture::FullyConnected] {
            let outcome = direct_minimization(&base, &op, arch)?;
            self.artifacts.trace(
                &format!("direct_{}", arch.name()),
                &outcome.trace,
                &self.config.output,
            )?;
            collapse.push(CollapseRecord::new(&outcome, threshold));
        }

        let archs = compare_architectures(&base, &op, &reference.spinor)?;
        let mut states = Vec::new();
        states.push(self.record(
            &op,
            index,
            &base,
            &archs.fully_connected,
            &reference,
            "_fully_connected",
        )?);
        let split_config = SolveConfig {
            architecture: Architecture::SplitTwoHead,
            ..base.clone()
        };
        states.push(self.record(
            &op,
            index,
            &split_config,
            &archs.split,
            &reference,
            "_split_two_head",
        )?);

        let direct_f = large_component_output(&base, &op, &reference.spinor)?;
        let direct_f_config = SolveConfig {
            output: diracnet_core::OutputMode::LargeComponent,
            ..base.clone()
        };
        states.push(self.record(
            &op,
            index,
            &direct_f_config,
            &direct_f.state,
            &reference,
            "_direct_f",
        )?);

        let report = AblationReport {
            shift,
            collapse_threshold: threshold,
            collapse,
            inverse_min_epsilon: InverseFloor {
                fully_connected: archs
                    .fully_connected
                    .trace
                    .min_epsilon()
                    .unwrap_or(f64::NAN),
                split_two_head: archs.split.trace.min_epsilon().unwrap_or(f64::NAN),
            },
            g_error: GErrorRecord {
                fully_connected: archs.fully_connected_error.g_max(),
                split_two_head: archs.split_error.g_max(),
                ratio: archs.g_error_ratio(),
            },
            direct_f: DirectFRecord {
                g_first_point: direct_f.state.spinor.g[0],
                reference_g_first_point: reference.spinor.g[0],
                origin_ratio: direct_f.origin_ratio,
            },
        };
        for c in &report.collapse {
            println!(
                "direct {:<16} min ε = {:.6e}  collapse epoch = {:?}  below −2mc² + ε = {}",
                c.architecture, c.min_epsilon, c.collapse_epoch, c.below_threshold
            );
        }
        println!(
            "G error: fully connected {:.3e}, split {:.3e}, ratio {:.2}",
            report.g_error.fully_connected, report.g_error.split_two_head, report.g_error.ratio
        );
        println!(
            "direct F output: |G(r₁)| / |G_ref(r₁)| = {:.3e}",
            report.direct_f.origin_ratio
        );
        self.finish("ablation", states, Some(report), start)
    }

    fn finish(
        self,
        command: &str,
        states: Vec<StateRecord>,
        ablation: Option<AblationReport>,
        start: Instant,
    ) -> Result<()> {
        let report = Report {
            command,
            config: &self.config,
            states,
            ablation,
            total_seconds: start.elapsed().as_secs_f64(),
        };
        let path = self.artifacts.energies(&report)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseRecord {
    pub architecture: &'static str,
    pub min_epsilon: f64,
    pub collapse_epoch: Option<usize>,
    pub epochs: usize,
    pub below_threshold: bool,
}

impl CollapseRecord {
    fn new(outcome: &DirectOutcome, threshold: f64) -> Self {
        let min_epsilon = outcome.min_epsilon();
        Self {
            architecture: outcome.architecture.name(),
            min_epsilon,
            collapse_epoch: outcome.collapse_epoch,
            epochs: outcome.trace.len(),
            below_threshold: min_epsilon < threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseFloor {
    pub fully_connected: f64,
    pub split_two_head: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GErrorRecord {
    pub fully_connected: f64,
    pub split_two_head: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectFRecord {
    pub g_first_point: f64,
    pub reference_g_first_point: f64,
    pub origin_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub shift: f64,
    /// `ε_ref − 2mc²`
    pub collapse_threshold: f64,
    pub collapse: Vec<CollapseRecord>,
    /// Lowest energy seen by inverse-method runs with the same settings.
    pub inverse_min_epsilon: InverseFloor,
    pub g_error: GErrorRecord,
    pub direct_f: DirectFRecord,
}
