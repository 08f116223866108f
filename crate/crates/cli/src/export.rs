//! Files written by every command: `energies.json` plus per-state CSVs and
//! network checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use diracnet_core::solver::ConvergenceTrace;
use diracnet_core::{RadialMesh, RadialSpinor, SolvedState, SpinorComparison};
use serde::Serialize;

use crate::config::{Config, OutputConfig};
use crate::run::{AblationReport, StateRecord};

#[derive(Serialize)]
pub struct Report<'a> {
    pub command: &'a str,
    pub config: &'a Config,
    pub states: Vec<StateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationReport>,
    pub total_seconds: f64,
}

/// Seventeen significant digits, enough to round-trip an `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::with_capacity(1 << 16);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(output: &OutputConfig) -> Result<Self> {
        fs::create_dir_all(&output.dir)
            .with_context(|| format!("creating {}", output.dir.display()))?;
        Ok(Self {
            dir: output.dir.clone(),
        })
    }

    pub fn state(
        &self,
        stem: &str,
        mesh: &RadialMesh,
        state: &SolvedState,
        reference: &RadialSpinor,
        comparison: &SpinorComparison,
        output: &OutputConfig,
    ) -> Result<()> {
        if output.wavefunctions {
            write_wavefunction(
                &self.dir.join(format!("{stem}_wavefunction.csv")),
                mesh,
                &state.spinor,
                reference,
                comparison.sign,
            )?;
            write_comparison(
                &self.dir.join(format!("{stem}_comparison.csv")),
                mesh,
                comparison,
            )?;
        }
        self.trace(stem, &state.trace, output)?;
        if output.checkpoints {
            let path = self.dir.join(format!("{stem}_checkpoint.txt"));
            fs::write(&path, state.params.to_text())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    pub fn trace(&self, stem: &str, trace: &ConvergenceTrace, output: &OutputConfig) -> Result<()> {
        if output.traces {
            write_trace(&self.dir.join(format!("{stem}_trace.csv")), trace)?;
        }
        Ok(())
    }

    pub fn energies(&self, report: &Report) -> Result<PathBuf> {
        let path = self.dir.join("energies.json");
        let json = serde_json::to_string_pretty(report)?;
        fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// `r, F, G, F_ref, G_ref`, with the reference sign matched to the result.
pub fn write_wavefunction(
    path: &Path,
    mesh: &RadialMesh,
    spinor: &RadialSpinor,
    reference: &RadialSpinor,
    sign: f64,
) -> Result<()> {
    let rows = (0..mesh.len()).map(|i| {
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{},{},{},{}",
            num(mesh.points()[i]),
            num(spinor.f[i]),
            num(spinor.g[i]),
            num(sign * reference.f[i]),
            num(sign * reference.g[i])
        );
        row
    });
    write_csv(path, "r,F,G,F_ref,G_ref", rows)
}

/// `r, F_error, G_error`, each `|ψ − ψ_ref| / max|ψ_ref|`.
pub fn write_comparison(
    path: &Path,
    mesh: &RadialMesh,
    comparison: &SpinorComparison,
) -> Result<()> {
    let rows = (0..mesh.len()).map(|i| {
        format!(
            "{},{},{}",
            num(mesh.points()[i]),
            num(comparison.f_error[i]),
            num(comparison.g_error[i])
        )
    });
    write_csv(path, "r,F_error,G_error", rows)
}

pub fn write_trace(path: &Path, trace: &ConvergenceTrace) -> Result<()> {
    let rows = trace.entries.iter().map(|e| {
        format!(
            "{},{},{},{}",
            e.epoch,
            num(e.epsilon),
            num(e.loss),
            num(e.seconds)
        )
    });
    write_csv(path, "epoch,epsilon,loss,seconds", rows)
}
