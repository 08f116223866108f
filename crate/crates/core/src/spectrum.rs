//! Occupied single-particle levels and the shifts used to train them.

use crate::analytic::{degeneracy, orbital_l};
use crate::error::{DiracError, Result};
use crate::operator::{DiracOperator, RadialSpinor};
use crate::oracle::{states_in_window, OracleOptions};

/// One bound level as found by the eigensolver.
#[derive(Debug, Clone)]
pub struct Level {
    pub kappa: i32,
    /// 1-based position among the bound levels of this `κ`.
    pub index: u32,
    pub energy: f64,
    /// `ε′` for the inverse method.
    pub shift: f64,
    /// Particles placed in this level (at most `2|κ|`).
    pub occupancy: u32,
    pub spinor: RadialSpinor,
}

impl Level {
    /// Nuclear-style label such as `1p3/2`.
    pub fn label(&self) -> String {
        spectroscopic_label(self.index, self.kappa)
    }
}

/// `n l_j` with `n` counting levels of the same `κ` from one.
pub fn spectroscopic_label(index: u32, kappa: i32) -> String {
    const LETTERS: &[u8] = b"spdfghiklmnoqrtuv";
    let l = orbital_l(kappa) as usize;
    let letter = LETTERS.get(l).map_or('?', |c| *c as char);
    let two_j = 2 * kappa.unsigned_abs() - 1;
    format!("{index}{letter}{two_j}/2")
}

/// The shift placed just below level `i` of a same-`κ` ladder sorted
/// upwards: `ε_i − min(0.1·(ε_i − ε_{i−1}), 0.05·|ε_i|)`, with the
/// ground level using only the second term.
pub fn shift_below(energies: &[f64], i: usize) -> f64 {
    let e = energies[i];
    let mut delta = 0.05 * e.abs();
    if i > 0 {
        delta = delta.min(0.1 * (e - energies[i - 1]));
    }
    e - delta
}

/// Bound levels of one `κ` block inside `(lower, upper)`, with shifts.
pub fn levels_for_kappa(
    op: &DiracOperator,
    lower: f64,
    upper: f64,
    opts: &OracleOptions,
) -> Result<Vec<Level>> {
    let pairs = states_in_window(op, lower, upper, opts)?;
    let energies: Vec<f64> = pairs.iter().map(|p| p.energy).collect();
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| Level {
            kappa: op.kappa(),
            index: i as u32 + 1,
            energy: p.energy,
            shift: shift_below(&energies, i),
            occupancy: 0,
            spinor: p.spinor,
        })
        .collect())
}

/// Fill levels in order of increasing energy with `2|κ|` particles each
/// until `particles` are placed. The last level may be partially filled.
/// Returns the occupied levels sorted by energy.
pub fn fermi_fill(mut levels: Vec<Level>, particles: u32) -> Result<Vec<Level>> {
    if particles == 0 {
        return Err(DiracError::InvalidConfig("no particles to place".into()));
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let capacity: u32 = levels.iter().map(|l| degeneracy(l.kappa)).sum();
    if capacity < particles {
        return Err(DiracError::InvalidConfig(format!(
            "{particles} particles requested but the bound levels of the given κ hold only {capacity}"
        )));
    }
    let mut left = particles;
    let mut occupied = Vec::new();
    for mut level in levels {
        if left == 0 {
            break;
        }
        let take = degeneracy(level.kappa).min(left);
        level.occupancy = take;
        left -= take;
        occupied.push(level);
    }
    Ok(occupied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::RadialMesh;
    use crate::potential::{PotentialSpec, Units, WoodsSaxon};

    fn level(kappa: i32, energy: f64) -> Level {
        Level {
            kappa,
            index: 1,
            energy,
            shift: energy - 1.0,
            occupancy: 0,
            spinor: RadialSpinor::new(vec![1.0], vec![0.0]),
        }
    }

    #[test]
    fn labels() {
        assert_eq!(spectroscopic_label(1, -1), "1s1/2");
        assert_eq!(spectroscopic_label(1, -2), "1p3/2");
        assert_eq!(spectroscopic_label(1, 1), "1p1/2");
        assert_eq!(spectroscopic_label(3, -1), "3s1/2");
        assert_eq!(spectroscopic_label(1, -7), "1i13/2");
        assert_eq!(spectroscopic_label(2, 3), "2f5/2");
    }

    #[test]
    fn shift_rule() {
        let e = [-58.0, -41.0, -18.75];
        assert!((shift_below(&e, 0) - -60.9).abs() < 1e-12);
        assert!((shift_below(&e, 1) - -42.7).abs() < 1e-12);
        assert!((shift_below(&e, 2) - -19.6875).abs() < 1e-12);
        for i in 1..3 {
            let s = shift_below(&e, i);
            assert!(s > e[i - 1] && s < e[i]);
        }
    }

    #[test]
    fn filling_stops_at_particle_number() {
        let levels = vec![level(-2, -30.0), level(-1, -40.0), level(1, -25.0)];
        let occ = fermi_fill(levels.clone(), 8).unwrap();
        let kinds: Vec<_> = occ.iter().map(|l| (l.kappa, l.occupancy)).collect();
        assert_eq!(kinds, vec![(-1, 2), (-2, 4), (1, 2)]);
        let occ = fermi_fill(levels.clone(), 5).unwrap();
        assert_eq!(occ.last().unwrap().occupancy, 3);
        assert!(fermi_fill(levels, 9).is_err());
    }

    #[test]
    fn oxygen_fills_three_levels() {
        let mesh = RadialMesh::uniform(20.0, 400).unwrap();
        let ws = WoodsSaxon::oxygen16();
        let pot = PotentialSpec::WoodsSaxon(ws).evaluate(&mesh).unwrap();
        let units = Units::nuclear(197.32698, 939.0);
        let mut all = Vec::new();
        for kappa in [-1, 1, -2, 2, -3] {
            let op = DiracOperator::assemble(&mesh, &pot, kappa, units).unwrap();
            all.extend(
                levels_for_kappa(&op, ws.central_depth(), 0.0, &OracleOptions::default()).unwrap(),
            );
        }
        let occ = fermi_fill(all, 8).unwrap();
        let labels: Vec<_> = occ.iter().map(Level::label).collect();
        assert_eq!(labels, vec!["1s1/2", "1p3/2", "1p1/2"]);
    }
}
