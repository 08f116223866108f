//! Pointwise comparison of a computed spinor against a reference.

use crate::operator::RadialSpinor;

/// Per-point errors `|ψ − s·ψ_ref| / max|ψ_ref|` for each component, where
/// `s = ±1` aligns the global sign of the reference with the result.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorComparison {
    pub sign: f64,
    pub f_error: Vec<f64>,
    pub g_error: Vec<f64>,
}

impl SpinorComparison {
    pub fn f_max(&self) -> f64 {
        self.f_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn g_max(&self) -> f64 {
        self.g_error.iter().copied().fold(0.0, f64::max)
    }
}

fn peak(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn compare_spinors(result: &RadialSpinor, reference: &RadialSpinor) -> SpinorComparison {
    assert_eq!(
        result.len(),
        reference.len(),
        "spinors live on different meshes"
    );
    let overlap: f64 = result
        .f
        .iter()
        .zip(&reference.f)
        .chain(result.g.iter().zip(&reference.g))
        .map(|(a, b)| a * b)
        .sum();
    let sign = if overlap < 0.0 { -1.0 } else { 1.0 };
    let component = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let scale = peak(b);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - sign * y).abs() / scale)
            .collect()
    };
    SpinorComparison {
        sign,
        f_error: component(&result.f, &reference.f),
        g_error: component(&result.g, &reference.g),
    }
}
