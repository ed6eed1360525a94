use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::PrimitiveField;
use crate::mesh::Grid1D;

/// How cells are weighted in the discrete norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormWeighting {
    /// `(sum dx_i |v_i|^p)^(1/p)`: a quadrature of the continuum norm.
    #[default]
    CellWidth,
    /// `(sum |v_i|^p)^(1/p)`.
    Unweighted,
}

pub fn norm_p(values: &[f64], widths: &[f64], p: f64, weighting: NormWeighting) -> f64 {
    let sum: f64 = match weighting {
        NormWeighting::CellWidth => values
            .iter()
            .zip(widths)
            .map(|(v, w)| w * v.abs().powf(p))
            .sum(),
        NormWeighting::Unweighted => values.iter().map(|v| v.abs().powf(p)).sum(),
    };
    sum.powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    /// Norms of the numerical solution.
    pub l2_solution: f64,
    pub l2_rel_error: f64,
    pub l1_solution: f64,
    pub l1_rel_error: f64,
}

/// Solution norms and relative errors of `numerical` against `reference`,
/// both given per cell of `grid`.
pub fn error_norms(
    numerical: &[f64],
    reference: &[f64],
    grid: &Grid1D,
    weighting: NormWeighting,
) -> Result<NormEntry> {
    let n = grid.n_cells();
    for len in [numerical.len(), reference.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let widths = grid.widths();
    let diff: Vec<f64> = numerical
        .iter()
        .zip(reference)
        .map(|(a, b)| a - b)
        .collect();
    let rel = |p: f64| -> Result<f64> {
        let r = norm_p(reference, &widths, p, weighting);
        if r == 0.0 {
            return Err(Error::ZeroReferenceNorm);
        }
        Ok(norm_p(&diff, &widths, p, weighting) / r)
    };
    Ok(NormEntry {
        l2_solution: norm_p(numerical, &widths, 2.0, weighting),
        l2_rel_error: rel(2.0)?,
        l1_solution: norm_p(numerical, &widths, 1.0, weighting),
        l1_rel_error: rel(1.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub density: NormEntry,
    pub velocity: NormEntry,
    pub internal_energy: NormEntry,
    pub pressure: NormEntry,
    pub weighting: NormWeighting,
}

impl NormReport {
    pub fn entries(&self) -> [(&'static str, &NormEntry); 4] {
        [
            ("density", &self.density),
            ("velocity", &self.velocity),
            ("internal_energy", &self.internal_energy),
            ("pressure", &self.pressure),
        ]
    }
}

/// Norms for every primitive quantity. A quantity whose reference vanishes
/// identically (a fluid at rest, say) reports a relative error of zero when
/// the numerical values vanish too, and infinity otherwise.
pub fn norm_report(
    numerical: &PrimitiveField,
    reference: &PrimitiveField,
    grid: &Grid1D,
    weighting: NormWeighting,
) -> Result<NormReport> {
    let entry = |a: &[f64], b: &[f64]| -> Result<NormEntry> {
        match error_norms(a, b, grid, weighting) {
            Err(Error::ZeroReferenceNorm) => {
                let widths = grid.widths();
                let rel = |p| {
                    if norm_p(a, &widths, p, weighting) == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                };
                Ok(NormEntry {
                    l2_solution: norm_p(a, &widths, 2.0, weighting),
                    l2_rel_error: rel(2.0),
                    l1_solution: norm_p(a, &widths, 1.0, weighting),
                    l1_rel_error: rel(1.0),
                })
            }
            other => other,
        }
    };
    Ok(NormReport {
        density: entry(&numerical.rho, &reference.rho)?,
        velocity: entry(&numerical.u, &reference.u)?,
        internal_energy: entry(&numerical.e, &reference.e)?,
        pressure: entry(&numerical.p, &reference.p)?,
        weighting,
    })
}
