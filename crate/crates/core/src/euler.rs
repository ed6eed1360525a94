//! Ideal-gas Euler state: conservative/primitive conversion, equation of
//! state, physical flux and wavespeeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conserved variables of one cell: `[rho, rho*u, E]`.
pub type Conserved = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasModel {
    pub gamma: f64,
    /// `true`: E = rho*e + rho*u^2/2. `false`: E = rho*e + rho*u^2.
    #[serde(default = "default_kinetic_half")]
    pub kinetic_half: bool,
}

fn default_kinetic_half() -> bool {
    true
}

impl Default for GasModel {
    fn default() -> Self {
        GasModel {
            gamma: 1.4,
            kinetic_half: true,
        }
    }
}

impl GasModel {
    pub fn new(gamma: f64) -> Result<Self> {
        let gas = GasModel {
            gamma,
            ..Default::default()
        };
        gas.validate()?;
        Ok(gas)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(Error::config("gas.gamma", "must be finite and > 1"));
        }
        Ok(())
    }

    /// Coefficient of rho*u^2 in the total energy.
    #[inline]
    pub fn kinetic_factor(&self) -> f64 {
        if self.kinetic_half {
            0.5
        } else {
            1.0
        }
    }
}

/// p = rho * e * (gamma - 1).
pub fn eos_pressure(rho: f64, e: f64, gas: &GasModel) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveDensity { cell: 0, rho });
    }
    Ok(rho * e * (gas.gamma - 1.0))
}

/// Primitive variables of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
    pub e: f64,
}

impl Primitive {
    /// From density, velocity and pressure; `e` follows from the EOS.
    pub fn from_rho_u_p(rho: f64, u: f64, p: f64, gas: &GasModel) -> Self {
        Primitive {
            rho,
            u,
            p,
            e: p / (rho * (gas.gamma - 1.0)),
        }
    }

    /// From density, velocity and specific internal energy.
    pub fn from_rho_u_e(rho: f64, u: f64, e: f64, gas: &GasModel) -> Self {
        Primitive {
            rho,
            u,
            p: rho * e * (gas.gamma - 1.0),
            e,
        }
    }

    pub fn to_conserved(&self, gas: &GasModel) -> Conserved {
        let k = gas.kinetic_factor();
        [
            self.rho,
            self.rho * self.u,
            self.rho * self.e + k * self.rho * self.u * self.u,
        ]
    }

    pub fn sound_speed(&self, gas: &GasModel) -> f64 {
        (gas.gamma * self.p / self.rho).sqrt()
    }
}

/// Decode one cell; fails on non-positive density or pressure.
#[inline]
pub fn primitive(c: &Conserved, gas: &GasModel) -> Result<Primitive> {
    let rho = c[0];
    if !(rho > 0.0) {
        return Err(Error::NonPositiveDensity { cell: 0, rho });
    }
    let u = c[1] / rho;
    let e = (c[2] - gas.kinetic_factor() * rho * u * u) / rho;
    let p = rho * e * (gas.gamma - 1.0);
    if !(p > 0.0) {
        return Err(Error::Positivity {
            cell: 0,
            time: f64::NAN,
            pressure: p,
        });
    }
    Ok(Primitive { rho, u, p, e })
}

/// Physical flux `(rho u, rho u^2 + p, (E + p) u)`. Does not validate.
#[inline]
pub fn flux(c: &Conserved, gas: &GasModel) -> [f64; 3] {
    let u = c[1] / c[0];
    let e = (c[2] - gas.kinetic_factor() * c[0] * u * u) / c[0];
    let p = c[0] * e * (gas.gamma - 1.0);
    [c[1], c[1] * u + p, (c[2] + p) * u]
}

/// `|u| + c` for one cell; NaN for unphysical states.
#[inline]
pub fn wavespeed(c: &Conserved, gas: &GasModel) -> f64 {
    let u = c[1] / c[0];
    let e = (c[2] - gas.kinetic_factor() * c[0] * u * u) / c[0];
    let p = c[0] * e * (gas.gamma - 1.0);
    u.abs() + (gas.gamma * p / c[0]).sqrt()
}

/// Per-cell conserved state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConservedField {
    pub cells: Vec<Conserved>,
}

/// Per-cell primitive state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrimitiveField {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub e: Vec<f64>,
}

impl PrimitiveField {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn get(&self, i: usize) -> Primitive {
        Primitive {
            rho: self.rho[i],
            u: self.u[i],
            p: self.p[i],
            e: self.e[i],
        }
    }

    pub fn push(&mut self, w: Primitive) {
        self.rho.push(w.rho);
        self.u.push(w.u);
        self.p.push(w.p);
        self.e.push(w.e);
    }
}

impl FromIterator<Primitive> for PrimitiveField {
    fn from_iter<I: IntoIterator<Item = Primitive>>(iter: I) -> Self {
        let mut out = PrimitiveField::default();
        for w in iter {
            out.push(w);
        }
        out
    }
}

impl ConservedField {
    pub fn new(cells: Vec<Conserved>) -> Self {
        ConservedField { cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c[0]).collect()
    }

    pub fn mom(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c[1]).collect()
    }

    pub fn ener(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c[2]).collect()
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.cells.iter().map(|c| c[k]).collect()
    }

    pub fn from_components(rho: &[f64], mom: &[f64], ener: &[f64]) -> Result<Self> {
        if mom.len() != rho.len() || ener.len() != rho.len() {
            return Err(Error::LengthMismatch {
                expected: rho.len(),
                got: mom.len().min(ener.len()),
            });
        }
        Ok(ConservedField {
            cells: (0..rho.len()).map(|i| [rho[i], mom[i], ener[i]]).collect(),
        })
    }
}

/// Decode all cells. Non-positive pressure or density is an error carrying
/// the offending cell index.
pub fn cons_to_prim(c: &ConservedField, gas: &GasModel) -> Result<PrimitiveField> {
    c.cells
        .iter()
        .enumerate()
        .map(|(i, ci)| primitive(ci, gas).map_err(|e| with_cell(e, i)))
        .collect()
}

pub fn prim_to_cons(w: &PrimitiveField, gas: &GasModel) -> Result<ConservedField> {
    let mut cells = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        if !(w.rho[i] > 0.0) {
            return Err(Error::NonPositiveDensity {
                cell: i,
                rho: w.rho[i],
            });
        }
        cells.push(w.get(i).to_conserved(gas));
    }
    Ok(ConservedField { cells })
}

pub fn euler_flux(c: &ConservedField, gas: &GasModel) -> Result<Vec<[f64; 3]>> {
    c.cells
        .iter()
        .enumerate()
        .map(|(i, ci)| {
            primitive(ci, gas).map_err(|e| with_cell(e, i))?;
            Ok(flux(ci, gas))
        })
        .collect()
}

pub fn max_wavespeed(c: &ConservedField, gas: &GasModel) -> Result<f64> {
    let mut s: f64 = 0.0;
    for (i, ci) in c.cells.iter().enumerate() {
        let w = primitive(ci, gas).map_err(|e| with_cell(e, i))?;
        s = s.max(w.u.abs() + w.sound_speed(gas));
    }
    Ok(s)
}

pub(crate) fn with_cell(e: Error, cell: usize) -> Error {
    match e {
        Error::NonPositiveDensity { rho, .. } => Error::NonPositiveDensity { cell, rho },
        Error::Positivity { time, pressure, .. } => Error::Positivity {
            cell,
            time,
            pressure,
        },
        other => other,
    }
}
