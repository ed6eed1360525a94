//! Finite-volume discretizations and time stepping for 1D conservation laws.
//!
//! Both schemes are generic over a [`ConservationLaw`] with `N` components, so
//! the same code advances scalar advection (`N = 1`) and the Euler system
//! (`N = 3`).

mod lax_wendroff;
mod rk3;
mod weno5;

pub use lax_wendroff::{lax_wendroff_step, lw_control_volumes};
pub use rk3::rk3_advance;
pub use weno5::{
    llf_flux_split, rhs_from_fluxes, weno5_reconstruct, SideCoefficients, WeightAudit, Weno5,
    Weno5Stencils, Weno5Workspace, WENO_EPSILON, WENO_LINEAR_WEIGHTS, WENO_POWER,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{self, GasModel};
use crate::mesh::Grid1D;

pub trait ConservationLaw<const N: usize>: Sync {
    fn flux(&self, u: &[f64; N]) -> [f64; N];

    /// Largest characteristic speed magnitude of one state.
    fn wavespeed(&self, u: &[f64; N]) -> f64;

    /// Reject unphysical states.
    fn validate(&self, _cell: usize, _u: &[f64; N]) -> Result<()> {
        Ok(())
    }

    /// Mirror image of a state across a wall.
    fn reflect(&self, u: &[f64; N]) -> [f64; N] {
        *u
    }
}

/// `du/dt + d(velocity * u)/dx = 0`.
#[derive(Debug, Clone, Copy)]
pub struct LinearAdvection {
    pub velocity: f64,
}

impl ConservationLaw<1> for LinearAdvection {
    #[inline]
    fn flux(&self, u: &[f64; 1]) -> [f64; 1] {
        [self.velocity * u[0]]
    }

    #[inline]
    fn wavespeed(&self, _u: &[f64; 1]) -> f64 {
        self.velocity.abs()
    }

    fn reflect(&self, u: &[f64; 1]) -> [f64; 1] {
        [-u[0]]
    }
}

/// Compressible Euler equations for an ideal gas.
#[derive(Debug, Clone, Copy)]
pub struct EulerLaw {
    pub gas: GasModel,
}

impl ConservationLaw<3> for EulerLaw {
    #[inline]
    fn flux(&self, u: &[f64; 3]) -> [f64; 3] {
        euler::flux(u, &self.gas)
    }

    #[inline]
    fn wavespeed(&self, u: &[f64; 3]) -> f64 {
        euler::wavespeed(u, &self.gas)
    }

    fn validate(&self, cell: usize, u: &[f64; 3]) -> Result<()> {
        euler::primitive(u, &self.gas)
            .map(|_| ())
            .map_err(|e| euler::with_cell(e, cell))
    }

    fn reflect(&self, u: &[f64; 3]) -> [f64; 3] {
        [u[0], -u[1], u[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary<const N: usize> {
    /// Ghost cells (and, for Lax-Wendroff, the end cells) hold fixed states.
    Dirichlet {
        left: [f64; N],
        right: [f64; N],
    },
    /// Solid walls: ghosts mirror the interior with reflected states.
    Reflective,
    Periodic,
}

/// State and widths padded with `ng` ghost cells on each side.
pub(crate) fn extend_with_ghosts<const N: usize, L: ConservationLaw<N>>(
    state: &[[f64; N]],
    widths: &[f64],
    ng: usize,
    bc: &Boundary<N>,
    law: &L,
) -> (Vec<[f64; N]>, Vec<f64>) {
    let n = state.len();
    let mut u = Vec::with_capacity(n + 2 * ng);
    let mut h = Vec::with_capacity(n + 2 * ng);
    for g in (0..ng).rev() {
        // g-th ghost to the left of cell 0 (g = 0 is adjacent).
        match bc {
            Boundary::Dirichlet { left, .. } => {
                u.push(*left);
                h.push(widths[0]);
            }
            Boundary::Reflective => {
                let k = g.min(n - 1);
                u.push(law.reflect(&state[k]));
                h.push(widths[k]);
            }
            Boundary::Periodic => {
                let k = (n - 1 - g % n) % n;
                u.push(state[k]);
                h.push(widths[k]);
            }
        }
    }
    u.extend_from_slice(state);
    h.extend_from_slice(widths);
    for g in 0..ng {
        match bc {
            Boundary::Dirichlet { right, .. } => {
                u.push(*right);
                h.push(widths[n - 1]);
            }
            Boundary::Reflective => {
                let k = n - 1 - g.min(n - 1);
                u.push(law.reflect(&state[k]));
                h.push(widths[k]);
            }
            Boundary::Periodic => {
                let k = g % n;
                u.push(state[k]);
                h.push(widths[k]);
            }
        }
    }
    (u, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflPolicy {
    pub cfl_number: f64,
    /// Cap used when every wavespeed vanishes.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
}

fn default_dt_max() -> f64 {
    1e-2
}

impl Default for CflPolicy {
    fn default() -> Self {
        CflPolicy {
            cfl_number: 0.6,
            dt_max: default_dt_max(),
        }
    }
}

impl CflPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_number > 0.0 && self.cfl_number < 1.0) {
            return Err(Error::config("cfl", "must lie in (0, 1)"));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::config("dt_max", "must be positive"));
        }
        Ok(())
    }
}

/// `cfl * min(dx) / max wavespeed`, clipped so that `t + dt` never passes
/// `t_end` and lands on it exactly.
pub fn cfl_dt<const N: usize, L: ConservationLaw<N>>(
    state: &[[f64; N]],
    grid: &Grid1D,
    policy: &CflPolicy,
    law: &L,
    t: f64,
    t_end: f64,
) -> Result<f64> {
    let mut speed: f64 = 0.0;
    for (i, u) in state.iter().enumerate() {
        law.validate(i, u)?;
        speed = speed.max(law.wavespeed(u));
    }
    let mut dt = if speed > 0.0 {
        policy.cfl_number * grid.min_width() / speed
    } else {
        policy.dt_max
    };
    let remaining = t_end - t;
    if dt >= remaining {
        dt = remaining;
    }
    Ok(dt)
}

/// Whether `t + dt` reached the end time under [`cfl_dt`]'s clipping.
pub fn reached_end(t: f64, dt: f64, t_end: f64) -> bool {
    dt == t_end - t
}

pub(crate) fn check_finite<const N: usize>(state: &[[f64; N]], stage: usize) -> Result<()> {
    match state.iter().position(|u| u.iter().any(|v| !v.is_finite())) {
        Some(cell) => Err(Error::NonFinite { cell, stage }),
        None => Ok(()),
    }
}
