//! Two-step Richtmyer Lax–Wendroff on non-uniform cells.
//!
//! Half-step states live at the interfaces between neighbouring cell centers
//! and are divided by the center-to-center distance; the full step divides
//! the flux difference by half the distance between the two neighbouring
//! centers.

use crate::error::{Error, Result};
use crate::mesh::Grid1D;

use super::{check_finite, extend_with_ghosts, Boundary, ConservationLaw};

fn ghost_centers(widths_ext: &[f64], a: f64) -> Vec<f64> {
    // One ghost on the left: its right face sits at `a`.
    let mut x = Vec::with_capacity(widths_ext.len());
    let mut left = a - widths_ext[0];
    for h in widths_ext {
        x.push(left + 0.5 * h);
        left += h;
    }
    x
}

/// Control volume `(x_{i+1} - x_{i-1}) / 2` that the full step divides by.
/// Sums of `volume * u` over the updated cells change only through the two
/// outermost half-step fluxes.
pub fn lw_control_volumes<const N: usize, L: ConservationLaw<N>>(
    grid: &Grid1D,
    bc: &Boundary<N>,
    law: &L,
) -> Vec<f64> {
    let n = grid.n_cells();
    let dummy = vec![[0.0; N]; n];
    let (_, h) = extend_with_ghosts(&dummy, &grid.widths(), 1, bc, law);
    let x = ghost_centers(&h, grid.a());
    (1..=n).map(|i| 0.5 * (x[i + 1] - x[i - 1])).collect()
}

/// One Richtmyer step of size `dt`. With Dirichlet boundaries the two end
/// cells are held at the boundary states.
pub fn lax_wendroff_step<const N: usize, L: ConservationLaw<N>>(
    state: &mut [[f64; N]],
    grid: &Grid1D,
    dt: f64,
    law: &L,
    bc: &Boundary<N>,
) -> Result<()> {
    let n = state.len();
    if n != grid.n_cells() {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells(),
            got: n,
        });
    }
    if n < 3 {
        return Err(Error::TooFewCells {
            scheme: "Lax-Wendroff",
            need: 3,
            have: n,
        });
    }
    let (u, h) = extend_with_ghosts(state, &grid.widths(), 1, bc, law);
    let x = ghost_centers(&h, grid.a());
    let f: Vec<[f64; N]> = u.iter().map(|ui| law.flux(ui)).collect();

    // Half-step flux between extended cells j and j + 1.
    let mut half_flux = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let lam = dt / (2.0 * (x[j + 1] - x[j]));
        let uh: [f64; N] =
            std::array::from_fn(|k| 0.5 * (u[j + 1][k] + u[j][k]) - lam * (f[j + 1][k] - f[j][k]));
        law.validate(j.min(n - 1), &uh)?;
        half_flux.push(law.flux(&uh));
    }

    let held = matches!(bc, Boundary::Dirichlet { .. });
    let range = if held { 1..n - 1 } else { 0..n };
    for i in range {
        let e = i + 1;
        let vol = 0.5 * (x[e + 1] - x[e]) + 0.5 * (x[e] - x[e - 1]);
        for k in 0..N {
            state[i][k] = u[e][k] - dt / vol * (half_flux[i + 1][k] - half_flux[i][k]);
        }
    }
    if let Boundary::Dirichlet { left, right } = bc {
        state[0] = *left;
        state[n - 1] = *right;
    }
    check_finite(state, 0)?;
    for (i, s) in state.iter().enumerate() {
        law.validate(i, s)?;
    }
    Ok(())
}
