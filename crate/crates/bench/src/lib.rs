//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shockzone::euler::{Conserved, Primitive};
use shockzone::monitor::NodalFields;
use shockzone::reference::sod_exact;
use shockzone::surrogate::{InputNormalization, Layout, ResMLPParams, SurrogateModel};
use shockzone::{GasModel, Grid1D};

pub const N_CELLS: usize = 200;

pub fn uniform() -> Grid1D {
    Grid1D::uniform(0.0, 1.0, N_CELLS).expect("uniform grid")
}

/// Exact Sod momentum at time `t`, sampled on the nodes of `grid`.
pub fn sod_momentum(grid: &Grid1D, t: f64) -> NodalFields {
    let ex = sod_exact(grid.nodes(), t, &GasModel::default()).expect("exact Sod");
    NodalFields::scalar(ex.rho.iter().zip(&ex.u).map(|(r, u)| r * u).collect())
}

/// Exact Sod solution at time `t` as cell states.
pub fn sod_state(grid: &Grid1D, t: f64) -> Vec<Conserved> {
    let gas = GasModel::default();
    let ex = sod_exact(&grid.centers(), t, &gas).expect("exact Sod");
    (0..grid.n_cells())
        .map(|i| Primitive::from_rho_u_p(ex.rho[i], ex.u[i], ex.p[i], &gas).to_conserved(&gas))
        .collect()
}

/// Untrained surrogate with the full-size layout; timings do not depend on
/// the weights.
pub fn model(seed: u64) -> SurrogateModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SurrogateModel {
        params: ResMLPParams::init(Layout::default_size(N_CELLS + 1, N_CELLS), false, &mut rng),
        norm: InputNormalization::identity(N_CELLS + 1),
        encoding: Default::default(),
        domain: [0.0, 1.0],
        min_spacing: 0.0,
    }
}
