use crate::error::{Error, Result};
use crate::euler::{Conserved, GasModel, Primitive};
use crate::mesh::Grid1D;
use crate::reference::{RiemannState, SOD_LEFT, SOD_RIGHT};
use crate::schemes::Boundary;

use super::{BoundaryKind, CaseId, ExperimentConfig};

pub const SQUARE_WAVE_BOUNDS: (f64, f64) = (0.25, 0.4);
pub const SQUARE_WAVE_VELOCITY: f64 = -1.0;
pub const SEDOV_INTERNAL_ENERGY: f64 = 2.8049e-4;

/// Initial cell averages and boundary treatment.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Euler {
        cells: Vec<Conserved>,
        bc: Boundary<3>,
    },
    /// Linear advection with the given velocity.
    Scalar {
        cells: Vec<[f64; 1]>,
        velocity: f64,
        bc: Boundary<1>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSetup {
    pub case: CaseId,
    pub domain: [f64; 2],
    pub end_time: f64,
    pub grid: Grid1D,
    pub initial: InitialState,
}

/// Piecewise-constant data: `values[k]` on `[breaks[k-1], breaks[k])`,
/// with the outer pieces extending to the domain ends.
struct Piecewise<T> {
    breaks: Vec<f64>,
    values: Vec<T>,
}

impl<const N: usize> Piecewise<[f64; N]> {
    /// Exact cell averages over `grid`.
    fn cell_averages(&self, grid: &Grid1D) -> Vec<[f64; N]> {
        let nodes = grid.nodes();
        nodes
            .windows(2)
            .map(|w| {
                let (l, r) = (w[0], w[1]);
                let mut acc = [0.0; N];
                for (k, v) in self.values.iter().enumerate() {
                    let lo = if k == 0 {
                        f64::NEG_INFINITY
                    } else {
                        self.breaks[k - 1]
                    };
                    let hi = self.breaks.get(k).copied().unwrap_or(f64::INFINITY);
                    let overlap = (r.min(hi) - l.max(lo)).max(0.0);
                    for c in 0..N {
                        acc[c] += overlap * v[c];
                    }
                }
                acc.map(|s| s / (r - l))
            })
            .collect()
    }
}

fn state(rho: f64, u: f64, p: f64, gas: &GasModel) -> Conserved {
    Primitive::from_rho_u_p(rho, u, p, gas).to_conserved(gas)
}

fn riemann_state(s: &RiemannState, gas: &GasModel) -> Conserved {
    state(s.rho, s.u, s.p, gas)
}

fn euler_bc(kind: BoundaryKind, left: Conserved, right: Conserved) -> Boundary<3> {
    match kind {
        BoundaryKind::Dirichlet => Boundary::Dirichlet { left, right },
        BoundaryKind::Reflective => Boundary::Reflective,
        BoundaryKind::Periodic => Boundary::Periodic,
    }
}

/// Nominal end time and domain of a case.
pub(crate) fn case_extent(cfg: &ExperimentConfig) -> Result<([f64; 2], f64)> {
    let (domain, t) = match cfg.case {
        CaseId::SquareWave => ([0.0, 1.0], 0.4),
        CaseId::Sod => ([0.0, 1.0], 0.2),
        CaseId::Sedov => ([0.0, 0.6], 1.0),
        CaseId::WoodwardAsPrinted | CaseId::WoodwardClassic => ([0.0, 1.0], 0.038),
        CaseId::Custom => {
            let c = cfg
                .custom
                .as_ref()
                .ok_or_else(|| Error::config("custom", "required when case = custom"))?;
            (c.domain, c.end_time)
        }
    };
    Ok((domain, cfg.end_time.unwrap_or(t)))
}

/// Initial data, boundary conditions, domain and end time of a case on a
/// uniform mesh of `n_cells`.
pub fn case_setup(cfg: &ExperimentConfig, n_cells: usize) -> Result<CaseSetup> {
    let gas = &cfg.gas;
    let (domain, end_time) = case_extent(cfg)?;
    let grid = Grid1D::uniform(domain[0], domain[1], n_cells)?;
    let riemann = |x0: f64, l: &RiemannState, r: &RiemannState, kind: BoundaryKind| {
        let (ul, ur) = (riemann_state(l, gas), riemann_state(r, gas));
        let cells = Piecewise {
            breaks: vec![x0],
            values: vec![ul, ur],
        }
        .cell_averages(&grid);
        InitialState::Euler {
            cells,
            bc: euler_bc(kind, ul, ur),
        }
    };
    let initial = match cfg.case {
        CaseId::SquareWave => {
            let (lo, hi) = SQUARE_WAVE_BOUNDS;
            InitialState::Scalar {
                cells: Piecewise {
                    breaks: vec![lo, hi],
                    values: vec![[0.0], [1.0], [0.0]],
                }
                .cell_averages(&grid),
                velocity: SQUARE_WAVE_VELOCITY,
                bc: Boundary::Periodic,
            }
        }
        CaseId::Sod | CaseId::WoodwardAsPrinted => {
            riemann(0.5, &SOD_LEFT, &SOD_RIGHT, BoundaryKind::Dirichlet)
        }
        CaseId::Sedov => {
            let w = Primitive::from_rho_u_e(1.0, 1.0, SEDOV_INTERNAL_ENERGY, gas).to_conserved(gas);
            InitialState::Euler {
                cells: vec![w; n_cells],
                bc: Boundary::Dirichlet { left: w, right: w },
            }
        }
        CaseId::WoodwardClassic => {
            let cells = Piecewise {
                breaks: vec![0.1, 0.9],
                values: vec![
                    state(1.0, 0.0, 1000.0, gas),
                    state(1.0, 0.0, 0.01, gas),
                    state(1.0, 0.0, 100.0, gas),
                ],
            }
            .cell_averages(&grid);
            InitialState::Euler {
                cells,
                bc: Boundary::Reflective,
            }
        }
        CaseId::Custom => {
            let c = cfg.custom.as_ref().expect("checked by case_extent");
            riemann(c.x0, &c.left, &c.right, c.boundary)
        }
    };
    Ok(CaseSetup {
        case: cfg.case,
        domain,
        end_time,
        grid,
        initial,
    })
}

/// Exact cell averages of the advected square wave at time `t` on a
/// periodic domain.
pub(crate) fn square_wave_exact(grid: &Grid1D, t: f64) -> Vec<f64> {
    let (a, b) = (grid.a(), grid.b());
    let len = b - a;
    let (lo, hi) = SQUARE_WAVE_BOUNDS;
    let shift = (SQUARE_WAVE_VELOCITY * t).rem_euclid(len);
    let (lo, hi) = (lo + shift, hi + shift);
    grid.nodes()
        .windows(2)
        .map(|w| {
            let mut covered = 0.0;
            for k in -2..=2 {
                let off = k as f64 * len;
                covered += (w[1].min(hi + off) - w[0].max(lo + off)).max(0.0);
            }
            covered / (w[1] - w[0])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{MeshStrategy, SchemeId};

    fn cfg(case: CaseId) -> ExperimentConfig {
        ExperimentConfig::new(case, SchemeId::Weno5Rk3, MeshStrategy::Uniform)
    }

    #[test]
    fn sod_initial_data() {
        let s = case_setup(&cfg(CaseId::Sod), 200).unwrap();
        assert_eq!((s.domain, s.end_time), ([0.0, 1.0], 0.2));
        let InitialState::Euler { cells, bc } = s.initial else {
            panic!()
        };
        let close = |a: [f64; 3], b: [f64; 3]| a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14);
        assert!(close(cells[0], [1.0, 0.0, 2.5]));
        assert!(close(cells[99], [1.0, 0.0, 2.5]));
        assert!(close(cells[100], [0.125, 0.0, 0.25]));
        let Boundary::Dirichlet { left, right } = bc else {
            panic!()
        };
        assert_eq!((left, right), (cells[0], cells[199]));
    }

    #[test]
    fn sedov_is_uniform_inflow() {
        let s = case_setup(&cfg(CaseId::Sedov), 200).unwrap();
        assert_eq!((s.domain, s.end_time), ([0.0, 0.6], 1.0));
        let InitialState::Euler { cells, .. } = s.initial else {
            panic!()
        };
        let gas = GasModel::default();
        let w = crate::euler::primitive(&cells[17], &gas).unwrap();
        assert_eq!((w.rho, w.u), (1.0, 1.0));
        assert!((w.e - 2.8049e-4).abs() < 1e-15);
    }

    #[test]
    fn woodward_as_printed_matches_sod() {
        let s = case_setup(&cfg(CaseId::WoodwardAsPrinted), 50).unwrap();
        let sod = case_setup(&cfg(CaseId::Sod), 50).unwrap();
        assert_eq!(s.initial, sod.initial);
        assert_eq!(s.end_time, 0.038);
        let c = case_setup(&cfg(CaseId::WoodwardClassic), 100).unwrap();
        let InitialState::Euler { cells, bc } = c.initial else {
            panic!()
        };
        assert_eq!(bc, Boundary::Reflective);
        assert!((cells[5][2] - 2500.0).abs() < 1e-9);
        assert!((cells[50][2] - 0.025).abs() < 1e-12);
        assert!((cells[95][2] - 250.0).abs() < 1e-9);
    }

    #[test]
    fn cell_averages_split_a_straddled_cell() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        let p = Piecewise {
            breaks: vec![0.3],
            values: vec![[1.0], [0.0]],
        };
        let avg = p.cell_averages(&g);
        assert_eq!(avg[0], [1.0]);
        assert!((avg[1][0] - 0.2).abs() < 1e-15);
        assert_eq!(avg[2], [0.0]);
    }

    #[test]
    fn square_wave_exact_translates_and_wraps() {
        let g = Grid1D::uniform(0.0, 1.0, 200).unwrap();
        let s = case_setup(&cfg(CaseId::SquareWave), 200).unwrap();
        let InitialState::Scalar {
            cells, velocity, ..
        } = s.initial
        else {
            panic!()
        };
        assert_eq!(velocity, -1.0);
        let u0: Vec<f64> = cells.iter().map(|c| c[0]).collect();
        let e0 = square_wave_exact(&g, 0.0);
        for (a, b) in u0.iter().zip(&e0) {
            assert!((a - b).abs() < 1e-12);
        }
        // Total mass 0.15 at all times, including while wrapping around.
        for t in [0.0, 0.1, 0.3, 0.4, 1.0] {
            let m: f64 = square_wave_exact(&g, t).iter().sum::<f64>() * 0.005;
            assert!((m - 0.15).abs() < 1e-12, "t = {t}: {m}");
        }
        let back = square_wave_exact(&g, 1.0);
        for (a, b) in back.iter().zip(&e0) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
