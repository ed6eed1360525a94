use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{GasModel, Primitive, PrimitiveField};

/// Constant state on one side of a Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl RiemannState {
    fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }
}

pub const SOD_LEFT: RiemannState = RiemannState {
    rho: 1.0,
    u: 0.0,
    p: 1.0,
};

pub const SOD_RIGHT: RiemannState = RiemannState {
    rho: 0.125,
    u: 0.0,
    p: 0.1,
};

/// Pressure function of one side and its derivative: shock branch above the
/// side pressure, rarefaction branch below.
pub fn pressure_function(p: f64, side: &RiemannState, gamma: f64) -> (f64, f64) {
    let c = side.sound_speed(gamma);
    if p > side.p {
        let a = 2.0 / ((gamma + 1.0) * side.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * side.p;
        let q = (a / (p + b)).sqrt();
        let f = (p - side.p) * q;
        (f, q * (1.0 - 0.5 * (p - side.p) / (p + b)))
    } else {
        let ratio = p / side.p;
        let e = (gamma - 1.0) / (2.0 * gamma);
        let f = 2.0 * c / (gamma - 1.0) * (ratio.powf(e) - 1.0);
        (
            f,
            ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (side.rho * c),
        )
    }
}

/// Star-region pressure and velocity by Newton iteration from the
/// primitive-variable guess.
pub fn star_state(left: &RiemannState, right: &RiemannState, gas: &GasModel) -> Result<(f64, f64)> {
    let g = gas.gamma;
    let (cl, cr) = (left.sound_speed(g), right.sound_speed(g));
    let du = right.u - left.u;
    if 2.0 / (g - 1.0) * (cl + cr) <= du {
        return Err(Error::Vacuum);
    }
    let pvrs = 0.5 * (left.p + right.p) - 0.125 * du * (left.rho + right.rho) * (cl + cr);
    let mut p = pvrs.max(1e-8 * (left.p + right.p));
    for _ in 0..100 {
        let (fl, dl) = pressure_function(p, left, g);
        let (fr, dr) = pressure_function(p, right, g);
        let next = (p - (fl + fr + du) / (dl + dr)).max(1e-14 * (left.p + right.p));
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < 1e-15 {
            break;
        }
    }
    let (fl, _) = pressure_function(p, left, g);
    let (fr, _) = pressure_function(p, right, g);
    Ok((p, 0.5 * (left.u + right.u) + 0.5 * (fr - fl)))
}

/// Self-similar solution at `s = (x - x0) / t`.
pub fn sample(
    s: f64,
    left: &RiemannState,
    right: &RiemannState,
    p_star: f64,
    u_star: f64,
    gamma: f64,
) -> RiemannState {
    let g = gamma;
    let gm = (g - 1.0) / (g + 1.0);
    if s <= u_star {
        let w = left;
        let c = w.sound_speed(g);
        if p_star > w.p {
            let speed =
                w.u - c * ((g + 1.0) / (2.0 * g) * p_star / w.p + (g - 1.0) / (2.0 * g)).sqrt();
            if s <= speed {
                *w
            } else {
                let rho = w.rho * (p_star / w.p + gm) / (gm * p_star / w.p + 1.0);
                RiemannState {
                    rho,
                    u: u_star,
                    p: p_star,
                }
            }
        } else {
            let head = w.u - c;
            let c_star = c * (p_star / w.p).powf((g - 1.0) / (2.0 * g));
            let tail = u_star - c_star;
            if s <= head {
                *w
            } else if s >= tail {
                RiemannState {
                    rho: w.rho * (p_star / w.p).powf(1.0 / g),
                    u: u_star,
                    p: p_star,
                }
            } else {
                let k = 2.0 / (g + 1.0) + gm / c * (w.u - s);
                RiemannState {
                    rho: w.rho * k.powf(2.0 / (g - 1.0)),
                    u: 2.0 / (g + 1.0) * (c + (g - 1.0) / 2.0 * w.u + s),
                    p: w.p * k.powf(2.0 * g / (g - 1.0)),
                }
            }
        }
    } else {
        let w = right;
        let c = w.sound_speed(g);
        if p_star > w.p {
            let speed =
                w.u + c * ((g + 1.0) / (2.0 * g) * p_star / w.p + (g - 1.0) / (2.0 * g)).sqrt();
            if s >= speed {
                *w
            } else {
                let rho = w.rho * (p_star / w.p + gm) / (gm * p_star / w.p + 1.0);
                RiemannState {
                    rho,
                    u: u_star,
                    p: p_star,
                }
            }
        } else {
            let head = w.u + c;
            let c_star = c * (p_star / w.p).powf((g - 1.0) / (2.0 * g));
            let tail = u_star + c_star;
            if s >= head {
                *w
            } else if s <= tail {
                RiemannState {
                    rho: w.rho * (p_star / w.p).powf(1.0 / g),
                    u: u_star,
                    p: p_star,
                }
            } else {
                let k = 2.0 / (g + 1.0) - gm / c * (w.u - s);
                RiemannState {
                    rho: w.rho * k.powf(2.0 / (g - 1.0)),
                    u: 2.0 / (g + 1.0) * (-c + (g - 1.0) / 2.0 * w.u + s),
                    p: w.p * k.powf(2.0 * g / (g - 1.0)),
                }
            }
        }
    }
}

/// Exact solution of the Riemann problem with discontinuity at `x0`,
/// sampled at `x` (left state for `x <= x0` at `t = 0`).
pub fn riemann_exact(
    x: &[f64],
    t: f64,
    x0: f64,
    left: &RiemannState,
    right: &RiemannState,
    gas: &GasModel,
) -> Result<PrimitiveField> {
    if !(t >= 0.0) {
        return Err(Error::config("t", "must be non-negative"));
    }
    let (p_star, u_star) = star_state(left, right, gas)?;
    Ok(x.iter()
        .map(|&xi| {
            let w = if t == 0.0 {
                if xi <= x0 {
                    *left
                } else {
                    *right
                }
            } else {
                sample((xi - x0) / t, left, right, p_star, u_star, gas.gamma)
            };
            Primitive::from_rho_u_p(w.rho, w.u, w.p, gas)
        })
        .collect())
}

/// Sod shock tube on `[0, 1]` with the diaphragm at 0.5.
pub fn sod_exact(x: &[f64], t: f64, gas: &GasModel) -> Result<PrimitiveField> {
    riemann_exact(x, t, 0.5, &SOD_LEFT, &SOD_RIGHT, gas)
}
