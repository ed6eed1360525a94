//! Fifth-order WENO reconstruction on arbitrary (non-uniform) cell widths.
//!
//! Each candidate stencil value `q^k` and smoothness indicator `IS^k` comes
//! from the quadratic whose cell averages match three consecutive cells. The
//! quadratic is obtained by differentiating the cubic interpolant of the
//! primitive function through the four stencil interfaces, so every
//! coefficient is exact for any spacing and reduces to the Jiang–Shu
//! constants on a uniform mesh.

use crate::error::{Error, Result};
use crate::mesh::Grid1D;

use super::{check_finite, extend_with_ghosts, Boundary, ConservationLaw};

pub const WENO_LINEAR_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];
pub const WENO_EPSILON: f64 = 1e-6;
pub const WENO_POWER: i32 = 2;

const GHOSTS: usize = 3;

/// Linear maps from the three stencil averages (sorted by position) to the
/// interface value, the scaled slope `h u'` and the scaled curvature
/// `h^2 u''/2` of each candidate quadratic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SideCoefficients {
    pub q: [[f64; 3]; 3],
    pub slope: [[f64; 3]; 3],
    pub curv: [[f64; 3]; 3],
}

impl SideCoefficients {
    /// `first[k]` is the leftmost cell of candidate stencil `k`, `center` the
    /// cell whose width scales the indicators, `x_eval` the evaluation point.
    fn build(x_if: &[f64], widths: &[f64], center: usize, first: [usize; 3], x_eval: f64) -> Self {
        let hc = widths[center];
        let xc = 0.5 * (x_if[center] + x_if[center + 1]);
        let ye = (x_eval - xc) / hc;
        let mut out = SideCoefficients::default();
        for (k, &j0) in first.iter().enumerate() {
            let y: [f64; 4] = std::array::from_fn(|m| (x_if[j0 + m] - xc) / hc);
            // Derivatives of the cubic Lagrange basis for the primitive.
            let mut d1 = [0.0; 4]; // L_m'(ye)
            let mut d2 = [0.0; 4]; // L_m''(0)
            let mut d3 = [0.0; 4]; // L_m'''(0)
            for m in 0..4 {
                let roots: Vec<f64> = (0..4).filter(|&r| r != m).map(|r| y[r]).collect();
                let denom: f64 = roots.iter().map(|r| y[m] - r).product();
                let s1 = roots[0] + roots[1] + roots[2];
                let s2 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
                d1[m] = (3.0 * ye * ye - 2.0 * s1 * ye + s2) / denom;
                d2[m] = -2.0 * s1 / denom;
                d3[m] = 6.0 / denom;
            }
            // P_m = sum_{l < m} (h_l / h_c) ubar_l, so ubar_l enters every P_m with m > l.
            for l in 0..3 {
                let hl = widths[j0 + l] / hc;
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for m in (l + 1)..4 {
                    a += d1[m];
                    b += d2[m];
                    c += d3[m];
                }
                out.q[k][l] = hl * a;
                out.slope[k][l] = hl * b;
                out.curv[k][l] = hl * 0.5 * c;
            }
        }
        out
    }
}

/// Stencil coefficients for every interface of a ghost-padded grid.
#[derive(Debug, Clone)]
pub struct Weno5Stencils {
    nodes: Vec<f64>,
    /// Left-biased (value seen from the cell on the left) per interface.
    pub left: Vec<SideCoefficients>,
    /// Right-biased (value seen from the cell on the right) per interface.
    pub right: Vec<SideCoefficients>,
}

impl Weno5Stencils {
    /// `widths_ext` includes `GHOSTS` ghost cells on each side.
    pub fn new(widths_ext: &[f64], nodes: &[f64]) -> Self {
        let m = widths_ext.len();
        let n = m - 2 * GHOSTS;
        let mut x_if = Vec::with_capacity(m + 1);
        x_if.push(0.0);
        for h in widths_ext {
            x_if.push(x_if.last().unwrap() + h);
        }
        let mut left = Vec::with_capacity(n + 1);
        let mut right = Vec::with_capacity(n + 1);
        for j in 0..=n {
            // Interface between extended cells jl and jl + 1.
            let jl = j + GHOSTS - 1;
            let jr = jl + 1;
            let xe = x_if[jr];
            left.push(SideCoefficients::build(
                &x_if,
                widths_ext,
                jl,
                [jl - 2, jl - 1, jl],
                xe,
            ));
            right.push(SideCoefficients::build(
                &x_if,
                widths_ext,
                jr,
                [jr, jr - 1, jr - 2],
                xe,
            ));
        }
        Weno5Stencils {
            nodes: nodes.to_vec(),
            left,
            right,
        }
    }

    fn matches(&self, grid: &Grid1D) -> bool {
        self.nodes == grid.nodes()
    }
}

/// Running extremes of the nonlinear weights seen by a [`Weno5`] engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightAudit {
    pub interfaces: u64,
    pub max_sum_deviation: f64,
    pub min_weight: f64,
}

impl Default for WeightAudit {
    fn default() -> Self {
        WeightAudit {
            interfaces: 0,
            max_sum_deviation: 0.0,
            min_weight: f64::INFINITY,
        }
    }
}

impl WeightAudit {
    fn record(&mut self, w: &[f64; 3]) {
        self.interfaces += 1;
        self.max_sum_deviation = self.max_sum_deviation.max((w[0] + w[1] + w[2] - 1.0).abs());
        self.min_weight = self.min_weight.min(w[0].min(w[1]).min(w[2]));
    }

    pub fn merge(&mut self, other: &WeightAudit) {
        self.interfaces += other.interfaces;
        self.max_sum_deviation = self.max_sum_deviation.max(other.max_sum_deviation);
        self.min_weight = self.min_weight.min(other.min_weight);
    }
}

/// Per-interface intermediate quantities of a scalar reconstruction.
#[derive(Debug, Clone, Default)]
pub struct Weno5Workspace {
    pub qk: Vec<[f64; 3]>,
    pub isk: Vec<[f64; 3]>,
    pub omegak: Vec<[f64; 3]>,
    /// `dx_i / (dx_i + dx_{i+1})` at each interface.
    pub alpha_interp: Vec<f64>,
    /// Linear interfacial state `(1 - alpha) ubar_i + alpha ubar_{i+1}`.
    pub linear_state: Vec<f64>,
}

/// Nonlinear combination at one interface. `first[k]` indexes `v` at the
/// leftmost cell of stencil `k`.
#[inline]
fn combine(
    c: &SideCoefficients,
    v: &[f64],
    first: [usize; 3],
) -> ([f64; 3], [f64; 3], [f64; 3], f64) {
    let mut q = [0.0; 3];
    let mut is = [0.0; 3];
    let mut alpha = [0.0; 3];
    for k in 0..3 {
        let s = &v[first[k]..first[k] + 3];
        let dot = |w: &[f64; 3]| w[0] * s[0] + w[1] * s[1] + w[2] * s[2];
        q[k] = dot(&c.q[k]);
        let b = dot(&c.slope[k]);
        let cc = dot(&c.curv[k]);
        is[k] = b * b + 13.0 / 3.0 * cc * cc;
        let d = WENO_EPSILON + is[k];
        alpha[k] = WENO_LINEAR_WEIGHTS[k] / (d * d);
    }
    let sum = alpha[0] + alpha[1] + alpha[2];
    let omega = [alpha[0] / sum, alpha[1] / sum, alpha[2] / sum];
    let value = omega[0] * q[0] + omega[1] * q[1] + omega[2] * q[2];
    (q, is, omega, value)
}

#[inline]
fn left_first(j: usize) -> [usize; 3] {
    let jl = j + GHOSTS - 1;
    [jl - 2, jl - 1, jl]
}

#[inline]
fn right_first(j: usize) -> [usize; 3] {
    let jr = j + GHOSTS;
    [jr, jr - 1, jr - 2]
}

/// Left-biased WENO5 interface values of scalar cell averages, one per
/// interface (`n + 1` values), plus the intermediate quantities.
pub fn weno5_reconstruct(
    averages: &[f64],
    grid: &Grid1D,
    bc: &Boundary<1>,
) -> Result<(Vec<f64>, Weno5Workspace)> {
    let n = averages.len();
    if n != grid.n_cells() {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells(),
            got: n,
        });
    }
    if n < 5 {
        return Err(Error::TooFewCells {
            scheme: "WENO5",
            need: 5,
            have: n,
        });
    }
    let law = super::LinearAdvection { velocity: 1.0 };
    let state: Vec<[f64; 1]> = averages.iter().map(|&a| [a]).collect();
    let (u, h) = extend_with_ghosts(&state, &grid.widths(), GHOSTS, bc, &law);
    let v: Vec<f64> = u.iter().map(|x| x[0]).collect();
    let st = Weno5Stencils::new(&h, grid.nodes());
    let mut ws = Weno5Workspace::default();
    let mut values = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let (q, is, omega, value) = combine(&st.left[j], &v, left_first(j));
        let (il, ir) = (j + GHOSTS - 1, j + GHOSTS);
        let alpha = h[il] / (h[il] + h[ir]);
        ws.qk.push(q);
        ws.isk.push(is);
        ws.omegak.push(omega);
        ws.alpha_interp.push(alpha);
        ws.linear_state.push((1.0 - alpha) * v[il] + alpha * v[ir]);
        values.push(value);
    }
    Ok((values, ws))
}

/// Local Lax–Friedrichs splitting `f± = (f ± max_speed u) / 2`.
pub fn llf_flux_split<const N: usize>(
    states: &[[f64; N]],
    fluxes: &[[f64; N]],
    max_speed: f64,
) -> (Vec<[f64; N]>, Vec<[f64; N]>) {
    let plus = states
        .iter()
        .zip(fluxes)
        .map(|(u, f)| std::array::from_fn(|k| 0.5 * (f[k] + max_speed * u[k])))
        .collect();
    let minus = states
        .iter()
        .zip(fluxes)
        .map(|(u, f)| std::array::from_fn(|k| 0.5 * (f[k] - max_speed * u[k])))
        .collect();
    (plus, minus)
}

/// `-(F_{i+1/2} - F_{i-1/2}) / dx_i` from `n + 1` interface fluxes.
pub fn rhs_from_fluxes<const N: usize>(fluxes: &[[f64; N]], widths: &[f64]) -> Vec<[f64; N]> {
    widths
        .iter()
        .enumerate()
        .map(|(i, h)| std::array::from_fn(|k| -(fluxes[i + 1][k] - fluxes[i][k]) / h))
        .collect()
}

/// Component-wise LLF-split WENO5 spatial operator. Stencil coefficients are
/// cached for the last grid seen.
#[derive(Debug, Clone, Default)]
pub struct Weno5 {
    stencils: Option<(Boundary<1>, Weno5Stencils)>,
    audit: WeightAudit,
    audit_enabled: bool,
}

fn bc_kind<const N: usize>(bc: &Boundary<N>) -> Boundary<1> {
    match bc {
        Boundary::Dirichlet { .. } => Boundary::Dirichlet {
            left: [0.0],
            right: [0.0],
        },
        Boundary::Reflective => Boundary::Reflective,
        Boundary::Periodic => Boundary::Periodic,
    }
}

impl Weno5 {
    pub fn new() -> Self {
        Weno5::default()
    }

    /// Track the nonlinear weights of every reconstruction.
    pub fn with_audit() -> Self {
        Weno5 {
            audit_enabled: true,
            ..Weno5::default()
        }
    }

    pub fn audit(&self) -> &WeightAudit {
        &self.audit
    }

    /// Numerical fluxes at all `n + 1` interfaces.
    pub fn interface_fluxes<const N: usize, L: ConservationLaw<N>>(
        &mut self,
        state: &[[f64; N]],
        grid: &Grid1D,
        law: &L,
        bc: &Boundary<N>,
    ) -> Result<Vec<[f64; N]>> {
        let n = state.len();
        if n != grid.n_cells() {
            return Err(Error::LengthMismatch {
                expected: grid.n_cells(),
                got: n,
            });
        }
        if n < 5 {
            return Err(Error::TooFewCells {
                scheme: "WENO5",
                need: 5,
                have: n,
            });
        }
        let (u, h) = extend_with_ghosts(state, &grid.widths(), GHOSTS, bc, law);
        let kind = bc_kind(bc);
        let stale = !matches!(&self.stencils, Some((k, s)) if *k == kind && s.matches(grid));
        if stale {
            self.stencils = Some((kind, Weno5Stencils::new(&h, grid.nodes())));
        }
        let st = &self.stencils.as_ref().unwrap().1;

        let mut max_speed: f64 = 0.0;
        let mut f = Vec::with_capacity(u.len());
        for (i, ui) in u.iter().enumerate() {
            law.validate(i.saturating_sub(GHOSTS).min(n - 1), ui)?;
            max_speed = max_speed.max(law.wavespeed(ui));
            f.push(law.flux(ui));
        }
        let (fp, fm) = llf_flux_split(&u, &f, max_speed);

        let mut out = vec![[0.0; N]; n + 1];
        let mut plus = vec![0.0; u.len()];
        let mut minus = vec![0.0; u.len()];
        for k in 0..N {
            for i in 0..u.len() {
                plus[i] = fp[i][k];
                minus[i] = fm[i][k];
            }
            for (j, fj) in out.iter_mut().enumerate() {
                let (_, _, wl, vl) = combine(&st.left[j], &plus, left_first(j));
                let (_, _, wr, vr) = combine(&st.right[j], &minus, right_first(j));
                if self.audit_enabled {
                    self.audit.record(&wl);
                    self.audit.record(&wr);
                }
                fj[k] = vl + vr;
            }
        }
        Ok(out)
    }

    pub fn rhs<const N: usize, L: ConservationLaw<N>>(
        &mut self,
        state: &[[f64; N]],
        grid: &Grid1D,
        law: &L,
        bc: &Boundary<N>,
    ) -> Result<Vec<[f64; N]>> {
        let fluxes = self.interface_fluxes(state, grid, law, bc)?;
        let rhs = rhs_from_fluxes(&fluxes, &grid.widths());
        check_finite(&rhs, 0)?;
        Ok(rhs)
    }
}
