//! Moving-mesh PDE zoning: the elliptic equidistribution problem solved by
//! fixed-point iteration, and its parabolic pseudo-time relaxation.
//!
//! Both are discretized with the conservative three-point stencil
//! `w_{i+1/2} (x_{i+1} - x_i) - w_{i-1/2} (x_i - x_{i-1})`, where the
//! midpoint weights are averages of nodal monitor values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Grid1D;
use crate::monitor::{FieldSampler, MonitorConfig, MonitorField, NodalFields};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EllipticSolveConfig {
    pub fixed_point_tol: f64,
    pub max_iters: usize,
    /// Initial under-relaxation factor in (0, 1]; 1 is the plain iteration.
    pub relaxation: f64,
    /// Halve the relaxation factor whenever the fixed-point defect stalls
    /// above its best value for a while. Sharp unsmoothed monitors make the
    /// plain iteration cycle.
    pub adaptive_relaxation: bool,
    /// Number of previous iterates mixed by Anderson acceleration; 0 runs
    /// the (relaxed) fixed-point iteration alone.
    pub anderson_depth: usize,
}

impl Default for EllipticSolveConfig {
    fn default() -> Self {
        EllipticSolveConfig {
            fixed_point_tol: 1e-8,
            max_iters: 1000,
            relaxation: 1.0,
            adaptive_relaxation: true,
            anderson_depth: 5,
        }
    }
}

const MIN_RELAXATION: f64 = 1.0 / 64.0;
const STALL_PATIENCE: usize = 20;

impl EllipticSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fixed_point_tol > 0.0) {
            return Err(Error::config(
                "elliptic.fixed_point_tol",
                "must be positive",
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::config("elliptic.max_iters", "must be at least 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::config("elliptic.relaxation", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParabolicSolveConfig {
    pub n_pseudo_steps: usize,
    /// Pseudo-time step; `None` selects `0.4 * dxi^2 / max(omega)` with
    /// `dxi = (b - a) / n_cells`.
    pub pseudo_dt: Option<f64>,
    pub max_retries: usize,
}

impl Default for ParabolicSolveConfig {
    fn default() -> Self {
        ParabolicSolveConfig {
            n_pseudo_steps: 1000,
            pseudo_dt: None,
            max_retries: 5,
        }
    }
}

impl ParabolicSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pseudo_steps == 0 {
            return Err(Error::config(
                "parabolic.n_pseudo_steps",
                "must be at least 1",
            ));
        }
        if let Some(dt) = self.pseudo_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("parabolic.pseudo_dt", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOutcome {
    pub grid: Grid1D,
    pub iterations: usize,
    pub converged: bool,
    /// Max distance between the last iterate and its undamped image,
    /// relative to the domain length.
    pub last_update: f64,
    /// Relaxation factor in effect at exit.
    pub relaxation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicOutcome {
    pub grid: Grid1D,
    pub steps: usize,
    /// Pseudo-time step actually used, after any halving.
    pub pseudo_dt: f64,
    pub retries: usize,
}

fn midpoint_weights(omega: &[f64]) -> Vec<f64> {
    omega.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// One linear solve of the discrete equidistribution problem with `omega`
/// frozen at the nodes of its grid. Endpoints stay pinned.
pub fn elliptic_linear_solve(omega: &MonitorField) -> Result<Grid1D> {
    let grid = omega.grid();
    let n = grid.n_cells();
    let w = midpoint_weights(omega.omega());
    let (a, b) = (grid.a(), grid.b());
    if n == 1 {
        return Ok(grid.clone());
    }
    // Thomas algorithm on interior nodes 1..n-1:
    // -w[i-1] x[i-1] + (w[i-1] + w[i]) x[i] - w[i] x[i+1] = 0.
    let m = n - 1;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    for k in 0..m {
        let i = k + 1;
        let lower = -w[i - 1];
        let diag = w[i - 1] + w[i];
        let upper = -w[i];
        let mut rhs = 0.0;
        if i == 1 {
            rhs += w[0] * a;
        }
        if i == n - 1 {
            rhs += w[n - 1] * b;
        }
        let (denom, carry) = if k == 0 {
            (diag, rhs)
        } else {
            (diag - lower * c_prime[k - 1], rhs - lower * d_prime[k - 1])
        };
        assert!(
            denom > 0.0,
            "tridiagonal pivot must be positive for positive omega"
        );
        c_prime[k] = upper / denom;
        d_prime[k] = carry / denom;
    }
    let mut x = vec![0.0; n + 1];
    x[0] = a;
    x[n] = b;
    x[m] = d_prime[m - 1];
    for k in (0..m - 1).rev() {
        x[k + 1] = d_prime[k] - c_prime[k] * x[k + 2];
    }
    Grid1D::new(x).map_err(|e| Error::Zoning(format!("elliptic solve lost monotonicity: {e}")))
}

/// Fixed-point iteration `x <- solve(omega(x))` starting from `start`, with
/// the monitor supplied by `monitor_at`.
pub fn fixed_point_with<F>(
    start: &Grid1D,
    cfg: &EllipticSolveConfig,
    mut monitor_at: F,
) -> Result<EllipticOutcome>
where
    F: FnMut(&Grid1D) -> Result<MonitorField>,
{
    cfg.validate()?;
    let length = start.length();
    let mut grid = start.clone();
    let mut r = cfg.relaxation;
    let mut last_update = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut mixer = Anderson::new(cfg.anderson_depth);
    for it in 1..=cfg.max_iters {
        let omega = monitor_at(&grid)?;
        let image = elliptic_linear_solve(&omega)?;
        let defect = image.max_displacement(&grid) / length;
        if defect < best {
            best = defect;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if cfg.adaptive_relaxation && stalled >= STALL_PATIENCE && r > MIN_RELAXATION {
            r = (0.5 * r).max(MIN_RELAXATION);
            best = defect;
            stalled = 0;
            mixer.clear();
        }
        last_update = defect;
        if defect < cfg.fixed_point_tol {
            return Ok(EllipticOutcome {
                grid,
                iterations: it,
                converged: true,
                last_update,
                relaxation: r,
            });
        }
        let x = grid.nodes();
        let f: Vec<f64> = image.nodes().iter().zip(x).map(|(g, x)| g - x).collect();
        let mixed = mixer.next(x, &f, r);
        grid = match Grid1D::new(mixed) {
            Ok(g) => g,
            Err(_) => {
                mixer.clear();
                let relaxed = x.iter().zip(&f).map(|(x, f)| x + r * f).collect();
                Grid1D::new(relaxed)?
            }
        };
    }
    Ok(EllipticOutcome {
        grid,
        iterations: cfg.max_iters,
        converged: false,
        last_update,
        relaxation: r,
    })
}

/// Anderson mixing of the fixed-point residuals `f = S(x) - x`: the next
/// iterate is `x + r f` corrected by the least-squares combination of past
/// residual differences that best cancels `f`.
struct Anderson {
    depth: usize,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    dx: Vec<Vec<f64>>,
    df: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson {
            depth,
            prev: None,
            dx: Vec::new(),
            df: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.prev = None;
        self.dx.clear();
        self.df.clear();
    }

    fn next(&mut self, x: &[f64], f: &[f64], r: f64) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().zip(f).map(|(x, f)| x + r * f).collect();
        if self.depth == 0 {
            return out;
        }
        if let Some((px, pf)) = self.prev.take() {
            if self.dx.len() == self.depth {
                self.dx.remove(0);
                self.df.remove(0);
            }
            self.dx
                .push(x.iter().zip(&px).map(|(a, b)| a - b).collect());
            self.df
                .push(f.iter().zip(&pf).map(|(a, b)| a - b).collect());
        }
        self.prev = Some((x.to_vec(), f.to_vec()));
        if let Some(gamma) = least_squares(&self.df, f) {
            for ((dx, df), g) in self.dx.iter().zip(&self.df).zip(&gamma) {
                for ((o, a), b) in out.iter_mut().zip(dx).zip(df) {
                    *o -= g * (a + r * b);
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `argmin |f - sum_j gamma_j cols_j|` via regularized normal equations.
fn least_squares(cols: &[Vec<f64>], f: &[f64]) -> Option<Vec<f64>> {
    let m = cols.len();
    if m == 0 {
        return None;
    }
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = dot(&cols[i], &cols[j]);
        }
        a[i][m] = dot(&cols[i], f);
    }
    let trace: f64 = (0..m).map(|i| a[i][i]).sum();
    if !(trace > 0.0) {
        return None;
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1e-12 * trace;
    }
    for k in 0..m {
        let p = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        a.swap(k, p);
        if a[k][k].abs() < 1e-300 {
            return None;
        }
        for i in k + 1..m {
            let l = a[i][k] / a[k][k];
            for j in k..=m {
                a[i][j] -= l * a[k][j];
            }
        }
    }
    let mut g = vec![0.0; m];
    for k in (0..m).rev() {
        let tail: f64 = (k + 1..m).map(|j| a[k][j] * g[j]).sum();
        g[k] = (a[k][m] - tail) / a[k][k];
    }
    g.iter().all(|v| v.is_finite()).then_some(g)
}

/// Elliptic zoning of `fields` given on the nodes of `grid`, iterating from
/// `grid` itself.
pub fn elliptic_fixed_point(
    fields: &NodalFields,
    grid: &Grid1D,
    monitor_cfg: &MonitorConfig,
    cfg: &EllipticSolveConfig,
) -> Result<EllipticOutcome> {
    let sampler = FieldSampler::new(fields, grid, monitor_cfg)?;
    elliptic_from(&sampler, grid, cfg)
}

/// Elliptic zoning of sampled fields, iterating from `start`.
pub fn elliptic_from(
    sampler: &FieldSampler,
    start: &Grid1D,
    cfg: &EllipticSolveConfig,
) -> Result<EllipticOutcome> {
    fixed_point_with(start, cfg, |g| sampler.monitor_on(g))
}

/// Parabolic zoning of `fields` given on the nodes of `grid`, relaxing from
/// `grid` itself.
pub fn parabolic_advance(
    fields: &NodalFields,
    grid: &Grid1D,
    monitor_cfg: &MonitorConfig,
    cfg: &ParabolicSolveConfig,
) -> Result<ParabolicOutcome> {
    let sampler = FieldSampler::new(fields, grid, monitor_cfg)?;
    parabolic_from(&sampler, grid, cfg)
}

/// Explicit pseudo-time relaxation of sampled fields, starting from `start`.
pub fn parabolic_from(
    sampler: &FieldSampler,
    start: &Grid1D,
    cfg: &ParabolicSolveConfig,
) -> Result<ParabolicOutcome> {
    parabolic_with(start, cfg, |g| sampler.monitor_on(g))
}

/// Pseudo-time relaxation with an arbitrary monitor. A node crossing halves
/// the step and restarts, up to `max_retries` times.
pub fn parabolic_with<F>(
    start: &Grid1D,
    cfg: &ParabolicSolveConfig,
    mut monitor_at: F,
) -> Result<ParabolicOutcome>
where
    F: FnMut(&Grid1D) -> Result<MonitorField>,
{
    cfg.validate()?;
    let dxi = start.length() / start.n_cells() as f64;
    let mut dt = match cfg.pseudo_dt {
        Some(dt) => dt,
        None => {
            let omega = monitor_at(start)?;
            let max_w = omega.omega().iter().cloned().fold(0.0, f64::max);
            0.4 * dxi * dxi / max_w
        }
    };
    for retry in 0..=cfg.max_retries {
        match relax(start, cfg.n_pseudo_steps, dt / (dxi * dxi), &mut monitor_at)? {
            Some(grid) => {
                return Ok(ParabolicOutcome {
                    grid,
                    steps: cfg.n_pseudo_steps,
                    pseudo_dt: dt,
                    retries: retry,
                })
            }
            None => dt *= 0.5,
        }
    }
    Err(Error::Zoning(format!(
        "parabolic relaxation crossed nodes after {} retries",
        cfg.max_retries
    )))
}

/// `None` signals a node crossing.
fn relax<F>(start: &Grid1D, steps: usize, r: f64, monitor_at: &mut F) -> Result<Option<Grid1D>>
where
    F: FnMut(&Grid1D) -> Result<MonitorField>,
{
    let mut grid = start.clone();
    let mut x = grid.nodes().to_vec();
    let n = x.len();
    for _ in 0..steps {
        let omega = monitor_at(&grid)?;
        let w = midpoint_weights(omega.omega());
        let mut next = x.clone();
        for i in 1..n - 1 {
            next[i] = x[i] + r * (w[i] * (x[i + 1] - x[i]) - w[i - 1] * (x[i] - x[i - 1]));
        }
        if next.windows(2).any(|p| !(p[1] > p[0])) {
            return Ok(None);
        }
        x = next;
        grid = Grid1D::new(x.clone())?;
    }
    Ok(Some(grid))
}

/// Largest relative deviation of per-cell monitor integrals (trapezoid rule)
/// from their mean.
pub fn equidistribution_residual(grid: &Grid1D, omega: &MonitorField) -> f64 {
    let x = grid.nodes();
    let w = omega.omega();
    let cells: Vec<f64> = (0..grid.n_cells())
        .map(|i| 0.5 * (w[i] + w[i + 1]) * (x[i + 1] - x[i]))
        .collect();
    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
    cells.iter().fold(0.0f64, |m, c| m.max((c - mean).abs())) / mean
}
