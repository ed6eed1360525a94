//! Gradient-based monitor function and its Gaussian regularization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Grid1D, Pchip};

/// Per-node solution fields feeding the monitor, in the order of the
/// monitor weights: density, momentum, specific internal energy, pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalFields {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub e: Vec<f64>,
    pub p: Vec<f64>,
}

impl NodalFields {
    /// A scalar profile occupies the momentum slot; the other fields are
    /// constant and contribute nothing.
    pub fn scalar(values: Vec<f64>) -> Self {
        let n = values.len();
        NodalFields {
            rho: vec![1.0; n],
            mom: values,
            e: vec![1.0; n],
            p: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn field(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.rho,
            1 => &self.mom,
            2 => &self.e,
            3 => &self.p,
            _ => panic!("field index {k} out of range"),
        }
    }

    fn field_mut(&mut self, k: usize) -> &mut Vec<f64> {
        match k {
            0 => &mut self.rho,
            1 => &mut self.mom,
            2 => &mut self.e,
            _ => &mut self.p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    Gaussian {
        /// Total kernel support as a fraction of the domain length.
        window_fraction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Density gradient weight.
    #[serde(default)]
    pub alpha1: f64,
    /// Momentum gradient weight.
    #[serde(default)]
    pub alpha2: f64,
    /// Internal energy gradient weight.
    #[serde(default)]
    pub alpha3: f64,
    /// Pressure gradient weight.
    #[serde(default)]
    pub alpha4: f64,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl MonitorConfig {
    /// Momentum-gradient monitor without smoothing (elliptic zoning setup).
    pub fn elliptic_default() -> Self {
        MonitorConfig::from_weights([0.0, 600.0, 0.0, 0.0], Smoothing::None)
    }

    /// Momentum-gradient monitor with a Gaussian over 10% of the domain
    /// (parabolic zoning setup).
    pub fn parabolic_default() -> Self {
        MonitorConfig::from_weights(
            [0.0, 600.0, 0.0, 0.0],
            Smoothing::Gaussian {
                window_fraction: 0.1,
            },
        )
    }

    pub fn from_weights(alpha: [f64; 4], smoothing: Smoothing) -> Self {
        MonitorConfig {
            alpha1: alpha[0],
            alpha2: alpha[1],
            alpha3: alpha[2],
            alpha4: alpha[3],
            smoothing,
        }
    }

    pub fn weights(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.alpha3, self.alpha4]
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.weights();
        if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::config(
                "monitor.alpha",
                "weights must be finite and >= 0",
            ));
        }
        if !alpha.iter().any(|a| *a > 0.0) {
            return Err(Error::config(
                "monitor.alpha",
                "at least one weight must be positive",
            ));
        }
        if let Smoothing::Gaussian { window_fraction } = self.smoothing {
            if !(window_fraction > 0.0 && window_fraction <= 1.0) {
                return Err(Error::config(
                    "monitor.smoothing.window_fraction",
                    "must lie in (0, 1]",
                ));
            }
        }
        Ok(())
    }

    /// Indices of fields with a nonzero weight.
    pub fn active_fields(&self) -> impl Iterator<Item = usize> {
        let alpha = self.weights();
        (0..4).filter(move |&k| alpha[k] > 0.0)
    }

    /// Upper bound `sqrt(1 + sum alpha)`.
    pub fn omega_max(&self) -> f64 {
        (1.0 + self.weights().iter().sum::<f64>()).sqrt()
    }
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig::elliptic_default()
    }
}

/// Monitor values at the nodes of `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorField {
    omega: Vec<f64>,
    grid: Grid1D,
}

impl MonitorField {
    pub fn new(omega: Vec<f64>, grid: Grid1D) -> Result<Self> {
        if omega.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                got: omega.len(),
            });
        }
        if let Some(i) = omega.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Zoning(format!(
                "monitor value {} at node {i}",
                omega[i]
            )));
        }
        Ok(MonitorField { omega, grid })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn into_omega(self) -> Vec<f64> {
        self.omega
    }
}

/// Three-point derivative: centered on interior nodes, second-order
/// one-sided at the two ends. Exact for quadratics on any grid.
pub fn derivative_on_grid(values: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    let x = grid.nodes();
    let n = x.len();
    if values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidGrid(
            "derivative needs at least 3 nodes".into(),
        ));
    }
    // Written in terms of divided differences so constants give exact zeros.
    let dd: Vec<f64> = (0..n - 1)
        .map(|i| (values[i + 1] - values[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        d[i] = (hr * dd[i - 1] + hl * dd[i]) / (hl + hr);
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    d[0] = dd[0] + h1 * (dd[0] - dd[1]) / (h1 + h2);
    let (h1, h2) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
    d[n - 1] = dd[n - 2] + h1 * (dd[n - 2] - dd[n - 3]) / (h1 + h2);
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(
            "degenerate spacing in derivative".into(),
        ));
    }
    Ok(d)
}

/// `omega = sqrt(1 + sum_k alpha_k (|f_k'| / max |f_k'|)^2)`, followed by the
/// configured smoothing. A field whose derivative vanishes everywhere (up to
/// roundoff relative to its magnitude) adds 0.
pub fn monitor_eval(
    fields: &NodalFields,
    grid: &Grid1D,
    cfg: &MonitorConfig,
) -> Result<MonitorField> {
    cfg.validate()?;
    if fields.len() != grid.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.n_nodes(),
            got: fields.len(),
        });
    }
    let alpha = cfg.weights();
    let mut sum = vec![1.0; grid.n_nodes()];
    for k in cfg.active_fields() {
        let d = derivative_on_grid(fields.field(k), grid)?;
        let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = fields.field(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm * grid.length() > 1e-12 * scale {
            for (s, v) in sum.iter_mut().zip(&d) {
                let r = v / norm;
                *s += alpha[k] * r * r;
            }
        }
    }
    let omega: Vec<f64> = sum.into_iter().map(f64::sqrt).collect();
    let m = MonitorField::new(omega, grid.clone())?;
    Ok(match cfg.smoothing {
        Smoothing::None => m,
        Smoothing::Gaussian { window_fraction } => gaussian_smooth(&m, window_fraction),
    })
}

/// Discrete Gaussian convolution with `sigma = window_fraction * L / 6`,
/// truncated at three sigma, trapezoid-weighted and renormalized per node.
pub fn gaussian_smooth(m: &MonitorField, window_fraction: f64) -> MonitorField {
    let grid = &m.grid;
    let x = grid.nodes();
    let n = x.len();
    let sigma = window_fraction * grid.length() / 6.0;
    // Slack keeps the truncated stencil symmetric on uniform grids.
    let reach = 3.0 * sigma * (1.0 + 1e-9);
    let mut quad = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (x[i + 1] - x[i]);
        quad[i] += h;
        quad[i + 1] += h;
    }
    let mut out = Vec::with_capacity(n);
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..n {
        while x[i] - x[lo] > reach {
            lo += 1;
        }
        while hi + 1 < n && x[hi + 1] - x[i] <= reach {
            hi += 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for j in lo..=hi {
            let d = (x[i] - x[j]) / sigma;
            let w = quad[j] * (-0.5 * d * d).exp();
            num += w * m.omega[j];
            den += w;
        }
        out.push(num / den);
    }
    MonitorField {
        omega: out,
        grid: grid.clone(),
    }
}

/// Solution fields interpolated from a fixed base grid, so the monitor can
/// follow a moving mesh.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    interpolants: [Option<Pchip>; 4],
    base: Grid1D,
    cfg: MonitorConfig,
}

impl FieldSampler {
    pub fn new(fields: &NodalFields, base: &Grid1D, cfg: &MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        if fields.len() != base.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: base.n_nodes(),
                got: fields.len(),
            });
        }
        let mut interpolants: [Option<Pchip>; 4] = Default::default();
        for k in cfg.active_fields() {
            interpolants[k] = Some(Pchip::new(base.nodes(), fields.field(k))?);
        }
        Ok(FieldSampler {
            interpolants,
            base: base.clone(),
            cfg: *cfg,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    /// Fields at the nodes of `grid`; inactive fields are zero.
    pub fn fields_on(&self, grid: &Grid1D) -> Result<NodalFields> {
        if !grid.same_endpoints(&self.base) {
            return Err(Error::EndpointMismatch {
                a0: self.base.a(),
                b0: self.base.b(),
                a1: grid.a(),
                b1: grid.b(),
            });
        }
        let n = grid.n_nodes();
        let mut out = NodalFields {
            rho: vec![0.0; n],
            mom: vec![0.0; n],
            e: vec![0.0; n],
            p: vec![0.0; n],
        };
        for (k, p) in self.interpolants.iter().enumerate() {
            if let Some(p) = p {
                *out.field_mut(k) = p.eval_sorted(grid.nodes());
            }
        }
        Ok(out)
    }

    pub fn monitor_on(&self, grid: &Grid1D) -> Result<MonitorField> {
        monitor_eval(&self.fields_on(grid)?, grid, &self.cfg)
    }
}
