//! One-dimensional grids, spacing vectors and solution transfer between grids.
//!
//! A [`Grid1D`] stores the `N + 1` node coordinates of an `N`-cell mesh on
//! `[a, b]`. Every constructor validates strict monotonicity and pins the
//! endpoints, so any grid that exists is usable by the solvers and zoners.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacings below this fraction of the domain length are clamped.
pub const MIN_RELATIVE_SPACING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid1D {
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid(format!("node {i} is not finite")));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at {i}: {} >= {}",
                nodes[i],
                nodes[i + 1]
            )));
        }
        Ok(Grid1D { nodes })
    }

    /// Equispaced grid with `n_cells + 1` nodes.
    pub fn uniform(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGrid("non-finite endpoint".into()));
        }
        if b <= a {
            return Err(Error::InvalidGrid(format!("b = {b} must exceed a = {a}")));
        }
        if n_cells == 0 {
            return Err(Error::InvalidGrid("n_cells must be at least 1".into()));
        }
        let h = (b - a) / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| a + i as f64 * h).collect();
        nodes[n_cells] = b;
        Grid1D::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<f64> {
        self.nodes
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.b() - self.a()
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn min_width(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn same_endpoints(&self, other: &Grid1D) -> bool {
        self.a() == other.a() && self.b() == other.b()
    }

    /// Grid with the same endpoints, mirrored about the domain midpoint.
    pub fn mirrored(&self) -> Grid1D {
        let (a, b) = (self.a(), self.b());
        let mut nodes: Vec<f64> = self.nodes.iter().rev().map(|x| a + b - x).collect();
        let n = nodes.len() - 1;
        nodes[0] = a;
        nodes[n] = b;
        Grid1D { nodes }
    }

    pub fn max_displacement(&self, other: &Grid1D) -> f64 {
        self.nodes
            .iter()
            .zip(&other.nodes)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for Grid1D {
    type Error = Error;

    fn try_from(nodes: Vec<f64>) -> Result<Self> {
        Grid1D::new(nodes)
    }
}

impl From<Grid1D> for Vec<f64> {
    fn from(g: Grid1D) -> Self {
        g.nodes
    }
}

/// Positive cell widths of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingVector {
    deltas: Vec<f64>,
}

impl SpacingVector {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidSpacing("empty spacing vector".into()));
        }
        if let Some(i) = deltas.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidSpacing(format!(
                "delta {i} = {} is not positive",
                deltas[i]
            )));
        }
        Ok(SpacingVector { deltas })
    }

    /// Clamp raw widths to at least `MIN_RELATIVE_SPACING * length` and
    /// rescale so they sum to `length`.
    pub fn normalized(raw: &[f64], length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidSpacing(format!("bad length {length}")));
        }
        if raw.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidSpacing("non-finite raw spacing".into()));
        }
        let floor = MIN_RELATIVE_SPACING * length;
        let clamped: Vec<f64> = raw.iter().map(|d| d.max(floor)).collect();
        let total: f64 = clamped.iter().sum();
        let scale = length / total;
        SpacingVector::new(clamped.into_iter().map(|d| d * scale).collect())
    }

    /// Like [`SpacingVector::normalized`], then raise every width to at
    /// least `floor` by shrinking the free widths proportionally.
    pub fn normalized_with_floor(raw: &[f64], length: f64, floor: f64) -> Result<Self> {
        let base = SpacingVector::normalized(raw, length)?;
        if !(floor > 0.0) {
            return Ok(base);
        }
        if !(floor * raw.len() as f64 <= length) {
            return Err(Error::InvalidSpacing(format!(
                "floor {floor} leaves no room for {} cells",
                raw.len()
            )));
        }
        let mut d = base.deltas;
        let mut pinned = vec![false; d.len()];
        loop {
            let n_pinned = pinned.iter().filter(|p| **p).count();
            let free: f64 = d
                .iter()
                .zip(&pinned)
                .filter(|(_, p)| !**p)
                .map(|(v, _)| v)
                .sum();
            let scale = (length - floor * n_pinned as f64) / free;
            let mut changed = false;
            for (v, p) in d.iter_mut().zip(pinned.iter_mut()) {
                if !*p && *v * scale < floor {
                    *p = true;
                    changed = true;
                }
            }
            if !changed {
                for (v, p) in d.iter_mut().zip(&pinned) {
                    *v = if *p { floor } else { *v * scale };
                }
                return SpacingVector::new(d);
            }
        }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.deltas.iter().sum()
    }
}

/// Cumulative sum of `s` starting at `a`.
pub fn spacing_to_grid(s: &SpacingVector, a: f64) -> Result<Grid1D> {
    let mut nodes = Vec::with_capacity(s.len() + 1);
    let mut x = a;
    nodes.push(x);
    for d in s.deltas() {
        x += d;
        nodes.push(x);
    }
    Grid1D::new(nodes)
}

/// Like [`spacing_to_grid`] but pins the last node to `b` exactly.
///
/// The spacing must already sum to `b - a` up to roundoff.
pub fn spacing_to_grid_pinned(s: &SpacingVector, a: f64, b: f64) -> Result<Grid1D> {
    let total = s.total();
    if ((a + total) - b).abs() > 1e-9 * (b - a).abs().max(1.0) {
        return Err(Error::InvalidSpacing(format!(
            "spacing sums to {total}, domain length is {}",
            b - a
        )));
    }
    let mut nodes = Vec::with_capacity(s.len() + 1);
    let mut x = a;
    nodes.push(x);
    for d in &s.deltas()[..s.len() - 1] {
        x += d;
        nodes.push(x);
    }
    nodes.push(b);
    Grid1D::new(nodes)
}

pub fn grid_to_spacing(g: &Grid1D) -> SpacingVector {
    SpacingVector { deltas: g.widths() }
}

/// Monotone piecewise cubic Hermite interpolant (Fritsch–Carlson slopes with
/// Fritsch–Butland weighting on non-uniform data).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if y.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidGrid("interpolation needs 2 points".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&hi| !(hi > 0.0)) {
            return Err(Error::InvalidGrid("abscissae not increasing".into()));
        }
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                let (dl, dr) = (delta[i - 1], delta[i]);
                if dl * dr > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / dl + w2 / dr);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= xq) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        self.eval_in(i, xq)
    }

    /// Evaluate at ascending query points with a single forward sweep.
    pub fn eval_sorted(&self, xq: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut i = 0;
        xq.iter()
            .map(|&q| {
                while i + 2 < n && self.x[i + 1] <= q {
                    i += 1;
                }
                self.eval_in(i, q)
            })
            .collect()
    }

    #[inline]
    fn eval_in(&self, i: usize, xq: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h * h10 * self.d[i] + h01 * self.y[i + 1] + h * h11 * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 < 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Interpolate per-node values from `old` onto the nodes of `new`.
pub fn transfer_nodal(old: &Grid1D, values: &[f64], new: &Grid1D) -> Result<Vec<f64>> {
    check_endpoints(old, new)?;
    if values.len() != old.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: old.n_nodes(),
            got: values.len(),
        });
    }
    Ok(Pchip::new(old.nodes(), values)?.eval_sorted(new.nodes()))
}

/// Interpolate cell values, read as point values at cell centers, onto the
/// cell centers of `new`. The end cells' values are also pinned at the domain
/// endpoints so every new center is bracketed.
pub fn transfer_cells(old: &Grid1D, values: &[f64], new: &Grid1D) -> Result<Vec<f64>> {
    check_endpoints(old, new)?;
    let pchip = cell_interpolant(old, values)?;
    Ok(pchip.eval_sorted(&new.centers()))
}

/// How cell averages move between meshes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferKind {
    /// Hermite interpolation of the running integral; see
    /// [`transfer_cells_conservative`].
    #[default]
    Conservative,
    /// Hermite interpolation of center values; see [`transfer_cells`].
    Pointwise,
}

impl TransferKind {
    pub fn apply(self, old: &Grid1D, values: &[f64], new: &Grid1D) -> Result<Vec<f64>> {
        match self {
            TransferKind::Conservative => transfer_cells_conservative(old, values, new),
            TransferKind::Pointwise => transfer_cells(old, values, new),
        }
    }
}

/// Conservative transfer of cell averages: the running integral is
/// interpolated at the new nodes and differenced. Preserves the total exactly
/// and keeps non-negative data non-negative.
pub fn transfer_cells_conservative(old: &Grid1D, values: &[f64], new: &Grid1D) -> Result<Vec<f64>> {
    check_endpoints(old, new)?;
    if values.len() != old.n_cells() {
        return Err(Error::LengthMismatch {
            expected: old.n_cells(),
            got: values.len(),
        });
    }
    let mut cum = Vec::with_capacity(old.n_nodes());
    cum.push(0.0);
    let mut acc = 0.0;
    for (v, h) in values.iter().zip(old.widths()) {
        acc += v * h;
        cum.push(acc);
    }
    let mut at_new = Pchip::new(old.nodes(), &cum)?.eval_sorted(new.nodes());
    at_new[0] = 0.0;
    *at_new.last_mut().expect("non-empty") = acc;
    Ok(at_new
        .windows(2)
        .zip(new.widths())
        .map(|(c, h)| (c[1] - c[0]) / h)
        .collect())
}

/// Sample cell values at arbitrary sorted abscissae inside the domain.
pub fn cells_to_points(grid: &Grid1D, values: &[f64], xq: &[f64]) -> Result<Vec<f64>> {
    Ok(cell_interpolant(grid, values)?.eval_sorted(xq))
}

fn cell_interpolant(grid: &Grid1D, values: &[f64]) -> Result<Pchip> {
    let n = grid.n_cells();
    if values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: values.len(),
        });
    }
    let mut x = Vec::with_capacity(n + 2);
    let mut y = Vec::with_capacity(n + 2);
    x.push(grid.a());
    y.push(values[0]);
    x.extend(grid.centers());
    y.extend_from_slice(values);
    x.push(grid.b());
    y.push(values[n - 1]);
    Pchip::new(&x, &y)
}

/// Monotone Hermite transfer of nodal or cell-centered data; the layout is
/// inferred from the length of `values`.
pub fn hermite_transfer(old: &Grid1D, values: &[f64], new: &Grid1D) -> Result<Vec<f64>> {
    if values.len() == old.n_nodes() {
        transfer_nodal(old, values, new)
    } else {
        transfer_cells(old, values, new)
    }
}

fn check_endpoints(old: &Grid1D, new: &Grid1D) -> Result<()> {
    if !old.same_endpoints(new) {
        return Err(Error::EndpointMismatch {
            a0: old.a(),
            b0: old.b(),
            a1: new.a(),
            b1: new.b(),
        });
    }
    Ok(())
}

/// Write one row per abscissa: `index, x, <columns...>`.
pub fn write_snapshot_csv<W: Write>(out: W, x: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    if let Some((_, col)) = columns.iter().find(|(_, c)| c.len() != x.len()) {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: col.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "x".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header)?;
    for (i, xi) in x.iter().enumerate() {
        let mut row = vec![i.to_string(), format!("{xi:.17e}")];
        row.extend(columns.iter().map(|(_, col)| format!("{:.17e}", col[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_mesh_nodes() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);

        let g = Grid1D::uniform(0.0, 1.0, 200).unwrap();
        assert_eq!(g.n_nodes(), 201);
        assert!(g.widths().iter().all(|w| (w - 0.005).abs() < 1e-14));

        let g = Grid1D::uniform(0.0, 0.6, 200).unwrap();
        assert!(g.widths().iter().all(|w| (w - 0.003).abs() < 1e-14));
        assert_eq!(g.b(), 0.6);
    }

    #[test]
    fn uniform_mesh_rejects_bad_input() {
        assert!(Grid1D::uniform(1.0, 1.0, 4).is_err());
        assert!(Grid1D::uniform(1.0, 0.0, 4).is_err());
        assert!(Grid1D::uniform(f64::NAN, 1.0, 4).is_err());
        assert!(Grid1D::uniform(0.0, f64::INFINITY, 4).is_err());
        assert!(Grid1D::uniform(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn grid_rejects_non_monotone() {
        assert!(Grid1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Grid1D::new(vec![0.0, 0.6, 0.5, 1.0]).is_err());
        assert!(Grid1D::new(vec![0.0]).is_err());
    }

    #[test]
    fn spacing_round_trip_simple() {
        let s = SpacingVector::new(vec![0.5, 0.5]).unwrap();
        let g = spacing_to_grid(&s, 0.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(grid_to_spacing(&g), s);
    }

    #[test]
    fn spacing_rejects_nonpositive() {
        assert!(SpacingVector::new(vec![0.5, 0.0]).is_err());
        assert!(SpacingVector::new(vec![0.5, -0.1]).is_err());
        assert!(SpacingVector::new(vec![]).is_err());
    }

    #[test]
    fn floored_normalization_respects_floor_and_length() {
        let s =
            SpacingVector::normalized_with_floor(&[1e-9, 1.0, 2.0, 1e-12, 5.0], 1.0, 0.05).unwrap();
        assert!((s.total() - 1.0).abs() < 1e-14);
        assert!(s.deltas().iter().all(|d| *d >= 0.05 * (1.0 - 1e-14)));
        assert_eq!(s.deltas()[0], 0.05);
        // Free widths keep their ratios.
        assert!((s.deltas()[2] / s.deltas()[1] - 2.0).abs() < 1e-12);
        let same = SpacingVector::normalized_with_floor(&[1.0, 2.0], 3.0, 0.0).unwrap();
        assert_eq!(same, SpacingVector::normalized(&[1.0, 2.0], 3.0).unwrap());
        assert!(SpacingVector::normalized_with_floor(&[1.0, 2.0], 1.0, 0.6).is_err());
    }

    #[test]
    fn normalized_clamps_and_sums_to_length() {
        let s = SpacingVector::normalized(&[1.0, 0.0, -3.0, 1.0], 2.0).unwrap();
        assert!(s.deltas().iter().all(|d| *d > 0.0));
        assert!((s.total() - 2.0).abs() < 1e-12);
        let g = spacing_to_grid_pinned(&s, -1.0, 1.0).unwrap();
        assert_eq!(g.a(), -1.0);
        assert_eq!(g.b(), 1.0);
    }

    #[test]
    fn transfer_reproduces_constants_and_linears() {
        let old = Grid1D::new(vec![0.0, 0.1, 0.15, 0.4, 0.7, 0.72, 1.0]).unwrap();
        let new = Grid1D::uniform(0.0, 1.0, 13).unwrap();
        let c = vec![3.7; old.n_nodes()];
        for v in transfer_nodal(&old, &c, &new).unwrap() {
            assert!((v - 3.7).abs() < 1e-14);
        }
        let c = vec![3.7; old.n_cells()];
        for v in transfer_cells(&old, &c, &new).unwrap() {
            assert!((v - 3.7).abs() < 1e-14);
        }
        let lin: Vec<f64> = old.nodes().to_vec();
        let out = transfer_nodal(&old, &lin, &new).unwrap();
        for (v, x) in out.iter().zip(new.nodes()) {
            assert!((v - x).abs() < 1e-12, "{v} vs {x}");
        }
    }

    #[test]
    fn transfer_rejects_mismatched_endpoints() {
        let old = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        let new = Grid1D::uniform(0.0, 2.0, 4).unwrap();
        assert!(matches!(
            hermite_transfer(&old, &[0.0; 5], &new),
            Err(Error::EndpointMismatch { .. })
        ));
    }

    #[test]
    fn transfer_reproduces_data_at_shared_abscissae() {
        let g = Grid1D::new(vec![0.0, 0.2, 0.3, 0.65, 1.0]).unwrap();
        let v = [1.0, -2.0, 5.0, 5.5, 0.0];
        assert_eq!(transfer_nodal(&g, &v, &g).unwrap(), v);
    }

    #[test]
    fn step_data_is_bounded_by_local_data() {
        let x: Vec<f64> = (0..20)
            .map(|i| i as f64 * 0.05 + (i % 3) as f64 * 0.01)
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| if xi < 0.5 { 0.0 } else { 1.0 })
            .collect();
        let p = Pchip::new(&x, &y).unwrap();
        for i in 0..x.len() - 1 {
            let (lo, hi) = (y[i].min(y[i + 1]), y[i].max(y[i + 1]));
            for k in 0..=200 {
                let q = x[i] + (x[i + 1] - x[i]) * k as f64 / 200.0;
                let v = p.eval(q);
                assert!(v >= lo - 1e-14 && v <= hi + 1e-14, "overshoot at {q}: {v}");
            }
        }
    }

    #[test]
    fn snapshot_csv_layout() {
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, &[0.0, 1.0], &[("rho", &[2.0, 3.0])]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "index,x,rho");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,"));
    }

    fn arb_spacing() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-3f64..1.0, 1..60)
    }

    #[test]
    fn conservative_transfer_keeps_constants_and_identity() {
        let old = Grid1D::new(vec![0.0, 0.1, 0.15, 0.4, 0.7, 0.72, 1.0]).unwrap();
        let new = Grid1D::uniform(0.0, 1.0, 9).unwrap();
        for v in transfer_cells_conservative(&old, &[2.5; 6], &new).unwrap() {
            assert!((v - 2.5).abs() < 1e-13);
        }
        let v = [1.0, 4.0, 0.5, 0.5, 9.0, 2.0];
        for (a, b) in transfer_cells_conservative(&old, &v, &old)
            .unwrap()
            .iter()
            .zip(&v)
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn arb_cells() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec(0.0f64..10.0, n),
                prop::collection::vec(0.01f64..1.0, 1..50),
            )
        })
    }

    proptest! {
        #[test]
        fn spacing_grid_round_trip(raw in arb_spacing(), a in -5.0f64..5.0) {
            let s = SpacingVector::new(raw).unwrap();
            let g = spacing_to_grid(&s, a).unwrap();
            let back = grid_to_spacing(&g);
            for (x, y) in back.deltas().iter().zip(s.deltas()) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }

        #[test]
        fn monotone_data_yields_bounded_interpolant(
            steps in prop::collection::vec(0.0f64..1.0, 2..30),
            widths in prop::collection::vec(0.01f64..1.0, 30),
        ) {
            let mut y = vec![0.0];
            for s in &steps { y.push(y.last().unwrap() + s); }
            let mut x = vec![0.0];
            for w in widths.iter().take(y.len() - 1) { x.push(x.last().unwrap() + w); }
            let p = Pchip::new(&x, &y).unwrap();
            for i in 0..x.len() - 1 {
                for k in 0..=20 {
                    let q = x[i] + (x[i + 1] - x[i]) * k as f64 / 20.0;
                    let v = p.eval(q);
                    prop_assert!(v >= y[i] - 1e-12 && v <= y[i + 1] + 1e-12);
                }
            }
        }

        #[test]
        fn conservative_transfer_preserves_total_and_sign((w_old, v, w_new) in arb_cells()) {
            let len: f64 = w_old.iter().sum();
            let old = spacing_to_grid_pinned(&SpacingVector::new(w_old).unwrap(), 0.0, len).unwrap();
            let s = SpacingVector::normalized(&w_new, len).unwrap();
            let new = spacing_to_grid_pinned(&s, 0.0, len).unwrap();
            let out = transfer_cells_conservative(&old, &v, &new).unwrap();
            let before: f64 = v.iter().zip(old.widths()).map(|(a, h)| a * h).sum();
            let after: f64 = out.iter().zip(new.widths()).map(|(a, h)| a * h).sum();
            prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
            prop_assert!(out.iter().all(|x| *x >= -1e-9));
        }
    }
}
