use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use std::f64::consts::LN_2;
use std::ops::Range;

use crate::error::{Error, Result};

/// Shape of a residual MLP: an input map, `n_blocks` residual blocks of
/// width `width`, and an output map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_in: usize,
    pub width: usize,
    pub n_blocks: usize,
    pub n_out: usize,
}

impl Layout {
    pub const fn default_size(n_in: usize, n_out: usize) -> Self {
        Layout {
            n_in,
            width: 100,
            n_blocks: 5,
            n_out,
        }
    }

    fn block_size(&self) -> usize {
        2 * (self.width * self.width + self.width)
    }

    fn input_len(&self) -> usize {
        self.width * self.n_in + self.width
    }

    pub fn n_params(&self) -> usize {
        self.input_len() + self.n_blocks * self.block_size() + self.n_out * self.width + self.n_out
    }

    fn input_w(&self) -> Range<usize> {
        0..self.width * self.n_in
    }

    fn input_b(&self) -> Range<usize> {
        let s = self.width * self.n_in;
        s..s + self.width
    }

    fn block_start(&self, k: usize) -> usize {
        self.input_len() + k * self.block_size()
    }

    /// Weight and bias ranges of affine layer `j` (0 or 1) in block `k`.
    fn block_layer(&self, k: usize, j: usize) -> (Range<usize>, Range<usize>) {
        let ww = self.width * self.width;
        let s = self.block_start(k) + j * (ww + self.width);
        (s..s + ww, s + ww..s + ww + self.width)
    }

    fn output_w(&self) -> Range<usize> {
        let s = self.block_start(self.n_blocks);
        s..s + self.n_out * self.width
    }

    fn output_b(&self) -> Range<usize> {
        let s = self.output_w().end;
        s..s + self.n_out
    }
}

/// Weights of a residual MLP stored in one flat vector, layer by layer:
/// input map (W, b), each block's two affine layers (W1, b1, W2, b2), output
/// map (W, b). Every W is row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResMLPParams {
    layout: Layout,
    /// Apply ReLU between the two affine layers of each block as well.
    inner_relu: bool,
    data: Vec<f64>,
}

/// Intermediate activations of one batched forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    x: Array2<f64>,
    /// Inputs to each block and the final hidden state (`n_blocks + 1`).
    h: Vec<Array2<f64>>,
    /// First affine output in each block, before the optional inner ReLU.
    a1: Vec<Array2<f64>>,
    /// Pre-activation sums `h + A2(A1(h))` in each block.
    s: Vec<Array2<f64>>,
    /// Raw network outputs.
    pub z: Array2<f64>,
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Shrink factor for the last layer of each block and the output map.
pub const RESIDUAL_INIT_SCALE: f64 = 0.1;

fn affine(x: &ArrayView2<f64>, w: ArrayView2<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let mut y = x.dot(&w.t());
    y += &b;
    y
}

fn ensure_finite(a: &Array2<f64>, stage: impl FnOnce() -> String) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation(stage()))
    }
}

impl ResMLPParams {
    pub fn zeros(layout: Layout, inner_relu: bool) -> Self {
        ResMLPParams {
            layout,
            inner_relu,
            data: vec![0.0; layout.n_params()],
        }
    }

    /// Uniform He-style initialization `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`
    /// for weights, zero biases. The second layer of every block and the
    /// output map are shrunk by [`RESIDUAL_INIT_SCALE`], so blocks start close
    /// to the identity and initial spacings close to uniform.
    pub fn init<R: Rng>(layout: Layout, inner_relu: bool, rng: &mut R) -> Self {
        let mut p = ResMLPParams::zeros(layout, inner_relu);
        let mut fill = |range: Range<usize>, fan_in: usize, data: &mut [f64]| {
            let bound = (6.0 / fan_in as f64).sqrt();
            for v in &mut data[range] {
                *v = rng.random_range(-bound..bound);
            }
        };
        fill(layout.input_w(), layout.n_in, &mut p.data);
        for k in 0..layout.n_blocks {
            for j in 0..2 {
                fill(layout.block_layer(k, j).0, layout.width, &mut p.data);
            }
        }
        fill(layout.output_w(), layout.width, &mut p.data);
        for k in 0..layout.n_blocks {
            for v in &mut p.data[layout.block_layer(k, 1).0] {
                *v *= RESIDUAL_INIT_SCALE;
            }
        }
        for v in &mut p.data[layout.output_w()] {
            *v *= RESIDUAL_INIT_SCALE;
        }
        p
    }

    pub fn from_flat(layout: Layout, inner_relu: bool, data: Vec<f64>) -> Result<Self> {
        if data.len() != layout.n_params() {
            return Err(Error::LengthMismatch {
                expected: layout.n_params(),
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptModel("non-finite parameter".into()));
        }
        Ok(ResMLPParams {
            layout,
            inner_relu,
            data,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn inner_relu(&self) -> bool {
        self.inner_relu
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn mat(&self, r: Range<usize>, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, cols), &self.data[r]).expect("layout")
    }

    fn vec(&self, r: Range<usize>) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.data[r])
    }

    pub fn input_map(&self) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let l = self.layout;
        (
            self.mat(l.input_w(), l.width, l.n_in),
            self.vec(l.input_b()),
        )
    }

    pub fn block(&self, k: usize, j: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let l = self.layout;
        let (w, b) = l.block_layer(k, j);
        (self.mat(w, l.width, l.width), self.vec(b))
    }

    pub fn output_map(&self) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let l = self.layout;
        (
            self.mat(l.output_w(), l.n_out, l.width),
            self.vec(l.output_b()),
        )
    }

    /// Zero both affine layers of every block, leaving the skip paths.
    pub fn zero_blocks(&mut self) {
        let l = self.layout;
        let (start, end) = (l.block_start(0), l.block_start(l.n_blocks));
        self.data[start..end].iter_mut().for_each(|v| *v = 0.0);
    }

    /// Batched forward pass on rows of `x`, keeping activations for
    /// [`ResMLPParams::backward`].
    pub fn forward_trace(&self, x: ArrayView2<f64>) -> Result<Trace> {
        let l = self.layout;
        if x.ncols() != l.n_in {
            return Err(Error::LengthMismatch {
                expected: l.n_in,
                got: x.ncols(),
            });
        }
        let (wi, bi) = self.input_map();
        let mut h = vec![affine(&x, wi, bi)];
        ensure_finite(&h[0], || "input map".into())?;
        let mut a1s = Vec::with_capacity(l.n_blocks);
        let mut ss = Vec::with_capacity(l.n_blocks);
        for k in 0..l.n_blocks {
            let hk = h[k].view();
            let (w1, b1) = self.block(k, 0);
            let (w2, b2) = self.block(k, 1);
            let a1 = affine(&hk, w1, b1);
            let r1 = if self.inner_relu {
                a1.mapv(relu)
            } else {
                a1.clone()
            };
            let mut s = affine(&r1.view(), w2, b2);
            s += &hk;
            let next = s.mapv(relu);
            ensure_finite(&next, || format!("residual block {k}"))?;
            a1s.push(a1);
            ss.push(s);
            h.push(next);
        }
        let (wo, bo) = self.output_map();
        let z = affine(&h[l.n_blocks].view(), wo, bo);
        ensure_finite(&z, || "output map".into())?;
        Ok(Trace {
            x: x.to_owned(),
            h,
            a1: a1s,
            s: ss,
            z,
        })
    }

    /// Raw outputs for a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row");
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation("input".into()));
        }
        Ok(self.forward_trace(view)?.z.into_raw_vec_and_offset().0)
    }

    /// Gradient of a scalar loss with respect to every parameter, given
    /// `dz = dloss / dz` for the traced batch. Returned in the flat layout.
    pub fn backward(&self, trace: &Trace, dz: ArrayView2<f64>) -> Vec<f64> {
        let l = self.layout;
        let mut g = vec![0.0; l.n_params()];
        let hl = trace.h[l.n_blocks].view();
        write_affine_grads(&mut g, l.output_w(), l.output_b(), l.n_out, l.width, dz, hl);
        let (wo, _) = self.output_map();
        let mut dh = dz.dot(&wo);
        for k in (0..l.n_blocks).rev() {
            let mut ds = dh;
            ds.zip_mut_with(&trace.s[k], |d, &s| {
                if s <= 0.0 {
                    *d = 0.0
                }
            });
            let (w1r, b1r) = l.block_layer(k, 0);
            let (w2r, b2r) = l.block_layer(k, 1);
            let r1 = if self.inner_relu {
                trace.a1[k].mapv(relu)
            } else {
                trace.a1[k].clone()
            };
            write_affine_grads(&mut g, w2r, b2r, l.width, l.width, ds.view(), r1.view());
            let (w2, _) = self.block(k, 1);
            let mut da1 = ds.dot(&w2);
            if self.inner_relu {
                da1.zip_mut_with(&trace.a1[k], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            write_affine_grads(
                &mut g,
                w1r,
                b1r,
                l.width,
                l.width,
                da1.view(),
                trace.h[k].view(),
            );
            let (w1, _) = self.block(k, 0);
            let mut prev = da1.dot(&w1);
            prev += &ds;
            dh = prev;
        }
        write_affine_grads(
            &mut g,
            l.input_w(),
            l.input_b(),
            l.width,
            l.n_in,
            dh.view(),
            trace.x.view(),
        );
        g
    }
}

fn write_affine_grads(
    g: &mut [f64],
    wr: Range<usize>,
    br: Range<usize>,
    rows: usize,
    cols: usize,
    dy: ArrayView2<f64>,
    x: ArrayView2<f64>,
) {
    {
        let mut gw = ArrayViewMut2::from_shape((rows, cols), &mut g[wr]).expect("layout");
        general_mat_mul(1.0, &dy.t(), &x, 0.0, &mut gw);
    }
    let mut gb = ArrayViewMut1::from(&mut g[br]);
    gb.assign(&dy.sum_axis(Axis(0)));
}

/// Positivity map taking raw outputs to spacings: `scale * softplus(z) / ln 2`,
/// so that a zero output yields `scale`.
pub fn softplus_map(z: f64, scale: f64) -> f64 {
    scale * softplus(z) / LN_2
}

/// Derivative of [`softplus_map`] with respect to `z`.
pub fn softplus_map_grad(z: f64, scale: f64) -> f64 {
    scale * sigmoid(z) / LN_2
}

pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean absolute error over all entries.
pub fn mae_loss(pred: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Subgradient of [`mae_loss`] with respect to `pred`; zero where equal.
pub fn mae_grad(pred: ArrayView2<f64>, target: ArrayView2<f64>) -> Array2<f64> {
    let n = pred.len() as f64;
    let mut g = pred.to_owned();
    g.zip_mut_with(&target, |p, &t| {
        let d = *p - t;
        *p = if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    });
    g
}

/// Per-feature standardization fitted on training inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputNormalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InputNormalization {
    pub fn identity(n: usize) -> Self {
        InputNormalization {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Population mean and standard deviation per column; near-constant
    /// columns get unit scale.
    pub fn fit<'a, I: IntoIterator<Item = &'a [f64]>>(rows: I, n: usize) -> Self {
        let mut mean = Array1::<f64>::zeros(n);
        let mut sq = Array1::<f64>::zeros(n);
        let mut count = 0usize;
        for r in rows {
            let r = ArrayView1::from(r);
            mean += &r;
            sq += &r.mapv(|v| v * v);
            count += 1;
        }
        let c = count.max(1) as f64;
        mean /= c;
        let std: Vec<f64> = sq
            .iter()
            .zip(mean.iter())
            .map(|(s, m)| {
                let var = (s / c - m * m).max(0.0);
                if var.sqrt() > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        InputNormalization {
            mean: mean.to_vec(),
            std,
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), (m, s)) in out.iter_mut().zip(x).zip(self.mean.iter().zip(&self.std)) {
            *o = (v - m) / s;
        }
    }
}
