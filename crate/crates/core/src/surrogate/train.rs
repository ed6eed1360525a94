use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::network::{mae_grad, mae_loss, InputNormalization, Layout, ResMLPParams};
use super::{Encoding, Sample, SurrogateModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Fraction of samples used for training; the rest validate.
    pub split: f64,
    pub seed: u64,
    pub width: usize,
    pub n_blocks: usize,
    pub inner_relu: bool,
    pub encoding: Encoding,
    pub domain: [f64; 2],
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5000,
            batch_size: 100,
            adam: AdamConfig::default(),
            split: 0.8,
            seed: 0,
            width: 100,
            n_blocks: 5,
            inner_relu: false,
            encoding: Encoding::default(),
            domain: [0.0, 1.0],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::config("train.split", "must lie in (0, 1)"));
        }
        if self.width == 0 || self.n_blocks == 0 {
            return Err(Error::config(
                "train.width",
                "network dimensions must be positive",
            ));
        }
        if !(self.domain[1] > self.domain[0]) {
            return Err(Error::config("train.domain", "need a < b"));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training MAE per epoch, accumulated over its minibatches.
    pub train_mae: Vec<f64>,
    /// Validation MAE after each epoch.
    pub val_mae: Vec<f64>,
    pub n_train: usize,
    pub n_val: usize,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

impl TrainReport {
    /// Loss curves as CSV rows `epoch,train_mae,val_mae`.
    pub fn write_loss_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_mae", "val_mae"])?;
        for (e, (t, v)) in self.train_mae.iter().zip(&self.val_mae).enumerate() {
            w.write_record([e.to_string(), format!("{t:.17e}"), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seeded shuffle of `0..n` split into training and validation indices.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(n.min(1), n);
    let val = idx.split_off(n_train);
    (idx, val)
}

struct Batch {
    x: Array2<f64>,
    t: Array2<f64>,
}

fn assemble(model: &SurrogateModel, samples: &[Sample], idx: &[usize]) -> Batch {
    let l = model.params.layout();
    let mut x = Array2::zeros((idx.len(), l.n_in));
    let mut t = Array2::zeros((idx.len(), l.n_out));
    for (r, &i) in idx.iter().enumerate() {
        let s = &samples[i];
        model
            .norm
            .apply(&s.x, x.row_mut(r).as_slice_mut().expect("row-major"));
        for (dst, v) in t.row_mut(r).iter_mut().zip(model.encode_target(&s.y)) {
            *dst = v;
        }
    }
    Batch { x, t }
}

fn decoded(model: &SurrogateModel, z: &Array2<f64>) -> Array2<f64> {
    let mut y = z.clone();
    for mut row in y.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = model.decode_one(j, *v);
        }
    }
    y
}

/// MAE of decoded predictions over the given samples.
fn evaluate(
    model: &SurrogateModel,
    samples: &[Sample],
    idx: &[usize],
    batch: usize,
) -> Result<f64> {
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for chunk in idx.chunks(batch) {
        let b = assemble(model, samples, chunk);
        let z = model.params.forward_trace(b.x.view())?.z;
        total += mae_loss(decoded(model, &z).view(), b.t.view())? * chunk.len() as f64;
    }
    Ok(total / idx.len() as f64)
}

pub fn train(samples: &[Sample], cfg: &TrainConfig) -> Result<(SurrogateModel, TrainReport)> {
    train_with_progress(samples, cfg, |_, _, _| {})
}

/// Minibatch Adam on the MAE of decoded outputs. `progress` receives
/// `(epoch, train_mae, val_mae)` after every epoch.
pub fn train_with_progress<F>(
    samples: &[Sample],
    cfg: &TrainConfig,
    mut progress: F,
) -> Result<(SurrogateModel, TrainReport)>
where
    F: FnMut(usize, f64, f64),
{
    cfg.validate()?;
    let first = samples
        .first()
        .ok_or_else(|| Error::config("dataset", "no samples to train on"))?;
    let (n_in, n_out) = (first.x.len(), first.y.len());
    let length = cfg.domain[1] - cfg.domain[0];
    for s in samples {
        if s.x.len() != n_in || s.y.len() != n_out {
            return Err(Error::CorruptDataset(
                "inconsistent sample dimensions".into(),
            ));
        }
        s.validate(length)?;
    }

    let (train_idx, val_idx) = split_indices(samples.len(), cfg.split, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let layout = Layout {
        n_in,
        width: cfg.width,
        n_blocks: cfg.n_blocks,
        n_out,
    };
    let norm = InputNormalization::fit(train_idx.iter().map(|&i| samples[i].x.as_slice()), n_in);
    let mut model = SurrogateModel {
        params: ResMLPParams::init(layout, cfg.inner_relu, &mut rng),
        norm,
        encoding: cfg.encoding,
        domain: cfg.domain,
        min_spacing: train_idx
            .iter()
            .flat_map(|&i| samples[i].y.iter())
            .fold(f64::INFINITY, |m, &d| m.min(d))
            / length,
    };

    let mut state = AdamState::new(layout.n_params());
    let mut order = train_idx.clone();
    let mut report = TrainReport {
        train_mae: Vec::with_capacity(cfg.epochs),
        val_mae: Vec::with_capacity(cfg.epochs),
        n_train: train_idx.len(),
        n_val: val_idx.len(),
        train_indices: train_idx.clone(),
        val_indices: val_idx.clone(),
    };
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let b = assemble(&model, samples, chunk);
            let trace = model
                .params
                .forward_trace(b.x.view())
                .map_err(|_| Error::Diverged { epoch })?;
            let y = decoded(&model, &trace.z);
            let loss = mae_loss(y.view(), b.t.view())?;
            let mut dz = mae_grad(y.view(), b.t.view());
            dz.zip_mut_with(&trace.z, |d, &z| *d *= model.decode_grad(z));
            let grads = model.params.backward(&trace, dz.view());
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            adam_step(model.params.as_flat_mut(), &grads, &mut state, &cfg.adam);
            total += loss * chunk.len() as f64;
        }
        let train_mae = total / order.len() as f64;
        let val_mae = evaluate(&model, samples, &val_idx, cfg.batch_size.max(256))?;
        if !train_mae.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        report.train_mae.push(train_mae);
        report.val_mae.push(val_mae);
        progress(epoch, train_mae, val_mae);
    }
    Ok((model, report))
}
