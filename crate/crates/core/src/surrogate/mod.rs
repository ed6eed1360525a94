//! Residual MLP surrogate mapping a monitor function sampled on a uniform
//! grid to the spacing of the adapted mesh.
//!
//! The network is an input map, a stack of residual blocks
//! `h <- ReLU(h + A2(A1(h)))`, and an output map. Raw outputs go through a
//! positivity map (scaled softplus) so every prediction is a valid mesh after
//! renormalization to the domain length.

mod adam;
mod io;
mod network;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{
    load_model, model_from_bytes, model_to_bytes, save_model, MODEL_MAGIC, MODEL_VERSION,
};
pub use network::{
    mae_grad, mae_loss, sigmoid, softplus, softplus_map, softplus_map_grad, InputNormalization,
    Layout, ResMLPParams, Trace, RESIDUAL_INIT_SCALE,
};
pub use train::{split_indices, train, train_with_progress, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::SpacingVector;
use crate::monitor::MonitorField;

/// One training pair: network input (201 values) and target spacing (200
/// positive values summing to the domain length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Sample {
    pub fn validate(&self, length: f64) -> Result<()> {
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptDataset("non-finite input".into()));
        }
        if self.y.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::CorruptDataset("non-positive target spacing".into()));
        }
        let total: f64 = self.y.iter().sum();
        if (total - length).abs() > 1e-9 * length {
            return Err(Error::CorruptDataset(format!(
                "targets sum to {total}, expected {length}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Monitor function on the uniform grid.
    #[default]
    Monitor,
    /// The shock profile itself.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Cell widths of the adapted mesh.
    #[default]
    Spacing,
    /// Coordinates of the adapted mesh nodes after the left endpoint.
    Coordinates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Encoding {
    #[serde(default)]
    pub input: InputKind,
    #[serde(default)]
    pub output: OutputKind,
}

/// Trained network with everything needed to turn an input into a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub params: ResMLPParams,
    pub norm: InputNormalization,
    pub encoding: Encoding,
    /// Domain endpoints `[a, b]` of the training meshes.
    pub domain: [f64; 2],
    /// Smallest training target width as a fraction of the domain length.
    /// Predicted spacings are floored here; zero disables the floor.
    pub min_spacing: f64,
}

impl SurrogateModel {
    pub fn length(&self) -> f64 {
        self.domain[1] - self.domain[0]
    }

    /// Uniform cell width, the unit of the output maps.
    pub fn cell_scale(&self) -> f64 {
        self.length() / self.params.layout().n_out as f64
    }

    /// Output map for entry `i` of the raw output.
    pub fn decode_one(&self, i: usize, z: f64) -> f64 {
        let h = self.cell_scale();
        match self.encoding.output {
            OutputKind::Spacing => softplus_map(z, h),
            OutputKind::Coordinates => self.domain[0] + (i + 1) as f64 * h + h * z,
        }
    }

    /// Derivative of [`SurrogateModel::decode_one`] with respect to `z`.
    pub fn decode_grad(&self, z: f64) -> f64 {
        let h = self.cell_scale();
        match self.encoding.output {
            OutputKind::Spacing => softplus_map_grad(z, h),
            OutputKind::Coordinates => h,
        }
    }

    /// Target vector in output space for a spacing.
    pub fn encode_target(&self, spacing: &[f64]) -> Vec<f64> {
        match self.encoding.output {
            OutputKind::Spacing => spacing.to_vec(),
            OutputKind::Coordinates => {
                let mut x = self.domain[0];
                spacing
                    .iter()
                    .map(|d| {
                        x += d;
                        x
                    })
                    .collect()
            }
        }
    }

    /// Decoded network output before renormalization.
    pub fn predict_raw(&self, input: &[f64]) -> Result<Vec<f64>> {
        let layout = self.params.layout();
        if input.len() != layout.n_in {
            return Err(Error::LengthMismatch {
                expected: layout.n_in,
                got: input.len(),
            });
        }
        let mut xn = vec![0.0; input.len()];
        self.norm.apply(input, &mut xn);
        let z = self.params.forward(&xn)?;
        Ok(z.iter()
            .enumerate()
            .map(|(i, &v)| self.decode_one(i, v))
            .collect())
    }

    /// Spacing predicted for `input`, renormalized to the domain length.
    pub fn predict_spacing_from(&self, input: &[f64]) -> Result<SpacingVector> {
        let raw = self.predict_raw(input)?;
        let deltas = match self.encoding.output {
            OutputKind::Spacing => raw,
            OutputKind::Coordinates => {
                let mut prev = self.domain[0];
                raw.iter()
                    .map(|&x| {
                        let d = x - prev;
                        prev = x;
                        d
                    })
                    .collect()
            }
        };
        SpacingVector::normalized_with_floor(
            &deltas,
            self.length(),
            self.min_spacing * self.length(),
        )
    }
}

/// Spacing predicted from a monitor function on the model's input grid.
pub fn predict_spacing(model: &SurrogateModel, monitor: &MonitorField) -> Result<SpacingVector> {
    if model.encoding.input != InputKind::Monitor {
        return Err(Error::config(
            "surrogate.encoding.input",
            "model expects a profile, not a monitor",
        ));
    }
    model.predict_spacing_from(monitor.omega())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid1D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(encoding: Encoding, seed: u64) -> SurrogateModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ResMLPParams::init(Layout::default_size(201, 200), false, &mut rng);
        for v in params.as_flat_mut() {
            *v *= rng.random_range(0.0..3.0);
        }
        SurrogateModel {
            params,
            norm: InputNormalization::identity(201),
            encoding,
            domain: [0.0, 1.0],
            min_spacing: 0.0,
        }
    }

    #[test]
    fn predicted_spacing_is_a_valid_mesh() {
        let g = Grid1D::uniform(0.0, 1.0, 200).unwrap();
        for seed in 0..5 {
            for output in [OutputKind::Spacing, OutputKind::Coordinates] {
                let m = random_model(
                    Encoding {
                        input: InputKind::Monitor,
                        output,
                    },
                    seed,
                );
                let omega: Vec<f64> = g
                    .nodes()
                    .iter()
                    .map(|x| 1.0 + 20.0 * (x * 9.0).sin().abs())
                    .collect();
                let s = predict_spacing(&m, &MonitorField::new(omega, g.clone()).unwrap()).unwrap();
                assert_eq!(s.len(), 200);
                assert!(s.deltas().iter().all(|d| *d > 0.0));
                assert!((s.total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_network_predicts_uniform_spacing() {
        let m = SurrogateModel {
            params: ResMLPParams::zeros(Layout::default_size(201, 200), false),
            norm: InputNormalization::identity(201),
            encoding: Encoding::default(),
            domain: [0.0, 2.0],
            min_spacing: 0.0,
        };
        let s = m.predict_spacing_from(&[1.0; 201]).unwrap();
        assert!(s.deltas().iter().all(|d| (d - 0.01).abs() < 1e-15));
        let c = SurrogateModel {
            encoding: Encoding {
                input: InputKind::Monitor,
                output: OutputKind::Coordinates,
            },
            ..m
        };
        let s = c.predict_spacing_from(&[1.0; 201]).unwrap();
        assert!(s.deltas().iter().all(|d| (d - 0.01).abs() < 1e-13));
    }

    #[test]
    fn coordinate_targets_are_cumulative() {
        let m = SurrogateModel {
            encoding: Encoding {
                input: InputKind::Profile,
                output: OutputKind::Coordinates,
            },
            domain: [-1.0, 1.0],
            min_spacing: 0.0,
            ..random_model(Encoding::default(), 1)
        };
        assert_eq!(m.encode_target(&[0.5, 1.0, 0.5]), vec![-0.5, 0.5, 1.0]);
        let g = Grid1D::uniform(-1.0, 1.0, 200).unwrap();
        let mf = MonitorField::new(vec![1.0; 201], g).unwrap();
        assert!(predict_spacing(&m, &mf).is_err());
    }

    #[test]
    fn sample_validation() {
        let s = Sample {
            x: vec![1.0; 3],
            y: vec![0.25, 0.75],
        };
        assert!(s.validate(1.0).is_ok());
        assert!(s.validate(2.0).is_err());
        let bad = Sample {
            x: vec![1.0; 3],
            y: vec![1.25, -0.25],
        };
        assert!(bad.validate(1.0).is_err());
    }
}
