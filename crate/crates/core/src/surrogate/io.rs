//! Binary model files.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u32` n_in, width,
//! n_blocks, n_out, four flag bytes (inner ReLU, input kind, output kind,
//! reserved), `f64` domain a and b, `f64` minimum relative spacing, `n_in` input means, `n_in` input
//! standard deviations, then the flat parameter vector.

use std::fs;
use std::path::Path;

use super::network::{InputNormalization, Layout, ResMLPParams};
use super::{Encoding, InputKind, OutputKind, SurrogateModel};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"SZRESMLP";
pub const MODEL_VERSION: u32 = 2;

pub fn model_to_bytes(model: &SurrogateModel) -> Vec<u8> {
    let l = model.params.layout();
    let mut out = Vec::with_capacity(64 + 8 * (2 * l.n_in + l.n_params()));
    out.extend_from_slice(MODEL_MAGIC);
    for v in [
        MODEL_VERSION,
        l.n_in as u32,
        l.width as u32,
        l.n_blocks as u32,
        l.n_out as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(model.params.inner_relu() as u8);
    out.push(match model.encoding.input {
        InputKind::Monitor => 0,
        InputKind::Profile => 1,
    });
    out.push(match model.encoding.output {
        OutputKind::Spacing => 0,
        OutputKind::Coordinates => 1,
    });
    out.push(0);
    let floats = model
        .domain
        .iter()
        .chain(std::iter::once(&model.min_spacing))
        .chain(&model.norm.mean)
        .chain(&model.norm.std)
        .chain(model.params.as_flat());
    for v in floats {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::CorruptModel(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::CorruptModel("size overflow".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<SurrogateModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(Error::CorruptModel("bad magic".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let layout = Layout {
        n_in: r.u32()? as usize,
        width: r.u32()? as usize,
        n_blocks: r.u32()? as usize,
        n_out: r.u32()? as usize,
    };
    if layout.n_in == 0 || layout.width == 0 || layout.n_out == 0 {
        return Err(Error::CorruptModel("zero layer dimension".into()));
    }
    let flags = r.take(4)?.to_vec();
    let input = match flags[1] {
        0 => InputKind::Monitor,
        1 => InputKind::Profile,
        k => return Err(Error::CorruptModel(format!("unknown input kind {k}"))),
    };
    let output = match flags[2] {
        0 => OutputKind::Spacing,
        1 => OutputKind::Coordinates,
        k => return Err(Error::CorruptModel(format!("unknown output kind {k}"))),
    };
    let domain = r.f64s(2)?;
    let min_spacing = r.f64s(1)?[0];
    let mean = r.f64s(layout.n_in)?;
    let std = r.f64s(layout.n_in)?;
    let data = r.f64s(layout.n_params())?;
    if r.pos != bytes.len() {
        return Err(Error::CorruptModel(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    if !(domain[1] > domain[0])
        || std.iter().any(|s| !(*s > 0.0))
        || !(0.0..1.0).contains(&min_spacing)
    {
        return Err(Error::CorruptModel(
            "invalid domain or normalization".into(),
        ));
    }
    Ok(SurrogateModel {
        params: ResMLPParams::from_flat(layout, flags[0] != 0, data)?,
        norm: InputNormalization { mean, std },
        encoding: Encoding { input, output },
        domain: [domain[0], domain[1]],
        min_spacing,
    })
}

pub fn save_model(model: &SurrogateModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SurrogateModel> {
    model_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(seed: u64) -> SurrogateModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = Layout {
            n_in: 9,
            width: 5,
            n_blocks: 2,
            n_out: 8,
        };
        SurrogateModel {
            params: ResMLPParams::init(layout, true, &mut rng),
            norm: InputNormalization {
                mean: (0..9).map(|i| i as f64 * 0.1).collect(),
                std: vec![2.0; 9],
            },
            encoding: Encoding {
                input: InputKind::Profile,
                output: OutputKind::Coordinates,
            },
            domain: [-0.5, 1.5],
            min_spacing: 1e-3,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model(1);
        let bytes = model_to_bytes(&m);
        assert_eq!(model_from_bytes(&bytes).unwrap(), m);
        assert_eq!(model_to_bytes(&model_from_bytes(&bytes).unwrap()), bytes);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = model_to_bytes(&model(2));
        assert!(matches!(
            model_from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::CorruptModel(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            model_from_bytes(&bad),
            Err(Error::CorruptModel(_))
        ));
        let mut future = bytes.clone();
        future[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            model_from_bytes(&future),
            Err(Error::ModelVersion { found: 7, .. })
        ));
        let mut long = bytes;
        long.push(0);
        assert!(model_from_bytes(&long).is_err());
    }
}
