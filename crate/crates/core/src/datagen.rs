//! Training data: random staircase profiles zoned by a standard MMPDE solver.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{grid_to_spacing, Grid1D};
use crate::mmpde::{elliptic_from, parabolic_from, EllipticSolveConfig, ParabolicSolveConfig};
use crate::monitor::{monitor_eval, FieldSampler, MonitorConfig, NodalFields};
use crate::surrogate::{split_indices, InputKind, Sample};

pub const MIN_CONTRAST: f64 = 0.1;
pub const MAX_REJECTIONS: usize = 100;
/// Jumps stay this many uniform cells away from either boundary.
pub const BOUNDARY_CELLS: f64 = 5.0;
/// Minimum separation of jumps, in uniform cells.
pub const MIN_SEPARATION_CELLS: f64 = 2.0;

/// Piecewise-constant profile with `n_jumps` jumps and `n_jumps + 1` plateaus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseSpec {
    pub jump_locations: Vec<f64>,
    pub plateau_values: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl StaircaseSpec {
    pub fn new(jump_locations: Vec<f64>, plateau_values: Vec<f64>) -> Result<Self> {
        let s = StaircaseSpec {
            jump_locations,
            plateau_values,
            seed: None,
        };
        s.check_structure()?;
        Ok(s)
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_locations.len()
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.n_jumps();
        if !(1..=4).contains(&n) {
            return Err(Error::config("staircase.n_jumps", "must be 1, 2, 3 or 4"));
        }
        if self.plateau_values.len() != n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                got: self.plateau_values.len(),
            });
        }
        if self.plateau_values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config(
                "staircase.plateau_values",
                "must lie in [0, 1]",
            ));
        }
        if self.jump_locations.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(
                "staircase.jump_locations",
                "must be strictly increasing",
            ));
        }
        Ok(())
    }

    /// Full validation against a domain resolved by `n_cells` uniform cells.
    pub fn validate(&self, a: f64, b: f64, n_cells: usize) -> Result<()> {
        self.check_structure()?;
        let h = (b - a) / n_cells as f64;
        if self.jump_locations.iter().any(|&x| !(x > a && x < b)) {
            return Err(Error::config(
                "staircase.jump_locations",
                "must lie inside the domain",
            ));
        }
        if self
            .jump_locations
            .windows(2)
            .any(|w| w[1] - w[0] < MIN_SEPARATION_CELLS * h)
        {
            return Err(Error::config(
                "staircase.jump_locations",
                "jumps closer than two cells",
            ));
        }
        if self
            .plateau_values
            .windows(2)
            .any(|w| (w[1] - w[0]).abs() < MIN_CONTRAST)
        {
            return Err(Error::config(
                "staircase.plateau_values",
                "adjacent plateaus differ by less than 0.1",
            ));
        }
        Ok(())
    }

    /// Random staircase: 1 to 4 jumps uniform in `(a + 5h, b - 5h)`, plateaus
    /// i.i.d. uniform on `[0, 1]`, resampled until separation and contrast hold.
    pub fn sample<R: Rng>(rng: &mut R, a: f64, b: f64, n_cells: usize) -> Result<Self> {
        let h = (b - a) / n_cells as f64;
        let (lo, hi) = (a + BOUNDARY_CELLS * h, b - BOUNDARY_CELLS * h);
        for _ in 0..MAX_REJECTIONS {
            let n = rng.random_range(1..=4usize);
            let mut jumps: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            jumps.sort_by(f64::total_cmp);
            let plateaus: Vec<f64> = (0..=n).map(|_| rng.random_range(0.0..=1.0)).collect();
            let spec = StaircaseSpec {
                jump_locations: jumps,
                plateau_values: plateaus,
                seed: None,
            };
            if spec.validate(a, b, n_cells).is_ok() {
                return Ok(spec);
            }
        }
        Err(Error::Staircase(MAX_REJECTIONS))
    }
}

/// Nodal sampling: a node at or right of a jump takes the right plateau.
pub fn staircase_profile(spec: &StaircaseSpec, grid: &Grid1D) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&x| spec.plateau_values[spec.jump_locations.iter().filter(|&&j| x >= j).count()])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZonerConfig {
    Elliptic(EllipticSolveConfig),
    Parabolic(ParabolicSolveConfig),
}

impl Default for ZonerConfig {
    fn default() -> Self {
        ZonerConfig::Elliptic(EllipticSolveConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataGenConfig {
    pub n_samples: usize,
    pub n_cells: usize,
    pub domain: [f64; 2],
    pub monitor: MonitorConfig,
    pub zoner: ZonerConfig,
    pub input: InputKind,
    pub seed: u64,
}

impl Default for DataGenConfig {
    fn default() -> Self {
        DataGenConfig {
            n_samples: 500,
            n_cells: 200,
            domain: [0.0, 1.0],
            monitor: MonitorConfig::elliptic_default(),
            zoner: ZonerConfig::default(),
            input: InputKind::Monitor,
            seed: 0,
        }
    }
}

impl DataGenConfig {
    /// Monitor and solver settings of the parabolic zoning setup.
    pub fn parabolic() -> Self {
        DataGenConfig {
            monitor: MonitorConfig::parabolic_default(),
            zoner: ZonerConfig::Parabolic(ParabolicSolveConfig::default()),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::config("datagen.n_samples", "must be at least 1"));
        }
        if self.n_cells < 2 * BOUNDARY_CELLS as usize + 2 {
            return Err(Error::config(
                "datagen.n_cells",
                "too few cells for staircases",
            ));
        }
        if !(self.domain[1] > self.domain[0]) {
            return Err(Error::config("datagen.domain", "need a < b"));
        }
        self.monitor.validate()?;
        match &self.zoner {
            ZonerConfig::Elliptic(c) => c.validate(),
            ZonerConfig::Parabolic(c) => c.validate(),
        }
    }

    pub fn uniform_grid(&self) -> Result<Grid1D> {
        Grid1D::uniform(self.domain[0], self.domain[1], self.n_cells)
    }
}

/// Zone one staircase starting from the uniform grid and pair the network
/// input on the uniform grid with the adapted spacing.
pub fn build_sample(spec: &StaircaseSpec, cfg: &DataGenConfig) -> Result<Sample> {
    let grid = cfg.uniform_grid()?;
    let profile = staircase_profile(spec, &grid);
    let fields = NodalFields::scalar(profile.clone());
    let x = match cfg.input {
        InputKind::Monitor => monitor_eval(&fields, &grid, &cfg.monitor)?.into_omega(),
        InputKind::Profile => profile,
    };
    let sampler = FieldSampler::new(&fields, &grid, &cfg.monitor)?;
    let adapted = match &cfg.zoner {
        ZonerConfig::Elliptic(c) => {
            let out = elliptic_from(&sampler, &grid, c)?;
            if !out.converged {
                return Err(Error::Zoning(format!(
                    "elliptic fixed point not converged after {} iterations (update {:.3e})",
                    out.iterations, out.last_update
                )));
            }
            out.grid
        }
        ZonerConfig::Parabolic(c) => parabolic_from(&sampler, &grid, c)?.grid,
    };
    let y = grid_to_spacing(&adapted).deltas().to_vec();
    Ok(Sample { x, y })
}

/// Per-sample RNG: stream `index` of the master seed.
pub fn sample_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discard {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config: DataGenConfig,
    pub n_requested: usize,
    pub n_samples: usize,
    pub n_discarded: usize,
    pub discards: Vec<Discard>,
    /// Generator index of every kept sample, in file order.
    pub kept_indices: Vec<usize>,
    pub n_in: usize,
    pub n_out: usize,
    /// SHA-256 of the binary sample encoding, lowercase hex.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub manifest: DatasetManifest,
}

/// Generate `cfg.n_samples` staircases in parallel; output is independent
/// of the thread count. Failed zoning discards the index and records why.
pub fn build_dataset(cfg: &DataGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let results: Vec<Result<Sample>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let spec = StaircaseSpec::sample(&mut rng, cfg.domain[0], cfg.domain[1], cfg.n_cells)?;
            build_sample(&spec, cfg)
        })
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut discards = Vec::new();
    let mut kept_indices = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => {
                samples.push(s);
                kept_indices.push(index);
            }
            Err(e) => discards.push(Discard {
                index,
                reason: e.to_string(),
            }),
        }
    }
    let manifest = DatasetManifest {
        format_version: DATASET_VERSION,
        config: cfg.clone(),
        n_requested: cfg.n_samples,
        n_samples: samples.len(),
        n_discarded: discards.len(),
        discards,
        kept_indices,
        n_in: cfg.n_cells + 1,
        n_out: cfg.n_cells,
        checksum: checksum(&samples),
    };
    Ok(Dataset { samples, manifest })
}

pub fn split_dataset(samples: &[Sample], fraction: f64, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    let (tr, va) = split_indices(samples.len(), fraction, seed);
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| samples[i].clone()).collect();
    (pick(tr), pick(va))
}

pub const DATASET_MAGIC: &[u8; 8] = b"SZDATA\0\0";
pub const DATASET_VERSION: u32 = 1;

/// Binary encoding: magic, `u32` version, `u32` sample count, `u32` n_in,
/// `u32` n_out, then each sample's inputs and targets as little-endian f64.
pub fn dataset_to_bytes(samples: &[Sample]) -> Vec<u8> {
    let (n_in, n_out) = samples.first().map_or((0, 0), |s| (s.x.len(), s.y.len()));
    let mut out = Vec::with_capacity(24 + samples.len() * 8 * (n_in + n_out));
    out.extend_from_slice(DATASET_MAGIC);
    for v in [
        DATASET_VERSION,
        samples.len() as u32,
        n_in as u32,
        n_out as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in samples {
        for v in s.x.iter().chain(&s.y) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<Vec<Sample>> {
    let corrupt = |m: &str| Error::CorruptDataset(m.to_string());
    if bytes.len() < 24 || &bytes[..8] != DATASET_MAGIC {
        return Err(corrupt("bad header"));
    }
    let word = |k: usize| {
        u32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().expect("4 bytes")) as usize
    };
    if word(0) != DATASET_VERSION as usize {
        return Err(corrupt("unsupported version"));
    }
    let (n, n_in, n_out) = (word(1), word(2), word(3));
    let row = n_in + n_out;
    if bytes.len() != 24 + n * row * 8 {
        return Err(corrupt("length does not match header"));
    }
    let vals: Vec<f64> = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(vals
        .chunks_exact(row.max(1))
        .take(n)
        .map(|r| Sample {
            x: r[..n_in].to_vec(),
            y: r[n_in..].to_vec(),
        })
        .collect())
}

pub fn checksum(samples: &[Sample]) -> String {
    Sha256::digest(dataset_to_bytes(samples))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Write samples as CSV (`.csv` extension; header `x0.., y0..`) or binary.
pub fn write_dataset(path: &Path, samples: &[Sample]) -> Result<()> {
    if is_csv(path) {
        let mut w = csv::Writer::from_path(path)?;
        if let Some(s) = samples.first() {
            let header: Vec<String> = (0..s.x.len())
                .map(|i| format!("x{i}"))
                .chain((0..s.y.len()).map(|i| format!("y{i}")))
                .collect();
            w.write_record(&header)?;
        }
        for s in samples {
            w.write_record(s.x.iter().chain(&s.y).map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
    } else {
        let mut f = fs::File::create(path)?;
        f.write_all(&dataset_to_bytes(samples))?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Sample>> {
    if !is_csv(path) {
        return dataset_from_bytes(&fs::read(path)?);
    }
    let mut r = csv::Reader::from_path(path)?;
    let n_in = r.headers()?.iter().filter(|h| h.starts_with('x')).count();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::CorruptDataset(e.to_string()))?;
        if vals.len() <= n_in {
            return Err(Error::CorruptDataset("row shorter than input width".into()));
        }
        out.push(Sample {
            x: vals[..n_in].to_vec(),
            y: vals[n_in..].to_vec(),
        });
    }
    Ok(out)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviside_sampling() {
        let g = Grid1D::uniform(0.0, 1.0, 10).unwrap();
        let s = StaircaseSpec::new(vec![0.5], vec![0.0, 1.0]).unwrap();
        let p = staircase_profile(&s, &g);
        assert_eq!(
            p,
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn four_jumps_five_plateaus() {
        let mut rng = sample_rng(3, 0);
        let mut found = false;
        for _ in 0..200 {
            let s = StaircaseSpec::sample(&mut rng, 0.0, 1.0, 200).unwrap();
            s.validate(0.0, 1.0, 200).unwrap();
            if s.n_jumps() == 4 {
                found = true;
                let g = Grid1D::uniform(0.0, 1.0, 200).unwrap();
                let p = staircase_profile(&s, &g);
                let steps = p.windows(2).filter(|w| w[0] != w[1]).count();
                assert_eq!(steps, 4);
                assert_eq!(s.plateau_values.len(), 5);
            }
        }
        assert!(found);
    }

    #[test]
    fn spec_validation() {
        assert!(StaircaseSpec::new(vec![], vec![0.5]).is_err());
        assert!(StaircaseSpec::new(vec![0.1, 0.2, 0.3, 0.4, 0.5], vec![0.0; 6]).is_err());
        assert!(StaircaseSpec::new(vec![0.5], vec![0.0, 1.5]).is_err());
        let close = StaircaseSpec::new(vec![0.5, 0.505], vec![0.0, 1.0, 0.0]).unwrap();
        assert!(close.validate(0.0, 1.0, 200).is_err());
        let flat = StaircaseSpec::new(vec![0.5], vec![0.5, 0.55]).unwrap();
        assert!(flat.validate(0.0, 1.0, 200).is_err());
    }

    #[test]
    fn jump_locations_are_uniform() {
        let mut rng = sample_rng(17, 0);
        let bins = 10;
        let mut counts = vec![0usize; bins];
        let (lo, hi) = (0.025, 0.975);
        for _ in 0..1000 {
            for j in StaircaseSpec::sample(&mut rng, 0.0, 1.0, 200)
                .unwrap()
                .jump_locations
            {
                assert!(j > lo && j < hi);
                counts[(((j - lo) / (hi - lo)) * bins as f64) as usize] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let e = total as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 99th percentile of chi-square with 9 degrees of freedom.
        assert!(chi2 < 21.666, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn constant_profile_gives_uniform_target() {
        let cfg = DataGenConfig::default();
        let g = cfg.uniform_grid().unwrap();
        let fields = NodalFields::scalar(vec![0.4; 201]);
        let sampler = FieldSampler::new(&fields, &g, &cfg.monitor).unwrap();
        let out = elliptic_from(&sampler, &g, &EllipticSolveConfig::default()).unwrap();
        let s = grid_to_spacing(&out.grid);
        assert!(s.deltas().iter().all(|d| (d - 0.005).abs() < 1e-12));
    }

    #[test]
    fn central_jump_is_symmetric_and_refined_at_jump() {
        // An odd cell count puts x = 0.5 mid-cell, so the sampled profile is
        // mirror symmetric.
        let cfg = DataGenConfig {
            n_cells: 201,
            ..Default::default()
        };
        let spec = StaircaseSpec::new(vec![0.5], vec![0.2, 0.9]).unwrap();
        let s = build_sample(&spec, &cfg).unwrap();
        assert_eq!((s.x.len(), s.y.len()), (202, 201));
        assert!((s.y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..201 {
            assert!((s.y[i] - s.y[200 - i]).abs() < 1e-7, "cell {i}");
        }
        let imin = (0..201).min_by(|&i, &j| s.y[i].total_cmp(&s.y[j])).unwrap();
        assert!((99..=101).contains(&imin), "min at {imin}");
        assert!(s.y[100] < 0.2 / 201.0);
    }

    #[test]
    fn minimum_spacing_straddles_each_jump() {
        let cfg = DataGenConfig::default();
        let spec = StaircaseSpec::new(vec![0.3012, 0.7033], vec![0.1, 0.8, 0.4]).unwrap();
        let s = build_sample(&spec, &cfg).unwrap();
        let g = crate::mesh::spacing_to_grid(
            &crate::mesh::SpacingVector::new(s.y.clone()).unwrap(),
            0.0,
        )
        .unwrap();
        let centers = g.centers();
        let imin = (0..200).min_by(|&i, &j| s.y[i].total_cmp(&s.y[j])).unwrap();
        let near = |c: f64| spec.jump_locations.iter().any(|j| (c - j).abs() < 0.005);
        assert!(near(centers[imin]), "smallest cell at {}", centers[imin]);
    }

    #[test]
    fn small_dataset_is_reproducible() {
        let cfg = DataGenConfig {
            n_samples: 12,
            seed: 5,
            ..Default::default()
        };
        let a = build_dataset(&cfg).unwrap();
        let b = build_dataset(&cfg).unwrap();
        assert_eq!(a.manifest.checksum, b.manifest.checksum);
        assert_eq!(a.manifest.n_samples + a.manifest.n_discarded, 12);
        for s in &a.samples {
            s.validate(1.0).unwrap();
            assert!(s.x.iter().all(|w| *w >= 1.0 && *w <= 601f64.sqrt() + 1e-12));
        }
        let mean: f64 = a
            .samples
            .iter()
            .map(|s| s.y.iter().sum::<f64>() / 200.0)
            .sum::<f64>()
            / a.samples.len() as f64;
        assert!((mean - 0.005).abs() < 1e-14);

        let other = build_dataset(&DataGenConfig {
            seed: 6,
            ..cfg.clone()
        })
        .unwrap();
        assert_ne!(other.manifest.checksum, a.manifest.checksum);
        let par = build_dataset(&DataGenConfig::parabolic().clone_with(12, 5)).unwrap();
        assert_ne!(par.manifest.config, a.manifest.config);
    }

    impl DataGenConfig {
        fn clone_with(self, n: usize, seed: u64) -> Self {
            DataGenConfig {
                n_samples: n,
                seed,
                ..self
            }
        }
    }

    #[test]
    fn split_sizes_and_membership() {
        let samples: Vec<Sample> = (0..50)
            .map(|i| Sample {
                x: vec![i as f64],
                y: vec![1.0],
            })
            .collect();
        let (tr, va) = split_dataset(&samples, 0.8, 1);
        assert_eq!((tr.len(), va.len()), (40, 10));
        for v in &va {
            assert!(!tr.contains(v));
        }
        let (tr2, _) = split_dataset(&samples, 0.8, 2);
        assert_ne!(tr, tr2);
    }

    #[test]
    fn dataset_files_round_trip() {
        let samples: Vec<Sample> = (0..3)
            .map(|i| Sample {
                x: vec![i as f64, 0.1 + i as f64, 1.0 / 3.0],
                y: vec![0.25, 0.75],
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        for name in ["d.bin", "d.csv"] {
            let p = dir.path().join(name);
            write_dataset(&p, &samples).unwrap();
            assert_eq!(read_dataset(&p).unwrap(), samples);
        }
        let bytes = dataset_to_bytes(&samples);
        assert!(dataset_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
