use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::euler::PrimitiveField;
use crate::experiment::{fine_state, ExperimentConfig};

pub const FINE_REFINEMENT: usize = 16;

/// WENO5 run on a uniform mesh `refinement` times finer than the
/// configured one, averaged back onto the configured cells.
pub fn fine_reference(cfg: &ExperimentConfig, refinement: usize) -> Result<PrimitiveField> {
    fine_state(cfg, refinement)
}

#[derive(Serialize)]
struct CacheKey<'a> {
    case: &'a str,
    scheme: &'static str,
    refinement: usize,
    n_cells: usize,
    end_time: Option<f64>,
    gas: &'a crate::euler::GasModel,
    cfl: &'a crate::schemes::CflPolicy,
    custom: &'a Option<crate::experiment::CustomCase>,
}

/// Bit patterns, so a cache hit is bit-identical to a recomputation.
#[derive(Serialize, Deserialize)]
struct CachedField {
    rho: Vec<u64>,
    u: Vec<u64>,
    p: Vec<u64>,
    e: Vec<u64>,
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn floats(v: Vec<u64>) -> Vec<f64> {
    v.into_iter().map(f64::from_bits).collect()
}

fn cache_key(cfg: &ExperimentConfig, refinement: usize) -> String {
    let key = CacheKey {
        case: cfg.case.name(),
        scheme: "weno5_rk3",
        refinement,
        n_cells: cfg.n_cells,
        end_time: cfg.end_time,
        gas: &cfg.gas,
        cfl: &cfg.cfl,
        custom: &cfg.custom,
    };
    let digest = Sha256::digest(serde_json::to_vec(&key).expect("key serializes"));
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// [`fine_reference`] memoized in `cache_dir` when given. Unreadable cache
/// entries are recomputed.
pub fn fine_reference_cached(
    cfg: &ExperimentConfig,
    refinement: usize,
    cache_dir: Option<&Path>,
) -> Result<PrimitiveField> {
    let Some(dir) = cache_dir else {
        return fine_reference(cfg, refinement);
    };
    let path = dir.join(format!(
        "reference_{}_{}.json",
        cfg.case.name(),
        cache_key(cfg, refinement)
    ));
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(c) = serde_json::from_str::<CachedField>(&text) {
            if c.rho.len() == cfg.n_cells {
                return Ok(PrimitiveField {
                    rho: floats(c.rho),
                    u: floats(c.u),
                    p: floats(c.p),
                    e: floats(c.e),
                });
            }
        }
    }
    let w = fine_reference(cfg, refinement)?;
    fs::create_dir_all(dir)?;
    let cached = CachedField {
        rho: bits(&w.rho),
        u: bits(&w.u),
        p: bits(&w.p),
        e: bits(&w.e),
    };
    fs::write(&path, serde_json::to_string(&cached)?)?;
    Ok(w)
}
