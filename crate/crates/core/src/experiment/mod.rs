//! Configured runs of the benchmark cases under the four mesh strategies.

mod cases;
mod output;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::GasModel;
use crate::mesh::TransferKind;
use crate::mmpde::{EllipticSolveConfig, ParabolicSolveConfig};
use crate::monitor::MonitorConfig;
use crate::reference::{NormWeighting, RiemannState};
use crate::schemes::CflPolicy;

pub use cases::{case_setup, CaseSetup, InitialState};
pub use output::{
    emit_results, output_stem, read_norms_csv, timing_compare, TimingRecord, TimingSummary,
};
pub use run::{
    fine_state, run_fixed_uniform, simulate_adaptive, simulate_with_model, Profiles, QuantityNorm,
    ReferenceKind, RunReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    SquareWave,
    Sod,
    Sedov,
    #[serde(alias = "woodward")]
    WoodwardAsPrinted,
    WoodwardClassic,
    Custom,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::SquareWave,
        CaseId::Sod,
        CaseId::Sedov,
        CaseId::WoodwardAsPrinted,
        CaseId::WoodwardClassic,
        CaseId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::SquareWave => "square_wave",
            CaseId::Sod => "sod",
            CaseId::Sedov => "sedov",
            CaseId::WoodwardAsPrinted => "woodward_as_printed",
            CaseId::WoodwardClassic => "woodward_classic",
            CaseId::Custom => "custom",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            CaseId::WoodwardAsPrinted => &["woodward"],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    #[serde(alias = "lw")]
    LaxWendroff,
    #[serde(alias = "weno5")]
    Weno5Rk3,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::LaxWendroff => "lax_wendroff",
            SchemeId::Weno5Rk3 => "weno5_rk3",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            SchemeId::LaxWendroff => &["lw"],
            SchemeId::Weno5Rk3 => &["weno5"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshStrategy {
    Uniform,
    #[serde(alias = "elliptic")]
    MmpdeElliptic,
    #[serde(alias = "parabolic")]
    MmpdeParabolic,
    #[serde(alias = "dl")]
    DlSurrogate,
}

impl MeshStrategy {
    pub const ALL: [MeshStrategy; 4] = [
        MeshStrategy::Uniform,
        MeshStrategy::MmpdeElliptic,
        MeshStrategy::MmpdeParabolic,
        MeshStrategy::DlSurrogate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshStrategy::Uniform => "uniform",
            MeshStrategy::MmpdeElliptic => "mmpde_elliptic",
            MeshStrategy::MmpdeParabolic => "mmpde_parabolic",
            MeshStrategy::DlSurrogate => "dl_surrogate",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            MeshStrategy::MmpdeElliptic => &["elliptic", "mmpde"],
            MeshStrategy::MmpdeParabolic => &["parabolic"],
            MeshStrategy::DlSurrogate => &["dl"],
            MeshStrategy::Uniform => &[],
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for MeshStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Reflective,
    Periodic,
}

/// A user-defined Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomCase {
    pub domain: [f64; 2],
    pub x0: f64,
    pub left: RiemannState,
    pub right: RiemannState,
    pub boundary: BoundaryKind,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: CaseId,
    pub scheme: SchemeId,
    pub mesh_strategy: MeshStrategy,
    pub n_cells: usize,
    /// Overrides the case's end time.
    pub end_time: Option<f64>,
    pub cfl: CflPolicy,
    pub gas: GasModel,
    /// Defaults to the elliptic or parabolic preset matching the strategy.
    pub monitor: Option<MonitorConfig>,
    pub elliptic: EllipticSolveConfig,
    pub parabolic: ParabolicSolveConfig,
    /// Start each elliptic solve from the current mesh instead of the uniform one.
    pub warm_start: bool,
    /// Solution transfer after each re-zone.
    pub transfer: TransferKind,
    /// Re-zone after every `rezone_every` physics steps.
    pub rezone_every: usize,
    /// Abort once this many steps did not reach the end time.
    pub max_steps: usize,
    pub model_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub record_mesh_history: bool,
    pub norm_weighting: NormWeighting,
    /// Resolution factor of fine-mesh references.
    pub reference_refinement: usize,
    /// Directory for cached fine-mesh references.
    pub reference_cache: Option<PathBuf>,
    pub custom: Option<CustomCase>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            case: CaseId::Sod,
            scheme: SchemeId::Weno5Rk3,
            mesh_strategy: MeshStrategy::Uniform,
            n_cells: 200,
            end_time: None,
            cfl: CflPolicy::default(),
            gas: GasModel::default(),
            monitor: None,
            elliptic: EllipticSolveConfig::default(),
            parabolic: ParabolicSolveConfig::default(),
            warm_start: false,
            transfer: TransferKind::default(),
            rezone_every: 1,
            max_steps: 1_000_000,
            model_path: None,
            seed: 0,
            output_dir: PathBuf::from("results"),
            record_mesh_history: true,
            norm_weighting: NormWeighting::CellWidth,
            reference_refinement: crate::reference::FINE_REFINEMENT,
            reference_cache: None,
            custom: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(case: CaseId, scheme: SchemeId, mesh_strategy: MeshStrategy) -> Self {
        ExperimentConfig {
            case,
            scheme,
            mesh_strategy,
            ..Default::default()
        }
    }

    /// Parse a preset name `{case}_{scheme}_{strategy}`, e.g.
    /// `sod_weno5_uniform` or `sedov_weno5_rk3_mmpde_elliptic`.
    pub fn preset(name: &str) -> Result<Self> {
        for case in CaseId::ALL {
            for cn in std::iter::once(case.name()).chain(case.aliases().iter().copied()) {
                let Some(rest) = name.strip_prefix(cn).and_then(|r| r.strip_prefix('_')) else {
                    continue;
                };
                for scheme in [SchemeId::LaxWendroff, SchemeId::Weno5Rk3] {
                    for sn in std::iter::once(scheme.name()).chain(scheme.aliases().iter().copied())
                    {
                        let Some(rest) = rest.strip_prefix(sn).and_then(|r| r.strip_prefix('_'))
                        else {
                            continue;
                        };
                        for strategy in MeshStrategy::ALL {
                            let names = std::iter::once(strategy.name())
                                .chain(strategy.aliases().iter().copied());
                            if names.into_iter().any(|n| n == rest) {
                                return Ok(ExperimentConfig::new(case, scheme, strategy));
                            }
                        }
                    }
                }
            }
        }
        Err(Error::config("preset", format!("unknown preset `{name}`")))
    }

    /// Load from a TOML or JSON file (by extension; other extensions try
    /// both), or fall back to a preset name when no such file exists.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if !path.exists() {
            return Self::preset(spec);
        }
        let cfg: Self = crate::config::from_file(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::config::from_json(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        crate::config::from_toml(text)
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        self.monitor.unwrap_or(match self.mesh_strategy {
            MeshStrategy::MmpdeParabolic => MonitorConfig::parabolic_default(),
            _ => MonitorConfig::elliptic_default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let need = match self.scheme {
            SchemeId::LaxWendroff => 3,
            SchemeId::Weno5Rk3 => 5,
        };
        if self.n_cells < need {
            return Err(Error::config(
                "n_cells",
                format!("{} needs at least {need} cells", self.scheme),
            ));
        }
        if let Some(t) = self.end_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("end_time", "must be positive and finite"));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be at least 1"));
        }
        if self.rezone_every == 0 {
            return Err(Error::config("rezone_every", "must be at least 1"));
        }
        if self.reference_refinement == 0 {
            return Err(Error::config("reference_refinement", "must be at least 1"));
        }
        if self.mesh_strategy == MeshStrategy::DlSurrogate && self.model_path.is_none() {
            return Err(Error::config(
                "model_path",
                "required by the dl_surrogate strategy",
            ));
        }
        if self.case == CaseId::Custom {
            let c = self
                .custom
                .as_ref()
                .ok_or_else(|| Error::config("custom", "required when case = custom"))?;
            if !(c.domain[1] > c.domain[0]) || !(c.x0 > c.domain[0] && c.x0 < c.domain[1]) {
                return Err(Error::config("custom.domain", "need a < x0 < b"));
            }
            if !(c.end_time > 0.0) {
                return Err(Error::config("custom.end_time", "must be positive"));
            }
            for (name, s) in [("custom.left", c.left), ("custom.right", c.right)] {
                if !(s.rho > 0.0 && s.p > 0.0 && s.u.is_finite()) {
                    return Err(Error::config(name, "need positive density and pressure"));
                }
            }
        }
        self.cfl.validate()?;
        self.gas.validate()?;
        self.monitor_config().validate()?;
        self.elliptic.validate()?;
        self.parabolic.validate()
    }
}
