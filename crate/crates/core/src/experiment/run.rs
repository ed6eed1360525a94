use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{self, Conserved, GasModel, PrimitiveField};
use crate::mesh::{
    cells_to_points, spacing_to_grid_pinned, transfer_cells, Grid1D, SpacingVector, TransferKind,
};
use crate::mmpde::{elliptic_from, parabolic_from, EllipticSolveConfig, ParabolicSolveConfig};
use crate::monitor::{monitor_eval, FieldSampler, MonitorConfig, NodalFields};
use crate::reference::{self, error_norms, norm_p, norm_report, NormEntry, NormWeighting};
use crate::schemes::{
    cfl_dt, lax_wendroff_step, reached_end, rk3_advance, Boundary, ConservationLaw, EulerLaw,
    LinearAdvection, Weno5,
};
use crate::surrogate::{load_model, predict_spacing, SurrogateModel};

use super::cases::{case_setup, square_wave_exact, InitialState};
use super::{CaseId, ExperimentConfig, MeshStrategy, SchemeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    Exact,
    FineMesh { refinement: usize },
}

/// Named columns sampled at common abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub x: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Profiles {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    fn from_primitive(x: Vec<f64>, w: &PrimitiveField) -> Self {
        Profiles {
            x,
            columns: vec![
                ("density".into(), w.rho.clone()),
                ("velocity".into(), w.u.clone()),
                ("internal_energy".into(), w.e.clone()),
                ("pressure".into(), w.p.clone()),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityNorm {
    pub quantity: String,
    #[serde(flatten)]
    pub entry: NormEntry,
    pub l2_reference: f64,
    pub l1_reference: f64,
}

fn quantity_norm(
    quantity: &str,
    entry: NormEntry,
    reference: &[f64],
    grid: &Grid1D,
    w: NormWeighting,
) -> QuantityNorm {
    let widths = grid.widths();
    QuantityNorm {
        quantity: quantity.to_string(),
        entry,
        l2_reference: norm_p(reference, &widths, 2.0, w),
        l1_reference: norm_p(reference, &widths, 1.0, w),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub case: CaseId,
    pub scheme: SchemeId,
    pub strategy: MeshStrategy,
    pub n_cells: usize,
    pub end_time: f64,
    pub final_time: f64,
    pub n_steps: usize,
    pub dt_sum: f64,
    pub wall_clock_total: f64,
    pub wall_clock_zoning: f64,
    pub zoning_calls: usize,
    /// Zoning calls whose result was rejected; the previous mesh was kept.
    pub zoning_failures: usize,
    pub fixed_point_iterations_total: usize,
    pub fixed_point_iterations_max: usize,
    /// Elliptic solves that hit the iteration cap; their last iterate is used.
    pub fixed_point_non_converged: usize,
    /// Largest final fixed-point update among those solves.
    pub fixed_point_worst_update: f64,
    pub parabolic_retries: usize,
    pub weno_interfaces: u64,
    /// Largest `|sum of WENO weights - 1|` over the run.
    pub weno_weight_sum_deviation: Option<f64>,
    pub reference: ReferenceKind,
    pub norm_weighting: NormWeighting,
    pub norms: Vec<QuantityNorm>,
    pub final_nodes: Vec<f64>,
    /// Mesh after each step, starting with the initial mesh.
    pub mesh_history: Vec<Vec<f64>>,
    /// Final solution transferred to the uniform comparison mesh.
    pub numerical: Profiles,
    pub reference_profile: Profiles,
    /// Final solution at the cell centers of the final mesh.
    pub native: Profiles,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn norm(&self, quantity: &str) -> Option<&NormEntry> {
        self.norms
            .iter()
            .find(|q| q.quantity == quantity)
            .map(|q| &q.entry)
    }

    pub fn min_cell_width(&self) -> f64 {
        self.final_nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Default)]
struct ZoneStats {
    calls: usize,
    failures: usize,
    fp_total: usize,
    fp_max: usize,
    non_converged: usize,
    worst_update: f64,
    retries: usize,
    warnings: Vec<String>,
}

struct Zoner<'a> {
    strategy: MeshStrategy,
    monitor: MonitorConfig,
    elliptic: EllipticSolveConfig,
    parabolic: ParabolicSolveConfig,
    warm_start: bool,
    model: Option<&'a SurrogateModel>,
    uniform: Grid1D,
}

impl Zoner<'_> {
    fn zone(
        &self,
        fields: &NodalFields,
        current: &Grid1D,
        stats: &mut ZoneStats,
    ) -> Result<Grid1D> {
        let (a, b) = (self.uniform.a(), self.uniform.b());
        match self.strategy {
            MeshStrategy::Uniform => Ok(current.clone()),
            MeshStrategy::MmpdeElliptic => {
                let sampler = FieldSampler::new(fields, &self.uniform, &self.monitor)?;
                let start = if self.warm_start {
                    current
                } else {
                    &self.uniform
                };
                let out = elliptic_from(&sampler, start, &self.elliptic)?;
                stats.fp_total += out.iterations;
                stats.fp_max = stats.fp_max.max(out.iterations);
                if !out.converged {
                    // The last iterate is still a valid mesh; it is used, as
                    // with any iteration capped at a fixed count.
                    stats.non_converged += 1;
                    stats.worst_update = stats.worst_update.max(out.last_update);
                }
                Ok(out.grid)
            }
            MeshStrategy::MmpdeParabolic => {
                let sampler = FieldSampler::new(fields, &self.uniform, &self.monitor)?;
                let out = parabolic_from(&sampler, current, &self.parabolic)?;
                stats.retries += out.retries;
                Ok(out.grid)
            }
            MeshStrategy::DlSurrogate => {
                let model = self.model.expect("model present for dl_surrogate");
                let omega = monitor_eval(fields, &self.uniform, &self.monitor)?;
                let s = predict_spacing(model, &omega)?;
                let s = SpacingVector::normalized(s.deltas(), b - a)?;
                spacing_to_grid_pinned(&s, a, b)
            }
        }
    }
}

/// Law-specific hooks of the time loop.
trait Physics<const N: usize>: ConservationLaw<N> {
    fn nodal_fields(
        &self,
        state: &[[f64; N]],
        grid: &Grid1D,
        at: &Grid1D,
        monitor: &MonitorConfig,
    ) -> Result<NodalFields>;
}

impl Physics<3> for EulerLaw {
    fn nodal_fields(
        &self,
        state: &[Conserved],
        grid: &Grid1D,
        at: &Grid1D,
        monitor: &MonitorConfig,
    ) -> Result<NodalFields> {
        let n = at.n_nodes();
        let active: Vec<usize> = monitor.active_fields().collect();
        let sample = |k: usize, f: &dyn Fn(&Conserved) -> f64| -> Result<Vec<f64>> {
            if active.contains(&k) {
                let values: Vec<f64> = state.iter().map(f).collect();
                cells_to_points(grid, &values, at.nodes())
            } else {
                Ok(vec![0.0; n])
            }
        };
        let gas = self.gas;
        let internal =
            move |c: &Conserved| (c[2] - gas.kinetic_factor() * c[1] * c[1] / c[0]) / c[0];
        Ok(NodalFields {
            rho: sample(0, &|c| c[0])?,
            mom: sample(1, &|c| c[1])?,
            e: sample(2, &internal)?,
            p: sample(3, &|c| internal(c) * c[0] * (gas.gamma - 1.0))?,
        })
    }
}

impl Physics<1> for LinearAdvection {
    fn nodal_fields(
        &self,
        state: &[[f64; 1]],
        grid: &Grid1D,
        at: &Grid1D,
        _: &MonitorConfig,
    ) -> Result<NodalFields> {
        let values: Vec<f64> = state.iter().map(|c| c[0]).collect();
        Ok(NodalFields::scalar(cells_to_points(
            grid,
            &values,
            at.nodes(),
        )?))
    }
}

struct LoopOutput<const N: usize> {
    grid: Grid1D,
    state: Vec<[f64; N]>,
    final_time: f64,
    n_steps: usize,
    dt_sum: f64,
    total: f64,
    zoning: f64,
    stats: ZoneStats,
    history: Vec<Vec<f64>>,
    audit: Option<crate::schemes::WeightAudit>,
}

#[allow(clippy::too_many_arguments)]
fn time_loop<const N: usize, L: Physics<N>>(
    cfg: &ExperimentConfig,
    law: &L,
    bc: &Boundary<N>,
    grid0: Grid1D,
    u0: Vec<[f64; N]>,
    t_end: f64,
    zoner: &Zoner,
) -> Result<LoopOutput<N>> {
    let started = Instant::now();
    let mut grid = grid0;
    let mut state = u0;
    let mut t = 0.0;
    let mut dt_sum = 0.0;
    let mut steps = 0usize;
    let mut zoning = 0.0;
    let mut stats = ZoneStats::default();
    let mut history = Vec::new();
    if cfg.record_mesh_history {
        history.push(grid.nodes().to_vec());
    }
    let mut weno = Weno5::with_audit();
    let adaptive = zoner.strategy != MeshStrategy::Uniform;

    while t < t_end {
        let dt = cfl_dt(&state, &grid, &cfg.cfl, law, t, t_end).map_err(|e| at_time(e, t))?;
        if !(dt > 0.0) || steps >= cfg.max_steps {
            return Err(Error::StepLimit { steps, time: t });
        }
        match cfg.scheme {
            SchemeId::LaxWendroff => lax_wendroff_step(&mut state, &grid, dt, law, bc),
            SchemeId::Weno5Rk3 => rk3_advance(&mut state, dt, |u| weno.rhs(u, &grid, law, bc)),
        }
        .map_err(|e| at_time(e, t))?;
        let last = reached_end(t, dt, t_end);
        t = if last { t_end } else { t + dt };
        dt_sum += dt;
        steps += 1;

        if adaptive && !last && steps.is_multiple_of(cfg.rezone_every) {
            let clock = Instant::now();
            let fields = law.nodal_fields(&state, &grid, &zoner.uniform, &zoner.monitor);
            let zoned = fields.and_then(|f| zoner.zone(&f, &grid, &mut stats));
            zoning += clock.elapsed().as_secs_f64();
            stats.calls += 1;
            match zoned
                .and_then(|g| transfer_state(&state, &grid, &g, law, cfg.transfer).map(|s| (g, s)))
            {
                Ok((g, s)) => {
                    grid = g;
                    state = s;
                }
                Err(e) => {
                    stats.failures += 1;
                    if stats.warnings.len() < 20 {
                        stats
                            .warnings
                            .push(format!("step {steps}: zoning rejected ({e}); mesh kept"));
                    }
                }
            }
        }
        if cfg.record_mesh_history {
            history.push(grid.nodes().to_vec());
        }
    }
    let audit = (cfg.scheme == SchemeId::Weno5Rk3).then(|| *weno.audit());
    Ok(LoopOutput {
        grid,
        state,
        final_time: t,
        n_steps: steps,
        dt_sum,
        total: started.elapsed().as_secs_f64(),
        zoning,
        stats,
        history,
        audit,
    })
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::Positivity { cell, pressure, .. } => Error::Positivity {
            cell,
            time: t,
            pressure,
        },
        other => other,
    }
}

fn transfer_state<const N: usize, L: ConservationLaw<N>>(
    state: &[[f64; N]],
    old: &Grid1D,
    new: &Grid1D,
    law: &L,
    kind: TransferKind,
) -> Result<Vec<[f64; N]>> {
    let mut out = vec![[0.0; N]; new.n_cells()];
    for k in 0..N {
        let comp: Vec<f64> = state.iter().map(|u| u[k]).collect();
        for (dst, v) in out.iter_mut().zip(kind.apply(old, &comp, new)?) {
            dst[k] = v;
        }
    }
    for (i, u) in out.iter().enumerate() {
        law.validate(i, u)?;
    }
    Ok(out)
}

fn primitive_field(state: &[Conserved], gas: &GasModel) -> Result<PrimitiveField> {
    state
        .iter()
        .enumerate()
        .map(|(i, c)| euler::primitive(c, gas).map_err(|e| euler::with_cell(e, i)))
        .collect()
}

fn transfer_primitive(w: &PrimitiveField, from: &Grid1D, to: &Grid1D) -> Result<PrimitiveField> {
    Ok(PrimitiveField {
        rho: transfer_cells(from, &w.rho, to)?,
        u: transfer_cells(from, &w.u, to)?,
        p: transfer_cells(from, &w.p, to)?,
        e: transfer_cells(from, &w.e, to)?,
    })
}

/// Run a case with the model loaded from `cfg.model_path` when the strategy
/// needs one.
pub fn simulate_adaptive(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = match (&cfg.mesh_strategy, &cfg.model_path) {
        (MeshStrategy::DlSurrogate, Some(p)) => Some(load_model(p)?),
        _ => None,
    };
    simulate_with_model(cfg, model.as_ref())
}

/// Run a case with an in-memory model; `cfg.model_path` is not read.
pub fn simulate_with_model(
    cfg: &ExperimentConfig,
    model: Option<&SurrogateModel>,
) -> Result<RunReport> {
    let mut checked = cfg.clone();
    if model.is_some() && checked.model_path.is_none() {
        checked.model_path = Some("<in-memory>".into());
    }
    checked.validate()?;
    if cfg.mesh_strategy == MeshStrategy::DlSurrogate {
        let m = model
            .ok_or_else(|| Error::config("model_path", "required by the dl_surrogate strategy"))?;
        if m.params.layout().n_in != cfg.n_cells + 1 || m.params.layout().n_out != cfg.n_cells {
            return Err(Error::config(
                "model_path",
                format!(
                    "model maps {} inputs to {} spacings; the run needs {} and {}",
                    m.params.layout().n_in,
                    m.params.layout().n_out,
                    cfg.n_cells + 1,
                    cfg.n_cells
                ),
            ));
        }
    }
    let setup = case_setup(cfg, cfg.n_cells)?;
    let uniform = setup.grid.clone();
    let zoner = Zoner {
        strategy: cfg.mesh_strategy,
        monitor: cfg.monitor_config(),
        elliptic: cfg.elliptic,
        parabolic: cfg.parabolic,
        warm_start: cfg.warm_start,
        model,
        uniform: uniform.clone(),
    };

    let (out_grid, numerical, reference_profile, native, reference, norms, meta) =
        match setup.initial {
            InitialState::Euler { cells, bc } => {
                let law = EulerLaw { gas: cfg.gas };
                let out = time_loop(
                    cfg,
                    &law,
                    &bc,
                    uniform.clone(),
                    cells,
                    setup.end_time,
                    &zoner,
                )?;
                let w = primitive_field(&out.state, &cfg.gas)?;
                let on_uniform = transfer_primitive(&w, &out.grid, &uniform)?;
                let (reference, refw) = euler_reference(cfg, &uniform, setup.end_time)?;
                let report = norm_report(&on_uniform, &refw, &uniform, cfg.norm_weighting)?;
                let refp = Profiles::from_primitive(uniform.centers(), &refw);
                let norms = report
                    .entries()
                    .iter()
                    .map(|(q, e)| {
                        quantity_norm(
                            q,
                            **e,
                            refp.column(q).expect("named column"),
                            &uniform,
                            cfg.norm_weighting,
                        )
                    })
                    .collect();
                let native = Profiles::from_primitive(out.grid.centers(), &w);
                let numerical = Profiles::from_primitive(uniform.centers(), &on_uniform);
                let grid = out.grid.clone();
                (
                    grid,
                    numerical,
                    refp,
                    native,
                    reference,
                    norms,
                    Meta::from(out),
                )
            }
            InitialState::Scalar {
                cells,
                velocity,
                bc,
            } => {
                let law = LinearAdvection { velocity };
                let out = time_loop(
                    cfg,
                    &law,
                    &bc,
                    uniform.clone(),
                    cells,
                    setup.end_time,
                    &zoner,
                )?;
                let u: Vec<f64> = out.state.iter().map(|c| c[0]).collect();
                let on_uniform = transfer_cells(&out.grid, &u, &uniform)?;
                let exact = square_wave_exact(&uniform, setup.end_time);
                let entry = error_norms(&on_uniform, &exact, &uniform, cfg.norm_weighting)?;
                let col = |v: Vec<f64>| vec![("u".to_string(), v)];
                let native = Profiles {
                    x: out.grid.centers(),
                    columns: col(u),
                };
                let numerical = Profiles {
                    x: uniform.centers(),
                    columns: col(on_uniform),
                };
                let norms = vec![quantity_norm(
                    "u",
                    entry,
                    &exact,
                    &uniform,
                    cfg.norm_weighting,
                )];
                let grid = out.grid.clone();
                let refp = Profiles {
                    x: uniform.centers(),
                    columns: col(exact),
                };
                (
                    grid,
                    numerical,
                    refp,
                    native,
                    ReferenceKind::Exact,
                    norms,
                    Meta::from(out),
                )
            }
        };

    Ok(RunReport {
        case: cfg.case,
        scheme: cfg.scheme,
        strategy: cfg.mesh_strategy,
        n_cells: cfg.n_cells,
        end_time: setup.end_time,
        final_time: meta.final_time,
        n_steps: meta.n_steps,
        dt_sum: meta.dt_sum,
        wall_clock_total: meta.total,
        wall_clock_zoning: meta.zoning.min(meta.total),
        zoning_calls: meta.stats.calls,
        zoning_failures: meta.stats.failures,
        fixed_point_iterations_total: meta.stats.fp_total,
        fixed_point_iterations_max: meta.stats.fp_max,
        fixed_point_non_converged: meta.stats.non_converged,
        fixed_point_worst_update: meta.stats.worst_update,
        parabolic_retries: meta.stats.retries,
        weno_interfaces: meta.audit.map_or(0, |a| a.interfaces),
        weno_weight_sum_deviation: meta.audit.map(|a| a.max_sum_deviation),
        reference,
        norm_weighting: cfg.norm_weighting,
        norms,
        final_nodes: out_grid.into_nodes(),
        mesh_history: meta.history,
        numerical,
        reference_profile,
        native,
        warnings: meta.stats.warnings,
    })
}

struct Meta {
    final_time: f64,
    n_steps: usize,
    dt_sum: f64,
    total: f64,
    zoning: f64,
    stats: ZoneStats,
    history: Vec<Vec<f64>>,
    audit: Option<crate::schemes::WeightAudit>,
}

impl<const N: usize> From<LoopOutput<N>> for Meta {
    fn from(o: LoopOutput<N>) -> Self {
        Meta {
            final_time: o.final_time,
            n_steps: o.n_steps,
            dt_sum: o.dt_sum,
            total: o.total,
            zoning: o.zoning,
            stats: o.stats,
            history: o.history,
            audit: o.audit,
        }
    }
}

fn euler_reference(
    cfg: &ExperimentConfig,
    uniform: &Grid1D,
    t_end: f64,
) -> Result<(ReferenceKind, PrimitiveField)> {
    let riemann = match cfg.case {
        CaseId::Sod | CaseId::WoodwardAsPrinted => {
            Some((0.5, reference::SOD_LEFT, reference::SOD_RIGHT))
        }
        CaseId::Custom => cfg
            .custom
            .filter(|c| c.boundary == super::BoundaryKind::Dirichlet)
            .map(|c| (c.x0, c.left, c.right)),
        _ => None,
    };
    match riemann {
        Some((x0, l, r)) => Ok((
            ReferenceKind::Exact,
            reference::riemann_exact(&uniform.centers(), t_end, x0, &l, &r, &cfg.gas)?,
        )),
        None => {
            let k = cfg.reference_refinement;
            Ok((
                ReferenceKind::FineMesh { refinement: k },
                reference::fine_reference_cached(cfg, k, cfg.reference_cache.as_deref())?,
            ))
        }
    }
}

/// Final conserved state of a WENO5 run on a uniform mesh of `n_cells`,
/// ignoring the configured scheme and strategy. Scalar cases are rejected.
pub fn run_fixed_uniform(
    cfg: &ExperimentConfig,
    n_cells: usize,
) -> Result<(Grid1D, Vec<Conserved>)> {
    let mut fine = cfg.clone();
    fine.scheme = SchemeId::Weno5Rk3;
    fine.mesh_strategy = MeshStrategy::Uniform;
    fine.record_mesh_history = false;
    let setup = case_setup(&fine, n_cells)?;
    let InitialState::Euler { cells, bc } = setup.initial else {
        return Err(Error::config(
            "case",
            "fine-mesh references apply to Euler cases only",
        ));
    };
    let zoner = Zoner {
        strategy: MeshStrategy::Uniform,
        monitor: fine.monitor_config(),
        elliptic: fine.elliptic,
        parabolic: fine.parabolic,
        warm_start: false,
        model: None,
        uniform: setup.grid.clone(),
    };
    let law = EulerLaw { gas: cfg.gas };
    let out = time_loop(&fine, &law, &bc, setup.grid, cells, setup.end_time, &zoner)?;
    Ok((out.grid, out.state))
}

/// Fine uniform run at `refinement` times the configured resolution,
/// averaged back onto the configured cells.
pub fn fine_state(cfg: &ExperimentConfig, refinement: usize) -> Result<PrimitiveField> {
    if refinement == 0 {
        return Err(Error::config("reference_refinement", "must be at least 1"));
    }
    let (_, fine) = run_fixed_uniform(cfg, cfg.n_cells * refinement)?;
    let coarse: Vec<Conserved> = fine
        .chunks(refinement)
        .map(|c| {
            let mut s = [0.0; 3];
            for u in c {
                for k in 0..3 {
                    s[k] += u[k];
                }
            }
            s.map(|v| v / refinement as f64)
        })
        .collect();
    primitive_field(&coarse, &cfg.gas)
}
