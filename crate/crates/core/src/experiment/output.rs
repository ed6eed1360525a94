use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::write_snapshot_csv;

use super::{CaseId, MeshStrategy, RunReport, SchemeId};

/// File stem `{case}_{scheme}_{strategy}`.
pub fn output_stem(report: &RunReport) -> String {
    format!("{}_{}_{}", report.case, report.scheme, report.strategy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub case: CaseId,
    pub scheme: SchemeId,
    pub strategy: MeshStrategy,
    pub total_s: f64,
    pub zoning_s: f64,
    pub steps: usize,
}

impl From<&RunReport> for TimingRecord {
    fn from(r: &RunReport) -> Self {
        TimingRecord {
            case: r.case,
            scheme: r.scheme,
            strategy: r.strategy,
            total_s: r.wall_clock_total,
            zoning_s: r.wall_clock_zoning,
            steps: r.n_steps,
        }
    }
}

/// Write the norms CSV, timing JSON, mesh-history CSV and final-profile CSV
/// of one run into `dir`. Returns the paths written.
pub fn emit_results(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = output_stem(report);
    let path = |kind: &str, ext: &str| dir.join(format!("{stem}.{kind}.{ext}"));

    let norms = path("norms", "csv");
    let mut w = csv::Writer::from_path(&norms)?;
    w.write_record([
        "quantity",
        "l2_solution",
        "l2_rel_error",
        "l1_solution",
        "l1_rel_error",
        "l2_reference",
        "l1_reference",
    ])?;
    for q in &report.norms {
        let e = &q.entry;
        let mut row = vec![q.quantity.clone()];
        row.extend(
            [
                e.l2_solution,
                e.l2_rel_error,
                e.l1_solution,
                e.l1_rel_error,
                q.l2_reference,
                q.l1_reference,
            ]
            .iter()
            .map(|v| format!("{v:.17e}")),
        );
        w.write_record(&row)?;
    }
    w.flush()?;

    let timing = path("timing", "json");
    fs::write(
        &timing,
        serde_json::to_string_pretty(&TimingRecord::from(report))?,
    )?;

    let history = path("mesh_history", "csv");
    let mut w = csv::Writer::from_path(&history)?;
    let n_nodes = report.final_nodes.len();
    let mut header = vec!["step".to_string()];
    header.extend((0..n_nodes).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (step, nodes) in report.mesh_history.iter().enumerate() {
        let mut row = vec![step.to_string()];
        row.extend(nodes.iter().map(|x| format!("{x:.17e}")));
        w.write_record(&row)?;
    }
    w.flush()?;

    let profile = path("profile", "csv");
    let mut columns: Vec<(String, &[f64])> = Vec::new();
    for (name, values) in &report.numerical.columns {
        columns.push((name.clone(), values));
        if let Some(r) = report.reference_profile.column(name) {
            columns.push((format!("{name}_reference"), r));
        }
    }
    let named: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    write_snapshot_csv(
        BufWriter::new(fs::File::create(&profile)?),
        &report.numerical.x,
        &named,
    )?;

    Ok(vec![norms, timing, history, profile])
}

/// Rows `(quantity, [l2_solution, l2_rel_error, l1_solution, l1_rel_error])`
/// of a norms CSV.
pub fn read_norms_csv(path: &Path) -> Result<Vec<(String, [f64; 4])>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::CorruptDataset(format!("bad norms row {rec:?}")))
        };
        out.push((
            rec.get(0).unwrap_or("").to_string(),
            [num(1)?, num(2)?, num(3)?, num(4)?],
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub case: CaseId,
    pub scheme: SchemeId,
    pub uniform: TimingRecord,
    pub standard: TimingRecord,
    pub dl: TimingRecord,
    /// Standard zoning time over DL zoning time.
    pub zoning_ratio: f64,
    /// Standard total time over DL total time.
    pub total_ratio: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

/// Compare the three runs of one case and scheme.
pub fn timing_compare(
    uniform: &RunReport,
    standard: &RunReport,
    dl: &RunReport,
) -> Result<TimingSummary> {
    for r in [standard, dl] {
        if (r.case, r.scheme, r.n_cells, r.end_time)
            != (
                uniform.case,
                uniform.scheme,
                uniform.n_cells,
                uniform.end_time,
            )
        {
            return Err(Error::config(
                "compare",
                format!(
                    "reports differ: {} vs {}",
                    output_stem(uniform),
                    output_stem(r)
                ),
            ));
        }
    }
    Ok(TimingSummary {
        case: uniform.case,
        scheme: uniform.scheme,
        uniform: uniform.into(),
        standard: standard.into(),
        dl: dl.into(),
        zoning_ratio: ratio(standard.wall_clock_zoning, dl.wall_clock_zoning),
        total_ratio: ratio(standard.wall_clock_total, dl.wall_clock_total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{simulate_adaptive, ExperimentConfig};

    fn small_run(strategy: MeshStrategy) -> RunReport {
        let mut cfg = ExperimentConfig::new(CaseId::Sod, SchemeId::LaxWendroff, strategy);
        cfg.n_cells = 40;
        simulate_adaptive(&cfg).unwrap()
    }

    #[test]
    fn emits_the_four_file_set() {
        let r = small_run(MeshStrategy::MmpdeElliptic);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_results(&r, dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            [
                "sod_lax_wendroff_mmpde_elliptic.norms.csv",
                "sod_lax_wendroff_mmpde_elliptic.timing.json",
                "sod_lax_wendroff_mmpde_elliptic.mesh_history.csv",
                "sod_lax_wendroff_mmpde_elliptic.profile.csv",
            ]
        );
        let history = fs::read_to_string(&files[2]).unwrap();
        assert_eq!(history.lines().count(), r.n_steps + 2);
        let timing: TimingRecord =
            serde_json::from_str(&fs::read_to_string(&files[1]).unwrap()).unwrap();
        assert_eq!(timing.steps, r.n_steps);
        let norms = read_norms_csv(&files[0]).unwrap();
        assert_eq!(norms.len(), 4);
        assert_eq!(norms[0].0, "density");
        assert_eq!(norms[0].1[1], r.norm("density").unwrap().l2_rel_error);
    }

    #[test]
    fn reruns_give_identical_norm_files() {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let f1 = emit_results(&small_run(MeshStrategy::MmpdeElliptic), d1.path()).unwrap();
        let f2 = emit_results(&small_run(MeshStrategy::MmpdeElliptic), d2.path()).unwrap();
        assert_eq!(fs::read(&f1[0]).unwrap(), fs::read(&f2[0]).unwrap());
        assert_eq!(fs::read(&f1[3]).unwrap(), fs::read(&f2[3]).unwrap());
    }

    #[test]
    fn timing_comparison() {
        let u = small_run(MeshStrategy::Uniform);
        let s = timing_compare(&u, &u, &u).unwrap();
        assert_eq!((s.zoning_ratio, s.total_ratio), (1.0, 1.0));
        let mut other = u.clone();
        other.scheme = SchemeId::Weno5Rk3;
        assert!(timing_compare(&u, &other, &u).is_err());
    }
}
