//! The report directory: five CSV tables and `summary.json`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use mmis_core::campaign::{Artifact, CampaignConfig, CorrelatorRow, CriterionError, OseCsvRow, Outcome};
use mmis_core::dims::DimReport;
use mmis_core::swssb::SwssbRow;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

pub const TABLE_S1: (&str, &[&str]) = (
    "table-s1.csv",
    &["L", "d", "dim_s", "dim_t", "equal", "entanglement_certified"],
);
pub const CORRELATORS: (&str, &[&str]) = (
    "correlators.csv",
    &["kind", "L", "d", "region", "value", "reference", "residual"],
);
pub const OSE: (&str, &[&str]) = (
    "ose.csv",
    &["L", "region_size", "alpha", "numeric", "predicted", "deviation"],
);
pub const SWSSB: (&str, &[&str]) = (
    "swssb.csv",
    &[
        "sites",
        "local",
        "local_closed_form",
        "local_leading",
        "momentum",
        "momentum_leading",
        "normalized_trace",
        "normalized_doubled",
        "route_gap",
        "charge_residual",
    ],
);
pub const TRAJECTORY: (&str, &[&str]) = (
    "trajectory.csv",
    &["t", "F", "one_minus_F", "purity", "trace_drift", "max_charge_drift"],
);

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    #[serde(rename = "F")]
    pub fidelity: f64,
    #[serde(rename = "one_minus_F")]
    pub one_minus_fidelity: f64,
    pub purity: f64,
    pub trace_drift: f64,
    #[serde(rename = "max_charge_drift")]
    pub charge_drift: f64,
}

#[derive(Default)]
pub struct Artifacts {
    pub table: Vec<DimReport>,
    pub correlators: Vec<CorrelatorRow>,
    pub ose: Vec<OseCsvRow>,
    pub swssb: Vec<SwssbRow>,
    pub trajectory: Vec<TrajectoryRow>,
}

/// Gathers the tables in check order, so the files do not depend on
/// which worker finished first.
pub fn collect(outcomes: &[&Outcome]) -> Artifacts {
    let mut a = Artifacts::default();
    for o in outcomes {
        match &o.artifact {
            Artifact::None => {}
            Artifact::TableS1(r) => a.table.extend(r.iter().cloned()),
            Artifact::Correlators(r) => a.correlators.extend(r.iter().cloned()),
            Artifact::Ose(r) => a.ose.extend(r.iter().cloned()),
            Artifact::Swssb(r) => a.swssb.extend(r.iter().cloned()),
            Artifact::Trajectory(rec) => a.trajectory.extend(crate::trajectory_rows(rec)),
        }
    }
    a
}

pub fn csv_text<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write(dir: &Path, name: &str, text: String) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_all(
    dir: &Path,
    cfg: &CampaignConfig,
    a: &Artifacts,
    outcomes: &[&Outcome],
    errors: &[&CriterionError],
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(dir, TABLE_S1.0, csv_text(TABLE_S1.1, &a.table)?)?;
    write(dir, CORRELATORS.0, csv_text(CORRELATORS.1, &a.correlators)?)?;
    write(dir, OSE.0, csv_text(OSE.1, &a.ose)?)?;
    write(dir, SWSSB.0, csv_text(SWSSB.1, &a.swssb)?)?;
    write(dir, TRAJECTORY.0, csv_text(TRAJECTORY.1, &a.trajectory)?)?;

    let files: serde_json::Map<String, serde_json::Value> = [TABLE_S1, CORRELATORS, OSE, SWSSB, TRAJECTORY]
        .iter()
        .map(|(name, cols)| (name.to_string(), json!(cols)))
        .collect();
    let checks: Vec<_> = outcomes.iter().map(|o| &o.check).collect();
    let errs: Vec<_> = errors
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "title": e.title,
                "guard": e.is_guard(),
                "message": e.to_string(),
            })
        })
        .collect();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "fidelity_convention": "Uhlmann, non-squared: F = Tr sqrt(sqrt(rho) sigma sqrt(rho))",
        "seed": cfg.seed,
        "all_passed": errors.is_empty() && checks.iter().all(|c| c.passed),
        "files": files,
        "checks": checks,
        "errors": errs,
        "config": cfg,
    });
    write(dir, "summary.json", serde_json::to_string_pretty(&summary)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmis_core::campaign::{run_criterion, CampaignConfig};

    fn auto_header<T: Serialize>(row: &T) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row).unwrap();
        let s = String::from_utf8(w.into_inner().unwrap()).unwrap();
        s.lines().next().unwrap().to_string()
    }

    #[test]
    fn fixed_headers_match_row_types() {
        let cfg = CampaignConfig::default();
        let table = threshold_row();
        assert_eq!(auto_header(&table), TABLE_S1.1.join(","));
        let traj = TrajectoryRow {
            t: 0.0,
            fidelity: 1.0,
            one_minus_fidelity: 0.0,
            purity: 1.0,
            trace_drift: 0.0,
            charge_drift: 0.0,
        };
        assert_eq!(auto_header(&traj), TRAJECTORY.1.join(","));
        let o = run_criterion(11, &cfg).unwrap();
        if let Artifact::Swssb(rows) = o.artifact {
            assert_eq!(auto_header(&rows[0]), SWSSB.1.join(","));
        } else {
            panic!("check 11 leaves the sweep rows");
        }
        let o = run_criterion(5, &cfg).unwrap();
        if let Artifact::Correlators(rows) = o.artifact {
            assert_eq!(auto_header(&rows[0]), CORRELATORS.1.join(","));
        } else {
            panic!("check 5 leaves correlator rows");
        }
        let row = OseCsvRow {
            sites: 4,
            region_size: 1,
            alpha: 2.0,
            numeric: 0.0,
            predicted: 0.0,
            deviation: 0.0,
        };
        assert_eq!(auto_header(&row), OSE.1.join(","));
    }

    fn threshold_row() -> DimReport {
        DimReport::new(3, 2).unwrap()
    }
}
