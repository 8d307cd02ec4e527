//! Files written and read by the command-line tool.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::analysis::{hexagon_closeness, StabilityReport};
use crate::certify::CertificateReport;
use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::optimize::ScanEntry;
use crate::tessellation::CellPartition;

pub const VERSION_TAG: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub const CELLS_HEADER: [&str; 9] =
    ["cell_id", "x", "y", "mass", "weight", "edges", "second_moment", "hexagon_eps", "boundary_flag"];

#[derive(Debug, Serialize, Deserialize)]
struct CellRow {
    cell_id: usize,
    x: f64,
    y: f64,
    mass: f64,
    weight: f64,
    edges: usize,
    second_moment: f64,
    hexagon_eps: f64,
    boundary_flag: bool,
}

/// Per-cell table, one row per site.
pub fn write_cells(path: &Path, partition: &CellPartition, report: &EnergyReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (i, (cell, rec)) in partition.cells().iter().zip(&report.cells).enumerate() {
        let p = partition.sites()[i];
        w.serialize(CellRow {
            cell_id: i,
            x: p.x,
            y: p.y,
            mass: rec.mass,
            weight: partition.weights()[i],
            edges: rec.edges,
            second_moment: rec.transport,
            hexagon_eps: cell.as_ref().map_or(f64::INFINITY, hexagon_closeness),
            boundary_flag: partition.boundary_flags()[i],
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Points and optional masses from a CSV file. A header naming `x`, `y`
/// (and optionally `mass`) is honoured; without one the first two columns
/// are coordinates and a third, if present, is the mass.
pub fn read_points(path: &Path) -> Result<(Vec<Point>, Option<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes())
        .into_records();
    let bad = |line: u64, msg: &str| Error::Config(format!("{}:{line}: {msg}", path.display()));
    let first = rows.next().ok_or_else(|| bad(1, "no points"))?.map_err(csv_err)?;
    let numeric = first.iter().all(|f| f.parse::<f64>().is_ok());
    let (ix, iy, im) = if numeric {
        (0, 1, (first.len() > 2).then_some(2))
    } else {
        let col = |name: &str| first.iter().position(|f| f.eq_ignore_ascii_case(name));
        let ix = col("x").ok_or_else(|| bad(1, "header has no x column"))?;
        let iy = col("y").ok_or_else(|| bad(1, "header has no y column"))?;
        (ix, iy, col("mass"))
    };
    let mut pts = Vec::new();
    let mut masses = Vec::new();
    let records = if numeric { vec![Ok(first)] } else { Vec::new() };
    for rec in records.into_iter().chain(rows) {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64> {
            rec.get(k).and_then(|f| f.parse::<f64>().ok()).ok_or_else(|| bad(line, &format!("column {} is not a number", k + 1)))
        };
        pts.push(Point::new(field(ix)?, field(iy)?));
        if let Some(k) = im {
            masses.push(field(k)?);
        }
    }
    Ok((pts, im.map(|_| masses)))
}

/// Everything needed to resume a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub points: Vec<[f64; 2]>,
    pub masses: Vec<f64>,
    pub weights: Vec<f64>,
    pub energy: f64,
}

impl StateFile {
    pub fn points(&self) -> Vec<Point> {
        self.points.iter().map(|p| Point::new(p[0], p[1])).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub surface: f64,
    pub transport: f64,
    pub total: f64,
    pub v_lambda: f64,
    pub defect: f64,
    /// `Σ f(v_i, n_i)`, never above `total`.
    pub cell_lower_bound: f64,
}

impl From<&EnergyReport> for EnergySummary {
    fn from(r: &EnergyReport) -> Self {
        Self {
            surface: r.surface,
            transport: r.transport,
            total: r.total,
            v_lambda: r.v_lambda,
            defect: r.defect,
            cell_lower_bound: crate::energy::cell_lower_bound_sum(r),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub config: String,
    pub report: String,
    pub cells: String,
    pub state: String,
    pub render: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<String>,
}

/// Summary document of one `minimize` or `scan` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    pub points: usize,
    pub converged: bool,
    pub iterations: usize,
    pub coupling_residual: f64,
    pub last_displacement: f64,
    pub deleted_points: usize,
    pub timings: Timings,
    pub energy: EnergySummary,
    pub stability: Option<StabilityReport>,
    pub history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<ScanEntry>>,
    /// `|E(resumed state) - E(saved state)|` when resuming.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume_energy_jump: Option<f64>,
    pub files: OutputFiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub version: String,
    pub all_passed: bool,
    pub report: CertificateReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub version: String,
    pub input: String,
    pub points: usize,
    pub energy: EnergySummary,
    pub stability: StabilityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_fit: Option<crate::analysis::LatticeFit>,
}
