//! CSV trajectories, control tables and the JSON report.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::GroupElement;
use crate::mech::ControlPair;
use crate::solvers::SolverKind;

/// Column-labelled table; `None` cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

fn labels(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

fn push(row: &mut Vec<Option<f64>>, v: Option<&DVector<f64>>, n: usize) {
    match v {
        Some(v) => row.extend(v.iter().map(|&x| Some(x))),
        None => row.extend(std::iter::repeat_n(None, n)),
    }
}

impl Table {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map_or_else(String::new, |x| format!("{x}")))).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Table> {
        let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(io)?;
        let header: Vec<String> = r.headers().map_err(io)?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(io)?;
            let row = rec
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| {
                            Error::Io(format!("{}: row {}: `{c}` is not a number", path.display(), line + 1))
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    /// Indices of `prefix_0, prefix_1, …`.
    pub fn columns(&self, prefix: &str) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(i) = self.header.iter().position(|h| *h == format!("{prefix}_{}", out.len())) {
            out.push(i);
        }
        out
    }

    /// The vector in `prefix_*` columns of a row; `None` if any cell is empty.
    pub fn vector(&self, row: usize, prefix: &str) -> Option<DVector<f64>> {
        let cols = self.columns(prefix);
        let cells: Option<Vec<f64>> = cols.iter().map(|&c| self.rows[row][c]).collect();
        cells.map(DVector::from_vec)
    }
}

/// Group trajectory: `k, t, g_*, xi_*, nu_*, lambda_minus_*, lambda_plus_*`.
#[allow(clippy::too_many_arguments)]
pub fn group_table(
    h: f64,
    g: &[GroupElement],
    xi: &[DVector<f64>],
    nu: &[DVector<f64>],
    lambda: &[(DVector<f64>, DVector<f64>)],
    r: usize,
) -> Table {
    let n = nu.first().map_or(0, |v| v.len());
    let flat = g.first().map_or(0, |g| g.to_flat().len());
    let mut header = vec!["k".to_owned(), "t".to_owned()];
    header.extend(labels("g", flat));
    header.extend(labels("xi", n));
    header.extend(labels("nu", n));
    header.extend(labels("lambda_minus", r));
    header.extend(labels("lambda_plus", r));
    let rows = (0..g.len())
        .map(|k| {
            let mut row = vec![Some(k as f64), Some(k as f64 * h)];
            row.extend(g[k].to_flat().into_iter().map(Some));
            push(&mut row, xi.get(k), n);
            push(&mut row, nu.get(k), n);
            push(&mut row, lambda.get(k).map(|l| &l.0), r);
            push(&mut row, lambda.get(k).map(|l| &l.1), r);
            row
        })
        .collect();
    Table { header, rows }
}

/// Vector-space trajectory: `k, t, q_*, p_*, lambda_minus_*, lambda_plus_*`.
pub fn vector_table(h: f64, q: &[DVector<f64>], p: &[DVector<f64>], lambda: &[(DVector<f64>, DVector<f64>)], r: usize) -> Table {
    let n = q.first().map_or(0, |v| v.len());
    let mut header = vec!["k".to_owned(), "t".to_owned()];
    header.extend(labels("q", n));
    header.extend(labels("p", n));
    header.extend(labels("lambda_minus", r));
    header.extend(labels("lambda_plus", r));
    let rows = (0..q.len())
        .map(|k| {
            let mut row = vec![Some(k as f64), Some(k as f64 * h)];
            push(&mut row, q.get(k), n);
            push(&mut row, p.get(k), n);
            push(&mut row, lambda.get(k).map(|l| &l.0), r);
            push(&mut row, lambda.get(k).map(|l| &l.1), r);
            row
        })
        .collect();
    Table { header, rows }
}

/// `k, t, u_minus_*, u_plus_*`, one row per interval.
pub fn controls_table(h: f64, controls: &[ControlPair]) -> Table {
    let m = controls.first().map_or(0, |c| c.0.len());
    let mut header = vec!["k".to_owned(), "t".to_owned()];
    header.extend(labels("u_minus", m));
    header.extend(labels("u_plus", m));
    let rows = controls
        .iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let mut row = vec![Some(k as f64), Some(k as f64 * h)];
            push(&mut row, Some(a), m);
            push(&mut row, Some(b), m);
            row
        })
        .collect();
    Table { header, rows }
}

pub fn read_controls(path: &Path) -> Result<Vec<ControlPair>> {
    let t = Table::read(path)?;
    (0..t.rows.len())
        .map(|k| match (t.vector(k, "u_minus"), t.vector(k, "u_plus")) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::DimensionMismatch(format!("{}: row {k} has empty control cells", path.display()))),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_s: f64,
    pub run_s: f64,
    pub write_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub system: String,
    pub retraction: String,
    pub steps: usize,
    pub h: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    #[serde(default)]
    pub cost: Option<f64>,
    #[serde(default)]
    pub solver: Option<SolverKind>,
    pub seed: u64,
    #[serde(default)]
    pub message: Option<String>,
    pub timings: Timings,
}

impl Report {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Report> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}
