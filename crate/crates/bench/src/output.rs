//! CSV emission. Reals are written as `{:.16e}` (17 significant digits);
//! absent values are empty fields.

use std::collections::HashMap;
use std::path::Path;

use dcopt::{CertificateReport, IterateTrace};

use crate::experiments::{ScatterPoint, TableRow};
use crate::instance::InstanceData;

pub const TABLE_HEADER: [&str; 12] = [
    "lambda",
    "m",
    "n",
    "s",
    "t",
    "r",
    "solver",
    "rmsd_mean",
    "iter_mean",
    "fval_mean",
    "cpu_mean",
    "maxiter_count",
];

pub const TRACE_HEADER: [&str; 10] = [
    "k",
    "fval",
    "E",
    "E_hat",
    "beta",
    "step_norm",
    "residual",
    "decrease_slack",
    "certificate_norm",
    "elapsed_s",
];

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub fn write_table(path: &Path, rows: &[TableRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TABLE_HEADER)?;
    for row in rows {
        let c = &row.cell;
        w.write_record([
            real(c.lambda),
            c.dims.m.to_string(),
            c.dims.n.to_string(),
            c.dims.s.to_string(),
            c.dims.t.to_string(),
            c.r.to_string(),
            row.solver.name().to_string(),
            real(row.rmsd_mean),
            real(row.iter_mean),
            real(row.fval_mean),
            real(row.cpu_mean),
            row.maxiter_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per recorded iteration; `decrease_slack` comes from `report`
/// when given.
pub fn write_trace(path: &Path, trace: &IterateTrace, report: Option<&CertificateReport>) -> csv::Result<()> {
    let slack: HashMap<usize, f64> = report
        .map(|r| r.records.iter().filter_map(|p| p.decrease_slack.map(|s| (p.k, s))).collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for rec in &trace.records {
        w.write_record([
            rec.k.to_string(),
            real(rec.fval),
            opt(rec.potential),
            opt(rec.potential_hat),
            real(rec.beta),
            real(rec.step_norm),
            opt(rec.residual),
            opt(slack.get(&rec.k).copied()),
            opt(rec.certificate_norm),
            real(rec.elapsed_secs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter(path: &Path, points: &[ScatterPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "x_true", "x_solved"])?;
    for p in points {
        w.write_record([p.index.to_string(), real(p.x_true), real(p.x_solved)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector(path: &Path, name: &str, values: &[f64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", name])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), real(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// `A.csv` (row-major, no header), `b.csv`, `x_true.csv` and `outliers.csv`.
pub fn write_instance(dir: &Path, inst: &InstanceData) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(dir.join("A.csv"))?;
    let cols = inst.a.cols();
    let entries = inst.a.to_row_major();
    for row in entries.chunks(cols) {
        w.write_record(row.iter().map(|v| real(*v)))?;
    }
    w.flush()?;
    write_vector(&dir.join("b.csv"), "b", &inst.b)?;
    write_vector(&dir.join("x_true.csv"), "x_true", &inst.x_true)?;
    let mut w = csv::Writer::from_path(dir.join("outliers.csv"))?;
    w.write_record(["row"])?;
    for r in &inst.outlier_support {
        w.write_record([r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
