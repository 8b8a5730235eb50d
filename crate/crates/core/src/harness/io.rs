//! Artifact writers. CSVs are comma-separated with LF line ends, start with a
//! `# config_hash: <hex>` comment line, then a header row. Floats are written
//! with 17 significant digits so they round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rl_mcmc::TraceRow;
use crate::sim::EpisodeLog;

pub const EPISODE_COLUMNS: [&str; 9] = ["t", "U_w", "omega_r", "omega_opt", "V_L", "I_L", "R_L", "P", "P_opt"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path, config_hash: &str, header: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut out = create(path)?;
    writeln!(out, "# config_hash: {config_hash}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    Ok(w)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Per-step episode table, every `stride`-th row (the last row always
/// included). `R_L` is empty while no current flows.
pub fn write_episode_csv(path: &Path, log: &EpisodeLog, stride: usize, config_hash: &str) -> Result<()> {
    let header: Vec<String> = EPISODE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut w = csv_writer(path, config_hash, &header)?;
    let n = log.records.len();
    let stride = stride.max(1);
    for (k, r) in log.records.iter().enumerate() {
        if k % stride != 0 && k + 1 != n {
            continue;
        }
        let row = [
            fmt_f64(r.t),
            fmt_f64(r.wind_speed),
            fmt_f64(r.omega),
            fmt_f64(r.omega_opt),
            fmt_f64(r.voltage),
            fmt_f64(r.current),
            r.resistance.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.power),
            fmt_f64(r.nominal_power),
        ];
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// One row per chain iteration: `iteration, accepted, logJ, theta_1..theta_n`.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow], config_hash: &str) -> Result<()> {
    let dim = trace.first().map_or(0, |r| r.theta.len());
    let mut header = vec!["iteration".to_string(), "accepted".into(), "logJ".into()];
    header.extend((1..=dim).map(|i| format!("theta_{i}")));
    let mut w = csv_writer(path, config_hash, &header)?;
    for r in trace {
        let mut row = vec![
            r.iteration.to_string(),
            u8::from(r.accepted).to_string(),
            fmt_f64(r.log_j),
        ];
        row.extend(r.theta.iter().map(|t| fmt_f64(*t)));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Generic table writer for reports.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>], config_hash: &str) -> Result<()> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let mut w = csv_writer(path, config_hash, &header)?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}
