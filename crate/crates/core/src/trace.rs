//! Per-iteration trace records and their CSV form.
//!
//! Row `k` describes the state after `k` iterations. The step columns
//! (`delta_k` through `xi_norm`, `dual_residual`) refer to the step
//! `k − 1 → k` and are zero on row 0, except `dual_residual`, which on row 0
//! measures the multiplier initialization.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 16] = [
    "k",
    "L_gamma",
    "Lambda",
    "feas_residual",
    "delta_k",
    "eps_k",
    "q_norm",
    "du_norm",
    "dv_norm",
    "dp_norm",
    "h",
    "cert_bound",
    "xi_norm",
    "wall_ms",
    "p_norm",
    "dual_residual",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRecord {
    pub k: usize,
    pub l_gamma: f64,
    pub lambda: f64,
    pub feas_residual: f64,
    pub delta_k: f64,
    pub eps_k: f64,
    pub q_norm: f64,
    pub du_norm: f64,
    pub dv_norm: f64,
    pub dp_norm: f64,
    pub h: f64,
    pub cert_bound: f64,
    pub xi_norm: f64,
    pub wall_ms: f64,
    pub p_norm: f64,
    pub dual_residual: f64,
}

impl TraceRecord {
    /// `‖w^{k−1} − w^k‖`.
    pub fn step_norm(&self) -> f64 {
        (self.du_norm * self.du_norm + self.dv_norm * self.dv_norm + self.dp_norm * self.dp_norm)
            .sqrt()
    }

    fn fields(&self) -> [f64; 15] {
        [
            self.l_gamma,
            self.lambda,
            self.feas_residual,
            self.delta_k,
            self.eps_k,
            self.q_norm,
            self.du_norm,
            self.dv_norm,
            self.dp_norm,
            self.h,
            self.cert_bound,
            self.xi_norm,
            self.wall_ms,
            self.p_norm,
            self.dual_residual,
        ]
    }

    fn from_fields(k: usize, f: &[f64]) -> Self {
        Self {
            k,
            l_gamma: f[0],
            lambda: f[1],
            feas_residual: f[2],
            delta_k: f[3],
            eps_k: f[4],
            q_norm: f[5],
            du_norm: f[6],
            dv_norm: f[7],
            dp_norm: f[8],
            h: f[9],
            cert_bound: f[10],
            xi_norm: f[11],
            wall_ms: f[12],
            p_norm: f[13],
            dual_residual: f[14],
        }
    }
}

/// Scalars are written with 17 significant digits.
pub fn format_scalar(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_to<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Trace(e.to_string());
    w.write_record(COLUMNS).map_err(err)?;
    for r in records {
        let mut row = Vec::with_capacity(COLUMNS.len());
        row.push(r.k.to_string());
        row.extend(r.fields().iter().map(|&x| format_scalar(x)));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Trace(e.to_string()))
}

pub fn write_trace(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| Error::Trace(format!("cannot create {}: {e}", path.display())))?;
    write_trace_to(BufWriter::new(file), records)
}

/// Parses a trace; a missing or reordered header, a malformed row or an empty
/// body are errors.
pub fn read_trace_from<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Trace(format!("unreadable header: {e}")))?
        .clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Trace(format!(
            "unexpected header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Trace(format!("row {}: {e}", line + 1)))?;
        let k: usize = row[0]
            .trim()
            .parse()
            .map_err(|e| Error::Trace(format!("row {}: bad iteration index: {e}", line + 1)))?;
        let mut fields = [0.0; 15];
        for (j, slot) in fields.iter_mut().enumerate() {
            *slot = row[j + 1].trim().parse().map_err(|e| {
                Error::Trace(format!("row {}, column {}: {e}", line + 1, COLUMNS[j + 1]))
            })?;
        }
        out.push(TraceRecord::from_fields(k, &fields));
    }
    if out.is_empty() {
        return Err(Error::Trace("trace has no rows".into()));
    }
    Ok(out)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Trace(format!("cannot open {}: {e}", path.display())))?;
    read_trace_from(file)
}
