//! CSV emission for fields, sections, kernels and decomposition reports.
//!
//! Every file has a header row, LF line endings, and reals written with 17
//! significant digits so that identical inputs give byte-identical output.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fiber::FiberDecomposition;
use crate::grid::{OmegaGrid, SQuadrature, ScalarField, Section};
use crate::kernel::SampledKernel;
use crate::spectrum::Membership;

/// 17 significant digits in scientific notation.
pub fn fmt_real(x: f64) -> String {
    // fold -0.0 into 0.0 so sign-of-zero noise never reaches a golden file
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.16e}", x)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_field<W: Write>(out: W, field: &ScalarField) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "value"])?;
    for (omega, v) in field.grid().nodes().iter().zip(field.values()) {
        w.write_record([fmt_real(*omega), fmt_real(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_section<W: Write>(out: W, section: &Section) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "t", "value"])?;
    let ts = section.squad().nodes();
    for (omega, row) in section.ogrid().nodes().iter().zip(section.rows()) {
        for (t, v) in ts.iter().zip(row) {
            w.write_record([fmt_real(*omega), fmt_real(*t), fmt_real(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_kernel<W: Write>(out: W, kernel: &SampledKernel) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "t", "s", "value"])?;
    let ts = kernel.squad().nodes();
    for (i, omega) in kernel.ogrid().nodes().iter().enumerate() {
        for (j, t) in ts.iter().enumerate() {
            for (k, s) in ts.iter().enumerate() {
                w.write_record([
                    fmt_real(*omega),
                    fmt_real(*t),
                    fmt_real(*s),
                    fmt_real(kernel.get(i, j, k)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows (omega, curve_id, lambda) using aligned curve ids, ordered by ω then id.
pub fn write_eigencurves<W: Write>(out: W, d: &FiberDecomposition) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "curve_id", "lambda"])?;
    for (i, omega) in d.ogrid().nodes().iter().enumerate() {
        for (id, k) in sorted_ids(d, i) {
            w.write_record([
                fmt_real(*omega),
                id.to_string(),
                fmt_real(d.fiber(i).eigenvalues()[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_eigenfunctions<W: Write>(out: W, d: &FiberDecomposition) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "curve_id", "t", "value"])?;
    let ts = d.squad().nodes();
    for (i, omega) in d.ogrid().nodes().iter().enumerate() {
        for (id, k) in sorted_ids(d, i) {
            for (t, v) in ts.iter().zip(&d.fiber(i).eigenfunctions()[k]) {
                w.write_record([fmt_real(*omega), id.to_string(), fmt_real(*t), fmt_real(*v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn sorted_ids(d: &FiberDecomposition, i: usize) -> Vec<(usize, usize)> {
    let mut ids: Vec<(usize, usize)> = d
        .aligned_labels()
        .ids(i)
        .iter()
        .enumerate()
        .map(|(k, &id)| (id, k))
        .collect();
    ids.sort_unstable();
    ids
}

pub fn write_bounds<W: Write>(out: W, d: &FiberDecomposition) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "m", "M"])?;
    let (m, big_m) = d.spectral_bounds();
    for (i, omega) in d.ogrid().nodes().iter().enumerate() {
        w.write_record([fmt_real(*omega), fmt_real(m.get(i)), fmt_real(big_m.get(i))])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows (omega, index, value) listing sp(T_ω), retained eigenvalues then 0.
pub fn write_spectra<W: Write>(out: W, d: &FiberDecomposition) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "index", "value"])?;
    for (i, omega) in d.ogrid().nodes().iter().enumerate() {
        let spectrum = crate::spectrum::fiber_spectrum(d, i)?;
        for (k, v) in spectrum.iter().enumerate() {
            w.write_record([fmt_real(*omega), k.to_string(), fmt_real(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_membership<W: Write>(out: W, m: &Membership) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["omega", "lambda", "nearest_spectral_value", "distance"])?;
    for r in &m.rows {
        w.write_record([
            fmt_real(r.omega),
            fmt_real(r.lambda),
            fmt_real(r.nearest),
            fmt_real(r.distance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic table of (header, rows) with preformatted cells.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a section CSV (omega, t, value) whose rows follow the grid order.
/// Node coordinates must match the grids within 1e-12.
pub fn read_section<R: Read>(
    input: R,
    ogrid: &Arc<OmegaGrid>,
    squad: &Arc<SQuadrature>,
) -> Result<Section> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["omega", "t", "value"] {
        return Err(Error::Config(format!(
            "section csv header must be omega,t,value (got {:?})",
            headers
        )));
    }
    let nt = squad.len();
    let expected = ogrid.len() * nt;
    let mut values = Vec::with_capacity(expected);
    for (row, record) in r.records().enumerate() {
        let record = record?;
        if row >= expected {
            return Err(Error::GridMismatch(format!(
                "section csv has more than {} rows",
                expected
            )));
        }
        let parse = |k: usize| -> Result<f64> {
            record
                .get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Config(format!("section csv row {}: bad column {}", row + 1, k))
                })
        };
        let (omega, t, v) = (parse(0)?, parse(1)?, parse(2)?);
        let (i, j) = (row / nt, row % nt);
        if (omega - ogrid.nodes()[i]).abs() > 1e-12 || (t - squad.nodes()[j]).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "section csv row {} is at ({}, {}), expected grid node ({}, {})",
                row + 1,
                omega,
                t,
                ogrid.nodes()[i],
                squad.nodes()[j]
            )));
        }
        values.push(v);
    }
    if values.len() != expected {
        return Err(Error::GridMismatch(format!(
            "section csv has {} rows, expected {}",
            values.len(),
            expected
        )));
    }
    Section::new(ogrid.clone(), squad.clone(), values)
}
