//! CSV and JSON readers and writers.
//!
//! Numbers are written in shortest round-trip form (`inf`/`-inf` for
//! infinities), so every file reads back bit-exactly.
//!
//! * 1D densities: header `x,value`, one row per node.
//! * 2D densities: header `nx,ny,x0,y0,h`, one row with those values, then
//!   `nx` rows of `ny` values (x slow).
//! * radial profiles: header `r,value`.
//! * `W` tables: rows `u,W`, optional header.
//! * cost curves: header `m,H,status`.
//! * Γ traces: header `eps,energy,concentration,droplets,status`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::discretization::{GridDensity, RadialProfile};
use crate::error::{Error, Result};
use crate::gamma_lab::GammaRunResult;
use crate::lagrangian::WTable;
use crate::optim::SolveStatus;
use crate::radial_solver::CostSample;
use crate::serde_ext::{format as fmt, parse};

fn num(field: &str, what: &str) -> Result<f64> {
    parse(field).ok_or_else(|| Error::Parse(format!("{what}: `{field}` is not a number")))
}

fn count(field: &str, what: &str) -> Result<usize> {
    field.trim().parse().map_err(|_| Error::Parse(format!("{what}: `{field}` is not a count")))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().flexible(true).from_writer(BufWriter::new(File::create(path)?)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?)
}

fn records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    reader(path)?.records().map(|r| r.map_err(Error::from)).collect()
}

fn expect_header(rec: Option<&csv::StringRecord>, header: &[&str], path: &Path) -> Result<()> {
    match rec {
        Some(r) if r.iter().eq(header.iter().copied()) => Ok(()),
        _ => Err(Error::Parse(format!("{}: expected header `{}`", path.display(), header.join(",")))),
    }
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, path: &Path) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| Error::Parse(format!("{}: row has too few columns", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_density_csv(path: &Path, u: &GridDensity) -> Result<()> {
    let mut w = writer(path)?;
    match u.dim {
        1 => {
            w.write_record(["x", "value"])?;
            for (i, v) in u.values.iter().enumerate() {
                w.write_record([fmt(u.coords(i)[0]), fmt(*v)])?;
            }
        }
        _ => {
            w.write_record(["nx", "ny", "x0", "y0", "h"])?;
            w.write_record([
                u.shape[0].to_string(),
                u.shape[1].to_string(),
                fmt(u.origin[0]),
                fmt(u.origin[1]),
                fmt(u.h),
            ])?;
            for row in u.values.chunks(u.shape[1]) {
                w.write_record(row.iter().map(|v| fmt(*v)))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads either density layout, told apart by the header.
pub fn read_density_csv(path: &Path) -> Result<GridDensity> {
    let recs = records(path)?;
    let what = path.display().to_string();
    match recs.first().and_then(|r| r.get(0)) {
        Some("x") => {
            expect_header(recs.first(), &["x", "value"], path)?;
            let mut xs = Vec::with_capacity(recs.len());
            let mut vals = Vec::with_capacity(recs.len());
            for r in &recs[1..] {
                xs.push(num(field(r, 0, path)?, &what)?);
                vals.push(num(field(r, 1, path)?, &what)?);
            }
            if xs.len() < 2 {
                return Err(Error::Parse(format!("{what}: a 1D density needs two rows")));
            }
            let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
            let uniform =
                xs.iter().enumerate().all(|(i, x)| (x - (xs[0] + i as f64 * h)).abs() <= 1e-9 * h.abs().max(1.0));
            if !uniform {
                return Err(Error::Parse(format!("{what}: x values are not uniformly spaced")));
            }
            GridDensity::new(vec![xs[0]], h, vec![xs.len()], vals)
        }
        Some("nx") => {
            expect_header(recs.first(), &["nx", "ny", "x0", "y0", "h"], path)?;
            let meta = recs.get(1).ok_or_else(|| Error::Parse(format!("{what}: missing grid row")))?;
            let nx = count(field(meta, 0, path)?, &what)?;
            let ny = count(field(meta, 1, path)?, &what)?;
            let origin = vec![num(field(meta, 2, path)?, &what)?, num(field(meta, 3, path)?, &what)?];
            let h = num(field(meta, 4, path)?, &what)?;
            if recs.len() != nx + 2 {
                return Err(Error::Parse(format!("{what}: expected {nx} value rows, found {}", recs.len() - 2)));
            }
            let mut vals = Vec::with_capacity(nx * ny);
            for r in &recs[2..] {
                if r.len() != ny {
                    return Err(Error::Parse(format!("{what}: expected {ny} values per row, found {}", r.len())));
                }
                for f in r.iter() {
                    vals.push(num(f, &what)?);
                }
            }
            GridDensity::new(origin, h, vec![nx, ny], vals)
        }
        _ => Err(Error::Parse(format!("{what}: unrecognized density header"))),
    }
}

pub fn write_profile_csv(path: &Path, p: &RadialProfile) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["r", "value"])?;
    for (i, v) in p.values.iter().enumerate() {
        w.write_record([fmt(p.r(i)), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Radial profile CSV; the dimension is not stored in the file.
pub fn read_profile_csv(path: &Path, dim: usize) -> Result<RadialProfile> {
    let recs = records(path)?;
    expect_header(recs.first(), &["r", "value"], path)?;
    let what = path.display().to_string();
    let mut last_r = 0.0;
    let mut vals = Vec::with_capacity(recs.len());
    for r in &recs[1..] {
        last_r = num(field(r, 0, path)?, &what)?;
        vals.push(num(field(r, 1, path)?, &what)?);
    }
    RadialProfile::new(dim, last_r, vals)
}

/// `(u, W(u))` rows; a non-numeric first row is taken as a header.
pub fn read_w_table(path: &Path, s: f64) -> Result<WTable> {
    let recs = records(path)?;
    let what = path.display().to_string();
    let skip = usize::from(recs.first().and_then(|r| r.get(0)).is_some_and(|f| parse(f).is_none()));
    let (mut u, mut w) = (Vec::new(), Vec::new());
    for r in &recs[skip..] {
        u.push(num(field(r, 0, path)?, &what)?);
        w.push(num(field(r, 1, path)?, &what)?);
    }
    WTable::new(u, w, s)
}

pub fn write_w_table(path: &Path, t: &WTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["u", "W"])?;
    for (u, v) in t.u.iter().zip(&t.w) {
        w.write_record([fmt(*u), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

fn status(field: &str, what: &str) -> Result<SolveStatus> {
    SolveStatus::parse(field).ok_or_else(|| Error::Parse(format!("{what}: unknown status `{field}`")))
}

pub fn write_cost_curve_csv(path: &Path, samples: &[CostSample]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["m", "H", "status"])?;
    for s in samples {
        w.write_record([fmt(s.m), fmt(s.h), s.status.as_str().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cost_curve_csv(path: &Path) -> Result<Vec<CostSample>> {
    let recs = records(path)?;
    expect_header(recs.first(), &["m", "H", "status"], path)?;
    let what = path.display().to_string();
    recs[1..]
        .iter()
        .map(|r| {
            Ok(CostSample {
                m: num(field(r, 0, path)?, &what)?,
                h: num(field(r, 1, path)?, &what)?,
                status: status(field(r, 2, path)?, &what)?,
            })
        })
        .collect()
}

/// One row of a Γ trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTraceRow {
    pub eps: f64,
    pub energy: f64,
    pub concentration: f64,
    pub droplets: usize,
    pub status: SolveStatus,
}

pub fn write_gamma_trace_csv(path: &Path, run: &GammaRunResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["eps", "energy", "concentration", "droplets", "status"])?;
    for e in &run.entries {
        w.write_record([
            fmt(e.eps),
            fmt(e.energy),
            fmt(e.concentration),
            e.droplets.to_string(),
            e.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_gamma_trace_csv(path: &Path) -> Result<Vec<GammaTraceRow>> {
    let recs = records(path)?;
    expect_header(recs.first(), &["eps", "energy", "concentration", "droplets", "status"], path)?;
    let what = path.display().to_string();
    recs[1..]
        .iter()
        .map(|r| {
            Ok(GammaTraceRow {
                eps: num(field(r, 0, path)?, &what)?,
                energy: num(field(r, 1, path)?, &what)?,
                concentration: num(field(r, 2, path)?, &what)?,
                droplets: count(field(r, 3, path)?, &what)?,
                status: status(field(r, 4, path)?, &what)?,
            })
        })
        .collect()
}
