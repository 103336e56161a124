//! Plain-text data files: `#`-prefixed header lines carrying JSON metadata,
//! followed by a CSV payload.
//!
//! ```text
//! # cftomo chi-grid
//! # config: {...}
//! # axes: [{"points":129,"step":0.09375}, ...]
//! re_xi_0,im_xi_0,re_chi,im_chi,present,stderr
//! ...
//! ```

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pulse_protocol::ManifoldCurve;
use crate::ramsey_readout::ReadoutRecord;
use crate::tomography::{Axis, ChiGrid, Provenance, WignerGrid};

/// Metadata and numeric rows of a parsed file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: String,
    pub meta: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidGrid(format!("missing column {name}")))
    }

    fn meta_as<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self.meta.get(key).ok_or_else(|| Error::InvalidGrid(format!("missing header {key}")))?;
        Ok(serde_json::from_value(v.clone())?)
    }
}

/// Writes a header block and rows of already-formatted cells.
pub fn write_table<W: Write + ?Sized>(
    out: &mut W,
    kind: &str,
    meta: &[(&str, Value)],
    columns: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    writeln!(out, "# cftomo {kind}")?;
    for (k, v) in meta {
        writeln!(out, "# {k}: {}", serde_json::to_string(v)?)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidGrid(format!("csv: {other:?}")),
    }
}

/// Parses a file written by [`write_table`].
pub fn read_table(text: &str) -> Result<Table> {
    let mut kind = String::new();
    let mut meta = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some(k) = body.strip_prefix("cftomo ") {
            kind = k.to_string();
        } else if let Some((k, v)) = body.split_once(": ") {
            meta.insert(k.to_string(), serde_json::from_str(v)?);
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let columns = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| Error::InvalidGrid(format!("not a number: {c}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { kind, meta, columns, rows })
}

fn f(x: f64) -> String {
    format!("{x}")
}

pub fn write_manifold<W: Write + ?Sized>(out: &mut W, config: &Value, curves: &[ManifoldCurve]) -> Result<()> {
    let columns = ["N", "tau", "re_xi", "im_xi"].map(String::from);
    let rows = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |(t, xi)| vec![c.segments.to_string(), f(*t), f(xi.re), f(xi.im)]));
    write_table(out, "manifold", &[("config", config.clone())], &columns, rows)
}

/// Readout log, one row per displacement point.
pub fn write_readouts<W: Write + ?Sized>(out: &mut W, config: &Value, records: &[ReadoutRecord]) -> Result<()> {
    let modes = records.first().map_or(1, |r| r.xi.len());
    let mut columns = Vec::new();
    for m in 0..modes {
        columns.push(format!("re_xi_{m}"));
        columns.push(format!("im_xi_{m}"));
    }
    columns.extend(["theta", "M", "est_sx", "est_sy", "re_chi", "im_chi", "seed"].map(String::from));
    let rows = records.iter().map(|r| {
        let mut row: Vec<String> = r.xi.as_slice().iter().flat_map(|z| [f(z.re), f(z.im)]).collect();
        row.extend([f(r.theta), r.shots.to_string(), f(r.est_sx), f(r.est_sy), f(r.chi_est.re), f(r.chi_est.im), r.seed.to_string()]);
        row
    });
    write_table(out, "readout", &[("config", config.clone())], &columns, rows)
}

pub fn write_chi_grid<W: Write + ?Sized>(out: &mut W, config: &Value, grid: &ChiGrid) -> Result<()> {
    let mut columns = Vec::new();
    for m in 0..grid.modes() {
        columns.push(format!("re_xi_{m}"));
        columns.push(format!("im_xi_{m}"));
    }
    columns.extend(["re_chi", "im_chi", "present", "stderr"].map(String::from));
    let rows = (0..grid.len()).map(|i| {
        let mut row: Vec<String> = grid.point(i).iter().flat_map(|z| [f(z.re), f(z.im)]).collect();
        let v = grid.values()[i];
        let present = grid.present()[i];
        row.push(f(v.re));
        row.push(f(v.im));
        row.push(u8::from(present).to_string());
        row.push(f(grid.stderr().map_or(0.0, |s| s[i])));
        row
    });
    let meta = [
        ("config", config.clone()),
        ("axes", serde_json::to_value(grid.axes())?),
        ("provenance", serde_json::to_value(grid.provenance())?),
    ];
    write_table(out, "chi-grid", &meta, &columns, rows)
}

pub fn read_chi_grid(text: &str) -> Result<ChiGrid> {
    let t = read_table(text)?;
    if t.kind != "chi-grid" {
        return Err(Error::InvalidGrid(format!("expected a chi-grid file, found {:?}", t.kind)));
    }
    let axes: Vec<Axis> = t.meta_as("axes")?;
    let provenance: Provenance = t.meta_as("provenance")?;
    let (re, im, pr, se) = (t.column("re_chi")?, t.column("im_chi")?, t.column("present")?, t.column("stderr")?);
    let values = t.rows.iter().map(|r| C64::new(r[re], r[im])).collect();
    let present = t.rows.iter().map(|r| r[pr] != 0.0).collect();
    let stderr = matches!(provenance, Provenance::Sampled { .. }).then(|| t.rows.iter().map(|r| r[se]).collect());
    ChiGrid::new(axes, values, present, stderr, provenance)
}

pub fn write_wigner<W: Write + ?Sized>(out: &mut W, config: &Value, w: &WignerGrid) -> Result<()> {
    let shape = w.shape();
    let mut columns = Vec::new();
    for m in 0..w.modes() {
        columns.push(format!("x_{m}"));
        columns.push(format!("p_{m}"));
    }
    columns.push("W".into());
    let rows = w.values.iter().enumerate().map(|(i, v)| {
        let idx = crate::tomography::unravel(i, &shape);
        let mut row: Vec<String> = idx.iter().zip(&w.axes).map(|(&k, a)| f(a.value(k))).collect();
        row.push(f(*v));
        row
    });
    let meta = [
        ("config", config.clone()),
        ("axes", serde_json::to_value(&w.axes)?),
        ("normalization", Value::from(w.normalization)),
        ("imag_residual", Value::from(w.imag_residual)),
    ];
    write_table(out, "wigner", &meta, &columns, rows)
}

pub fn read_wigner(text: &str) -> Result<WignerGrid> {
    let t = read_table(text)?;
    if t.kind != "wigner" {
        return Err(Error::InvalidGrid(format!("expected a wigner file, found {:?}", t.kind)));
    }
    let col = t.column("W")?;
    Ok(WignerGrid {
        axes: t.meta_as("axes")?,
        values: t.rows.iter().map(|r| r[col]).collect(),
        normalization: t.meta_as("normalization")?,
        imag_residual: t.meta_as("imag_residual")?,
    })
}
