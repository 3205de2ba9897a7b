//! CSV emission. Floats are written with 17 significant digits.

use std::fs;
use std::path::Path;

use vpem_core::refpoint::Surface;

use crate::error::Result;
use crate::pipeline::{CoefficientRow, Dominance, Record, ResolvedReference};

/// Bumped whenever a column is added, removed or reordered.
pub const CSV_SCHEMA: u32 = 1;

pub const RECORD_COLUMNS: [&str; 9] = [
    "phi",
    "delta",
    "lambda_dominant",
    "n",
    "phi0",
    "bias_sq_exact",
    "mse_formula",
    "est_sq_sampled",
    "seed",
];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            num(r.phi),
            num(r.delta),
            num(r.lambda_dominant),
            r.n.to_string(),
            num(r.phi0),
            num(r.bias_sq_exact),
            num(r.mse_formula),
            opt(r.est_sq_sampled.map(num)),
            opt(r.seed),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dominance(path: &Path, rows: &[Dominance]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "phi",
        "delta",
        "lambda_dominant",
        "n",
        "phi0_error",
        "phi0_mitigated",
        "bias_sq_error",
        "bias_sq_mitigated",
        "smaller",
    ])?;
    for d in rows {
        w.write_record([
            num(d.phi),
            num(d.delta),
            num(d.lambda_dominant),
            d.n.to_string(),
            num(d.phi0_error),
            num(d.phi0_mitigated),
            num(d.bias_sq_error),
            num(d.bias_sq_mitigated),
            d.smaller().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are strengths, columns are reference points, cells are `log10` of the
/// objective; masked cells are empty.
pub fn write_surface(path: &Path, surface: &Surface) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["delta\\phi0".to_string()];
    header.extend(surface.phi0.iter().map(|&p| num(p)));
    w.write_record(&header)?;
    for (d, row) in surface.delta.iter().zip(&surface.values) {
        let mut line = vec![num(*d)];
        line.extend(row.iter().map(|v| match v {
            Some(x) if *x > 0.0 => num(x.log10()),
            Some(_) => "-inf".to_string(),
            None => String::new(),
        }));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_references(path: &Path, refs: &[ResolvedReference]) -> Result<()> {
    use vpem_core::refpoint::Prior;
    let mut w = writer(path)?;
    w.write_record(["series", "n", "prior", "delta_lo", "delta_hi", "phi0", "objective", "masked"])?;
    for r in refs {
        let (prior, lo, hi) = match r.prior {
            None => ("fixed", None, None),
            Some(Prior::PointMass(d)) => ("point", Some(d), Some(d)),
            Some(Prior::Uniform(a, b)) => ("uniform", Some(a), Some(b)),
        };
        w.write_record([
            r.series.to_string(),
            r.n.to_string(),
            prior.to_string(),
            opt(lo.map(num)),
            opt(hi.map(num)),
            num(r.phi0),
            opt(r.optimum.map(|o| num(o.value))),
            opt(r.optimum.map(|o| o.masked)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coefficients(path: &Path, rows: &[CoefficientRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["phi0", "quantity", "n", "k", "value"])?;
    for r in rows {
        w.write_record([num(r.phi0), r.quantity.to_string(), opt(r.n), r.k.to_string(), num(r.value)])?;
    }
    w.flush()?;
    Ok(())
}
