use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ccl_core::error::Result;
use ccl_core::verify::{ContactRecord, VerificationReport};
use serde::Serialize;

use crate::config::Format;

/// Writes reports to `path`, or stdout when `path` is `None`.
pub fn emit_report(reports: &[VerificationReport], format: Format, path: Option<&Path>) -> io::Result<()> {
    with_writer(path, |w| match format {
        Format::Json => write_json(w, reports),
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for r in reports {
                csv.serialize(ReportRow::from(r))?;
            }
            if reports.is_empty() {
                csv.write_record(ReportRow::HEADER)?;
            }
            csv.flush()
        }
    })
}

/// Writes contact records; directions whose contact failed keep their slot.
pub fn emit_sweep(records: &[Result<ContactRecord>], format: Format, path: Option<&Path>) -> io::Result<()> {
    with_writer(path, |w| match format {
        Format::Json => {
            let items: Vec<SweepItem> = records
                .iter()
                .enumerate()
                .map(|(i, r)| match r {
                    Ok(r) => SweepItem::Record(r),
                    Err(e) => SweepItem::Error { index: i, error: e.to_string() },
                })
                .collect();
            write_json(w, &items)
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for (i, r) in records.iter().enumerate() {
                csv.serialize(SweepRow::new(i, r))?;
            }
            csv.flush()
        }
    })
}

fn with_writer(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn write_json<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

#[derive(Serialize)]
#[serde(untagged)]
enum SweepItem<'a> {
    Record(&'a ContactRecord),
    Error { index: usize, error: String },
}

#[derive(Serialize)]
struct ReportRow<'a> {
    check: &'a str,
    space: &'a str,
    surface: &'a str,
    grid: &'a str,
    kappa: f64,
    diameter: Option<f64>,
    lhs: Option<f64>,
    rhs: Option<f64>,
    margin: Option<f64>,
    pass: bool,
    seed: Option<u64>,
    runtime_ms: u64,
}

impl ReportRow<'_> {
    const HEADER: [&'static str; 12] =
        ["check", "space", "surface", "grid", "kappa", "diameter", "lhs", "rhs", "margin", "pass", "seed", "runtime_ms"];
}

impl<'a> From<&'a VerificationReport> for ReportRow<'a> {
    fn from(r: &'a VerificationReport) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        ReportRow {
            check: &r.check,
            space: &r.space,
            surface: r.surface.as_deref().unwrap_or(""),
            grid: r.grid.as_deref().unwrap_or(""),
            kappa: r.kappa,
            diameter: r.diameter,
            lhs: finite(r.lhs),
            rhs: finite(r.rhs),
            margin: finite(r.margin),
            pass: r.pass,
            seed: r.seed,
            runtime_ms: r.runtime_ms,
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    v: String,
    level: Option<f64>,
    refined_level: Option<f64>,
    contact_nodes: usize,
    points: usize,
    best_gauss_residual: Option<f64>,
    max_normal_gap: Option<f64>,
    min_support_floor: Option<f64>,
    min_convexity_floor: Option<f64>,
    error: String,
}

impl SweepRow {
    fn new(index: usize, r: &Result<ContactRecord>) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        match r {
            Ok(r) => {
                let fold = |f: fn(&ccl_core::verify::ContactPoint) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
                    finite(r.points.iter().map(f).fold(init, pick))
                };
                SweepRow {
                    index,
                    v: r.v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"),
                    level: finite(r.level),
                    refined_level: finite(r.refined_level),
                    contact_nodes: r.nodes.len(),
                    points: r.points.len(),
                    best_gauss_residual: finite(r.best_gauss_residual()),
                    max_normal_gap: fold(|p| p.normal_gap, f64::NEG_INFINITY, f64::max),
                    min_support_floor: fold(|p| p.support_floor, f64::INFINITY, f64::min),
                    min_convexity_floor: fold(|p| p.convexity_floor, f64::INFINITY, f64::min),
                    error: r.failures.join("; "),
                }
            }
            Err(e) => SweepRow {
                index,
                v: String::new(),
                level: None,
                refined_level: None,
                contact_nodes: 0,
                points: 0,
                best_gauss_residual: None,
                max_normal_gap: None,
                min_support_floor: None,
                min_convexity_floor: None,
                error: e.to_string(),
            },
        }
    }
}
