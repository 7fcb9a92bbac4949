//! File formats.
//!
//! GLF1 field dump: text header lines `GLF1`, `R=<float>`, `h=<float>`,
//! `dims=<nx> <ny> <nz>`, then raw little-endian f64 pairs (u₁, u₂) in
//! row-major node order (index = (i·ny + j)·nz + k, i slowest).
//!
//! PHI1 phase export: CSV with columns vertex_id, x, y, z, phi.
//!
//! All floating-point text output uses 17 significant digits so values
//! round-trip exactly.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::analysis::{BlowdownReport, DegreeResult};
use crate::boundary::PhaseField;
use crate::energy::DensityField;
use crate::geometry::{ComplexField, OctantGeometry};
use crate::solver::IterationRow;
use crate::{Error, Result};

/// 17 significant digits: enough for exact f64 round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_glf1(path: &Path, field: &ComplexField) -> Result<()> {
    let geom = field.geometry();
    let [nx, ny, nz] = geom.dims();
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "GLF1")?;
    writeln!(w, "R={}", fmt_f64(geom.radius()))?;
    writeln!(w, "h={}", fmt_f64(geom.spacing()))?;
    writeln!(w, "dims={nx} {ny} {nz}")?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a real scalar field (for example an energy density) as GLF1 with
/// zero imaginary parts.
pub fn write_glf1_density(path: &Path, density: &DensityField) -> Result<()> {
    let geom = density.geometry().clone();
    let mut field = ComplexField::zeros(geom);
    for (slot, &v) in field.values_mut().iter_mut().zip(density.values()) {
        *slot = Complex64::new(v, 0.0);
    }
    write_glf1(path, &field)
}

pub fn read_glf1(path: &Path) -> Result<ComplexField> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    let mut lines = 0;
    let mut r = None;
    let mut h = None;
    let mut dims = None;
    while lines < 4 {
        header.clear();
        let n = reader.read_line(&mut header)?;
        if n == 0 {
            return Err(Error::Format("truncated GLF1 header".into()));
        }
        let line = header.trim_end();
        match lines {
            0 => {
                if line != "GLF1" {
                    return Err(Error::Format(format!(
                        "bad magic line '{line}', expected GLF1"
                    )));
                }
            }
            1 => {
                r = Some(parse_kv(line, "R")?);
            }
            2 => {
                h = Some(parse_kv(line, "h")?);
            }
            3 => {
                let rest = line
                    .strip_prefix("dims=")
                    .ok_or_else(|| Error::Format(format!("bad dims line '{line}'")))?;
                let parts: Vec<usize> = rest
                    .split_whitespace()
                    .map(|s| {
                        s.parse::<usize>()
                            .map_err(|e| Error::Format(format!("bad dims '{line}': {e}")))
                    })
                    .collect::<Result<_>>()?;
                if parts.len() != 3 {
                    return Err(Error::Format(format!("bad dims line '{line}'")));
                }
                dims = Some([parts[0], parts[1], parts[2]]);
            }
            _ => unreachable!(),
        }
        lines += 1;
    }
    let (r, h, dims) = (r.unwrap(), h.unwrap(), dims.unwrap());
    let geom = Arc::new(OctantGeometry::build(r, h)?);
    if geom.dims() != dims {
        return Err(Error::Format(format!(
            "dims {dims:?} do not match geometry dims {:?} for R={r}, h={h}",
            geom.dims()
        )));
    }
    let mut field = ComplexField::zeros(geom.clone());
    let mut buf = vec![0u8; geom.node_count() * 16];
    reader.read_exact(&mut buf).map_err(|e| {
        Error::Format(format!("truncated GLF1 payload: {e}"))
    })?;
    for (idx, chunk) in buf.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        field.values_mut()[idx] = Complex64::new(re, im);
    }
    field.validate()?;
    Ok(field)
}

fn parse_kv(line: &str, key: &str) -> Result<f64> {
    let rest = line
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::Format(format!("expected '{key}=<float>', got '{line}'")))?;
    rest.trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("bad float in '{line}': {e}")))
}

pub fn write_phi1(path: &Path, phase: &PhaseField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "vertex_id,x,y,z,phi")?;
    for (id, v) in phase.mesh().vertices().iter().enumerate() {
        writeln!(
            w,
            "{id},{},{},{},{}",
            fmt_f64(v[0]),
            fmt_f64(v[1]),
            fmt_f64(v[2]),
            fmt_f64(phase.phi()[id])
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Solver trace: CSV columns iter, energy, grad_norm, step_len.
pub fn write_solve_report(path: &Path, trace: &[IterationRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "iter,energy,grad_norm,step_len")?;
    for row in trace {
        writeln!(
            w,
            "{},{},{},{}",
            row.iter,
            fmt_f64(row.energy),
            fmt_f64(row.grad_norm),
            fmt_f64(row.step_len)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Energy profile: CSV columns r, E, E_over_rlogr.
pub fn write_energy_profile(path: &Path, radii: &[f64], energies: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "r,E,E_over_rlogr")?;
    for (&r, &e) in radii.iter().zip(energies) {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(r),
            fmt_f64(e),
            fmt_f64(e / (r * r.ln()))
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Competitor table: CSV columns r, E, dEdr.
pub fn write_competitor_table(
    path: &Path,
    rows: &[(f64, f64, f64)],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "r,E,dEdr")?;
    for &(r, e, dedr) in rows {
        writeln!(w, "{},{},{}", fmt_f64(r), fmt_f64(e), fmt_f64(dedr))?;
    }
    w.flush()?;
    Ok(())
}

/// The analyze artifact.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AnalysisReport {
    pub zero_set_hausdorff: f64,
    pub degrees: Vec<DegreeJson>,
    pub fit_a: f64,
    pub fit_b: f64,
    pub clearing_out_max_dx: f64,
    pub blowdown: Vec<BlowdownJson>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DegreeJson {
    pub center: [f64; 3],
    pub radius: f64,
    pub axis: String,
    pub winding: i64,
    pub residual: f64,
    pub min_modulus: f64,
}

impl From<&DegreeResult> for DegreeJson {
    fn from(d: &DegreeResult) -> Self {
        Self {
            center: d.center,
            radius: d.radius,
            axis: format!("{:?}", d.axis),
            winding: d.winding,
            residual: d.residual,
            min_modulus: d.min_modulus,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BlowdownJson {
    pub r: f64,
    pub mass: f64,
    pub tube_fraction: f64,
}

impl From<&BlowdownReport> for Vec<BlowdownJson> {
    fn from(report: &BlowdownReport) -> Self {
        report
            .rows
            .iter()
            .map(|row| BlowdownJson {
                r: row.r,
                mass: row.mass,
                tube_fraction: row.tube_fraction,
            })
            .collect()
    }
}

pub fn write_analysis_json(path: &Path, report: &AnalysisReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Format(format!("analysis serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_analysis_json(path: &Path) -> Result<AnalysisReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("bad analysis file: {e}")))
}
