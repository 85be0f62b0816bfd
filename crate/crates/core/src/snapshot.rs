//! Field snapshot I/O.
//!
//! Self-describing binary format: magic bytes, version, dims (n,
//! components), then little-endian 64-bit floats in row-major order per
//! component, plus a JSON sidecar (`<path>.json`) with grid and flag
//! metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::grid::Grid;

const MAGIC: &[u8; 4] = b"NSRF";
const VERSION: u32 = 1;

/// Sidecar metadata for a snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub schema_version: u32,
    /// "scalar" | "vector" | "sym_tensor"
    pub kind: String,
    pub n: usize,
    pub oversample: usize,
    pub components: usize,
    pub bandwidth: usize,
    pub traceless: bool,
    pub zero_mean: bool,
}

fn write_raw(path: &Path, meta: &SnapshotMeta, comps: &[Array2<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(meta.n as u32).to_le_bytes())?;
    w.write_all(&(meta.components as u32).to_le_bytes())?;
    for c in comps {
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    let sidecar = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    serde_json::to_writer_pretty(BufWriter::new(File::create(sidecar)?), meta)
        .map_err(|e| EngineError::Format(e.to_string()))?;
    Ok(())
}

fn read_raw(path: &Path) -> Result<(SnapshotMeta, Vec<Array2<f64>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(EngineError::Format("bad magic bytes".into()));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let version = u32::from_le_bytes(buf4);
    if version != VERSION {
        return Err(EngineError::Format(format!("unsupported version {version}")));
    }
    r.read_exact(&mut buf4)?;
    let n = u32::from_le_bytes(buf4) as usize;
    r.read_exact(&mut buf4)?;
    let ncomp = u32::from_le_bytes(buf4) as usize;
    let mut comps = Vec::with_capacity(ncomp);
    let mut buf8 = [0u8; 8];
    for _ in 0..ncomp {
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.read_exact(&mut buf8)?;
            data.push(f64::from_le_bytes(buf8));
        }
        comps.push(
            Array2::from_shape_vec((n, n), data)
                .map_err(|e| EngineError::Format(e.to_string()))?,
        );
    }
    let sidecar = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let meta: SnapshotMeta = serde_json::from_reader(BufReader::new(File::open(sidecar)?))
        .map_err(|e| EngineError::Format(e.to_string()))?;
    if meta.n != n || meta.components != ncomp {
        return Err(EngineError::Format("sidecar disagrees with binary header".into()));
    }
    Ok((meta, comps))
}

fn meta_for(kind: &str, grid: Grid, comps: usize, bw: usize, traceless: bool, zm: bool) -> SnapshotMeta {
    SnapshotMeta {
        schema_version: VERSION,
        kind: kind.into(),
        n: grid.n(),
        oversample: grid.oversample(),
        components: comps,
        bandwidth: bw,
        traceless,
        zero_mean: zm,
    }
}

/// Write a scalar field snapshot.
pub fn write_scalar(path: impl AsRef<Path>, f: &ScalarField) -> Result<()> {
    let meta = meta_for("scalar", f.grid(), 1, f.bandwidth(), false, f.mean().abs() < 1e-14);
    write_raw(path.as_ref(), &meta, &[f.values()])
}

/// Read a scalar field snapshot.
pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarField> {
    let (meta, comps) = read_raw(path.as_ref())?;
    if meta.kind != "scalar" || comps.len() != 1 {
        return Err(EngineError::Format("expected a scalar snapshot".into()));
    }
    let grid = Grid::new(meta.n, meta.oversample)?;
    let field = ScalarField::from_values(grid, &comps[0]);
    let (field, _) = field.truncated(meta.bandwidth);
    Ok(field)
}

/// Write a vector field snapshot.
pub fn write_vector(path: impl AsRef<Path>, v: &VectorField) -> Result<()> {
    let m = v.mean();
    let zm = m[0].abs().max(m[1].abs()) < 1e-14;
    let meta = meta_for("vector", v.grid(), 2, v.bandwidth(), false, zm);
    write_raw(path.as_ref(), &meta, &[v.x().values(), v.y().values()])
}

/// Read a vector field snapshot.
pub fn read_vector(path: impl AsRef<Path>) -> Result<VectorField> {
    let (meta, comps) = read_raw(path.as_ref())?;
    if meta.kind != "vector" || comps.len() != 2 {
        return Err(EngineError::Format("expected a vector snapshot".into()));
    }
    let grid = Grid::new(meta.n, meta.oversample)?;
    let x = ScalarField::from_values(grid, &comps[0]).truncated(meta.bandwidth).0;
    let y = ScalarField::from_values(grid, &comps[1]).truncated(meta.bandwidth).0;
    Ok(VectorField::from_comps(x, y))
}

/// Write a symmetric tensor field snapshot (components xx, xy, yy).
pub fn write_sym_tensor(path: impl AsRef<Path>, t: &SymTensorField) -> Result<()> {
    let m = t.mean();
    let zm = m.iter().all(|v| v.abs() < 1e-14);
    let traceless = t.traceless_defect() < 1e-10;
    let meta = meta_for("sym_tensor", t.grid(), 3, t.bandwidth(), traceless, zm);
    write_raw(
        path.as_ref(),
        &meta,
        &[t.xx().values(), t.xy().values(), t.yy().values()],
    )
}

/// Read a symmetric tensor field snapshot.
pub fn read_sym_tensor(path: impl AsRef<Path>) -> Result<SymTensorField> {
    let (meta, comps) = read_raw(path.as_ref())?;
    if meta.kind != "sym_tensor" || comps.len() != 3 {
        return Err(EngineError::Format("expected a sym_tensor snapshot".into()));
    }
    let grid = Grid::new(meta.n, meta.oversample)?;
    let xx = ScalarField::from_values(grid, &comps[0]).truncated(meta.bandwidth).0;
    let xy = ScalarField::from_values(grid, &comps[1]).truncated(meta.bandwidth).0;
    let yy = ScalarField::from_values(grid, &comps[2]).truncated(meta.bandwidth).0;
    Ok(SymTensorField::from_comps(xx, xy, yy))
}
