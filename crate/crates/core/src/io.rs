//! Field and coefficient files.
//!
//! JSON fields: `{"d", "nodes_per_axis", "lengths"?, "m", "values"}` with
//! `values` interleaved `[re, im, ...]` in node-major order. Binary fields
//! start with the magic `LPFIELD1`, then `u32 d`, `u32 m`, `d` node counts
//! as `u32`, `d` box lengths as `f64`, and the values as `(re, im)` pairs of
//! `f64`, all little-endian. Coefficients use `{"d", "m", "cells_per_axis",
//! "blocks"}` (JSON) or the magic `LPCOEF01` (binary). The format follows
//! the file extension: `.json` or anything else for binary.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientField;
use crate::error::{LabError, Result};
use crate::field::VectorField;
use crate::grid::Grid;

pub const FIELD_MAGIC: &[u8; 8] = b"LPFIELD1";
pub const COEF_MAGIC: &[u8; 8] = b"LPCOEF01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub d: usize,
    pub nodes_per_axis: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    pub m: usize,
    pub values: Vec<f64>,
}

/// Coefficients per cell: `c_11, c_12, ..., c_dd`, each an `m x m`
/// row-major block of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDoc {
    pub d: usize,
    pub m: usize,
    pub cells_per_axis: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn interleave(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(raw: &[f64]) -> Result<Vec<Complex64>> {
    if !raw.len().is_multiple_of(2) {
        return Err(LabError::Format("odd number of real components".into()));
    }
    Ok(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

impl FieldDoc {
    pub fn from_field(u: &VectorField) -> Self {
        let g = u.grid();
        FieldDoc {
            d: g.dim(),
            nodes_per_axis: g.nodes_per_axis().to_vec(),
            lengths: Some(g.lengths().to_vec()),
            m: u.m(),
            values: interleave(u.values()),
        }
    }

    pub fn into_field(self) -> Result<VectorField> {
        if self.nodes_per_axis.len() != self.d {
            return Err(LabError::Format("nodes_per_axis must have d entries".into()));
        }
        let grid = match &self.lengths {
            Some(l) => Grid::new(&self.nodes_per_axis, l)?,
            None => Grid::unit(&self.nodes_per_axis)?,
        };
        VectorField::new(Arc::new(grid), self.m, deinterleave(&self.values)?)
    }
}

fn push_u32(buf: &mut Vec<u8>, x: usize) -> Result<()> {
    let v = u32::try_from(x).map_err(|_| LabError::Format(format!("{x} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(e) => {
                let s = &self.buf[self.pos..e];
                self.pos = e;
                Ok(s)
            }
            None => Err(LabError::Format("unexpected end of file".into())),
        }
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let bytes = n
            .checked_mul(16)
            .ok_or_else(|| LabError::Format("length overflow".into()))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(LabError::Format("trailing bytes".into()));
        }
        Ok(())
    }
}

fn header(buf: &mut Vec<u8>, magic: &[u8; 8], d: usize, m: usize, counts: &[usize], lengths: &[f64]) -> Result<()> {
    buf.extend_from_slice(magic);
    push_u32(buf, d)?;
    push_u32(buf, m)?;
    for &n in counts {
        push_u32(buf, n)?;
    }
    for l in lengths {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    Ok(())
}

fn push_values(buf: &mut Vec<u8>, values: &[Complex64]) {
    for z in values {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
}

fn read_header(r: &mut Reader<'_>, magic: &[u8; 8]) -> Result<(usize, usize, Vec<usize>, Vec<f64>)> {
    if r.take(8)? != magic {
        return Err(LabError::Format("bad magic".into()));
    }
    let d = r.u32()?;
    if d == 0 || d > crate::grid::MAX_DIM {
        return Err(LabError::Format(format!("unsupported dimension {d}")));
    }
    let m = r.u32()?;
    let counts = (0..d).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let lengths = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    Ok((d, m, counts, lengths))
}

pub fn encode_field_binary(u: &VectorField) -> Result<Vec<u8>> {
    let g = u.grid();
    let mut buf = Vec::with_capacity(40 + 16 * u.values().len());
    header(&mut buf, FIELD_MAGIC, g.dim(), u.m(), g.nodes_per_axis(), g.lengths())?;
    push_values(&mut buf, u.values());
    Ok(buf)
}

pub fn decode_field_binary(bytes: &[u8]) -> Result<VectorField> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (_, m, counts, lengths) = read_header(&mut r, FIELD_MAGIC)?;
    let grid = Grid::new(&counts, &lengths)?;
    let n = grid
        .node_count()
        .checked_mul(m)
        .ok_or_else(|| LabError::Format("length overflow".into()))?;
    let values = r.complex(n)?;
    r.finish()?;
    VectorField::new(Arc::new(grid), m, values)
}

pub fn encode_field(u: &VectorField, json: bool) -> Result<Vec<u8>> {
    if json {
        Ok(serde_json::to_vec(&FieldDoc::from_field(u))?)
    } else {
        encode_field_binary(u)
    }
}

pub fn decode_field(bytes: &[u8], json: bool) -> Result<VectorField> {
    if json {
        serde_json::from_slice::<FieldDoc>(bytes)?.into_field()
    } else {
        decode_field_binary(bytes)
    }
}

pub fn read_field(path: &Path) -> Result<VectorField> {
    decode_field(&fs::read(path)?, is_json(path))
}

pub fn write_field(path: &Path, u: &VectorField) -> Result<()> {
    fs::write(path, encode_field(u, is_json(path))?)?;
    Ok(())
}

impl CoefficientDoc {
    pub fn from_coefficients(c: &CoefficientField) -> Self {
        let g = c.grid();
        let (d, m) = (g.dim(), c.m());
        let blocks = (0..g.cell_count())
            .map(|cell| {
                (0..d)
                    .flat_map(|k| (0..d).map(move |l| (k, l)))
                    .map(|(k, l)| {
                        (0..m)
                            .flat_map(|a| (0..m).map(move |b| (a, b)))
                            .map(|(a, b)| {
                                let z = c.entry(cell, k, l, a, b);
                                [z.re, z.im]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        CoefficientDoc {
            d,
            m,
            cells_per_axis: g.cells_per_axis(),
            lengths: Some(g.lengths().to_vec()),
            blocks,
        }
    }

    pub fn into_coefficients(self, grid: &Arc<Grid>) -> Result<CoefficientField> {
        let (d, m) = (self.d, self.m);
        check_layout(grid, d, &self.cells_per_axis)?;
        if let Some(l) = &self.lengths {
            if l.as_slice() != grid.lengths() {
                return Err(LabError::shape("coefficient box lengths differ from the grid"));
            }
        }
        if self.blocks.len() != grid.cell_count() {
            return Err(LabError::shape("one entry per cell required"));
        }
        let dm = d * m;
        let mut flat = vec![Complex64::new(0.0, 0.0); grid.cell_count() * dm * dm];
        for (cell, kl) in self.blocks.iter().enumerate() {
            if kl.len() != d * d {
                return Err(LabError::shape("each cell needs d^2 blocks"));
            }
            for (j, blk) in kl.iter().enumerate() {
                if blk.len() != m * m {
                    return Err(LabError::shape("each block needs m^2 entries"));
                }
                let (k, l) = (j / d, j % d);
                for (e, z) in blk.iter().enumerate() {
                    let (a, b) = (e / m, e % m);
                    flat[cell * dm * dm + (k * m + a) * dm + l * m + b] = Complex64::new(z[0], z[1]);
                }
            }
        }
        CoefficientField::new(grid.clone(), m, flat)
    }
}

fn check_layout(grid: &Grid, d: usize, cells: &[usize]) -> Result<()> {
    if d != grid.dim() || cells != grid.cells_per_axis().as_slice() {
        return Err(LabError::shape(format!(
            "coefficient file is for d = {d}, cells {cells:?}; grid has d = {}, cells {:?}",
            grid.dim(),
            grid.cells_per_axis()
        )));
    }
    Ok(())
}

pub fn encode_coefficients_binary(c: &CoefficientField) -> Result<Vec<u8>> {
    let g = c.grid();
    let mut buf = Vec::new();
    header(&mut buf, COEF_MAGIC, g.dim(), c.m(), &g.cells_per_axis(), g.lengths())?;
    push_values(&mut buf, c.raw_blocks());
    Ok(buf)
}

pub fn decode_coefficients_binary(bytes: &[u8], grid: &Arc<Grid>) -> Result<CoefficientField> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (d, m, cells, lengths) = read_header(&mut r, COEF_MAGIC)?;
    check_layout(grid, d, &cells)?;
    if lengths.as_slice() != grid.lengths() {
        return Err(LabError::shape("coefficient box lengths differ from the grid"));
    }
    let dm = d * m;
    let values = r.complex(grid.cell_count() * dm * dm)?;
    r.finish()?;
    CoefficientField::new(grid.clone(), m, values)
}

pub fn read_coefficients(path: &Path, grid: &Arc<Grid>) -> Result<CoefficientField> {
    let bytes = fs::read(path)?;
    if is_json(path) {
        serde_json::from_slice::<CoefficientDoc>(&bytes)?.into_coefficients(grid)
    } else {
        decode_coefficients_binary(&bytes, grid)
    }
}

pub fn write_coefficients(path: &Path, c: &CoefficientField) -> Result<()> {
    let bytes = if is_json(path) {
        serde_json::to_vec(&CoefficientDoc::from_coefficients(c))?
    } else {
        encode_coefficients_binary(c)?
    };
    fs::write(path, bytes)?;
    Ok(())
}
