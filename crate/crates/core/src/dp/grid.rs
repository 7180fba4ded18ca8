//! Binary and text persistence for dense `f64` grids.
//!
//! Binary layout, all integers little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `RLBGRID1`                        |
//! | 8      | 4    | kind (0 = value table, 1 = diff table)  |
//! | 12     | 4    | reserved, zero                          |
//! | 16     | 8    | rows (`T + 1`)                          |
//! | 24     | 8    | cols (`B + 1` for values, `B` for diffs)|
//! | 32     | 8    | FNV-1a 64 checksum of the payload bytes |
//! | 40     | 8·n  | row-major `f64` payload                 |

use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};

use crate::error::{format_err, Result};

const MAGIC: &[u8; 8] = b"RLBGRID1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Value,
    Diff,
}

impl GridKind {
    fn tag(self) -> u32 {
        match self {
            GridKind::Value => 0,
            GridKind::Diff => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            GridKind::Value => "value",
            GridKind::Diff => "diff",
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub(crate) fn write_binary<W: Write>(
    mut w: W,
    kind: GridKind,
    rows: usize,
    cols: usize,
    data: &[f64],
) -> Result<()> {
    debug_assert_eq!(rows * cols, data.len());
    let mut payload = Vec::with_capacity(data.len() * 8);
    for x in data {
        payload.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(MAGIC)?;
    w.write_all(&kind.tag().to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    w.write_all(&fnv1a(&payload).to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn read_binary<R: Read>(mut r: R, kind: GridKind) -> Result<(usize, usize, Vec<f64>)> {
    let mut head = [0u8; 40];
    r.read_exact(&mut head)?;
    if &head[..8] != MAGIC {
        return Err(format_err("grid file", "bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    if u32_at(8) != kind.tag() {
        return Err(format_err("grid file", format!("expected a {} grid", kind.name())));
    }
    let rows = u64_at(16) as usize;
    let cols = u64_at(24) as usize;
    let checksum = u64_at(32);
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| format_err("grid file", "dimension overflow"))?;
    let mut payload = vec![0u8; n * 8];
    r.read_exact(&mut payload)?;
    if fnv1a(&payload) != checksum {
        return Err(format_err("grid file", "checksum mismatch"));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, data))
}

/// Debug export: a `# <kind> rows=R cols=C` header, then one row per line.
pub(crate) fn write_text<W: Write>(
    mut w: W,
    kind: GridKind,
    rows: usize,
    cols: usize,
    data: &[f64],
) -> Result<()> {
    writeln!(w, "# {} rows={rows} cols={cols}", kind.name())?;
    let mut line = String::new();
    for row in data.chunks(cols.max(1)).take(rows) {
        line.clear();
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{x}");
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_text<R: BufRead>(r: R, kind: GridKind) -> Result<(usize, usize, Vec<f64>)> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| format_err("grid text", "empty file"))??;
    let mut rows = None;
    let mut cols = None;
    let mut parts = head.trim_start_matches('#').split_whitespace();
    if parts.next() != Some(kind.name()) {
        return Err(format_err("grid text", format!("expected a {} grid", kind.name())));
    }
    for p in parts {
        if let Some(v) = p.strip_prefix("rows=") {
            rows = v.parse::<usize>().ok();
        } else if let Some(v) = p.strip_prefix("cols=") {
            cols = v.parse::<usize>().ok();
        }
    }
    let (rows, cols) = rows
        .zip(cols)
        .ok_or_else(|| format_err("grid text", "header lacks rows/cols"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines.take(rows) {
        for tok in line?.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| format_err("grid text", format!("bad value {tok:?}")))?,
            );
        }
    }
    if data.len() != rows * cols {
        return Err(format_err("grid text", "cell count does not match header"));
    }
    Ok((rows, cols, data))
}
