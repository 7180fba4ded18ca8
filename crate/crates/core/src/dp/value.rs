use std::io::{BufRead, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::grid::{self, GridKind};
use crate::error::{Error, Result};
use crate::landscape::LandscapeModel;

/// `V(t, b)` for `t in 0..=t_max`, `b in 0..=b_max`, stored row-major by `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    t_max: usize,
    b_max: u64,
    values: Vec<f64>,
}

/// `D(t, b) = V(t, b + 1) - V(t, b)` for `t in 0..=t_max`, `b in 0..b_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffTable {
    t_max: usize,
    b_max: u64,
    diffs: Vec<f64>,
}

/// State handed to a table-backed bidder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidDecisionInput {
    /// Remaining auctions, counting the current one.
    pub t: usize,
    /// Remaining budget.
    pub b: u64,
    /// pCTR of the current request.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Refuse to allocate a table larger than this many bytes.
    pub max_bytes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_bytes: 4 << 30,
        }
    }
}

/// `g(δ) = θ + V(t-1, b-δ) - V(t-1, b)`: the marginal gain of winning at price δ.
#[inline]
pub fn g_value(theta: f64, v_prev_after_win: f64, v_prev_keep: f64) -> f64 {
    (theta + v_prev_after_win) - v_prev_keep
}

/// One cell of the recursion: `V(t-1, b)` plus the best non-negative prefix of
/// `Σ m(δ) g(δ)`. `g` is nonincreasing in δ, so the prefix ends at the first
/// negative term.
#[inline]
fn cell_value(prev: &[f64], pdf: &[f64], theta: f64, b: usize) -> f64 {
    let keep = prev[b];
    let top = b.min(pdf.len() - 1);
    let mut gain = 0.0;
    for (d, &m) in pdf[..=top].iter().enumerate() {
        let g = g_value(theta, prev[b - d], keep);
        if g < 0.0 {
            break;
        }
        gain += m * g;
    }
    keep + gain
}

pub fn solve_value_table(
    landscape: &LandscapeModel,
    theta_avg: f64,
    t_max: usize,
    b_max: u64,
) -> Result<ValueTable> {
    solve_value_table_with(landscape, theta_avg, t_max, b_max, &SolveOptions::default())
}

/// Fill the value table row by row. Cells within a row are independent and
/// computed in parallel; the result does not depend on the thread count.
pub fn solve_value_table_with(
    landscape: &LandscapeModel,
    theta_avg: f64,
    t_max: usize,
    b_max: u64,
    opts: &SolveOptions,
) -> Result<ValueTable> {
    if t_max < 1 {
        return Err(Error::InvalidArgument("episode length must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&theta_avg) {
        return Err(Error::InvalidArgument(format!("theta_avg {theta_avg} outside [0, 1]")));
    }
    let rows = t_max + 1;
    let cols = usize::try_from(b_max)
        .ok()
        .and_then(|b| b.checked_add(1))
        .ok_or_else(|| Error::InvalidArgument("budget too large".into()))?;
    let bytes = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .unwrap_or(usize::MAX);
    if bytes > opts.max_bytes {
        return Err(Error::MemoryCap {
            rows,
            cols,
            bytes,
            cap: opts.max_bytes,
        });
    }

    let pdf = landscape.pdf();
    let mut values = vec![0.0; rows * cols];
    for t in 1..rows {
        let (done, rest) = values.split_at_mut(t * cols);
        let prev = &done[(t - 1) * cols..];
        let cur = &mut rest[..cols];
        cur.par_iter_mut()
            .with_min_len(2048)
            .enumerate()
            .for_each(|(b, v)| *v = cell_value(prev, pdf, theta_avg, b));
    }
    Ok(ValueTable {
        t_max,
        b_max,
        values,
    })
}

impl ValueTable {
    pub fn from_raw(t_max: usize, b_max: u64, values: Vec<f64>) -> Result<Self> {
        if values.len() != (t_max + 1) * (b_max as usize + 1) {
            return Err(Error::InvalidArgument("value grid has the wrong size".into()));
        }
        Ok(Self {
            t_max,
            b_max,
            values,
        })
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn b_max(&self) -> u64 {
        self.b_max
    }

    fn cols(&self) -> usize {
        self.b_max as usize + 1
    }

    pub fn get(&self, t: usize, b: u64) -> f64 {
        self.values[t * self.cols() + b as usize]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.cols();
        &self.values[t * c..(t + 1) * c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        grid::write_binary(w, GridKind::Value, self.t_max + 1, self.cols(), &self.values)
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let (rows, cols, values) = grid::read_binary(r, GridKind::Value)?;
        if rows == 0 || cols == 0 {
            return Err(crate::error::format_err("value table", "empty grid"));
        }
        Self::from_raw(rows - 1, cols as u64 - 1, values)
    }

    pub fn write_text<W: Write>(&self, w: W) -> Result<()> {
        grid::write_text(w, GridKind::Value, self.t_max + 1, self.cols(), &self.values)
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let (rows, cols, values) = grid::read_text(r, GridKind::Value)?;
        if rows == 0 || cols == 0 {
            return Err(crate::error::format_err("value table", "empty grid"));
        }
        Self::from_raw(rows - 1, cols as u64 - 1, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = create(path)?;
        self.write_binary(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = open(path)?;
        Self::read_binary(std::io::BufReader::new(f))
    }
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::IoAt {
        path: path.to_path_buf(),
        source,
    })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::IoAt {
        path: path.to_path_buf(),
        source,
    })
}

pub fn diff_table(v: &ValueTable) -> DiffTable {
    let cols = v.b_max as usize;
    let mut diffs = Vec::with_capacity((v.t_max + 1) * cols);
    for t in 0..=v.t_max {
        let row = v.row(t);
        diffs.extend(row.windows(2).map(|w| w[1] - w[0]));
    }
    DiffTable {
        t_max: v.t_max,
        b_max: v.b_max,
        diffs,
    }
}

impl DiffTable {
    pub fn from_raw(t_max: usize, b_max: u64, diffs: Vec<f64>) -> Result<Self> {
        if diffs.len() != (t_max + 1) * b_max as usize {
            return Err(Error::InvalidArgument("diff grid has the wrong size".into()));
        }
        Ok(Self {
            t_max,
            b_max,
            diffs,
        })
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// Budget of the value table this came from; valid `b` are `0..b_max`.
    pub fn b_max(&self) -> u64 {
        self.b_max
    }

    pub fn get(&self, t: usize, b: u64) -> f64 {
        self.diffs[t * self.b_max as usize + b as usize]
    }

    pub fn try_get(&self, t: usize, b: u64) -> Result<f64> {
        if t > self.t_max || b >= self.b_max {
            return Err(Error::OutsideGrid {
                t,
                b,
                t_max: self.t_max,
                b_max: self.b_max.saturating_sub(1),
            });
        }
        Ok(self.get(t, b))
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.b_max as usize;
        &self.diffs[t * c..(t + 1) * c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.diffs
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        grid::write_binary(w, GridKind::Diff, self.t_max + 1, self.b_max as usize, &self.diffs)
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let (rows, cols, diffs) = grid::read_binary(r, GridKind::Diff)?;
        if rows == 0 {
            return Err(crate::error::format_err("diff table", "empty grid"));
        }
        Self::from_raw(rows - 1, cols as u64, diffs)
    }

    pub fn write_text<W: Write>(&self, w: W) -> Result<()> {
        grid::write_text(w, GridKind::Diff, self.t_max + 1, self.b_max as usize, &self.diffs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = create(path)?;
        self.write_binary(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = open(path)?;
        Self::read_binary(std::io::BufReader::new(f))
    }
}

/// `Σ_{δ=0}^{a} m(δ) g(δ)`, the quantity the optimal bid maximises.
pub fn bid_objective(v: &ValueTable, landscape: &LandscapeModel, input: &BidDecisionInput, a: u32) -> f64 {
    let prev = v.row(input.t - 1);
    let b = input.b as usize;
    let keep = prev[b];
    let mut s = 0.0;
    for d in 0..=(a as usize).min(b) {
        s += landscape.prob(d as u32) * g_value(input.theta, prev[b - d], keep);
    }
    s
}

/// Optimal bid: the largest δ in `[0, min(delta_max, b)]` with `g(δ) >= 0`.
///
/// A zero pCTR bids 0: nothing can be gained, and ties on a flat value row
/// would otherwise resolve toward spending.
pub fn bid_rlb(v: &ValueTable, input: &BidDecisionInput, delta_max: u32) -> Result<u32> {
    if input.t == 0 {
        return Err(Error::TerminalState);
    }
    if input.t > v.t_max || input.b > v.b_max {
        return Err(Error::OutsideGrid {
            t: input.t,
            b: input.b,
            t_max: v.t_max,
            b_max: v.b_max,
        });
    }
    if input.theta <= 0.0 {
        return Ok(0);
    }
    let prev = v.row(input.t - 1);
    let b = input.b as usize;
    let keep = prev[b];
    let top = b.min(delta_max as usize);
    let mut bid = 0;
    for d in 1..=top {
        if g_value(input.theta, prev[b - d], keep) < 0.0 {
            break;
        }
        bid = d;
    }
    Ok(bid as u32)
}
