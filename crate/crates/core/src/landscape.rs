//! Non-parametric market price distribution.
//!
//! A Laplace-smoothed histogram over the integer prices `0..=delta_max`.
//! Its c.d.f. is the probability of winning with a given bid.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::error::{format_err, Error, Result};

pub const DEFAULT_DELTA_MAX: u32 = 300;
pub const DEFAULT_LAPLACE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeModel {
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl LandscapeModel {
    /// Build from explicit probabilities; they must be non-negative and sum to 1 within 1e-9.
    pub fn from_pdf(pdf: Vec<f64>) -> Result<Self> {
        if pdf.len() < 2 {
            return Err(Error::InvalidArgument("delta_max must be >= 1".into()));
        }
        if pdf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument("pdf entries must be finite and >= 0".into()));
        }
        let total: f64 = pdf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("pdf sums to {total}, not 1")));
        }
        let mut cdf = Vec::with_capacity(pdf.len());
        let mut acc = 0.0;
        for p in &pdf {
            acc += p;
            cdf.push(acc.min(1.0));
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { pdf, cdf })
    }

    pub fn delta_max(&self) -> u32 {
        (self.pdf.len() - 1) as u32
    }

    pub fn pdf(&self) -> &[f64] {
        &self.pdf
    }

    /// m(δ); zero outside the support.
    pub fn prob(&self, price: u32) -> f64 {
        self.pdf.get(price as usize).copied().unwrap_or(0.0)
    }

    /// Probability that a bid of `bid` wins, i.e. P(δ <= bid).
    pub fn win_prob(&self, bid: u32) -> f64 {
        self.cdf[(bid as usize).min(self.cdf.len() - 1)]
    }

    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.delta_max());
        for p in &self.pdf {
            let _ = writeln!(s, "{p}");
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let head = lines.next().ok_or_else(|| format_err("landscape", "empty file"))??;
        let delta_max: usize = head
            .trim()
            .parse()
            .map_err(|_| format_err("landscape", format!("bad delta_max {head:?}")))?;
        let pdf = lines
            .map(|l| {
                let l = l?;
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| format_err("landscape", format!("bad probability {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if pdf.len() != delta_max + 1 {
            return Err(format_err(
                "landscape",
                format!("expected {} probabilities, found {}", delta_max + 1, pdf.len()),
            ));
        }
        Self::from_pdf(pdf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|source| Error::IoAt {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_text(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|source| Error::IoAt {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_text(std::io::BufReader::new(f))
    }
}

/// Fit `pdf[δ] = (count(δ) + laplace) / (n + laplace * (delta_max + 1))`.
/// Prices above `delta_max` are clamped to it.
pub fn fit_landscape<I>(prices: I, delta_max: u32, laplace: f64) -> Result<LandscapeModel>
where
    I: IntoIterator<Item = u32>,
{
    if delta_max < 1 {
        return Err(Error::InvalidArgument("delta_max must be >= 1".into()));
    }
    if !(laplace >= 0.0 && laplace.is_finite()) {
        return Err(Error::InvalidArgument("laplace must be finite and >= 0".into()));
    }
    let mut counts = vec![0u64; delta_max as usize + 1];
    let mut n = 0u64;
    for p in prices {
        counts[p.min(delta_max) as usize] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoTrainingData);
    }
    let denom = n as f64 + laplace * (delta_max as f64 + 1.0);
    let pdf: Vec<f64> = counts.iter().map(|&c| (c as f64 + laplace) / denom).collect();
    LandscapeModel::from_pdf(pdf)
}
