//! Impression logs in the canonical line format and campaign statistics.
//!
//! One auction per line:
//!
//! ```text
//! <click> <market_price> <idx>:1 <idx>:1 ...
//! ```
//!
//! `click` is 0 or 1, `market_price` a non-negative integer quoted per mille
//! (the same integer unit every budget and bid in this crate uses), and each
//! `idx` a one-hot feature index. Lines that fail to parse are skipped and
//! tallied instead of aborting the read.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::config::KvConfig;
use crate::ctr_model::CtrModel;
use crate::error::{Error, Result};

/// One auction event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub click: bool,
    pub market_price: u32,
    /// Strictly increasing one-hot feature indices.
    pub features: Vec<u32>,
}

impl LogRecord {
    pub fn new(click: bool, market_price: u32, mut features: Vec<u32>) -> Self {
        features.sort_unstable();
        features.dedup();
        Self {
            click,
            market_price,
            features,
        }
    }

    /// Serialise in the canonical line format (no trailing newline).
    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(8 + self.features.len() * 8);
        let _ = write!(s, "{} {}", u8::from(self.click), self.market_price);
        for idx in &self.features {
            let _ = write!(s, " {idx}:1");
        }
        s
    }
}

/// Options applied while parsing.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogSchema {
    /// Prices above this are clamped down to it.
    pub delta_max: Option<u32>,
    /// Lines with a feature index `>= feature_dim` are rejected.
    pub feature_dim: Option<usize>,
}

impl LogSchema {
    /// Reads `delta_max` and `feature_dim` keys when present.
    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        Ok(Self {
            delta_max: cfg.get("delta_max")?,
            feature_dim: cfg.get("feature_dim")?,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub records: Vec<LogRecord>,
    pub skipped: usize,
}

impl ParsedLog {
    /// One past the largest feature index seen, i.e. the smallest usable model dimension.
    pub fn feature_dim(&self) -> usize {
        self.records
            .iter()
            .filter_map(|r| r.features.last())
            .max()
            .map_or(1, |&m| m as usize + 1)
    }
}

/// Why a line was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineError {
    MissingFields,
    BadClick,
    BadPrice,
    BadFeature,
    DuplicateFeature(u32),
    FeatureOutOfRange(u32),
}

/// Parse a single line. Blank lines yield `Ok(None)`.
pub fn parse_line(line: &str, schema: &LogSchema) -> Result<Option<LogRecord>, LineError> {
    let mut tokens = line.split_ascii_whitespace();
    let Some(click_tok) = tokens.next() else {
        return Ok(None);
    };
    let click = match click_tok {
        "0" => false,
        "1" => true,
        _ => return Err(LineError::BadClick),
    };
    let price_tok = tokens.next().ok_or(LineError::MissingFields)?;
    // Parsing as i64 first distinguishes a negative price from garbage; both are rejected.
    let price: i64 = price_tok.parse().map_err(|_| LineError::BadPrice)?;
    if price < 0 || price > i64::from(u32::MAX) {
        return Err(LineError::BadPrice);
    }
    let mut market_price = price as u32;
    if let Some(cap) = schema.delta_max {
        market_price = market_price.min(cap);
    }

    let mut features = Vec::new();
    for tok in tokens {
        let (idx, val) = tok.split_once(':').ok_or(LineError::BadFeature)?;
        if val != "1" {
            return Err(LineError::BadFeature);
        }
        let idx: u32 = idx.parse().map_err(|_| LineError::BadFeature)?;
        if let Some(dim) = schema.feature_dim {
            if idx as usize >= dim {
                return Err(LineError::FeatureOutOfRange(idx));
            }
        }
        features.push(idx);
    }
    features.sort_unstable();
    if let Some(w) = features.windows(2).find(|w| w[0] == w[1]) {
        return Err(LineError::DuplicateFeature(w[0]));
    }
    Ok(Some(LogRecord {
        click,
        market_price,
        features,
    }))
}

/// Stream-parse a log. Malformed lines are counted in `skipped`.
pub fn parse_log<R: BufRead>(reader: R, schema: &LogSchema) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    for line in reader.lines() {
        let line = line?;
        match parse_line(&line, schema) {
            Ok(Some(rec)) => out.records.push(rec),
            Ok(None) => {}
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}

pub fn read_log_file(path: &Path, schema: &LogSchema) -> Result<ParsedLog> {
    let file = std::fs::File::open(path).map_err(|source| Error::IoAt {
        path: path.to_path_buf(),
        source,
    })?;
    parse_log(std::io::BufReader::new(file), schema)
}

pub fn write_log<W: std::io::Write>(mut w: W, records: &[LogRecord]) -> Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    Ok(())
}

/// Campaign-level numbers derived from the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    /// Mean market price. Log prices are quoted per mille, so this is the CPM
    /// in log price units.
    pub cpm_train: f64,
    /// Mean pCTR over the training impressions.
    pub theta_avg: f64,
    pub n_records: usize,
    pub n_clicks: usize,
    pub max_price: u32,
    /// Total cost of winning every training impression.
    pub total_cost: u64,
}

impl CampaignStats {
    /// Historical cost per click (`total_cost / n_clicks`), if any click was observed.
    pub fn ecpc(&self) -> Option<f64> {
        (self.n_clicks > 0).then(|| self.total_cost as f64 / self.n_clicks as f64)
    }

    pub fn to_config(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        kv.set("cpm_train", self.cpm_train);
        kv.set("theta_avg", self.theta_avg);
        kv.set("n_records", self.n_records);
        kv.set("n_clicks", self.n_clicks);
        kv.set("max_price", self.max_price);
        kv.set("total_cost", self.total_cost);
        kv
    }

    pub fn from_config(kv: &KvConfig) -> Result<Self> {
        fn req<T: std::str::FromStr>(kv: &KvConfig, key: &str) -> Result<T> {
            kv.get(key)?
                .ok_or_else(|| crate::error::format_err("stats", format!("missing key {key}")))
        }
        Ok(Self {
            cpm_train: req(kv, "cpm_train")?,
            theta_avg: req(kv, "theta_avg")?,
            n_records: req(kv, "n_records")?,
            n_clicks: req(kv, "n_clicks")?,
            max_price: req(kv, "max_price")?,
            total_cost: req(kv, "total_cost")?,
        })
    }
}

/// Compute [`CampaignStats`] over the training records with a trained CTR model.
pub fn campaign_stats(records: &[LogRecord], ctr: &CtrModel) -> Result<CampaignStats> {
    if records.is_empty() {
        return Err(Error::NoTrainingData);
    }
    let mut total_cost = 0u64;
    let mut n_clicks = 0usize;
    let mut max_price = 0u32;
    let mut theta_sum = 0.0;
    for r in records {
        total_cost += u64::from(r.market_price);
        n_clicks += usize::from(r.click);
        max_price = max_price.max(r.market_price);
        theta_sum += ctr.predict(&r.features)?;
    }
    let n = records.len() as f64;
    Ok(CampaignStats {
        cpm_train: total_cost as f64 / n,
        theta_avg: theta_sum / n,
        n_records: records.len(),
        n_clicks,
        max_price,
        total_cost,
    })
}
