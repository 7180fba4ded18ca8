//! Offline replay of impression logs, episode by episode.
//!
//! A bid wins when it is at least the logged market price, and the winner pays
//! that price. Each episode starts with a fresh budget.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ctr_model::CtrModel;
use crate::error::{format_err, Error, Result};
use crate::log_data::LogRecord;
use crate::strategies::{BidContext, BidStrategy, StrategyParams};

/// A test record reduced to what replay needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impression {
    pub click: bool,
    pub market_price: u32,
    pub theta: f64,
}

/// Attach pCTRs. Features outside the model's range count as unseen.
pub fn score_records(records: &[LogRecord], ctr: &CtrModel) -> Vec<Impression> {
    records
        .iter()
        .map(|r| Impression {
            click: r.click,
            market_price: r.market_price,
            theta: ctr.predict_known(&r.features),
        })
        .collect()
}

/// Per-episode budget `floor(cpm_train × T × c0)`, with `cpm_train` the mean logged price.
pub fn episode_budget(cpm_train: f64, episode_len: usize, c0: f64) -> u64 {
    (cpm_train * episode_len as f64 * c0).floor().max(0.0) as u64
}

pub const DEFAULT_C0_GRID: [f64; 5] = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub episode_len: usize,
    pub c0: f64,
    pub cpm_train: f64,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episode_len == 0 {
            return Err(Error::InvalidArgument("episode length must be >= 1".into()));
        }
        if !(self.c0 > 0.0 && self.c0 <= 1.0) {
            return Err(Error::InvalidArgument(format!("c0 must lie in (0, 1], got {}", self.c0)));
        }
        if !(self.cpm_train >= 0.0 && self.cpm_train.is_finite()) {
            return Err(Error::InvalidArgument("cpm_train must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> u64 {
        episode_budget(self.cpm_train, self.episode_len, self.c0)
    }
}

/// Consecutive chunks of exactly `episode_len` records; a trailing remainder is dropped.
pub fn make_episodes<T>(records: &[T], episode_len: usize) -> Result<Vec<&[T]>> {
    if episode_len == 0 {
        return Err(Error::InvalidArgument("episode length must be >= 1".into()));
    }
    if records.len() < episode_len {
        return Err(Error::NoFullEpisode { episode_len });
    }
    Ok(records.chunks_exact(episode_len).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeResult {
    pub clicks: u64,
    pub wins: u64,
    pub bids: u64,
    pub cost: u64,
}

/// Replay one episode.
///
/// # Panics
/// If the strategy bids more than the remaining budget.
pub fn run_episode(strategy: &mut dyn BidStrategy, episode: &[Impression], budget: u64) -> Result<EpisodeResult> {
    strategy.begin_episode(episode.len(), budget);
    let mut res = EpisodeResult::default();
    let mut b = budget;
    for (i, imp) in episode.iter().enumerate() {
        let ctx = BidContext {
            t: episode.len() - i,
            b,
            theta: imp.theta,
        };
        let bid = strategy.bid(&ctx)?;
        assert!(bid as u64 <= b, "strategy bid {bid} with only {b} left");
        res.bids += 1;
        if bid >= imp.market_price {
            let price = imp.market_price as u64;
            b -= price;
            res.cost += price;
            res.wins += 1;
            res.clicks += imp.click as u64;
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub clicks: u64,
    pub wins: u64,
    pub bids: u64,
    pub cost: u64,
    pub episodes: u64,
    pub budget: u64,
}

impl Metrics {
    pub fn add(&mut self, r: &EpisodeResult) {
        self.clicks += r.clicks;
        self.wins += r.wins;
        self.bids += r.bids;
        self.cost += r.cost;
        self.episodes += 1;
    }

    pub fn win_rate(&self) -> Option<f64> {
        (self.bids > 0).then(|| self.wins as f64 / self.bids as f64)
    }

    /// Mean price paid per won impression; prices are already quoted per mille.
    pub fn cpm(&self) -> Option<f64> {
        (self.wins > 0).then(|| self.cost as f64 / self.wins as f64)
    }

    pub fn ecpc(&self) -> Option<f64> {
        (self.clicks > 0).then(|| self.cost as f64 / self.clicks as f64)
    }
}

/// Replay `records` episode by episode with a single strategy instance.
pub fn run_episodes(
    strategy: &mut dyn BidStrategy,
    records: &[Impression],
    episode_len: usize,
    budget: u64,
) -> Result<Metrics> {
    let mut m = Metrics {
        budget,
        ..Metrics::default()
    };
    for ep in make_episodes(records, episode_len)? {
        m.add(&run_episode(strategy, ep, budget)?);
    }
    Ok(m)
}

pub fn run_eval(cfg: &EvalConfig, strategy: &StrategyParams, records: &[Impression]) -> Result<Metrics> {
    cfg.validate()?;
    let mut s = strategy.build();
    run_episodes(s.as_mut(), records, cfg.episode_len, cfg.budget())
}

/// One line of the evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub campaign: String,
    pub strategy: String,
    #[serde(rename = "T")]
    pub episode_len: usize,
    pub c0: f64,
    pub clicks: u64,
    pub wins: u64,
    pub bids: u64,
    pub cost: u64,
    pub win_rate: Option<f64>,
    pub cpm: Option<f64>,
    pub ecpc: Option<f64>,
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "campaign", "strategy", "T", "c0", "clicks", "wins", "bids", "cost", "win_rate", "cpm", "ecpc",
];

impl ReportRow {
    pub fn new(campaign: &str, strategy: &str, cfg: &EvalConfig, m: &Metrics) -> Self {
        Self {
            campaign: campaign.to_string(),
            strategy: strategy.to_string(),
            episode_len: cfg.episode_len,
            c0: cfg.c0,
            clicks: m.clicks,
            wins: m.wins,
            bids: m.bids,
            cost: m.cost,
            win_rate: m.win_rate(),
            cpm: m.cpm(),
            ecpc: m.ecpc(),
        }
    }
}

/// Write rows as CSV with a header; undefined ratios are left empty.
pub fn write_report<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(REPORT_COLUMNS)?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_report<R: std::io::Read>(r: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(REPORT_COLUMNS) {
        return Err(format_err("report", format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// RLB against Lin for one (campaign, T, c0) setting.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SummaryRow {
    pub campaign: String,
    #[serde(rename = "T")]
    pub episode_len: usize,
    pub c0: f64,
    pub rlb_clicks: Option<u64>,
    pub lin_clicks: Option<u64>,
    pub improvement: Option<f64>,
}

/// Pair up RLB and Lin rows, then append one `average` row per (T, c0) with the
/// mean improvement over campaigns where it is defined.
pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, usize, f64)> = Vec::new();
    for r in rows {
        let k = (r.campaign.clone(), r.episode_len, r.c0);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let find = |k: &(String, usize, f64), s: &str| {
        rows.iter()
            .find(|r| r.campaign == k.0 && r.episode_len == k.1 && r.c0 == k.2 && r.strategy == s)
            .map(|r| r.clicks)
    };
    let mut out: Vec<SummaryRow> = keys
        .iter()
        .map(|k| {
            let (rlb, lin) = (find(k, "rlb"), find(k, "lin"));
            SummaryRow {
                campaign: k.0.clone(),
                episode_len: k.1,
                c0: k.2,
                rlb_clicks: rlb,
                lin_clicks: lin,
                improvement: rlb.zip(lin).and_then(|(a, b)| click_improvement(a, b)),
            }
        })
        .collect();
    let mut settings: Vec<(usize, f64)> = Vec::new();
    for k in &keys {
        if !settings.contains(&(k.1, k.2)) {
            settings.push((k.1, k.2));
        }
    }
    for (t, c0) in settings {
        let imps: Vec<f64> = out
            .iter()
            .filter(|r| r.episode_len == t && r.c0 == c0)
            .filter_map(|r| r.improvement)
            .collect();
        out.push(SummaryRow {
            campaign: "average".into(),
            episode_len: t,
            c0,
            rlb_clicks: None,
            lin_clicks: None,
            improvement: (!imps.is_empty()).then(|| imps.iter().sum::<f64>() / imps.len() as f64),
        });
    }
    out
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// `(clicks_a - clicks_b) / clicks_b`, undefined when `clicks_b == 0`.
pub fn click_improvement(clicks_a: u64, clicks_b: u64) -> Option<f64> {
    (clicks_b > 0).then(|| (clicks_a as f64 - clicks_b as f64) / clicks_b as f64)
}
