//! Budget-constrained bid optimisation for real-time bidding.
//!
//! The pipeline: parse impression logs ([`log_data`]), estimate pCTR with
//! sparse logistic regression ([`ctr_model`]), fit the market price
//! distribution ([`landscape`]), solve the bidding MDP by dynamic
//! programming ([`dp`]), approximate its value differential with a small
//! network for large episodes ([`approx`]), and replay logs episode by
//! episode to compare strategies ([`strategies`], [`evaluator`]).

pub mod approx;
pub mod config;
pub mod ctr_model;
pub mod dp;
pub mod error;
pub mod evaluator;
pub mod landscape;
pub mod log_data;
pub mod strategies;
pub mod synthetic;

pub use ctr_model::{auc, train_ctr, CtrHyper, CtrModel, Optimizer};
pub use dp::{bid_rlb, diff_table, solve_value_table, BidDecisionInput, DiffTable, ValueTable};
pub use error::{Error, Result};
pub use landscape::{fit_landscape, LandscapeModel};
pub use log_data::{campaign_stats, parse_log, CampaignStats, LogRecord, LogSchema};
