use crate::dp::{bid_rlb, BidDecisionInput, DiffTable, ValueTable};
use crate::error::{Error, Result};

use super::nn::{nn_diff, NnModel};

/// Largest `δ <= min(delta_max, b)` with `theta - Σ_{k=1..δ} diff(b - k) >= 0`.
///
/// `diff` must be nonnegative so the running sum only grows.
fn threshold_bid(theta: f64, b: u64, delta_max: u32, mut diff: impl FnMut(u64) -> f64) -> u32 {
    if theta <= 0.0 {
        return 0;
    }
    let top = b.min(delta_max as u64);
    let mut spent = 0.0;
    let mut bid = 0;
    for d in 1..=top {
        spent += diff(b - d);
        if theta - spent < 0.0 {
            break;
        }
        bid = d as u32;
    }
    bid
}

/// Bid from the network's value differential at `t - 1`. Returns 0 when `t == 0`.
pub fn bid_nn(model: &NnModel, input: &BidDecisionInput, delta_max: u32) -> u32 {
    if input.t == 0 {
        return 0;
    }
    let t = input.t - 1;
    threshold_bid(input.theta, input.b, delta_max, |b| nn_diff(model, t, b))
}

/// `round(b / t × t0)`, capped at `b0` when given.
pub fn map_budget(b: u64, t: usize, t0: usize, b0: Option<u64>) -> u64 {
    assert!(t > 0, "mapping needs t >= 1");
    let num = b as u128 * t0 as u128;
    let den = t as u128;
    let mapped = ((2 * num + den) / (2 * den)) as u64;
    match b0 {
        Some(cap) => mapped.min(cap),
        None => mapped,
    }
}

/// `nn_diff(t, b)` for `t <= t0`, else `nn_diff(t0, round(b / t × t0))` capped at `b0`.
pub fn nn_diff_mapped(model: &NnModel, t: usize, b: u64, t0: usize, b0: u64) -> f64 {
    if t > t0 {
        nn_diff(model, t0, map_budget(b, t, t0, Some(b0)))
    } else {
        nn_diff(model, t, b)
    }
}

/// As [`bid_nn`], with every differential past `t0` read through the budget-ratio mapping.
pub fn bid_nn_mapd(model: &NnModel, input: &BidDecisionInput, delta_max: u32, t0: usize, b0: u64) -> u32 {
    if input.t == 0 {
        return 0;
    }
    let t = input.t - 1;
    threshold_bid(input.theta, input.b, delta_max, |b| nn_diff_mapped(model, t, b, t0, b0))
}

/// Something that can price a single state.
pub trait StateBidder {
    fn bid_at(&self, input: &BidDecisionInput) -> Result<u32>;
}

pub struct TableBidder<'a> {
    pub table: &'a ValueTable,
    pub delta_max: u32,
}

impl StateBidder for TableBidder<'_> {
    fn bid_at(&self, input: &BidDecisionInput) -> Result<u32> {
        bid_rlb(self.table, input, self.delta_max)
    }
}

pub struct NnBidder<'a> {
    pub model: &'a NnModel,
    pub delta_max: u32,
}

impl StateBidder for NnBidder<'_> {
    fn bid_at(&self, input: &BidDecisionInput) -> Result<u32> {
        Ok(bid_nn(self.model, input, self.delta_max))
    }
}

/// Passes `t <= t0` through; otherwise bids as `inner` would at `(t0, round(b / t × t0))`.
///
/// Budgets are capped at `b0` on both paths, since `inner` is only known on the sub-grid.
pub fn bid_nn_mapa<S: StateBidder + ?Sized>(
    inner: &S,
    input: &BidDecisionInput,
    t0: usize,
    b0: u64,
) -> Result<u32> {
    let mapped = if input.t <= t0 {
        BidDecisionInput {
            b: input.b.min(b0),
            ..*input
        }
    } else {
        BidDecisionInput {
            t: t0,
            b: map_budget(input.b, input.t, t0, Some(b0)),
            theta: input.theta,
        }
    };
    Ok(inner.bid_at(&mapped)?.min(input.b.min(u32::MAX as u64) as u32))
}

/// `|D(t, b) - D(t0, round(b / t × t0))|`.
pub fn map_deviation(d: &DiffTable, t0: usize, t: usize, b: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument("deviation needs t >= 1".into()));
    }
    let here = d.try_get(t, b)?;
    let there = d.try_get(t0, map_budget(b, t, t0, None))?;
    Ok((here - there).abs())
}

/// Budget bookkeeping for one large episode cut into small episodes of length `t0`.
///
/// Small episodes start at the beginning of the large one; only the last may be
/// shorter. At each boundary the remaining budget `B_r` is split as
/// `floor(B_r / N_r)` over the `N_r` small episodes left, so anything unspent
/// flows into later allocations.
#[derive(Debug, Clone)]
pub struct SegmentState {
    t0: usize,
    episode_len: usize,
    segment: Option<usize>,
    allocation: u64,
    budget_at_boundary: u64,
    allocations: Vec<u64>,
}

impl SegmentState {
    pub fn new(episode_len: usize, t0: usize) -> Self {
        assert!(t0 >= 1, "segment length must be >= 1");
        Self {
            t0,
            episode_len,
            segment: None,
            allocation: 0,
            budget_at_boundary: 0,
            allocations: Vec::new(),
        }
    }

    /// Allocations made so far, one per small episode entered.
    pub fn allocations(&self) -> &[u64] {
        &self.allocations
    }

    /// Map a large-episode state `(t, b)` to the small-episode state `(t_s, b_s)`.
    pub fn observe(&mut self, t: usize, b: u64) -> (usize, u64) {
        assert!(t >= 1 && t <= self.episode_len, "t outside the episode");
        let elapsed = self.episode_len - t;
        let k = elapsed / self.t0;
        if self.segment != Some(k) {
            let left = t.div_ceil(self.t0) as u64;
            self.segment = Some(k);
            self.allocation = b / left;
            self.budget_at_boundary = b;
            self.allocations.push(self.allocation);
        }
        let seg_len = self.t0.min(self.episode_len - k * self.t0);
        let t_s = seg_len - (elapsed - k * self.t0);
        let spent = self.budget_at_boundary.saturating_sub(b);
        (t_s, self.allocation.saturating_sub(spent))
    }
}

pub fn bid_nn_seg(state: &mut SegmentState, model: &NnModel, input: &BidDecisionInput, delta_max: u32) -> u32 {
    if input.t == 0 {
        return 0;
    }
    let (t, b) = state.observe(input.t, input.b);
    bid_nn(model, &BidDecisionInput { t, b, theta: input.theta }, delta_max)
}
