//! Large-episode bidding through a learned value differential.
//!
//! Solving `V(t, b)` exactly costs `O(T·B)` time and memory. Instead, a small
//! sub-grid `{0..T0} × {0..B0}` is solved, a network [`NnModel`] is fitted to
//! `D(t, b) = V(t, b+1) - V(t, b)` there, and bids for larger states come
//! from the network directly ([`bid_nn`]), from episode segmentation
//! ([`bid_nn_seg`]), or from mapping a state onto the sub-grid by its
//! budget-per-auction ratio ([`bid_nn_mapd`], [`bid_nn_mapa`]).

mod bidding;
mod nn;

pub use bidding::{
    bid_nn, bid_nn_mapa, bid_nn_mapd, bid_nn_seg, map_budget, map_deviation, nn_diff_mapped, NnBidder,
    SegmentState, StateBidder, TableBidder,
};
pub use nn::{grid_rmse, nn_diff, train_nn, ApproxConfig, NnFit, NnModel};
