//! Budget-constrained bidding as a finite-horizon MDP.
//!
//! [`solve_value_table`] fills `V(t, b)`, the expected clicks obtainable with
//! `t` auctions and `b` budget left, and [`bid_rlb`] turns a solved table and
//! a request's pCTR into the optimal bid. [`oracle`] holds an independent
//! exhaustive solver used to check both on small instances.

mod grid;
pub mod oracle;
mod value;

pub use grid::GridKind;
pub use value::{
    bid_objective, bid_rlb, diff_table, g_value, solve_value_table, solve_value_table_with,
    BidDecisionInput, DiffTable, SolveOptions, ValueTable,
};
