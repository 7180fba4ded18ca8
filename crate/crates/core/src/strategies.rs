//! Bidding strategies behind one interface, and the non-RL baselines.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::approx::{bid_nn, bid_nn_mapa, bid_nn_mapd, bid_nn_seg, NnBidder, NnModel, SegmentState, TableBidder};
use crate::dp::{bid_rlb, BidDecisionInput, ValueTable};
use crate::error::{Error, Result};
use crate::evaluator::{run_episodes, Impression};

/// What a strategy sees for one bid request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidContext {
    /// Auctions left in the episode, counting this one.
    pub t: usize,
    /// Budget left.
    pub b: u64,
    /// Predicted CTR of this request.
    pub theta: f64,
}

impl From<BidContext> for BidDecisionInput {
    fn from(c: BidContext) -> Self {
        BidDecisionInput {
            t: c.t,
            b: c.b,
            theta: c.theta,
        }
    }
}

pub trait BidStrategy {
    /// Called before the first request of each episode.
    fn begin_episode(&mut self, _episode_len: usize, _budget: u64) {}

    /// Must never exceed `ctx.b`.
    fn bid(&mut self, ctx: &BidContext) -> Result<u32>;
}

/// `round(b0 · theta / theta_avg)`, clamped to `[0, b]`.
pub fn bid_lin(b0: u32, theta: f64, theta_avg: f64, b: u64) -> Result<u32> {
    if theta_avg.is_nan() || theta_avg <= 0.0 {
        return Err(Error::InvalidArgument("theta_avg must be positive".into()));
    }
    Ok(clamp_bid((b0 as f64 * theta / theta_avg).round(), b))
}

/// `round(cpc · theta)`, clamped to `[0, b]`.
pub fn bid_mcpc(cpc: f64, theta: f64, b: u64) -> u32 {
    clamp_bid((cpc * theta).round(), b)
}

/// The DP bid with the request's pCTR replaced by the campaign average.
pub fn bid_ssmdp(v: &ValueTable, theta_avg: f64, t: usize, b: u64, delta_max: u32) -> Result<u32> {
    bid_rlb(v, &BidDecisionInput { t, b, theta: theta_avg }, delta_max)
}

fn clamp_bid(x: f64, b: u64) -> u32 {
    let cap = b.min(u32::MAX as u64) as f64;
    if x.is_nan() {
        0
    } else {
        x.clamp(0.0, cap) as u32
    }
}

pub const DEFAULT_LIN_GRID: std::ops::RangeInclusive<u32> = 1..=150;

/// `{2, 4, ..., 300}`.
pub fn default_lin_grid() -> Vec<u32> {
    DEFAULT_LIN_GRID.map(|i| 2 * i).collect()
}

/// Pick the `b0` with most clicks when replaying `train` under the evaluation protocol.
/// Ties go to the smaller candidate.
pub fn tune_lin_b0(
    train: &[Impression],
    theta_avg: f64,
    episode_len: usize,
    budget: u64,
    grid: &[u32],
) -> Result<u32> {
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("empty b0 candidate grid".into()));
    }
    let clicks: Vec<u64> = sorted
        .par_iter()
        .map(|&b0| {
            let mut s = Lin { b0, theta_avg };
            run_episodes(&mut s, train, episode_len, budget).map(|m| m.clicks)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &c) in clicks.iter().enumerate() {
        if c > clicks[best] {
            best = i;
        }
    }
    Ok(sorted[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    SsMdp,
    Mcpc,
    Lin,
    Rlb,
    RlbNn,
    RlbNnSeg,
    RlbNnMapD,
    RlbNnMapA,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::SsMdp,
        StrategyKind::Mcpc,
        StrategyKind::Lin,
        StrategyKind::Rlb,
        StrategyKind::RlbNn,
        StrategyKind::RlbNnSeg,
        StrategyKind::RlbNnMapD,
        StrategyKind::RlbNnMapA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::SsMdp => "ssmdp",
            StrategyKind::Mcpc => "mcpc",
            StrategyKind::Lin => "lin",
            StrategyKind::Rlb => "rlb",
            StrategyKind::RlbNn => "rlb_nn",
            StrategyKind::RlbNnSeg => "rlb_nn_seg",
            StrategyKind::RlbNnMapD => "rlb_nn_mapd",
            StrategyKind::RlbNnMapA => "rlb_nn_mapa",
        }
    }

    pub fn needs_table(self) -> bool {
        matches!(self, StrategyKind::SsMdp | StrategyKind::Rlb)
    }

    pub fn needs_network(self) -> bool {
        matches!(
            self,
            StrategyKind::RlbNn | StrategyKind::RlbNnSeg | StrategyKind::RlbNnMapD | StrategyKind::RlbNnMapA
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

/// A strategy together with everything it needs to bid.
#[derive(Debug, Clone)]
pub enum StrategyParams {
    SsMdp {
        table: Arc<ValueTable>,
        theta_avg: f64,
        delta_max: u32,
    },
    Mcpc {
        cpc: f64,
    },
    Lin {
        b0: u32,
        theta_avg: f64,
    },
    Rlb {
        table: Arc<ValueTable>,
        delta_max: u32,
    },
    RlbNn {
        model: Arc<NnModel>,
        delta_max: u32,
    },
    RlbNnSeg {
        model: Arc<NnModel>,
        delta_max: u32,
        t0: usize,
    },
    RlbNnMapD {
        model: Arc<NnModel>,
        delta_max: u32,
        t0: usize,
        b0: u64,
    },
    /// Delegates to `table` for mapped states when it is given, else to the network.
    RlbNnMapA {
        model: Arc<NnModel>,
        table: Option<Arc<ValueTable>>,
        delta_max: u32,
        t0: usize,
        b0: u64,
    },
}

impl StrategyParams {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyParams::SsMdp { .. } => StrategyKind::SsMdp,
            StrategyParams::Mcpc { .. } => StrategyKind::Mcpc,
            StrategyParams::Lin { .. } => StrategyKind::Lin,
            StrategyParams::Rlb { .. } => StrategyKind::Rlb,
            StrategyParams::RlbNn { .. } => StrategyKind::RlbNn,
            StrategyParams::RlbNnSeg { .. } => StrategyKind::RlbNnSeg,
            StrategyParams::RlbNnMapD { .. } => StrategyKind::RlbNnMapD,
            StrategyParams::RlbNnMapA { .. } => StrategyKind::RlbNnMapA,
        }
    }

    pub fn build(&self) -> Box<dyn BidStrategy + '_> {
        match self {
            StrategyParams::SsMdp {
                table,
                theta_avg,
                delta_max,
            } => Box::new(SsMdp {
                table,
                theta_avg: *theta_avg,
                delta_max: *delta_max,
            }),
            StrategyParams::Mcpc { cpc } => Box::new(Mcpc { cpc: *cpc }),
            StrategyParams::Lin { b0, theta_avg } => Box::new(Lin {
                b0: *b0,
                theta_avg: *theta_avg,
            }),
            StrategyParams::Rlb { table, delta_max } => Box::new(Rlb {
                table,
                delta_max: *delta_max,
            }),
            StrategyParams::RlbNn { model, delta_max } => Box::new(RlbNn {
                model,
                delta_max: *delta_max,
            }),
            StrategyParams::RlbNnSeg { model, delta_max, t0 } => Box::new(RlbNnSeg {
                model,
                delta_max: *delta_max,
                state: SegmentState::new(*t0, *t0),
                t0: *t0,
            }),
            StrategyParams::RlbNnMapD {
                model,
                delta_max,
                t0,
                b0,
            } => Box::new(RlbNnMapD {
                model,
                delta_max: *delta_max,
                t0: *t0,
                b0: *b0,
            }),
            StrategyParams::RlbNnMapA {
                model,
                table,
                delta_max,
                t0,
                b0,
            } => Box::new(RlbNnMapA {
                model,
                table: table.as_deref(),
                delta_max: *delta_max,
                t0: *t0,
                b0: *b0,
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lin {
    pub b0: u32,
    pub theta_avg: f64,
}

impl BidStrategy for Lin {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        bid_lin(self.b0, ctx.theta, self.theta_avg, ctx.b)
    }
}

#[derive(Debug, Clone)]
pub struct Mcpc {
    pub cpc: f64,
}

impl BidStrategy for Mcpc {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        Ok(bid_mcpc(self.cpc, ctx.theta, ctx.b))
    }
}

pub struct SsMdp<'a> {
    pub table: &'a ValueTable,
    pub theta_avg: f64,
    pub delta_max: u32,
}

impl BidStrategy for SsMdp<'_> {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        bid_ssmdp(self.table, self.theta_avg, ctx.t, ctx.b, self.delta_max)
    }
}

pub struct Rlb<'a> {
    pub table: &'a ValueTable,
    pub delta_max: u32,
}

impl BidStrategy for Rlb<'_> {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        bid_rlb(self.table, &(*ctx).into(), self.delta_max)
    }
}

pub struct RlbNn<'a> {
    pub model: &'a NnModel,
    pub delta_max: u32,
}

impl BidStrategy for RlbNn<'_> {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        Ok(bid_nn(self.model, &(*ctx).into(), self.delta_max))
    }
}

pub struct RlbNnSeg<'a> {
    pub model: &'a NnModel,
    pub delta_max: u32,
    pub t0: usize,
    state: SegmentState,
}

impl BidStrategy for RlbNnSeg<'_> {
    fn begin_episode(&mut self, episode_len: usize, _budget: u64) {
        self.state = SegmentState::new(episode_len, self.t0);
    }

    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        Ok(bid_nn_seg(&mut self.state, self.model, &(*ctx).into(), self.delta_max))
    }
}

pub struct RlbNnMapD<'a> {
    pub model: &'a NnModel,
    pub delta_max: u32,
    pub t0: usize,
    pub b0: u64,
}

impl BidStrategy for RlbNnMapD<'_> {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        Ok(bid_nn_mapd(self.model, &(*ctx).into(), self.delta_max, self.t0, self.b0))
    }
}

pub struct RlbNnMapA<'a> {
    pub model: &'a NnModel,
    pub table: Option<&'a ValueTable>,
    pub delta_max: u32,
    pub t0: usize,
    pub b0: u64,
}

impl BidStrategy for RlbNnMapA<'_> {
    fn bid(&mut self, ctx: &BidContext) -> Result<u32> {
        let input = (*ctx).into();
        match self.table {
            Some(table) => bid_nn_mapa(
                &TableBidder {
                    table,
                    delta_max: self.delta_max,
                },
                &input,
                self.t0,
                self.b0,
            ),
            None => bid_nn_mapa(
                &NnBidder {
                    model: self.model,
                    delta_max: self.delta_max,
                },
                &input,
                self.t0,
                self.b0,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::oracle::{brute_force_value, expected_clicks, ThetaPoint};
    use crate::dp::solve_value_table;
    use crate::landscape::LandscapeModel;
    use proptest::prelude::*;

    #[test]
    fn lin_examples() {
        assert_eq!(bid_lin(50, 0.001, 0.001, 1000).unwrap(), 50);
        assert_eq!(bid_lin(50, 0.0, 0.001, 1000).unwrap(), 0);
        assert_eq!(bid_lin(50, 0.002, 0.001, 60).unwrap(), 60);
        assert!(bid_lin(50, 0.002, 0.0, 60).is_err());
    }

    #[test]
    fn mcpc_examples() {
        assert_eq!(bid_mcpc(50_000.0, 0.0, 100), 0);
        assert_eq!(bid_mcpc(50_000.0, 0.001, 100), 50);
        assert_eq!(bid_mcpc(50_000.0, 0.001, 20), 20);
    }

    #[test]
    fn default_grid_is_even_numbers_to_300() {
        let g = default_lin_grid();
        assert_eq!(g.len(), 150);
        assert_eq!((g[0], g[1], g[149]), (2, 4, 300));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert_eq!("RLB-NN-MapA".parse::<StrategyKind>().unwrap(), StrategyKind::RlbNnMapA);
        assert!("ortb".parse::<StrategyKind>().is_err());
    }

    proptest! {
        #[test]
        fn baselines_monotone_in_theta_and_capped(b0 in 0u32..400, cpc in 0.0f64..1e5, t1 in 0.0f64..0.2, t2 in 0.0f64..0.2, b in 0u64..500) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(bid_lin(b0, lo, 0.01, b).unwrap() <= bid_lin(b0, hi, 0.01, b).unwrap());
            prop_assert!(bid_mcpc(cpc, lo, b) <= bid_mcpc(cpc, hi, b));
            prop_assert!(bid_lin(b0, hi, 0.01, b).unwrap() as u64 <= b);
            prop_assert!(bid_mcpc(cpc, hi, b) as u64 <= b);
        }
    }

    #[test]
    fn ssmdp_ignores_request_ctr() {
        let l = LandscapeModel::from_pdf(vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        let v = solve_value_table(&l, 0.05, 6, 12).unwrap();
        let mut s = SsMdp {
            table: &v,
            theta_avg: 0.05,
            delta_max: 3,
        };
        for t in 1..=6 {
            for b in 0..=12 {
                let want = bid_rlb(&v, &BidDecisionInput { t, b, theta: 0.05 }, 3).unwrap();
                for theta in [0.0, 0.01, 0.5] {
                    assert_eq!(s.bid(&BidContext { t, b, theta }).unwrap(), want);
                }
            }
        }
    }

    #[test]
    fn ssmdp_never_beats_rlb_when_ctr_varies() {
        let l = LandscapeModel::from_pdf(vec![0.1, 0.3, 0.4, 0.2]).unwrap();
        let thetas = [
            ThetaPoint { theta: 0.01, prob: 0.5 },
            ThetaPoint { theta: 0.05, prob: 0.3 },
            ThetaPoint { theta: 0.2, prob: 0.2 },
        ];
        let avg: f64 = thetas.iter().map(|p| p.theta * p.prob).sum();
        let (t_max, b_max) = (4, 6);
        let v = solve_value_table(&l, avg, t_max, b_max).unwrap();
        let exact = brute_force_value(&l, &thetas, t_max, b_max).unwrap();
        for budget in 0..=b_max {
            let rlb = expected_clicks(&l, &thetas, t_max, budget, |t, b, k| {
                bid_rlb(&v, &BidDecisionInput { t, b, theta: thetas[k].theta }, 3).unwrap()
            })
            .unwrap();
            let ss = expected_clicks(&l, &thetas, t_max, budget, |t, b, _| bid_ssmdp(&v, avg, t, b, 3).unwrap()).unwrap();
            assert!(ss <= rlb + 1e-12, "budget {budget}: ss {ss} rlb {rlb}");
            assert!(rlb <= exact.marginal(t_max, budget) + 1e-12);
        }
    }

    fn imp(click: bool, price: u32, theta: f64) -> Impression {
        Impression {
            click,
            market_price: price,
            theta,
        }
    }

    #[test]
    fn tune_prefers_smallest_maximiser() {
        // every b0 >= 10 wins everything: prices <= 10, budget unconstrained, theta = theta_avg
        let train: Vec<Impression> = (0..40).map(|i| imp(i % 3 == 0, 1 + i % 10, 0.01)).collect();
        let grid: Vec<u32> = (1..=30).collect();
        assert_eq!(tune_lin_b0(&train, 0.01, 10, 1_000_000, &grid).unwrap(), 10);
        assert!(tune_lin_b0(&train, 0.01, 10, 100, &[]).is_err());
    }

    #[test]
    fn tune_picks_higher_click_candidate() {
        // Episode of 4 with budget 10. b0 = 5 wins the three cheap records (1 click);
        // b0 = 9 spends 9 on the first record (no click) and can then afford nothing.
        let train = vec![imp(false, 9, 0.01), imp(true, 3, 0.01), imp(false, 4, 0.01), imp(false, 2, 0.01)];
        assert_eq!(tune_lin_b0(&train, 0.01, 4, 10, &[9, 5]).unwrap(), 5);
        let flipped = vec![imp(true, 9, 0.01), imp(false, 3, 0.01), imp(false, 4, 0.01), imp(false, 2, 0.01)];
        assert_eq!(tune_lin_b0(&flipped, 0.01, 4, 10, &[9, 5]).unwrap(), 9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn tuning_invariant_under_price_scaling(
            seed in proptest::collection::vec((any::<bool>(), 1u32..40, 0usize..3), 30..60),
            k in 2u32..6,
        ) {
            // pCTR ratios of 1/2, 1 and 2 with even b0 keep every bid integral before scaling
            let ratios = [0.5, 1.0, 2.0];
            let train: Vec<Impression> = seed.iter().map(|&(c, p, r)| imp(c, p, 0.01 * ratios[r])).collect();
            let grid: Vec<u32> = (1..=20).map(|i| 2 * i).collect();
            let scaled: Vec<Impression> = train.iter().map(|r| imp(r.click, r.market_price * k, r.theta)).collect();
            let scaled_grid: Vec<u32> = grid.iter().map(|g| g * k).collect();
            let a = tune_lin_b0(&train, 0.01, 10, 200, &grid).unwrap();
            let b = tune_lin_b0(&scaled, 0.01, 10, 200 * k as u64, &scaled_grid).unwrap();
            prop_assert_eq!(grid.iter().position(|&g| g == a), scaled_grid.iter().position(|&g| g == b));
        }
    }
}
