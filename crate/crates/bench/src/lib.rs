//! Shared fixtures for the benchmarks.

use rlb_core::approx::NnModel;
use rlb_core::evaluator::Impression;
use rlb_core::landscape::{fit_landscape, LandscapeModel};
use rlb_core::synthetic::SyntheticCampaign;

pub const DELTA_MAX: u32 = 300;
pub const THETA_AVG: f64 = 0.004;

/// Price landscape fitted on synthetic prices.
pub fn landscape() -> LandscapeModel {
    let gen = SyntheticCampaign {
        n_records: 50_000,
        ..SyntheticCampaign::default()
    };
    fit_landscape(gen.generate().iter().map(|r| r.market_price), DELTA_MAX, 1.0).unwrap()
}

/// Untrained network with the default shape, scaled to a (t0, b0) grid.
pub fn network(t0: usize, b0: u64) -> NnModel {
    NnModel::init(&[2, 30, 15, 1], t0 as f64, b0 as f64, 1e-3, 3).unwrap()
}

/// Synthetic impressions with pCTR drawn around `THETA_AVG`.
pub fn impressions(n: usize) -> Vec<Impression> {
    let gen = SyntheticCampaign {
        n_records: n,
        seed: 11,
        ..SyntheticCampaign::default()
    };
    gen.generate()
        .iter()
        .enumerate()
        .map(|(i, r)| Impression {
            click: r.click,
            market_price: r.market_price,
            theta: THETA_AVG * (0.25 + (i % 7) as f64 * 0.25),
        })
        .collect()
}
