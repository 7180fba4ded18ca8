//! Exact expectimax over an enumerated request space.
//!
//! Requests are drawn i.i.d. from a finite set of pCTR values. Each state
//! `(t, b, x)` maximises over every bid in `0..=b` directly, with no
//! averaging of θ and no threshold shortcut, so it checks the fast solver
//! from an independent route. Only meant for test-sized instances.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::landscape::LandscapeModel;

/// Largest `T · B² · |θ| · δmax` the oracle will attempt.
pub const MAX_WORK: usize = 50_000_000;

/// One point of the enumerated request distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPoint {
    pub theta: f64,
    pub prob: f64,
}

impl ThetaPoint {
    pub fn new(theta: f64, prob: f64) -> Self {
        Self { theta, prob }
    }
}

/// Exact `V(t, b, x_k)` and the marginal `V(t, b) = Σ_k p_k V(t, b, x_k)`.
#[derive(Debug, Clone)]
pub struct ExactValues {
    t_max: usize,
    b_max: u64,
    k: usize,
    per_x: Vec<f64>,
    marginal: Vec<f64>,
}

impl ExactValues {
    pub fn per_x(&self, t: usize, b: u64, k: usize) -> f64 {
        self.per_x[(t * (self.b_max as usize + 1) + b as usize) * self.k + k]
    }

    pub fn marginal(&self, t: usize, b: u64) -> f64 {
        self.marginal[t * (self.b_max as usize + 1) + b as usize]
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn b_max(&self) -> u64 {
        self.b_max
    }
}

fn validate(landscape: &LandscapeModel, thetas: &[ThetaPoint], t_max: usize, b_max: u64) -> Result<()> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("need at least one theta value".into()));
    }
    let total: f64 = thetas.iter().map(|p| p.prob).sum();
    if (total - 1.0).abs() > 1e-9 || thetas.iter().any(|p| p.prob < 0.0) {
        return Err(Error::InvalidArgument("theta probabilities must sum to 1".into()));
    }
    if thetas.iter().any(|p| !(0.0..=1.0).contains(&p.theta)) {
        return Err(Error::InvalidArgument("theta values must lie in [0, 1]".into()));
    }
    let b = b_max as usize + 1;
    let work = t_max
        .saturating_mul(b)
        .saturating_mul(b)
        .saturating_mul(thetas.len())
        .saturating_mul(landscape.delta_max() as usize + 1);
    if work > MAX_WORK {
        return Err(Error::ScaleGuard(work));
    }
    Ok(())
}

struct Solver<'a> {
    landscape: &'a LandscapeModel,
    thetas: &'a [ThetaPoint],
    memo: HashMap<(usize, u64), (f64, Vec<f64>)>,
}

impl Solver<'_> {
    /// Marginal value and the per-x values at `(t, b)`.
    fn value(&mut self, t: usize, b: u64) -> (f64, Vec<f64>) {
        if t == 0 {
            return (0.0, vec![0.0; self.thetas.len()]);
        }
        if let Some(v) = self.memo.get(&(t, b)) {
            return v.clone();
        }
        let dmax = u64::from(self.landscape.delta_max());
        let next: Vec<f64> = (0..=b).map(|bb| self.value(t - 1, bb).0).collect();
        let lose_value = next[b as usize];
        let mut per_x = Vec::with_capacity(self.thetas.len());
        for p in self.thetas {
            let mut best = f64::NEG_INFINITY;
            for a in 0..=b {
                let mut win = 0.0;
                for d in 0..=a.min(dmax) {
                    let m = self.landscape.prob(d as u32);
                    win += m * (p.theta + next[(b - d) as usize]);
                }
                let mut lose = 0.0;
                for d in (a + 1)..=dmax {
                    lose += self.landscape.prob(d as u32) * lose_value;
                }
                best = best.max(win + lose);
            }
            per_x.push(best);
        }
        let marginal = self
            .thetas
            .iter()
            .zip(&per_x)
            .map(|(p, v)| p.prob * v)
            .sum();
        self.memo.insert((t, b), (marginal, per_x.clone()));
        (marginal, per_x)
    }
}

pub fn brute_force_value(
    landscape: &LandscapeModel,
    thetas: &[ThetaPoint],
    t_max: usize,
    b_max: u64,
) -> Result<ExactValues> {
    validate(landscape, thetas, t_max, b_max)?;
    let mut s = Solver {
        landscape,
        thetas,
        memo: HashMap::new(),
    };
    let k = thetas.len();
    let mut per_x = Vec::with_capacity((t_max + 1) * (b_max as usize + 1) * k);
    let mut marginal = Vec::with_capacity((t_max + 1) * (b_max as usize + 1));
    for t in 0..=t_max {
        for b in 0..=b_max {
            let (m, px) = s.value(t, b);
            marginal.push(m);
            per_x.extend(px);
        }
    }
    Ok(ExactValues {
        t_max,
        b_max,
        k,
        per_x,
        marginal,
    })
}

/// Exact expected clicks of `policy(t, b, k)` started at `(t_max, budget)`.
/// Bids above the remaining budget are capped at it.
pub fn expected_clicks<F>(
    landscape: &LandscapeModel,
    thetas: &[ThetaPoint],
    t_max: usize,
    budget: u64,
    policy: F,
) -> Result<f64>
where
    F: Fn(usize, u64, usize) -> u32,
{
    validate(landscape, thetas, t_max, budget)?;
    let dmax = u64::from(landscape.delta_max());
    let cols = budget as usize + 1;
    let mut prev = vec![0.0; cols];
    for t in 1..=t_max {
        let mut cur = vec![0.0; cols];
        for b in 0..=budget {
            let mut total = 0.0;
            for (k, p) in thetas.iter().enumerate() {
                let a = u64::from(policy(t, b, k)).min(b);
                let mut v = 0.0;
                for d in 0..=dmax {
                    let m = landscape.prob(d as u32);
                    v += if d <= a {
                        m * (p.theta + prev[(b - d) as usize])
                    } else {
                        m * prev[b as usize]
                    };
                }
                total += p.prob * v;
            }
            cur[b as usize] = total;
        }
        prev = cur;
    }
    Ok(prev[budget as usize])
}
