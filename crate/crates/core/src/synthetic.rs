//! Seeded synthetic impression logs.
//!
//! Each record draws one value per categorical field. Field values carry a
//! click-logit effect and a log-price effect, partly correlated, so pricier
//! inventory tends to click more, as in real exchange logs. Used by tests,
//! benchmarks and the `generate` CLI command when no real log is at hand.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::log_data::LogRecord;

#[derive(Debug, Clone)]
pub struct SyntheticCampaign {
    pub n_records: usize,
    /// Number of distinct values per categorical field.
    pub field_sizes: Vec<usize>,
    pub base_ctr: f64,
    /// Std-dev of each field value's click-logit effect.
    pub click_effect_sd: f64,
    /// Median market price before field effects.
    pub price_median: f64,
    /// Std-dev of each field value's log-price effect.
    pub price_effect_sd: f64,
    /// Per-record log-price noise.
    pub price_noise_sd: f64,
    /// Weight of the click effect inside the price effect.
    pub price_click_coupling: f64,
    pub delta_max: u32,
    pub seed: u64,
}

impl Default for SyntheticCampaign {
    fn default() -> Self {
        Self {
            n_records: 100_000,
            field_sizes: vec![24, 7, 40, 12, 60, 5, 150],
            base_ctr: 0.004,
            click_effect_sd: 0.6,
            price_median: 60.0,
            price_effect_sd: 0.25,
            price_noise_sd: 0.45,
            price_click_coupling: 0.25,
            delta_max: 300,
            seed: 7,
        }
    }
}

struct Field {
    offset: u32,
    popularity: WeightedIndex<f64>,
    click: Vec<f64>,
    log_price: Vec<f64>,
}

impl SyntheticCampaign {
    pub fn feature_dim(&self) -> usize {
        self.field_sizes.iter().sum()
    }

    fn fields(&self, rng: &mut ChaCha8Rng) -> Vec<Field> {
        let click_n = Normal::new(0.0, self.click_effect_sd).unwrap();
        let price_n = Normal::new(0.0, self.price_effect_sd).unwrap();
        let mut offset = 0u32;
        self.field_sizes
            .iter()
            .map(|&n| {
                // Zipf-like popularity over the field's values.
                let weights: Vec<f64> = (1..=n).map(|r| 1.0 / (r as f64).powf(0.8)).collect();
                let click: Vec<f64> = (0..n).map(|_| click_n.sample(rng)).collect();
                let log_price = click
                    .iter()
                    .map(|c| self.price_click_coupling * c + price_n.sample(rng))
                    .collect();
                let f = Field {
                    offset,
                    popularity: WeightedIndex::new(weights).unwrap(),
                    click,
                    log_price,
                };
                offset += n as u32;
                f
            })
            .collect()
    }

    /// Generate `n_records` records. The first call with a given seed fixes
    /// the field effects, so [`Self::generate_split`] yields train/test logs
    /// from the same campaign.
    pub fn generate(&self) -> Vec<LogRecord> {
        self.generate_split(&[self.n_records]).pop().unwrap()
    }

    /// Several logs sharing one set of field effects.
    pub fn generate_split(&self, sizes: &[usize]) -> Vec<Vec<LogRecord>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let fields = self.fields(&mut rng);
        let noise = Normal::new(0.0, self.price_noise_sd).unwrap();
        let base_logit = (self.base_ctr / (1.0 - self.base_ctr)).ln();
        let mu = self.price_median.ln();
        sizes
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        let mut z = base_logit;
                        let mut lp = mu + noise.sample(&mut rng);
                        let mut features = Vec::with_capacity(fields.len());
                        for f in &fields {
                            let v = f.popularity.sample(&mut rng);
                            z += f.click[v];
                            lp += f.log_price[v];
                            features.push(f.offset + v as u32);
                        }
                        let p = 1.0 / (1.0 + (-z).exp());
                        let click = rng.random::<f64>() < p;
                        let price = lp.exp().round().clamp(0.0, f64::from(self.delta_max)) as u32;
                        LogRecord::new(click, price, features)
                    })
                    .collect()
            })
            .collect()
    }
}
