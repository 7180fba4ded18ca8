//! Sparse logistic regression for click-through-rate estimation.
//!
//! The model holds one weight per one-hot feature plus a bias; a request's
//! pCTR is `sigmoid(bias + sum of active weights)`. Training runs either
//! plain per-sample SGD or per-coordinate FTRL-Proximal (McMahan et al.).

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{format_err, Error, Result};
use crate::log_data::LogRecord;

/// Lower/upper clamp that keeps predictions strictly inside (0, 1).
const P_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct CtrModel {
    weights: Vec<f64>,
    bias: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(P_EPS, 1.0 - P_EPS)
}

/// `log(1 + exp(z)) - y*z`, stable for large |z|.
fn logistic_loss(z: f64, y: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if y {
        softplus - z
    } else {
        softplus
    }
}

impl CtrModel {
    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_parts(vec![0.0; dim], 0.0)
    }

    pub fn from_parts(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("CTR model dimension must be > 0".into()));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("CTR model weights must be finite".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn logit(&self, features: &[u32]) -> Result<f64> {
        let mut z = self.bias;
        for &idx in features {
            let w = self.weights.get(idx as usize).ok_or(Error::FeatureOutOfRange {
                index: idx,
                dim: self.dim(),
            })?;
            z += w;
        }
        Ok(z)
    }

    /// pCTR of a request.
    pub fn predict(&self, features: &[u32]) -> Result<f64> {
        self.logit(features).map(sigmoid)
    }

    /// pCTR with features the model has never seen given zero weight.
    pub fn predict_known(&self, features: &[u32]) -> f64 {
        let z = self.bias
            + features
                .iter()
                .filter_map(|&i| self.weights.get(i as usize))
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let nnz = self.weights.iter().filter(|&&x| x != 0.0).count();
        let mut s = String::new();
        let _ = writeln!(s, "# rlb ctr model v1");
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "bias {}", self.bias);
        let _ = writeln!(s, "nnz {nnz}");
        for (i, &x) in self.weights.iter().enumerate() {
            if x != 0.0 {
                let _ = writeln!(s, "{i} {x}");
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |d: String| format_err("ctr model", d);
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            loop {
                let l = lines.next().ok_or_else(|| bad("unexpected end of file".into()))??;
                if !l.trim_start().starts_with('#') && !l.trim().is_empty() {
                    return Ok(l);
                }
            }
        };
        fn field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
            line.strip_prefix(key)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| format_err("ctr model", format!("expected `{key} <value>`, got {line:?}")))
        }
        let dim: usize = field(&next()?, "dim")?;
        let bias: f64 = field(&next()?, "bias")?;
        let nnz: usize = field(&next()?, "nnz")?;
        let mut weights = vec![0.0; dim];
        for _ in 0..nnz {
            let line = next()?;
            let (i, x) = line
                .split_once(' ')
                .ok_or_else(|| bad(format!("bad weight line {line:?}")))?;
            let i: usize = i.parse().map_err(|_| bad(format!("bad index {i:?}")))?;
            let x: f64 = x.trim().parse().map_err(|_| bad(format!("bad weight {x:?}")))?;
            *weights
                .get_mut(i)
                .ok_or_else(|| bad(format!("index {i} >= dim {dim}")))? = x;
        }
        Self::from_parts(weights, bias)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|source| Error::IoAt {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_text(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|source| Error::IoAt {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_text(std::io::BufReader::new(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Ftrl,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "ftrl" => Ok(Self::Ftrl),
            other => Err(Error::InvalidArgument(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// Training hyperparameters.
///
/// For SGD, `learning_rate` is the step size and `l2` the per-update ridge
/// penalty on active weights. For FTRL, `learning_rate` is alpha and `l2`
/// is lambda2 of the closed-form coordinate update.
#[derive(Debug, Clone)]
pub struct CtrHyper {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub ftrl_beta: f64,
    pub ftrl_l1: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Keep each negative example with this probability. `None` keeps all.
    pub negative_sampling: Option<f64>,
}

impl Default for CtrHyper {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Ftrl,
            learning_rate: 0.05,
            l2: 1.0,
            epochs: 3,
            ftrl_beta: 1.0,
            ftrl_l1: 0.0,
            seed: 1,
            shuffle: false,
            negative_sampling: None,
        }
    }
}

impl CtrHyper {
    pub fn sgd(learning_rate: f64, l2: f64, epochs: usize) -> Self {
        Self {
            optimizer: Optimizer::Sgd,
            learning_rate,
            l2,
            epochs,
            ..Self::default()
        }
    }
}

/// A trained model plus the mean training log-loss after each epoch.
#[derive(Debug, Clone)]
pub struct CtrFit {
    pub model: CtrModel,
    pub epoch_loss: Vec<f64>,
}

pub fn train_ctr(records: &[LogRecord], dim: usize, hyper: &CtrHyper) -> Result<CtrModel> {
    train_ctr_traced(records, dim, hyper).map(|f| f.model)
}

pub fn train_ctr_traced(records: &[LogRecord], dim: usize, hyper: &CtrHyper) -> Result<CtrFit> {
    if hyper.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be >= 1".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("feature dimension must be > 0".into()));
    }
    if records.is_empty() {
        return Err(Error::NoTrainingData);
    }
    if let Some(r) = records.iter().find(|r| r.features.last().is_some_and(|&i| i as usize >= dim)) {
        return Err(Error::FeatureOutOfRange {
            index: *r.features.last().unwrap(),
            dim,
        });
    }
    if let Some(rate) = hyper.negative_sampling {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidArgument("negative sampling rate must be in (0, 1]".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut learner: Box<dyn Learner> = match hyper.optimizer {
        Optimizer::Sgd => Box::new(Sgd::new(dim, hyper)),
        Optimizer::Ftrl => Box::new(Ftrl::new(dim, hyper)),
    };
    let mut epoch_loss = Vec::with_capacity(hyper.epochs);
    for epoch in 1..=hyper.epochs {
        if hyper.shuffle {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            let r = &records[i];
            if let Some(rate) = hyper.negative_sampling {
                if !r.click && rng.random::<f64>() >= rate {
                    continue;
                }
            }
            learner.update(&r.features, r.click);
        }
        let model = learner.snapshot();
        let loss = if model.bias.is_finite() && model.weights.iter().all(|w| w.is_finite()) {
            log_loss(&model, records, 0.0)?
        } else {
            f64::NAN
        };
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        epoch_loss.push(loss);
    }
    let model = learner.snapshot();
    Ok(CtrFit {
        model: CtrModel::from_parts(model.weights, model.bias)?,
        epoch_loss,
    })
}

trait Learner {
    fn update(&mut self, features: &[u32], click: bool);
    fn snapshot(&self) -> CtrModel;
}

struct Sgd {
    w: Vec<f64>,
    bias: f64,
    lr: f64,
    l2: f64,
}

impl Sgd {
    fn new(dim: usize, h: &CtrHyper) -> Self {
        Self {
            w: vec![0.0; dim],
            bias: 0.0,
            lr: h.learning_rate,
            l2: h.l2,
        }
    }
}

impl Learner for Sgd {
    fn update(&mut self, features: &[u32], click: bool) {
        let z = self.bias + features.iter().map(|&i| self.w[i as usize]).sum::<f64>();
        let g = sigmoid_raw(z) - f64::from(u8::from(click));
        self.bias -= self.lr * g;
        for &i in features {
            let w = &mut self.w[i as usize];
            *w -= self.lr * (g + self.l2 * *w);
        }
    }

    fn snapshot(&self) -> CtrModel {
        CtrModel {
            weights: self.w.clone(),
            bias: self.bias,
        }
    }
}

/// Unclamped sigmoid; used inside training so gradients vanish smoothly.
fn sigmoid_raw(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// FTRL-Proximal with the bias as coordinate `dim`.
struct Ftrl {
    z: Vec<f64>,
    n: Vec<f64>,
    alpha: f64,
    beta: f64,
    l1: f64,
    l2: f64,
}

impl Ftrl {
    fn new(dim: usize, h: &CtrHyper) -> Self {
        Self {
            z: vec![0.0; dim + 1],
            n: vec![0.0; dim + 1],
            alpha: h.learning_rate,
            beta: h.ftrl_beta,
            l1: h.ftrl_l1,
            l2: h.l2,
        }
    }

    fn weight(&self, i: usize) -> f64 {
        let z = self.z[i];
        if z.abs() <= self.l1 {
            0.0
        } else {
            -(z - z.signum() * self.l1) / ((self.beta + self.n[i].sqrt()) / self.alpha + self.l2)
        }
    }

    fn step(&mut self, i: usize, w: f64, g: f64) {
        let n_new = self.n[i] + g * g;
        let sigma = (n_new.sqrt() - self.n[i].sqrt()) / self.alpha;
        self.z[i] += g - sigma * w;
        self.n[i] = n_new;
    }
}

impl Learner for Ftrl {
    fn update(&mut self, features: &[u32], click: bool) {
        let bias_idx = self.z.len() - 1;
        let wb = self.weight(bias_idx);
        let mut z = wb;
        // Feature lists are short; recomputing weights keeps this allocation-free.
        for &i in features {
            z += self.weight(i as usize);
        }
        let g = sigmoid_raw(z) - f64::from(u8::from(click));
        self.step(bias_idx, wb, g);
        for &i in features {
            let w = self.weight(i as usize);
            self.step(i as usize, w, g);
        }
    }

    fn snapshot(&self) -> CtrModel {
        let dim = self.z.len() - 1;
        CtrModel {
            weights: (0..dim).map(|i| self.weight(i)).collect(),
            bias: self.weight(dim),
        }
    }
}

/// Mean log-loss plus `0.5 * l2 * |w|^2` (bias unregularised).
pub fn log_loss(model: &CtrModel, records: &[LogRecord], l2: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::NoTrainingData);
    }
    let mut sum = 0.0;
    for r in records {
        sum += logistic_loss(model.logit(&r.features)?, r.click);
    }
    let reg = 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    Ok(sum / records.len() as f64 + reg)
}

/// Analytic gradient of [`log_loss`] with respect to (weights, bias).
pub fn log_loss_gradient(model: &CtrModel, records: &[LogRecord], l2: f64) -> Result<(Vec<f64>, f64)> {
    if records.is_empty() {
        return Err(Error::NoTrainingData);
    }
    let n = records.len() as f64;
    let mut gw: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    for r in records {
        let resid = (sigmoid_raw(model.logit(&r.features)?) - f64::from(u8::from(r.click))) / n;
        gb += resid;
        for &i in &r.features {
            gw[i as usize] += resid;
        }
    }
    Ok((gw, gb))
}

/// Area under the ROC curve: the probability a random positive outscores a
/// random negative, ties counted half.
pub fn auc_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mann-Whitney U with mid-ranks for tied groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let mid_rank = (i + j + 1) as f64 / 2.0;
        let pos_in_group = idx[i..j].iter().filter(|&&k| labels[k]).count();
        rank_sum_pos += mid_rank * pos_in_group as f64;
        i = j;
    }
    let p = n_pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

pub fn auc(model: &CtrModel, records: &[LogRecord]) -> Result<f64> {
    let scores = records
        .iter()
        .map(|r| model.predict(&r.features))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = records.iter().map(|r| r.click).collect();
    auc_scores(&scores, &labels)
}
