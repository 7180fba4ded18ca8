use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dp::DiffTable;
use crate::error::{format_err, Error, Result};

/// Fully connected tanh network with a linear output, mapping `(t, b)` to `D(t, b)`.
///
/// Inputs are scaled to `(t / t_scale, b / b_scale)`; the output is multiplied by
/// `out_scale`, so the layers themselves see targets of order one.
#[derive(Debug, Clone, PartialEq)]
pub struct NnModel {
    sizes: Vec<usize>,
    /// `weights[l]` is row-major `sizes[l+1] × sizes[l]`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    pub t_scale: f64,
    pub b_scale: f64,
    pub out_scale: f64,
}

pub const DEFAULT_LAYERS: [usize; 4] = [2, 30, 15, 1];

impl NnModel {
    pub fn from_parts(
        sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        t_scale: f64,
        b_scale: f64,
        out_scale: f64,
    ) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("network: {m}")));
        if sizes.len() < 2 || sizes[0] != 2 || *sizes.last().unwrap() != 1 || sizes.contains(&0) {
            return bad("layer sizes must run from 2 inputs to 1 output");
        }
        if weights.len() != sizes.len() - 1 || biases.len() != sizes.len() - 1 {
            return bad("one weight matrix and bias vector per layer");
        }
        for l in 0..weights.len() {
            if weights[l].len() != sizes[l] * sizes[l + 1] || biases[l].len() != sizes[l + 1] {
                return bad("layer shapes inconsistent");
            }
        }
        let finite = weights.iter().chain(&biases).flatten().all(|x| x.is_finite());
        if !finite || ![t_scale, b_scale, out_scale].iter().all(|s| s.is_finite() && *s > 0.0) {
            return bad("parameters must be finite and scales positive");
        }
        Ok(Self {
            sizes,
            weights,
            biases,
            t_scale,
            b_scale,
            out_scale,
        })
    }

    /// Glorot-uniform initialisation.
    pub fn init(sizes: &[usize], t_scale: f64, b_scale: f64, out_scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            weights.push((0..w[0] * w[1]).map(|_| rng.random_range(-limit..limit)).collect());
            biases.push(vec![0.0; w[1]]);
        }
        Self::from_parts(sizes.to_vec(), weights, biases, t_scale, b_scale, out_scale)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Raw network output `NN(t, b)`, unclamped.
    pub fn forward(&self, t: f64, b: f64) -> f64 {
        let mut act = vec![t / self.t_scale, b / self.b_scale];
        let mut next = Vec::with_capacity(32);
        let last = self.weights.len() - 1;
        for (l, (w, bias)) in self.weights.iter().zip(&self.biases).enumerate() {
            next.clear();
            let n_in = act.len();
            for (j, bj) in bias.iter().enumerate() {
                let row = &w[j * n_in..(j + 1) * n_in];
                let z = bj + row.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>();
                next.push(if l == last { z } else { z.tanh() });
            }
            std::mem::swap(&mut act, &mut next);
        }
        act[0] * self.out_scale
    }

    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "# rlb value-differential network v1");
        let sizes: Vec<String> = self.sizes.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "layers {}", sizes.join(" "));
        let _ = writeln!(s, "scales {} {} {}", self.t_scale, self.b_scale, self.out_scale);
        for (l, (wm, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let _ = writeln!(s, "weights {l}");
            for row in wm.chunks(self.sizes[l]) {
                let _ = writeln!(s, "{}", join(row));
            }
            let _ = writeln!(s, "bias {l}");
            let _ = writeln!(s, "{}", join(b));
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let lines: Vec<String> = r
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .collect();
        let mut it = lines.iter();
        let mut take = |prefix: &str| -> Result<Vec<f64>> {
            let line = it.next().ok_or_else(|| format_err("network", "truncated file"))?;
            let rest = if prefix.is_empty() {
                line.as_str()
            } else {
                line.strip_prefix(prefix)
                    .ok_or_else(|| format_err("network", format!("expected {prefix:?}, got {line:?}")))?
            };
            rest.split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| format_err("network", format!("bad number {x:?}"))))
                .collect()
        };
        let sizes: Vec<usize> = take("layers")?.into_iter().map(|x| x as usize).collect();
        let scales = take("scales")?;
        if scales.len() != 3 || sizes.len() < 2 {
            return Err(format_err("network", "bad header"));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            take(&format!("weights {l}"))?;
            let mut w = Vec::with_capacity(sizes[l] * sizes[l + 1]);
            for _ in 0..sizes[l + 1] {
                w.extend(take("")?);
            }
            weights.push(w);
            take(&format!("bias {l}"))?;
            biases.push(take("")?);
        }
        Self::from_parts(sizes, weights, biases, scales[0], scales[1], scales[2])
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

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// `max(NN(t, b), 0)`. The true differential is never negative.
pub fn nn_diff(model: &NnModel, t: usize, b: u64) -> f64 {
    model.forward(t as f64, b as f64).max(0.0)
}

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    /// Sub-grid episode length.
    pub t0: usize,
    /// Sub-grid budget; the network is fitted on `b in 0..=b0`.
    pub b0: u64,
    pub layers: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Cells drawn uniformly from the grid to train on; the whole grid when it is smaller.
    pub train_cells: usize,
    pub seed: u64,
}

impl ApproxConfig {
    pub fn new(t0: usize, b0: u64) -> Self {
        Self {
            t0,
            b0,
            layers: DEFAULT_LAYERS.to_vec(),
            learning_rate: 3e-3,
            epochs: 30,
            batch_size: 64,
            train_cells: 200_000,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NnFit {
    pub model: NnModel,
    /// RMSE of the raw network output over every cell of the sub-grid.
    pub rmse: f64,
    /// Mean squared error on the training cells after each accepted epoch.
    pub epoch_loss: Vec<f64>,
}

/// Per-layer scratch for one sample's forward and backward pass.
struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(sizes: &[usize]) -> Self {
        Self {
            acts: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            deltas: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// Output in scaled units (before `out_scale`), filling `s.acts`.
fn forward_scaled(m: &NnModel, x0: f64, x1: f64, s: &mut Scratch) -> f64 {
    s.acts[0][0] = x0;
    s.acts[0][1] = x1;
    let last = m.weights.len() - 1;
    for l in 0..m.weights.len() {
        let n_in = m.sizes[l];
        let (lo, hi) = s.acts.split_at_mut(l + 1);
        let input = &lo[l];
        let out = &mut hi[0];
        for j in 0..m.sizes[l + 1] {
            let row = &m.weights[l][j * n_in..(j + 1) * n_in];
            let mut z = m.biases[l][j];
            for k in 0..n_in {
                z += row[k] * input[k];
            }
            out[j] = if l == last { z } else { z.tanh() };
        }
    }
    s.acts[last + 1][0]
}

/// Accumulate d(0.5·err²)/dθ into the gradient buffers.
fn backward(m: &NnModel, err: f64, s: &mut Scratch, gw: &mut [Vec<f64>], gb: &mut [Vec<f64>]) {
    let n_layers = m.weights.len();
    s.deltas[n_layers][0] = err;
    for l in (0..n_layers).rev() {
        let n_in = m.sizes[l];
        let n_out = m.sizes[l + 1];
        for j in 0..n_out {
            let d = s.deltas[l + 1][j];
            gb[l][j] += d;
            let row = &mut gw[l][j * n_in..(j + 1) * n_in];
            for k in 0..n_in {
                row[k] += d * s.acts[l][k];
            }
        }
        if l > 0 {
            for k in 0..n_in {
                let mut acc = 0.0;
                for j in 0..n_out {
                    acc += m.weights[l][j * n_in + k] * s.deltas[l + 1][j];
                }
                let a = s.acts[l][k];
                s.deltas[l][k] = acc * (1.0 - a * a);
            }
        }
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(shapes: &[usize]) -> Self {
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn apply(&mut self, params: &mut [&mut Vec<f64>], grads: &[&Vec<f64>], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::B1.powi(self.step);
        let c2 = 1.0 - Self::B2.powi(self.step);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            for ((x, &gi), (m, v)) in p.iter_mut().zip(g.iter()).zip(self.m[i].iter_mut().zip(self.v[i].iter_mut())) {
                *m = Self::B1 * *m + (1.0 - Self::B1) * gi;
                *v = Self::B2 * *v + (1.0 - Self::B2) * gi * gi;
                *x -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
        }
    }
}

fn mse(m: &NnModel, cells: &[(f64, f64, f64)], s: &mut Scratch) -> f64 {
    let sum: f64 = cells
        .iter()
        .map(|&(x0, x1, y)| {
            let e = forward_scaled(m, x0, x1, s) - y;
            e * e
        })
        .sum();
    sum / cells.len() as f64
}

/// RMSE of the raw network against `D` over `t in 0..=t0`, `b in 0..=b0`.
pub fn grid_rmse(model: &NnModel, d: &DiffTable, t0: usize, b0: u64) -> f64 {
    let mut sum = 0.0;
    for t in 0..=t0 {
        let row = d.row(t);
        for b in 0..=b0 {
            let e = model.forward(t as f64, b as f64) - row[b as usize];
            sum += e * e;
        }
    }
    (sum / ((t0 + 1) as f64 * (b0 + 1) as f64)).sqrt()
}

/// Fit the network to `D` on the sub-grid with mini-batch Adam.
///
/// After every epoch the loss over all training cells is measured; an epoch
/// that raises it is rolled back and the learning rate halved, so the
/// recorded loss never increases.
pub fn train_nn(d: &DiffTable, cfg: &ApproxConfig) -> Result<NnFit> {
    if cfg.t0 < 1 || cfg.b0 < 1 {
        return Err(Error::InvalidArgument("T0 and B0 must be >= 1".into()));
    }
    if d.t_max() < cfg.t0 || d.b_max() < cfg.b0 + 1 {
        return Err(Error::InvalidArgument(format!(
            "diff table (T={}, B={}) does not cover the {}x{} sub-grid",
            d.t_max(),
            d.b_max(),
            cfg.t0,
            cfg.b0
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("epochs and batch size must be >= 1".into()));
    }
    let mut layers = cfg.layers.clone();
    if layers.first() != Some(&2) {
        layers.insert(0, 2);
    }
    if layers.last() != Some(&1) {
        layers.push(1);
    }

    let mut d_max = 0.0f64;
    for t in 0..=cfg.t0 {
        for &x in &d.row(t)[..=cfg.b0 as usize] {
            d_max = d_max.max(x);
        }
    }
    let out_scale = if d_max > 0.0 { d_max } else { 1.0 };
    let (t_scale, b_scale) = (cfg.t0 as f64, cfg.b0 as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_cells = (cfg.t0 + 1) * (cfg.b0 as usize + 1);
    let cell = |t: usize, b: u64| (t as f64 / t_scale, b as f64 / b_scale, d.get(t, b) / out_scale);
    let mut cells: Vec<(f64, f64, f64)> = if n_cells <= cfg.train_cells {
        (0..=cfg.t0)
            .flat_map(|t| (0..=cfg.b0).map(move |b| (t, b)))
            .map(|(t, b)| cell(t, b))
            .collect()
    } else {
        (0..cfg.train_cells)
            .map(|_| cell(rng.random_range(0..=cfg.t0), rng.random_range(0..=cfg.b0)))
            .collect()
    };

    let mut model = NnModel::init(&layers, t_scale, b_scale, out_scale, cfg.seed)?;
    let shapes: Vec<usize> = model
        .weights
        .iter()
        .map(Vec::len)
        .chain(model.biases.iter().map(Vec::len))
        .collect();
    let mut adam = Adam::new(&shapes);
    let mut scratch = Scratch::new(&layers);
    let mut gw: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut gb: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    let mut lr = cfg.learning_rate;
    let mut best = mse(&model, &cells, &mut scratch);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let saved = (model.clone(), adam.m.clone(), adam.v.clone(), adam.step);
        cells.shuffle(&mut rng);
        for batch in cells.chunks(cfg.batch_size) {
            gw.iter_mut().chain(gb.iter_mut()).for_each(|g| g.fill(0.0));
            for &(x0, x1, y) in batch {
                let err = forward_scaled(&model, x0, x1, &mut scratch) - y;
                backward(&model, err, &mut scratch, &mut gw, &mut gb);
            }
            let inv = 1.0 / batch.len() as f64;
            gw.iter_mut().chain(gb.iter_mut()).flatten().for_each(|g| *g *= inv);
            let (ws, bs) = (&mut model.weights, &mut model.biases);
            let mut params: Vec<&mut Vec<f64>> = ws.iter_mut().chain(bs.iter_mut()).collect();
            let grads: Vec<&Vec<f64>> = gw.iter().chain(gb.iter()).collect();
            adam.apply(&mut params, &grads, lr);
        }
        let loss = mse(&model, &cells, &mut scratch);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        if loss <= best {
            best = loss;
            epoch_loss.push(loss);
        } else {
            (model, adam.m, adam.v, adam.step) = saved;
            lr *= 0.5;
            epoch_loss.push(best);
        }
    }
    let rmse = grid_rmse(&model, d, cfg.t0, cfg.b0);
    Ok(NnFit {
        model,
        rmse,
        epoch_loss,
    })
}
