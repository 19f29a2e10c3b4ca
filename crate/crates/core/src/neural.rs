//! Shallow feedforward baselines over raw occupancy windows.
//!
//! Hidden layers use ReLU and the single output neuron a logistic sigmoid.
//! Training is plain mini-batch gradient descent on binary cross-entropy.
//! Windows are z-scored with one mean and standard deviation taken over all
//! training samples.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Trace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    /// Input window in samples.
    pub window: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            window: 100,
            hidden: vec![128, 64],
            learning_rate: 0.05,
            epochs: 60,
            batch_size: 32,
            rng_seed: 1,
        }
    }
}

impl MlpConfig {
    /// Two hidden layers of 128 and 64 units.
    pub fn mlp(window: usize) -> Self {
        MlpConfig { window, ..Self::default() }
    }

    /// Two hidden layers of 32 and 16 units.
    pub fn ann(window: usize) -> Self {
        MlpConfig { window, hidden: vec![32, 16], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer sizes must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        Ok(())
    }

    /// `sum(fan_in * fan_out + fan_out)` over all layers.
    pub fn param_count(&self) -> usize {
        let mut dims = vec![self.window];
        dims.extend(&self.hidden);
        dims.push(1);
        dims.windows(2).map(|d| d[0] * d[1] + d[1]).sum()
    }
}

/// Windows of the last `w` samples ending at every symbol boundary, one
/// column per symbol in chronological order, left-padded with zeros.
pub fn windowize(trace: &Trace, w: usize) -> Result<(DMatrix<f64>, Vec<u8>)> {
    let samples = trace.bound_counts();
    let windows = windowize_samples(&samples, trace.samples_per_symbol(), w)?;
    Ok((windows, trace.bits.clone()))
}

/// [`windowize`] over a bare sample vector.
pub fn windowize_samples(samples: &[f64], samples_per_symbol: usize, w: usize) -> Result<DMatrix<f64>> {
    if w == 0 {
        return Err(Error::config("window", "must be at least 1"));
    }
    if w > samples.len() {
        return Err(Error::WindowTooLarge { window: w, available: samples.len() });
    }
    if samples_per_symbol == 0 || samples.len() % samples_per_symbol != 0 {
        return Err(Error::MalformedTrace("sample count is not a whole number of symbols".into()));
    }
    let n = samples.len() / samples_per_symbol;
    let mut out = DMatrix::zeros(w, n);
    for k in 0..n {
        let end = (k + 1) * samples_per_symbol;
        let start = end.saturating_sub(w);
        let pad = w - (end - start);
        for (i, v) in samples[start..end].iter().enumerate() {
            out[(pad + i, k)] = *v;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
struct Layer {
    w: DMatrix<f64>,
    b: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    pub norm_mean: f64,
    pub norm_std: f64,
}

/// Activations of one forward pass: `pre[l]` and `act[l]` for every layer,
/// with `act[0]` the input.
struct Forward {
    pre: Vec<DMatrix<f64>>,
    act: Vec<DMatrix<f64>>,
}

impl MlpModel {
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].w.ncols()];
        d.extend(self.layers.iter().map(|l| l.w.nrows()));
        d
    }

    pub fn window(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters flattened layer by layer, weights (column-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend(l.w.iter());
            p.extend(l.b.iter());
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = p[i];
                i += 1;
            }
        }
    }

    fn forward(&self, x: &DMatrix<f64>) -> Forward {
        let mut act = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = &l.w * act.last().unwrap();
            for mut col in z.column_iter_mut() {
                col += &l.b;
            }
            let a = if i + 1 == self.layers.len() {
                z.map(sigmoid)
            } else {
                z.map(|v| v.max(0.0))
            };
            pre.push(z);
            act.push(a);
        }
        Forward { pre, act }
    }

    fn normalise(&self, windows: &DMatrix<f64>) -> DMatrix<f64> {
        windows.map(|v| (v - self.norm_mean) / self.norm_std)
    }

    /// Mean binary cross-entropy on already-normalised inputs.
    pub fn loss(&self, x: &DMatrix<f64>, y: &[f64]) -> f64 {
        let f = self.forward(x);
        let z = f.pre.last().unwrap();
        let n = y.len() as f64;
        z.iter().zip(y).map(|(&z, &t)| softplus(z) - t * z).sum::<f64>() / n
    }

    /// Gradient of [`MlpModel::loss`] in the order of [`MlpModel::params`].
    pub fn gradient(&self, x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
        let (gw, gb) = self.backprop(x, y);
        let mut g = Vec::with_capacity(self.param_count());
        for (w, b) in gw.iter().zip(&gb) {
            g.extend(w.iter());
            g.extend(b.iter());
        }
        g
    }

    fn backprop(&self, x: &DMatrix<f64>, y: &[f64]) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let f = self.forward(x);
        let n = y.len() as f64;
        let last = self.layers.len() - 1;
        let mut delta = f.act[last + 1].clone();
        for (d, &t) in delta.iter_mut().zip(y) {
            *d = (*d - t) / n;
        }
        let mut gw = vec![DMatrix::zeros(0, 0); self.layers.len()];
        let mut gb = vec![DVector::zeros(0); self.layers.len()];
        for l in (0..=last).rev() {
            gw[l] = &delta * f.act[l].transpose();
            gb[l] = delta.column_sum();
            if l > 0 {
                let mut back = self.layers[l].w.tr_mul(&delta);
                back.zip_apply(&f.pre[l - 1], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (gw, gb)
    }

    /// Sigmoid outputs, one per window column.
    pub fn predict(&self, windows: &DMatrix<f64>) -> Result<Vec<f64>> {
        if windows.nrows() != self.window() {
            return Err(Error::DimensionMismatch { expected: self.window(), got: windows.nrows() });
        }
        let f = self.forward(&self.normalise(windows));
        Ok(f.act.last().unwrap().iter().copied().collect())
    }

    /// Score of a single window, for latency measurement.
    pub fn predict_one(&self, window: &[f64]) -> f64 {
        let mut a = DVector::from_iterator(window.len(), window.iter().map(|v| (v - self.norm_mean) / self.norm_std));
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = &l.w * &a + &l.b;
            if i == last {
                z.apply(|v| *v = sigmoid(*v));
            } else {
                z.apply(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a[0]
    }

    /// Versioned flat text format:
    ///
    /// ```text
    /// rcmc-mlp,1
    /// norm,<mean>,<std>
    /// dims,<d0>,<d1>,...,1
    /// layer,<fan_out>,<fan_in>        then fan_out lines of weights (row-major)
    /// bias,<b_0>,...,<b_{fan_out-1}>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::from("rcmc-mlp,1\n");
        let _ = writeln!(s, "norm,{},{}", self.norm_mean, self.norm_std);
        let dims: Vec<String> = self.dims().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "dims,{}", dims.join(","));
        for l in &self.layers {
            let _ = writeln!(s, "layer,{},{}", l.w.nrows(), l.w.ncols());
            for r in 0..l.w.nrows() {
                let row: Vec<String> = l.w.row(r).iter().map(|v| v.to_string()).collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            let b: Vec<String> = l.b.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "bias,{}", b.join(","));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<MlpModel> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::parse("mlp model", format!("truncated before {what}")))
        };
        let fields = |line: &str| line.split(',').map(str::to_string).collect::<Vec<_>>();
        let num = |n: usize, v: &str| v.parse::<f64>().map_err(|e| Error::parse(format!("line {}", n + 1), e));
        let (_, head) = next("header")?;
        if head != "rcmc-mlp,1" {
            return Err(Error::parse("line 1", "expected header rcmc-mlp,1"));
        }
        let (n, norm) = next("norm")?;
        let norm = fields(norm);
        if norm.len() != 3 || norm[0] != "norm" {
            return Err(Error::parse(format!("line {}", n + 1), "expected norm,<mean>,<std>"));
        }
        let (norm_mean, norm_std) = (num(n, &norm[1])?, num(n, &norm[2])?);
        let (n, dims) = next("dims")?;
        let dims = fields(dims);
        if dims.first().map(String::as_str) != Some("dims") || dims.len() < 3 {
            return Err(Error::parse(format!("line {}", n + 1), "expected dims line"));
        }
        let dims: Vec<usize> = dims[1..]
            .iter()
            .map(|d| d.parse::<usize>().map_err(|e| Error::parse(format!("line {}", n + 1), e)))
            .collect::<Result<_>>()?;
        let mut layers = Vec::new();
        for pair in dims.windows(2) {
            let (n, head) = next("layer")?;
            if head != format!("layer,{},{}", pair[1], pair[0]) {
                return Err(Error::parse(format!("line {}", n + 1), format!("expected layer,{},{}", pair[1], pair[0])));
            }
            let mut data = Vec::with_capacity(pair[0] * pair[1]);
            for _ in 0..pair[1] {
                let (n, row) = next("weights")?;
                let vals = row.split(',').map(|v| num(n, v)).collect::<Result<Vec<_>>>()?;
                if vals.len() != pair[0] {
                    return Err(Error::parse(format!("line {}", n + 1), format!("expected {} weights", pair[0])));
                }
                data.extend(vals);
            }
            let (n, bias) = next("bias")?;
            let bias = fields(bias);
            if bias.first().map(String::as_str) != Some("bias") || bias.len() != pair[1] + 1 {
                return Err(Error::parse(format!("line {}", n + 1), "bad bias line"));
            }
            let b = bias[1..].iter().map(|v| num(n, v)).collect::<Result<Vec<_>>>()?;
            layers.push(Layer { w: DMatrix::from_row_slice(pair[1], pair[0], &data), b: DVector::from_vec(b) });
        }
        Ok(MlpModel { layers, norm_mean, norm_std })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<MlpModel> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Fresh network with weights and biases uniform on
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn build(cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut dims = vec![cfg.window];
    dims.extend(&cfg.hidden);
    dims.push(1);
    let layers = dims
        .windows(2)
        .map(|d| {
            let r = 1.0 / (d[0] as f64).sqrt();
            Layer {
                w: DMatrix::from_fn(d[1], d[0], |_, _| rng.random_range(-r..r)),
                b: DVector::from_fn(d[1], |_, _| rng.random_range(-r..r)),
            }
        })
        .collect();
    Ok(MlpModel { layers, norm_mean: 0.0, norm_std: 1.0 })
}

/// Fit normalisation on `windows` and run mini-batch gradient descent.
///
/// Returns the trained model and its final full-data training loss.
pub fn train(model: &MlpModel, windows: &DMatrix<f64>, labels: &[u8], cfg: &MlpConfig) -> Result<(MlpModel, f64)> {
    cfg.validate()?;
    if windows.nrows() != model.window() {
        return Err(Error::DimensionMismatch { expected: model.window(), got: windows.nrows() });
    }
    if windows.ncols() != labels.len() {
        return Err(Error::LengthMismatch { left: windows.ncols(), right: labels.len() });
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClassLabels);
    }
    let mut m = model.clone();
    let n = windows.len() as f64;
    let mean = windows.iter().sum::<f64>() / n;
    let std = (windows.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    m.norm_mean = mean;
    m.norm_std = if std > 0.0 { std } else { 1.0 };
    let x = m.normalise(windows);
    let y: Vec<f64> = labels.iter().map(|&b| f64::from(b)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select_columns(batch);
            let yb: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let (gw, gb) = m.backprop(&xb, &yb);
            for (l, (w, b)) in m.layers.iter_mut().zip(gw.iter().zip(&gb)) {
                l.w -= w * cfg.learning_rate;
                l.b.axpy(-cfg.learning_rate, b, 1.0);
            }
        }
        if m.layers.iter().any(|l| !l.w.iter().all(|v| v.is_finite())) {
            return Err(Error::Divergence { epoch });
        }
    }
    let loss = m.loss(&x, &y);
    if !loss.is_finite() {
        return Err(Error::Divergence { epoch: cfg.epochs });
    }
    Ok((m, loss))
}

/// `b_k = 1` iff `score > 0.5`.
pub fn decide(scores: &[f64]) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > 0.5)).collect()
}
