//! Leaky-integrator echo state network with a ridge-regression readout.
//!
//! The state recursion is
//! `x_k = (1 - alpha) x_{k-1} + alpha tanh(W_res x_{k-1} + W_in u_k)`
//! with no input bias. Only the readout `w` and its bias are trained, so a
//! network with `n_r` neurons has exactly `n_r + 1` trainable parameters.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, spectral_radius, spectral_radius_dense};

/// Decision threshold of the standard detector.
pub const STANDARD_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirConfig {
    pub n_r: usize,
    pub spectral_radius: f64,
    pub leak_rate: f64,
    pub input_scaling: f64,
    /// Initial symbols excluded from readout fitting.
    pub washout: usize,
    pub ridge_lambda: f64,
    /// Fraction of non-zero recurrent weights.
    pub density: f64,
    pub rng_seed: u64,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        ReservoirConfig {
            n_r: 400,
            spectral_radius: 0.7,
            leak_rate: 0.3,
            input_scaling: 1.0,
            washout: 300,
            ridge_lambda: 1e-6,
            density: 1.0,
            rng_seed: 1,
        }
    }
}

impl ReservoirConfig {
    /// Standard detector: 300 neurons, otherwise the defaults.
    pub fn standard() -> Self {
        ReservoirConfig { n_r: 300, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 {
            return Err(Error::config("n_r", "must be at least 1"));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius < 1.0) {
            return Err(Error::config("spectral_radius", "must lie in (0, 1)"));
        }
        if !(self.leak_rate > 0.0 && self.leak_rate <= 1.0) {
            return Err(Error::config("leak_rate", "must lie in (0, 1]"));
        }
        if !self.input_scaling.is_finite() {
            return Err(Error::config("input_scaling", "must be finite"));
        }
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(Error::config("ridge_lambda", "must be finite and non-negative"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::config("density", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Fixed random input and recurrent weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Reservoir {
    w_in: DVector<f64>,
    w_res: DMatrix<f64>,
    config: ReservoirConfig,
}

impl Reservoir {
    /// Reservoir from explicit weights; `w_res` is used as given.
    pub fn from_weights(
        w_in: DVector<f64>,
        w_res: DMatrix<f64>,
        config: ReservoirConfig,
    ) -> Result<Self> {
        let n = w_in.len();
        if w_res.nrows() != n || w_res.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w_res.nrows() });
        }
        if n != config.n_r {
            return Err(Error::DimensionMismatch { expected: config.n_r, got: n });
        }
        Ok(Reservoir { w_in, w_res, config })
    }

    pub fn w_in(&self) -> &DVector<f64> {
        &self.w_in
    }

    pub fn w_res(&self) -> &DMatrix<f64> {
        &self.w_res
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn n_r(&self) -> usize {
        self.w_in.len()
    }

    pub fn zero_state(&self) -> DVector<f64> {
        DVector::zeros(self.n_r())
    }

    /// One step of the recursion, allocating the new state.
    pub fn update_state(&self, x_prev: &DVector<f64>, u: f64) -> DVector<f64> {
        let mut x = x_prev.clone();
        let mut scratch = DVector::zeros(self.n_r());
        self.advance(&mut x, &mut scratch, u);
        x
    }

    /// In-place step; `scratch` must have length `n_r`.
    pub fn advance(&self, x: &mut DVector<f64>, scratch: &mut DVector<f64>, u: f64) {
        let a = self.config.leak_rate;
        scratch.gemv(1.0, &self.w_res, x, 0.0);
        scratch.axpy(u, &self.w_in, 1.0);
        x.zip_apply(scratch, |xi, pre| *xi = (1.0 - a) * *xi + a * pre.tanh());
    }
}

/// Random reservoir rescaled to the configured spectral radius.
///
/// Entries of `W_in` are uniform on `[-s_in, s_in]`; entries of `W_res`
/// are uniform on `[-1, 1]` (kept with probability `density`) before the
/// rescale. The radius is measured by power iteration, falling back to a
/// Schur decomposition when the iteration does not settle.
pub fn init_reservoir(cfg: &ReservoirConfig) -> Result<Reservoir> {
    cfg.validate()?;
    let n = cfg.n_r;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let s = cfg.input_scaling.abs();
    let w_in = DVector::from_fn(n, |_, _| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 });
    let mut w_res = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
    if cfg.density < 1.0 {
        w_res.iter_mut().for_each(|w| {
            if rng.random::<f64>() >= cfg.density {
                *w = 0.0;
            }
        });
    }
    let measured = match spectral_radius(&w_res) {
        Ok(r) => r,
        Err(Error::NoConvergence { .. }) => spectral_radius_dense(&w_res),
        Err(e) => return Err(e),
    };
    if !(measured > 1e-12) {
        return Err(Error::NumericalFailure(format!(
            "recurrent matrix has spectral radius {measured:e}"
        )));
    }
    w_res *= cfg.spectral_radius / measured;
    Reservoir::from_weights(w_in, w_res, cfg.clone())
}

/// States `x_1..x_K` for inputs `u_1..u_K` from `x_0 = 0`; row `k - 1`
/// holds `x_k`.
pub fn collect_states(res: &Reservoir, u: &[f64]) -> DMatrix<f64> {
    let n = res.n_r();
    let mut states = DMatrix::zeros(u.len(), n);
    let mut x = res.zero_state();
    let mut scratch = DVector::zeros(n);
    for (k, &uk) in u.iter().enumerate() {
        res.advance(&mut x, &mut scratch, uk);
        states.row_mut(k).tr_copy_from(&x);
    }
    states
}

/// Linear readout with its decision threshold and the normalisation
/// statistics of the training features.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedReadout {
    pub w: DVector<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub norm_mean: f64,
    pub norm_std: f64,
    pub ridge_lambda: f64,
}

impl TrainedReadout {
    /// Trainable values: `n_r` weights plus the bias.
    pub fn param_count(&self) -> usize {
        self.w.len() + 1
    }

    pub fn score(&self, x: &DVector<f64>) -> f64 {
        self.w.dot(x) + self.bias
    }

    /// Scores of every row of `states`.
    pub fn score_rows(&self, states: &DMatrix<f64>) -> Result<Vec<f64>> {
        if states.ncols() != self.w.len() {
            return Err(Error::DimensionMismatch { expected: self.w.len(), got: states.ncols() });
        }
        Ok((states * &self.w).iter().map(|s| s + self.bias).collect())
    }
}

/// Ridge readout over `states[rows]`.
///
/// Minimises `|y - X w - b|^2 + lambda |w|^2`: the bias is fitted but not
/// penalised, so a huge `lambda` drives `w` to zero and `b` to `mean(y)`.
/// Solved on centred data through a Cholesky factorisation of
/// `X_c^T X_c + lambda I`. The threshold starts at 0.5.
pub fn train_readout(
    states: &DMatrix<f64>,
    labels: &[u8],
    rows: Range<usize>,
    lambda: f64,
) -> Result<TrainedReadout> {
    if labels.len() != states.nrows() {
        return Err(Error::LengthMismatch { left: states.nrows(), right: labels.len() });
    }
    if rows.end > states.nrows() || rows.is_empty() {
        return Err(Error::Empty("readout training rows"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::config("ridge_lambda", "must be non-negative"));
    }
    let x = states.rows(rows.start, rows.len());
    let y = DVector::from_iterator(rows.len(), labels[rows].iter().map(|&b| f64::from(b)));
    let x_mean = x.row_mean();
    let y_mean = y.mean();
    let mut xc = x.clone_owned();
    for mut row in xc.row_iter_mut() {
        row -= &x_mean;
    }
    let yc = y.add_scalar(-y_mean);
    let mut gram = xc.tr_mul(&xc);
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = xc.tr_mul(&yc);
    let w = solve_spd(gram, &rhs)?;
    let bias = y_mean - x_mean.transpose().dot(&w);
    Ok(TrainedReadout {
        w,
        bias,
        threshold: STANDARD_THRESHOLD,
        norm_mean: 0.0,
        norm_std: 1.0,
        ridge_lambda: lambda,
    })
}

/// Scores `w . x_k + b` for every symbol of `u`, starting from a zero state.
pub fn predict_scores(res: &Reservoir, ro: &TrainedReadout, u: &[f64]) -> Result<Vec<f64>> {
    if ro.w.len() != res.n_r() {
        return Err(Error::DimensionMismatch { expected: res.n_r(), got: ro.w.len() });
    }
    let mut x = res.zero_state();
    let mut scratch = DVector::zeros(res.n_r());
    Ok(u
        .iter()
        .map(|&uk| {
            res.advance(&mut x, &mut scratch, uk);
            ro.score(&x)
        })
        .collect())
}

/// `b_k = 1` iff `s_k > 0.5`.
pub fn decide_standard(scores: &[f64]) -> Vec<u8> {
    decide(scores, STANDARD_THRESHOLD)
}

/// `b_k = 1` iff `s_k > eta`.
pub fn decide(scores: &[f64], eta: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > eta)).collect()
}

/// Threshold minimising the empirical error rate of `s > eta`.
///
/// Candidates are `-inf`, the midpoints of consecutive sorted unique
/// scores, and `+inf`; ties go to the smallest candidate.
pub fn optimize_threshold(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let ones = labels.iter().filter(|&&b| b == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::SingleClassLabels);
    }
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // threshold below everything: all decided 1, errors are the zeros
    let mut errors = labels.len() - ones;
    let mut best = (errors, f64::NEG_INFINITY);
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            // moving eta above v turns this score into a 0 decision
            if pairs[i].1 == 1 {
                errors += 1;
            } else {
                errors -= 1;
            }
            i += 1;
        }
        let eta = if i < pairs.len() { 0.5 * (v + pairs[i].0) } else { f64::INFINITY };
        if errors < best.0 {
            best = (errors, eta);
        }
    }
    Ok(best.1)
}

/// Reservoir together with its trained readout.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnModel {
    pub reservoir: Reservoir,
    pub readout: TrainedReadout,
}

impl EsnModel {
    /// Fit on normalised inputs `u`.
    ///
    /// The reservoir runs over `u[..end]` in one pass, where `end` covers
    /// `fit` and `val`. The readout uses rows `fit` minus the first
    /// `washout` symbols of the sequence; with `val` present the threshold
    /// is the validation-optimal one, otherwise 0.5.
    pub fn fit(
        cfg: &ReservoirConfig,
        u: &[f64],
        labels: &[u8],
        fit: Range<usize>,
        val: Option<Range<usize>>,
    ) -> Result<EsnModel> {
        let end = val.as_ref().map_or(fit.end, |v| v.end.max(fit.end));
        if end > u.len() || labels.len() != u.len() {
            return Err(Error::LengthMismatch { left: u.len(), right: labels.len() });
        }
        let reservoir = init_reservoir(cfg)?;
        let states = collect_states(&reservoir, &u[..end]);
        let start = fit.start.max(cfg.washout).min(fit.end);
        let mut readout = train_readout(&states, &labels[..end], start..fit.end, cfg.ridge_lambda)?;
        if let Some(val) = val {
            let rows = states.rows(val.start, val.len()).clone_owned();
            let scores = readout.score_rows(&rows)?;
            readout.threshold = optimize_threshold(&scores, &labels[val])?;
        }
        Ok(EsnModel { reservoir, readout })
    }

    pub fn param_count(&self) -> usize {
        self.readout.param_count()
    }

    /// Scores of the whole sequence from a zero state.
    pub fn scores(&self, u: &[f64]) -> Result<Vec<f64>> {
        predict_scores(&self.reservoir, &self.readout, u)
    }

    pub fn decide(&self, scores: &[f64]) -> Vec<u8> {
        decide(scores, self.readout.threshold)
    }

    /// Write the versioned text model; see [`EsnModel::to_text`].
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<EsnModel> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Parse { context, message } => {
                Error::parse(format!("{}: {context}", path.display()), message)
            }
            other => other,
        })
    }

    /// Model file layout, one record per line, comma separated:
    ///
    /// ```text
    /// rcmc-esn-model,1
    /// config,<key>,<value>          one line per ReservoirConfig field
    /// scalar,<name>,<value>         bias, threshold, norm_mean, norm_std, ridge_lambda
    /// matrix,<name>,<rows>,<cols>   followed by <rows> lines of <cols> values
    /// ```
    ///
    /// Matrices are `w_in` (n_r x 1), `w_res` (n_r x n_r) and `w_out`
    /// (n_r x 1). Floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let c = &self.reservoir.config;
        let r = &self.readout;
        let mut s = String::from("rcmc-esn-model,1\n");
        for (k, v) in [
            ("n_r", c.n_r.to_string()),
            ("spectral_radius", c.spectral_radius.to_string()),
            ("leak_rate", c.leak_rate.to_string()),
            ("input_scaling", c.input_scaling.to_string()),
            ("washout", c.washout.to_string()),
            ("ridge_lambda", c.ridge_lambda.to_string()),
            ("density", c.density.to_string()),
            ("rng_seed", c.rng_seed.to_string()),
        ] {
            let _ = writeln!(s, "config,{k},{v}");
        }
        for (k, v) in [
            ("bias", r.bias),
            ("threshold", r.threshold),
            ("norm_mean", r.norm_mean),
            ("norm_std", r.norm_std),
            ("ridge_lambda", r.ridge_lambda),
        ] {
            let _ = writeln!(s, "scalar,{k},{v}");
        }
        write_matrix(&mut s, "w_in", self.reservoir.w_in.nrows(), 1, |i, _| self.reservoir.w_in[i]);
        let w = &self.reservoir.w_res;
        write_matrix(&mut s, "w_res", w.nrows(), w.ncols(), |i, j| w[(i, j)]);
        write_matrix(&mut s, "w_out", r.w.nrows(), 1, |i, _| r.w[i]);
        s
    }

    pub fn from_text(text: &str) -> Result<EsnModel> {
        let mut lines = text.lines().enumerate().peekable();
        let ctx = |n: usize| format!("line {}", n + 1);
        match lines.next() {
            Some((_, "rcmc-esn-model,1")) => {}
            _ => return Err(Error::parse("line 1", "expected header rcmc-esn-model,1")),
        }
        let mut cfg = ReservoirConfig::default();
        let mut scalars = std::collections::HashMap::new();
        let mut mats = std::collections::HashMap::new();
        while let Some((n, line)) = lines.next() {
            let parts: Vec<&str> = line.split(',').collect();
            match parts.as_slice() {
                ["config", key, value] => set_config(&mut cfg, key, value).map_err(|m| Error::parse(ctx(n), m))?,
                ["scalar", key, value] => {
                    let v: f64 = value.parse().map_err(|e| Error::parse(ctx(n), e))?;
                    scalars.insert(key.to_string(), v);
                }
                ["matrix", name, rows, cols] => {
                    let rows: usize = rows.parse().map_err(|e| Error::parse(ctx(n), e))?;
                    let cols: usize = cols.parse().map_err(|e| Error::parse(ctx(n), e))?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (rn, row) = lines
                            .next()
                            .ok_or_else(|| Error::parse(ctx(n), format!("matrix {name} truncated")))?;
                        let vals = row
                            .split(',')
                            .map(|v| v.parse::<f64>().map_err(|e| Error::parse(ctx(rn), e)))
                            .collect::<Result<Vec<_>>>()?;
                        if vals.len() != cols {
                            return Err(Error::parse(ctx(rn), format!("expected {cols} values")));
                        }
                        data.extend(vals);
                    }
                    mats.insert(name.to_string(), DMatrix::from_row_slice(rows, cols, &data));
                }
                [""] => {}
                _ => return Err(Error::parse(ctx(n), format!("unrecognised record {line:?}"))),
            }
        }
        let take = |name: &str| mats.get(name).cloned().ok_or_else(|| Error::parse("model", format!("missing matrix {name}")));
        let scalar = |name: &str| scalars.get(name).copied().ok_or_else(|| Error::parse("model", format!("missing scalar {name}")));
        let w_in = take("w_in")?.column(0).clone_owned();
        let w_res = take("w_res")?;
        let w_out = take("w_out")?.column(0).clone_owned();
        cfg.validate()?;
        let reservoir = Reservoir::from_weights(w_in, w_res, cfg)?;
        if w_out.len() != reservoir.n_r() {
            return Err(Error::DimensionMismatch { expected: reservoir.n_r(), got: w_out.len() });
        }
        let readout = TrainedReadout {
            w: w_out,
            bias: scalar("bias")?,
            threshold: scalar("threshold")?,
            norm_mean: scalar("norm_mean")?,
            norm_std: scalar("norm_std")?,
            ridge_lambda: scalar("ridge_lambda")?,
        };
        Ok(EsnModel { reservoir, readout })
    }
}

fn write_matrix(s: &mut String, name: &str, rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) {
    let _ = writeln!(s, "matrix,{name},{rows},{cols}");
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", at(i, j));
        }
        s.push('\n');
    }
}

fn set_config(cfg: &mut ReservoirConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let f = || value.parse::<f64>().map_err(|e| format!("{key}: {e}"));
    let u = || value.parse::<u64>().map_err(|e| format!("{key}: {e}"));
    match key {
        "n_r" => cfg.n_r = u()? as usize,
        "spectral_radius" => cfg.spectral_radius = f()?,
        "leak_rate" => cfg.leak_rate = f()?,
        "input_scaling" => cfg.input_scaling = f()?,
        "washout" => cfg.washout = u()? as usize,
        "ridge_lambda" => cfg.ridge_lambda = f()?,
        "density" => cfg.density = f()?,
        "rng_seed" => cfg.rng_seed = u()?,
        other => return Err(format!("unknown config key {other}")),
    }
    Ok(())
}
