//! Per-symbol inference latency.
//!
//! Every repetition times one pass over the whole input on the calling
//! thread and divides by the number of symbols. Warmup passes are discarded.

use std::hint::black_box;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::classical::{EmaModel, Trellis};
use crate::error::{Error, Result};
use crate::esn::EsnModel;
use crate::neural::MlpModel;

pub const MIN_REPETITIONS: usize = 30;
const WARMUP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub median_us: f64,
    pub mean_us: f64,
    pub repetitions: usize,
    pub symbols: usize,
}

/// Time `step(k)` for `k in 0..symbols`, `repetitions` times.
pub fn measure_latency<F: FnMut(usize)>(mut step: F, symbols: usize, repetitions: usize) -> Result<LatencyStats> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::config("repetitions", format!("must be at least {MIN_REPETITIONS}")));
    }
    if symbols == 0 {
        return Err(Error::Empty("latency input"));
    }
    let mut per_symbol = Vec::with_capacity(repetitions);
    for rep in 0..WARMUP + repetitions {
        let t0 = Instant::now();
        for k in 0..symbols {
            step(k);
        }
        let ns = t0.elapsed().as_nanos() as f64;
        if rep >= WARMUP {
            // a zero reading only means the clock is coarser than the pass
            per_symbol.push((ns / symbols as f64 / 1e3).max(1e-6));
        }
    }
    let mean_us = per_symbol.iter().sum::<f64>() / repetitions as f64;
    per_symbol.sort_by(f64::total_cmp);
    let mid = repetitions / 2;
    let median_us = if repetitions % 2 == 0 {
        (per_symbol[mid - 1] + per_symbol[mid]) / 2.0
    } else {
        per_symbol[mid]
    };
    Ok(LatencyStats { median_us, mean_us, repetitions, symbols })
}

/// Reservoir update plus readout per symbol.
pub fn esn_latency(model: &EsnModel, u: &[f64], repetitions: usize) -> Result<LatencyStats> {
    let mut x = model.reservoir.zero_state();
    let mut scratch = model.reservoir.zero_state();
    measure_latency(
        |k| {
            model.reservoir.advance(&mut x, &mut scratch, u[k]);
            black_box(model.readout.score(&x) > model.readout.threshold);
        },
        u.len(),
        repetitions,
    )
}

/// One forward pass per symbol over its precomputed window.
pub fn mlp_latency(model: &MlpModel, windows: &DMatrix<f64>, repetitions: usize) -> Result<LatencyStats> {
    let cols: Vec<Vec<f64>> = windows.column_iter().map(|c| c.iter().copied().collect()).collect();
    measure_latency(|k| { black_box(model.predict_one(&cols[k]) > 0.5); }, cols.len(), repetitions)
}

pub fn fixed_latency(eta: f64, u: &[f64], repetitions: usize) -> Result<LatencyStats> {
    measure_latency(|k| { black_box(u[k] > eta); }, u.len(), repetitions)
}

pub fn ema_latency(model: &EmaModel, u: &[f64], repetitions: usize) -> Result<LatencyStats> {
    let mut baseline = model.i_init;
    let mut prev = 0.0;
    measure_latency(
        |k| {
            baseline = model.beta * baseline + (1.0 - model.beta) * prev;
            prev = u[k];
            black_box(u[k] > model.eta + baseline);
        },
        u.len(),
        repetitions,
    )
}

/// One add-compare-select trellis step per symbol.
pub fn viterbi_latency(trellis: &Trellis, u: &[f64], repetitions: usize) -> Result<LatencyStats> {
    let ns = trellis.states();
    let mut metric = vec![f64::INFINITY; ns];
    metric[0] = 0.0;
    let mut next = vec![0.0; ns];
    measure_latency(
        |k| {
            trellis.step(&metric, &mut next, u[k]);
            std::mem::swap(&mut metric, &mut next);
            black_box(&metric);
        },
        u.len(),
        repetitions,
    )
}

/// Bare reservoir update of a fresh `n_r`-unit reservoir driven by `u`.
pub fn reservoir_update_latency(res: &crate::esn::Reservoir, u: &[f64], repetitions: usize) -> Result<LatencyStats> {
    let mut x: DVector<f64> = res.zero_state();
    let mut scratch = res.zero_state();
    measure_latency(
        |k| {
            res.advance(&mut x, &mut scratch, u[k]);
            black_box(&x);
        },
        u.len(),
        repetitions,
    )
}
