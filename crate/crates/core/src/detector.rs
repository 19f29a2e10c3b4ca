//! Fitted detectors behind one interface, with on-disk persistence.
//!
//! Every detector consumes the whole trace of a sequence and returns one
//! decision (and, where the detector has one, a soft score) per symbol.
//! Fitting sees only the symbol ranges it is handed.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::bench::{Detector, DetectorConfig, Split};
use crate::classical::{
    default_eta_grid, detect_ema, detect_fixed, detect_viterbi, estimate_cir, fit_ema, fit_fixed, CirEstimate,
    EmaModel, FixedThresholdModel, Trellis,
};
use crate::error::{Error, Result};
use crate::esn::{EsnModel, ReservoirConfig};
use crate::features::{apply_zscore, extract_features, fit_zscore, FeatureSeq};
use crate::latency::{self, LatencyStats};
use crate::neural::{self, MlpConfig, MlpModel};
use crate::sim::Trace;

/// Trace with its raw per-symbol features.
pub struct Prepared<'a> {
    pub trace: &'a Trace,
    pub raw: FeatureSeq,
}

impl<'a> Prepared<'a> {
    pub fn new(trace: &'a Trace) -> Result<Self> {
        Ok(Prepared { trace, raw: extract_features(trace)? })
    }

    pub fn bits(&self) -> &[u8] {
        &self.trace.bits
    }

    fn normalised(&self, mean: f64, std: f64) -> Result<Vec<f64>> {
        Ok(apply_zscore(&self.raw, mean, std)?.u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Fitted {
    PeakFixed { model: FixedThresholdModel, mean: f64, std: f64 },
    AdaptiveEma { model: EmaModel, mean: f64, std: f64 },
    MapViterbi { cir: CirEstimate },
    Mlp { detector: Detector, model: MlpModel },
    Rc { detector: Detector, model: EsnModel },
}

/// Decisions and optional scores over the whole sequence.
pub struct Output {
    pub decisions: Vec<u8>,
    pub scores: Option<Vec<f64>>,
}

/// Seeds consumed by [`Fitted::fit`].
#[derive(Clone, Copy, Debug)]
pub struct FitSeeds {
    pub reservoir: u64,
    pub network: u64,
}

fn ema_margin(m: &EmaModel, u: &[f64]) -> Vec<f64> {
    let mut baseline = m.i_init;
    let mut prev = 0.0;
    u.iter()
        .map(|&x| {
            baseline = m.beta * baseline + (1.0 - m.beta) * prev;
            prev = x;
            x - baseline
        })
        .collect()
}

impl Fitted {
    pub fn fit(d: Detector, p: &Prepared, det: &DetectorConfig, split: &Split, seeds: FitSeeds) -> Result<Fitted> {
        let train = split.train.clone();
        let bits = p.bits();
        let zscore = || -> Result<(f64, f64, Vec<f64>)> {
            let (mean, std) = fit_zscore(&p.raw.slice(train.clone()))?;
            Ok((mean, std, p.normalised(mean, std)?))
        };
        Ok(match d {
            Detector::PeakFixed => {
                let (mean, std, u) = zscore()?;
                let seq = FeatureSeq::new(u[train.clone()].to_vec(), Some(bits[train].to_vec()))?;
                Fitted::PeakFixed { model: fit_fixed(&seq)?, mean, std }
            }
            Detector::AdaptiveEma => {
                let (mean, std, u) = zscore()?;
                let seq = FeatureSeq::new(u[train.clone()].to_vec(), Some(bits[train].to_vec()))?;
                let model = fit_ema(&seq, &det.ema_beta_grid, &default_eta_grid(&seq.u))?;
                Fitted::AdaptiveEma { model, mean, std }
            }
            Detector::MapViterbi => Fitted::MapViterbi {
                cir: estimate_cir(&p.raw.u[train.clone()], &bits[train], det.viterbi_memory)?,
            },
            Detector::Mlp | Detector::Ann => {
                let base = if d == Detector::Mlp { &det.mlp } else { &det.ann };
                let window = if base.window == 0 { p.trace.samples_per_symbol() } else { base.window };
                let cfg = MlpConfig { window, rng_seed: seeds.network, ..base.clone() };
                let (windows, _) = neural::windowize(p.trace, window)?;
                let cols: Vec<usize> = train.clone().collect();
                let (model, _) = neural::train(&neural::build(&cfg)?, &windows.select_columns(&cols), &bits[train], &cfg)?;
                Fitted::Mlp { detector: d, model }
            }
            Detector::Rc | Detector::RcIsi => {
                let (base, val) = if d == Detector::Rc {
                    (&det.rc, None)
                } else {
                    (&det.rc_isi, Some(split.val.clone()))
                };
                let (mean, std, u) = zscore()?;
                let cfg = ReservoirConfig { rng_seed: seeds.reservoir, ..base.clone() };
                let mut model = EsnModel::fit(&cfg, &u, bits, train, val)?;
                model.readout.norm_mean = mean;
                model.readout.norm_std = std;
                Fitted::Rc { detector: d, model }
            }
        })
    }

    pub fn detector(&self) -> Detector {
        match self {
            Fitted::PeakFixed { .. } => Detector::PeakFixed,
            Fitted::AdaptiveEma { .. } => Detector::AdaptiveEma,
            Fitted::MapViterbi { .. } => Detector::MapViterbi,
            Fitted::Mlp { detector, .. } | Fitted::Rc { detector, .. } => *detector,
        }
    }

    /// Trainable values; the classical detectors report 0.
    pub fn param_count(&self) -> usize {
        match self {
            Fitted::Mlp { model, .. } => model.param_count(),
            Fitted::Rc { model, .. } => model.param_count(),
            _ => 0,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Fitted::PeakFixed { model, .. } => Some(model.eta),
            Fitted::AdaptiveEma { model, .. } => Some(model.eta),
            Fitted::MapViterbi { .. } => None,
            Fitted::Mlp { .. } => Some(0.5),
            Fitted::Rc { model, .. } => Some(model.readout.threshold),
        }
    }

    pub fn notes(&self) -> String {
        match self {
            Fitted::PeakFixed { .. } => String::new(),
            Fitted::AdaptiveEma { model, .. } => format!("beta={}", model.beta),
            Fitted::MapViterbi { cir } => format!("memory={}", cir.memory()),
            Fitted::Mlp { model, .. } => format!("window={}", model.window()),
            Fitted::Rc { model, .. } => {
                format!("lambda={};n_r={}", model.readout.ridge_lambda, model.reservoir.n_r())
            }
        }
    }

    fn windows(&self, p: &Prepared) -> Result<DMatrix<f64>> {
        match self {
            Fitted::Mlp { model, .. } => Ok(neural::windowize(p.trace, model.window())?.0),
            _ => Err(Error::config("detector", "not a window detector")),
        }
    }

    /// Run over the whole sequence from a cold start.
    pub fn run(&self, p: &Prepared) -> Result<Output> {
        Ok(match self {
            Fitted::PeakFixed { model, mean, std } => {
                let u = p.normalised(*mean, *std)?;
                Output { decisions: detect_fixed(model, &u), scores: Some(u) }
            }
            Fitted::AdaptiveEma { model, mean, std } => {
                let u = p.normalised(*mean, *std)?;
                Output { decisions: detect_ema(model, &u), scores: Some(ema_margin(model, &u)) }
            }
            Fitted::MapViterbi { cir } => Output { decisions: detect_viterbi(&p.raw.u, cir)?, scores: None },
            Fitted::Mlp { model, .. } => {
                let s = model.predict(&self.windows(p)?)?;
                Output { decisions: neural::decide(&s), scores: Some(s) }
            }
            Fitted::Rc { model, .. } => {
                let u = p.normalised(model.readout.norm_mean, model.readout.norm_std)?;
                let s = model.scores(&u)?;
                Output { decisions: model.decide(&s), scores: Some(s) }
            }
        })
    }

    /// Per-symbol inference latency over `range`.
    pub fn latency(&self, p: &Prepared, range: Range<usize>, repetitions: usize) -> Result<LatencyStats> {
        match self {
            Fitted::PeakFixed { model, mean, std } => {
                latency::fixed_latency(model.eta, &p.normalised(*mean, *std)?[range], repetitions)
            }
            Fitted::AdaptiveEma { model, mean, std } => {
                latency::ema_latency(model, &p.normalised(*mean, *std)?[range], repetitions)
            }
            Fitted::MapViterbi { cir } => latency::viterbi_latency(&Trellis::new(cir)?, &p.raw.u[range], repetitions),
            Fitted::Mlp { model, .. } => {
                let cols: Vec<usize> = range.collect();
                latency::mlp_latency(model, &self.windows(p)?.select_columns(&cols), repetitions)
            }
            Fitted::Rc { model, .. } => {
                let u = p.normalised(model.readout.norm_mean, model.readout.norm_std)?;
                latency::esn_latency(model, &u[range], repetitions)
            }
        }
    }

    pub fn file_name(d: Detector) -> String {
        format!("{}.model", d.name())
    }

    pub fn path_in(dir: &Path, d: Detector) -> PathBuf {
        dir.join(Self::file_name(d))
    }

    /// Write the model to `dir/<detector>.model`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = Self::path_in(dir, self.detector());
        let text = match self {
            Fitted::PeakFixed { model, mean, std } => {
                format!("rcmc-peak-fixed,1\neta,{}\nnorm,{mean},{std}\n", model.eta)
            }
            Fitted::AdaptiveEma { model, mean, std } => format!(
                "rcmc-adaptive-ema,1\neta,{}\nbeta,{}\ni_init,{}\nnorm,{mean},{std}\n",
                model.eta, model.beta, model.i_init
            ),
            Fitted::MapViterbi { cir } => {
                cir.save(&path)?;
                return Ok(path);
            }
            Fitted::Mlp { model, .. } => model.to_text(),
            Fitted::Rc { model, .. } => model.to_text(),
        };
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(dir: &Path, d: Detector) -> Result<Fitted> {
        let path = Self::path_in(dir, d);
        let ctx = path.display().to_string();
        Ok(match d {
            Detector::MapViterbi => Fitted::MapViterbi { cir: CirEstimate::load(&path)? },
            Detector::Mlp | Detector::Ann => Fitted::Mlp { detector: d, model: MlpModel::load(&path)? },
            Detector::Rc | Detector::RcIsi => Fitted::Rc { detector: d, model: EsnModel::load(&path)? },
            Detector::PeakFixed | Detector::AdaptiveEma => {
                let text = fs::read_to_string(&path)?;
                let mut lines = text.lines();
                let want = if d == Detector::PeakFixed { "rcmc-peak-fixed,1" } else { "rcmc-adaptive-ema,1" };
                if lines.next() != Some(want) {
                    return Err(Error::parse(ctx, format!("expected header {want}")));
                }
                let mut kv = std::collections::HashMap::new();
                for (n, line) in lines.enumerate() {
                    let mut f = line.split(',');
                    let key = f.next().unwrap_or_default().to_string();
                    let vals = f
                        .map(|v| v.parse::<f64>().map_err(|e| Error::parse(format!("{ctx} line {}", n + 2), e)))
                        .collect::<Result<Vec<f64>>>()?;
                    kv.insert(key, vals);
                }
                let get = |k: &str, i: usize| {
                    kv.get(k).and_then(|v| v.get(i).copied()).ok_or_else(|| Error::parse(ctx.clone(), format!("missing {k}")))
                };
                let (mean, std) = (get("norm", 0)?, get("norm", 1)?);
                if d == Detector::PeakFixed {
                    Fitted::PeakFixed { model: FixedThresholdModel { eta: get("eta", 0)? }, mean, std }
                } else {
                    let model = EmaModel { eta: get("eta", 0)?, beta: get("beta", 0)?, i_init: get("i_init", 0)? };
                    Fitted::AdaptiveEma { model, mean, std }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_sequence, SimConfig};

    #[test]
    fn every_detector_survives_a_save_load_cycle() {
        let side = 4e-5;
        let c = side / 2.0;
        let sim = SimConfig {
            domain_side: side,
            rx_init: [c, c, c],
            tx_init: [c + 1e-5, c, c],
            d_mol: 1e-10,
            n_per_bit: 200,
            receptors: 50,
            k_b: 20.0,
            t_phys: 1e-2,
            t_b: 1.0,
            ..SimConfig::default()
        };
        let bits: Vec<u8> = (0..60).map(|k| ((k * 7 + k / 3) % 2) as u8).collect();
        let trace = run_sequence(&sim, &bits).unwrap();
        let p = Prepared::new(&trace).unwrap();
        let split = Split::new(60, [0.6, 0.2, 0.2]).unwrap();
        let small = ReservoirConfig { n_r: 12, washout: 4, ..ReservoirConfig::default() };
        let det = DetectorConfig {
            rc: small.clone(),
            rc_isi: small,
            mlp: MlpConfig { hidden: vec![4], epochs: 3, ..MlpConfig::mlp(0) },
            ann: MlpConfig { hidden: vec![3], epochs: 3, ..MlpConfig::ann(0) },
            viterbi_memory: 3,
            ..DetectorConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        for d in Detector::ALL {
            let f = Fitted::fit(d, &p, &det, &split, FitSeeds { reservoir: 3, network: 4 }).unwrap();
            assert_eq!(f.detector(), d);
            f.save(dir.path()).unwrap();
            let back = Fitted::load(dir.path(), d).unwrap();
            assert_eq!(back, f, "{d}");
            let (a, b) = (f.run(&p).unwrap(), back.run(&p).unwrap());
            assert_eq!(a.decisions, b.decisions);
            assert_eq!(a.decisions.len(), 60);
            assert!(f.latency(&p, split.test.clone(), 30).unwrap().median_us > 0.0);
        }
    }
}
