//! Per-symbol features and z-score normalisation.
//!
//! The feature of symbol `k` is the bound count at the end of its interval,
//! `u_k = r(k T_b)`. Normalisation statistics always come from training
//! data and are passed explicitly, so test data can never leak into them.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::Trace;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSeq {
    pub u: Vec<f64>,
    pub labels: Option<Vec<u8>>,
    pub normalized: bool,
    pub norm_mean: f64,
    pub norm_std: f64,
}

impl FeatureSeq {
    /// Raw features without normalisation.
    pub fn new(u: Vec<f64>, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != u.len() {
                return Err(Error::LengthMismatch { left: u.len(), right: l.len() });
            }
        }
        Ok(FeatureSeq { u, labels, normalized: false, norm_mean: 0.0, norm_std: 1.0 })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Contiguous sub-sequence `range`, keeping labels and statistics.
    pub fn slice(&self, range: std::ops::Range<usize>) -> FeatureSeq {
        FeatureSeq {
            u: self.u[range.clone()].to_vec(),
            labels: self.labels.as_ref().map(|l| l[range].to_vec()),
            ..self.clone()
        }
    }

    /// Labels, or an error when the sequence is unlabelled.
    pub fn require_labels(&self) -> Result<&[u8]> {
        self.labels.as_deref().ok_or(Error::Empty("labels"))
    }
}

/// End-of-interval occupancy for every symbol of `trace`.
pub fn extract_features(trace: &Trace) -> Result<FeatureSeq> {
    let sps = trace.samples_per_symbol();
    if sps == 0 || trace.samples.len() % sps != 0 {
        return Err(Error::MalformedTrace(format!(
            "{} samples is not a multiple of {} samples per symbol",
            trace.samples.len(),
            sps
        )));
    }
    let n = trace.samples.len() / sps;
    if n != trace.bits.len() {
        return Err(Error::MalformedTrace(format!(
            "{n} symbols of samples for {} bits",
            trace.bits.len()
        )));
    }
    let u = (1..=n).map(|k| trace.samples[k * sps - 1].bound_count as f64).collect();
    FeatureSeq::new(u, Some(trace.bits.clone()))
}

/// Sample mean and population standard deviation of the training features.
pub fn fit_zscore(train: &FeatureSeq) -> Result<(f64, f64)> {
    if train.is_empty() {
        return Err(Error::Empty("training features"));
    }
    let n = train.len() as f64;
    let mean = train.u.iter().sum::<f64>() / n;
    let var = train.u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(Error::DegenerateFeatures);
    }
    Ok((mean, std))
}

/// `u' = (u - mean) / std`, recording the statistics used.
pub fn apply_zscore(seq: &FeatureSeq, mean: f64, std: f64) -> Result<FeatureSeq> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::NonPositiveStd(std));
    }
    Ok(FeatureSeq {
        u: seq.u.iter().map(|x| (x - mean) / std).collect(),
        labels: seq.labels.clone(),
        normalized: true,
        norm_mean: mean,
        norm_std: std,
    })
}

/// Undo [`apply_zscore`].
pub fn invert_zscore(seq: &FeatureSeq) -> FeatureSeq {
    if !seq.normalized {
        return seq.clone();
    }
    FeatureSeq {
        u: seq.u.iter().map(|x| x * seq.norm_std + seq.norm_mean).collect(),
        labels: seq.labels.clone(),
        normalized: false,
        norm_mean: 0.0,
        norm_std: 1.0,
    }
}

/// Write CSV `k,u,label`; `k` counts symbols from 1 and `label` is empty
/// when the sequence is unlabelled.
pub fn write_features(seq: &FeatureSeq, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "u", "label"])?;
    for (i, u) in seq.u.iter().enumerate() {
        let label = seq.labels.as_ref().map(|l| l[i].to_string()).unwrap_or_default();
        w.write_record([(i + 1).to_string(), u.to_string(), label])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureSeq> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["k", "u", "label"] {
        return Err(Error::parse(path.display().to_string(), "header must be k,u,label"));
    }
    let mut u = Vec::new();
    let mut labels = Vec::new();
    let mut labelled = true;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{} line {}", path.display(), line + 2);
        u.push(rec[1].parse::<f64>().map_err(|e| Error::parse(ctx(), e))?);
        match &rec[2] {
            "" => labelled = false,
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => return Err(Error::parse(ctx(), format!("bad label {other:?}"))),
        }
    }
    FeatureSeq::new(u, labelled.then_some(labels))
}
