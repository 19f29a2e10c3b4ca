//! Accuracy, bit error rate, ROC curves and confidence intervals.

use std::path::Path;

use crate::error::{Error, Result};

/// `(accuracy, ber)` of `pred` against `truth`.
pub fn accuracy_ber(pred: &[u8], truth: &[u8]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    if pred.is_empty() {
        return Err(Error::Empty("bit sequence"));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    let acc = hits as f64 / pred.len() as f64;
    Ok((acc, 1.0 - acc))
}

/// Wilson score interval for a binomial proportion at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// Ordered by decreasing threshold, from (0, 0) to (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve over every unique score, with the trapezoidal AUC.
pub fn roc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let pos = labels.iter().filter(|&&b| b == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassLabels);
    }
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            if pairs[i].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let p = RocPoint { fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64, threshold: t };
        let last = points.last().unwrap();
        auc += (p.fpr - last.fpr) * (p.tpr + last.tpr) / 2.0;
        points.push(p);
    }
    Ok(RocCurve { points, auc })
}

/// Write CSV `fpr,tpr,threshold`.
pub fn write_roc(curve: &RocCurve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in &curve.points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fraction of correctly ordered (positive, negative) pairs, ties half.
    fn mann_whitney(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] != 1 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] != 0 {
                    continue;
                }
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy_ber(&[1, 0, 1], &[1, 0, 1]).unwrap(), (1.0, 0.0));
        assert_eq!(accuracy_ber(&[0, 1, 0], &[1, 0, 1]).unwrap(), (0.0, 1.0));
        assert!(matches!(accuracy_ber(&[], &[]), Err(Error::Empty(_))));
        assert!(matches!(accuracy_ber(&[1], &[1, 0]), Err(Error::LengthMismatch { .. })));
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<u8> = (0..1000).map(|_| r.random_range(0..2)).collect();
        let b: Vec<u8> = (0..1000).map(|_| r.random_range(0..2)).collect();
        let mut hits = 0;
        for i in 0..1000 {
            if a[i] == b[i] {
                hits += 1;
            }
        }
        let (acc, ber) = accuracy_ber(&a, &b).unwrap();
        assert_eq!(acc, hits as f64 / 1000.0);
        assert!((acc + ber - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separating_scores_have_unit_auc() {
        let c = roc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(c.auc, 1.0);
        assert_eq!((c.points[0].fpr, c.points[0].tpr), (0.0, 0.0));
        let last = c.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(matches!(roc(&[0.1], &[1]), Err(Error::SingleClassLabels)));
    }

    #[test]
    fn chance_scores_have_chance_auc() {
        for seed in 0..10 {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..10_000).map(|_| r.random()).collect();
            let l: Vec<u8> = (0..10_000).map(|_| r.random_range(0..2)).collect();
            let auc = roc(&s, &l).unwrap().auc;
            assert!((0.45..=0.55).contains(&auc), "{auc}");
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(870, 1000);
        assert!(lo < 0.87 && hi > 0.87);
        assert!((hi - lo) < 0.05);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn auc_equals_mann_whitney(
            data in prop::collection::vec((0u8..20, 0u8..2), 2..120),
        ) {
            // coarse integer scores force plenty of ties
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0) / 4.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let c = roc(&scores, &labels).unwrap();
            prop_assert!((c.auc - mann_whitney(&scores, &labels)).abs() < 1e-12);
            for w in c.points.windows(2) {
                prop_assert!(w[1].threshold < w[0].threshold);
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
            let last = c.points.last().unwrap();
            prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        }
    }
}
