//! Fixed-threshold, EMA-adaptive and mismatched-MAP (Viterbi) detectors.
//!
//! The fixed and EMA detectors work on raw occupancy features. The MAP
//! detector assumes a static channel `u_k = sum_j h_j b_{k-j} + n_k` with
//! Gaussian `n_k`, taps estimated by least squares on training data, and
//! bits before the start of the sequence equal to zero.

use std::cmp::Ordering;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::esn::optimize_threshold;
use crate::features::FeatureSeq;
use crate::linalg::solve_spd;

/// Largest supported channel memory.
pub const MAX_MEMORY: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedThresholdModel {
    pub eta: f64,
}

/// Training-BER-optimal threshold over midpoints of the sorted unique
/// features (plus the two infinite sentinels).
pub fn fit_fixed(train: &FeatureSeq) -> Result<FixedThresholdModel> {
    let labels = train.require_labels()?;
    Ok(FixedThresholdModel { eta: optimize_threshold(&train.u, labels)? })
}

/// `b_k = 1` iff `u_k > eta`.
pub fn detect_fixed(model: &FixedThresholdModel, u: &[f64]) -> Vec<u8> {
    u.iter().map(|&x| u8::from(x > model.eta)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmaModel {
    pub eta: f64,
    pub beta: f64,
    pub i_init: f64,
}

/// Adaptive threshold: `I_k = beta I_{k-1} + (1 - beta) u_{k-1}` with
/// `I_0 = i_init` and `u_0 = 0`, deciding `b_k = 1` iff `u_k > eta + I_k`.
pub fn detect_ema(model: &EmaModel, u: &[f64]) -> Vec<u8> {
    let mut baseline = model.i_init;
    let mut prev = 0.0;
    u.iter()
        .map(|&x| {
            baseline = model.beta * baseline + (1.0 - model.beta) * prev;
            prev = x;
            u8::from(x > model.eta + baseline)
        })
        .collect()
}

/// `{0.1, 0.2, ..., 0.9}`.
pub fn default_beta_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// 50 evenly spaced points from the smallest to the largest feature.
pub fn default_eta_grid(u: &[f64]) -> Vec<f64> {
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return vec![0.0];
    }
    (0..50).map(|i| lo + (hi - lo) * i as f64 / 49.0).collect()
}

/// Grid search for the `(beta, eta)` pair with the lowest training BER;
/// ties go to the smaller `beta`, then the smaller `eta`.
pub fn fit_ema(train: &FeatureSeq, beta_grid: &[f64], eta_grid: &[f64]) -> Result<EmaModel> {
    let labels = train.require_labels()?;
    if beta_grid.is_empty() || eta_grid.is_empty() {
        return Err(Error::Empty("EMA search grid"));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClassLabels);
    }
    if let Some(b) = beta_grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::config("beta", format!("{b} is outside [0, 1]")));
    }
    let mut betas = beta_grid.to_vec();
    betas.sort_by(f64::total_cmp);
    let mut etas = eta_grid.to_vec();
    etas.sort_by(f64::total_cmp);
    let mut best: Option<(usize, EmaModel)> = None;
    for &beta in &betas {
        for &eta in &etas {
            let model = EmaModel { eta, beta, i_init: 0.0 };
            let errors = detect_ema(&model, &train.u)
                .iter()
                .zip(labels)
                .filter(|(a, b)| a != b)
                .count();
            if best.is_none_or(|(e, _)| errors < e) {
                best = Some((errors, model));
            }
        }
    }
    Ok(best.unwrap().1)
}

/// Average static channel: `taps[j]` is the contribution of the bit sent
/// `j` symbols earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct CirEstimate {
    pub taps: Vec<f64>,
    pub noise_var: f64,
}

impl CirEstimate {
    pub fn memory(&self) -> usize {
        self.taps.len()
    }

    /// Write CSV `j,h_j` followed by a `noise_var,<value>` line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = String::from("j,h_j\n");
        for (j, h) in self.taps.iter().enumerate() {
            s.push_str(&format!("{j},{h}\n"));
        }
        s.push_str(&format!("noise_var,{}\n", self.noise_var));
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CirEstimate> {
        let text = std::fs::read_to_string(path)?;
        let ctx = |n: usize| format!("{} line {}", path.display(), n + 1);
        let mut lines = text.lines().enumerate();
        if lines.next().map(|l| l.1.trim()) != Some("j,h_j") {
            return Err(Error::parse(ctx(0), "header must be j,h_j"));
        }
        let mut taps = Vec::new();
        let mut noise_var = None;
        for (n, line) in lines {
            let Some((key, value)) = line.split_once(',') else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::parse(ctx(n), "expected two fields"));
            };
            let v: f64 = value.trim().parse().map_err(|e| Error::parse(ctx(n), e))?;
            if key == "noise_var" {
                noise_var = Some(v);
            } else {
                let j: usize = key.parse().map_err(|e| Error::parse(ctx(n), e))?;
                if j != taps.len() {
                    return Err(Error::parse(ctx(n), format!("tap {j} out of order")));
                }
                taps.push(v);
            }
        }
        let noise_var = noise_var.ok_or_else(|| Error::parse(path.display().to_string(), "missing noise_var line"))?;
        Ok(CirEstimate { taps, noise_var })
    }
}

/// Least-squares taps of `u_k ~ sum_{j<L} h_j b_{k-j}` (no intercept, zero
/// bits before the start) and the unbiased residual variance.
pub fn estimate_cir(u: &[f64], bits: &[u8], memory: usize) -> Result<CirEstimate> {
    if u.len() != bits.len() {
        return Err(Error::LengthMismatch { left: u.len(), right: bits.len() });
    }
    if memory == 0 {
        return Err(Error::config("memory", "must be at least 1"));
    }
    if u.len() < memory {
        return Err(Error::RankDeficient(format!("{} symbols for {memory} taps", u.len())));
    }
    let k = u.len();
    let design = DMatrix::from_fn(k, memory, |i, j| if i >= j { f64::from(bits[i - j]) } else { 0.0 });
    let y = DVector::from_column_slice(u);
    let taps = solve_spd(design.tr_mul(&design), &design.tr_mul(&y))
        .map_err(|_| Error::RankDeficient("bit pattern does not identify every tap".into()))?;
    let resid = &y - &design * &taps;
    let dof = if k > memory { k - memory } else { k };
    Ok(CirEstimate { taps: taps.iter().copied().collect(), noise_var: resid.norm_squared() / dof as f64 })
}

/// Precomputed trellis for one channel estimate.
#[derive(Clone, Debug)]
pub struct Trellis {
    memory: usize,
    /// Expected observation for (state, new bit), indexed `state * 2 + bit`.
    expected: Vec<f64>,
    inv_var: f64,
}

impl Trellis {
    pub fn new(cir: &CirEstimate) -> Result<Self> {
        let l = cir.memory();
        if l == 0 {
            return Err(Error::config("memory", "must be at least 1"));
        }
        if l > MAX_MEMORY {
            return Err(Error::MemoryTooLarge(l));
        }
        if !(cir.noise_var > 0.0) {
            return Err(Error::NonPositiveVariance(cir.noise_var));
        }
        let states = 1usize << (l - 1);
        let mut expected = vec![0.0; states * 2];
        for s in 0..states {
            for b in 0..2 {
                // bit j-1 of the state is the bit sent j symbols ago
                let mut y = cir.taps[0] * b as f64;
                for j in 1..l {
                    y += cir.taps[j] * ((s >> (j - 1)) & 1) as f64;
                }
                expected[s * 2 + b] = y;
            }
        }
        Ok(Trellis { memory: l, expected, inv_var: 1.0 / cir.noise_var })
    }

    pub fn states(&self) -> usize {
        1 << (self.memory - 1)
    }

    fn next(&self, s: usize, b: usize) -> usize {
        ((s << 1) | b) & (self.states() - 1)
    }

    /// Branch metric of observing `u` on transition `(s, b)`.
    pub fn branch(&self, s: usize, b: usize, u: f64) -> f64 {
        let r = u - self.expected[s * 2 + b];
        r * r * self.inv_var
    }

    /// Add-compare-select for one symbol with lexicographic tie-breaking
    /// left to the caller; used by the latency benchmark.
    pub fn step(&self, metrics: &[f64], out: &mut [f64], u: f64) {
        out.iter_mut().for_each(|m| *m = f64::INFINITY);
        for (s, &m) in metrics.iter().enumerate() {
            if m.is_finite() {
                for b in 0..2 {
                    let n = self.next(s, b);
                    let c = m + self.branch(s, b, u);
                    if c < out[n] {
                        out[n] = c;
                    }
                }
            }
        }
    }
}

/// Sum of branch metrics of a bit path under the zero-history model.
pub fn path_metric(u: &[f64], bits: &[u8], cir: &CirEstimate) -> Result<f64> {
    let t = Trellis::new(cir)?;
    let mut s = 0usize;
    let mut total = 0.0;
    for (&x, &b) in u.iter().zip(bits) {
        total += t.branch(s, b as usize, x);
        s = t.next(s, b as usize);
    }
    Ok(total)
}

/// Maximum-likelihood bit sequence under the estimated static channel.
///
/// Equal metrics are resolved in favour of the lexicographically smaller
/// bit path, comparing full survivor histories.
pub fn detect_viterbi(u: &[f64], cir: &CirEstimate) -> Result<Vec<u8>> {
    let t = Trellis::new(cir)?;
    let ns = t.states();
    let k = u.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut metric = vec![f64::INFINITY; ns];
    metric[0] = 0.0;
    let mut next = vec![f64::INFINITY; ns];
    // back[step * ns + state] = (previous state << 1) | bit
    let mut back = vec![u32::MAX; k * ns];
    for (step, &x) in u.iter().enumerate() {
        next.iter_mut().for_each(|m| *m = f64::INFINITY);
        for s in 0..ns {
            if !metric[s].is_finite() {
                continue;
            }
            for b in 0..2 {
                let n = t.next(s, b);
                let c = metric[s] + t.branch(s, b, x);
                let slot = step * ns + n;
                let take = match c.partial_cmp(&next[n]) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Equal) => {
                        let cur = back[slot];
                        let (cs, cb) = ((cur >> 1) as usize, (cur & 1) as usize);
                        compare_extended(&back, ns, step, s, b, cs, cb) == Ordering::Less
                    }
                    _ => false,
                };
                if take {
                    next[n] = c;
                    back[slot] = ((s as u32) << 1) | b as u32;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }
    let mut end = usize::MAX;
    for s in 0..ns {
        if !metric[s].is_finite() {
            continue;
        }
        let better = end == usize::MAX
            || metric[s] < metric[end]
            || (metric[s] == metric[end] && compare_paths(&back, ns, k, s, end) == Ordering::Less);
        if better {
            end = s;
        }
    }
    if end == usize::MAX {
        return Err(Error::NumericalFailure("every trellis path has infinite metric".into()));
    }
    let mut bits = vec![0u8; k];
    let mut s = end;
    for step in (0..k).rev() {
        let e = back[step * ns + s];
        bits[step] = (e & 1) as u8;
        s = (e >> 1) as usize;
    }
    Ok(bits)
}

/// Order of the paths `path(s1) + b1` and `path(s2) + b2`, where both
/// prefixes end in a state at time `step`.
fn compare_extended(back: &[u32], ns: usize, step: usize, s1: usize, b1: usize, s2: usize, b2: usize) -> Ordering {
    if s1 == s2 {
        return b1.cmp(&b2);
    }
    match compare_paths(back, ns, step, s1, s2) {
        Ordering::Equal => b1.cmp(&b2),
        o => o,
    }
}

/// Lexicographic order of the survivor paths of length `len` ending in
/// states `a` and `b`.
fn compare_paths(back: &[u32], ns: usize, len: usize, mut a: usize, mut b: usize) -> Ordering {
    let mut order = Ordering::Equal;
    let mut step = len;
    while a != b && step > 0 {
        step -= 1;
        let ea = back[step * ns + a];
        let eb = back[step * ns + b];
        let (ba, bb) = (ea & 1, eb & 1);
        if ba != bb {
            order = ba.cmp(&bb);
        }
        a = (ea >> 1) as usize;
        b = (eb >> 1) as usize;
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn labelled(u: Vec<f64>, b: Vec<u8>) -> FeatureSeq {
        FeatureSeq::new(u, Some(b)).unwrap()
    }

    fn ber(pred: &[u8], truth: &[u8]) -> f64 {
        pred.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / truth.len() as f64
    }

    #[test]
    fn fixed_threshold_cases() {
        let f = labelled(vec![0.1, 0.3, 2.0, 2.5], vec![0, 0, 1, 1]);
        let m = fit_fixed(&f).unwrap();
        assert_eq!(ber(&detect_fixed(&m, &f.u), &[0, 0, 1, 1]), 0.0);
        assert_eq!(detect_fixed(&FixedThresholdModel { eta: 0.0 }, &[0.5, 1.0]), vec![1, 1]);
        assert_eq!(detect_fixed(&FixedThresholdModel { eta: 1.0 }, &[1.0]), vec![0]);
        assert!(matches!(fit_fixed(&labelled(vec![1.0], vec![1])), Err(Error::SingleClassLabels)));
    }

    #[test]
    fn uninformative_features_give_chance_ber() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<u8> = (0..4000).map(|_| r.random_range(0..2)).collect();
        let u: Vec<f64> = (0..4000).map(|_| r.random()).collect();
        let f = labelled(u, b.clone());
        let e = ber(&detect_fixed(&fit_fixed(&f).unwrap(), &f.u), &b);
        assert!((0.4..=0.5).contains(&e), "{e}");
    }

    #[test]
    fn fixed_threshold_matches_dense_grid() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<u8> = (0..400).map(|_| r.random_range(0..2)).collect();
        let u: Vec<f64> = b.iter().map(|&x| ((f64::from(x) + r.random::<f64>() * 1.5) * 100.0).round() / 100.0).collect();
        let f = labelled(u.clone(), b.clone());
        let m = fit_fixed(&f).unwrap();
        let grid = (0..=10_000)
            .map(|i| ber(&detect_fixed(&FixedThresholdModel { eta: -0.1 + 2.8 * i as f64 / 1e4 }, &u), &b))
            .fold(1.0, f64::min);
        assert_eq!(ber(&detect_fixed(&m, &u), &b), grid);
    }

    #[test]
    fn ema_hand_recursion() {
        let m = EmaModel { eta: 0.5, beta: 0.5, i_init: 0.0 };
        // I_1 = 0, I_2 = 1: 2 > 0.5 and 4 > 1.5
        assert_eq!(detect_ema(&m, &[2.0, 4.0]), vec![1, 1]);
        let m = EmaModel { eta: 2.5, ..m };
        // 2 > 2.5 fails, 4 > 3.5 holds
        assert_eq!(detect_ema(&m, &[2.0, 4.0]), vec![0, 1]);
    }

    #[test]
    fn ema_degenerate_betas() {
        let u = [3.0, 1.0, 4.0, 1.0, 5.0];
        let frozen = EmaModel { eta: 0.0, beta: 1.0, i_init: 2.0 };
        assert_eq!(detect_ema(&frozen, &u), detect_fixed(&FixedThresholdModel { eta: 2.0 }, &u));
        let diff = EmaModel { eta: 0.0, beta: 0.0, i_init: 0.0 };
        assert_eq!(detect_ema(&diff, &u), vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn ema_fit_cases() {
        let b = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let u: Vec<f64> = b.iter().map(|&x| 10.0 * f64::from(x)).collect();
        let f = labelled(u.clone(), b.clone());
        let m = fit_ema(&f, &default_beta_grid(), &default_eta_grid(&u)).unwrap();
        assert_eq!(ber(&detect_ema(&m, &u), &b), 0.0);
        let single = fit_ema(&f, &[0.3], &[1.0]).unwrap();
        assert_eq!((single.beta, single.eta), (0.3, 1.0));
        assert!(matches!(fit_ema(&f, &[], &[1.0]), Err(Error::Empty(_))));
    }

    #[test]
    fn ema_fit_is_grid_minimum() {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let b: Vec<u8> = (0..300).map(|_| r.random_range(0..2)).collect();
        let mut level = 0.0;
        let u: Vec<f64> = b
            .iter()
            .map(|&x| {
                level = 0.7 * level + f64::from(x);
                level + r.random::<f64>()
            })
            .collect();
        let f = labelled(u.clone(), b.clone());
        let (bg, eg) = (default_beta_grid(), default_eta_grid(&u));
        let m = fit_ema(&f, &bg, &eg).unwrap();
        let mut best = 1.0f64;
        for &beta in &bg {
            for &eta in &eg {
                best = best.min(ber(&detect_ema(&EmaModel { eta, beta, i_init: 0.0 }, &u), &b));
            }
        }
        assert_eq!(ber(&detect_ema(&m, &u), &b), best);
    }

    #[test]
    fn cir_recovers_noiseless_taps() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let b: Vec<u8> = (0..200).map(|_| r.random_range(0..2)).collect();
        let u: Vec<f64> = (0..200)
            .map(|k| 3.0 * f64::from(b[k]) + if k > 0 { f64::from(b[k - 1]) } else { 0.0 })
            .collect();
        let c = estimate_cir(&u, &b, 2).unwrap();
        assert!((c.taps[0] - 3.0).abs() < 1e-10 && (c.taps[1] - 1.0).abs() < 1e-10);
        assert!(c.noise_var < 1e-20);
        assert!(matches!(estimate_cir(&[0.0; 10], &[0; 10], 2), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn cir_noise_variance_is_consistent() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let b: Vec<u8> = (0..1000).map(|_| r.random_range(0..2)).collect();
        let u: Vec<f64> = (0..1000)
            .map(|k| 2.0 * f64::from(b[k]) + if k > 0 { 0.5 * f64::from(b[k - 1]) } else { 0.0 } + noise.sample(&mut r))
            .collect();
        let c = estimate_cir(&u, &b, 3).unwrap();
        assert!((c.noise_var - 0.25).abs() / 0.25 < 0.2, "{}", c.noise_var);
    }

    #[test]
    fn cir_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cir.csv");
        let c = CirEstimate { taps: vec![3.5, 1.25, -0.125], noise_var: 0.75 };
        c.save(&p).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("j,h_j\n0,3.5\n"));
        assert_eq!(CirEstimate::load(&p).unwrap(), c);
    }

    #[test]
    fn memoryless_viterbi_is_half_tap_threshold() {
        let c = CirEstimate { taps: vec![2.0], noise_var: 1.0 };
        assert_eq!(detect_viterbi(&[0.2, 1.8], &c).unwrap(), vec![0, 1]);
        // exactly on the boundary the smaller bit wins
        assert_eq!(detect_viterbi(&[1.0], &c).unwrap(), vec![0]);
    }

    #[test]
    fn viterbi_preconditions() {
        let big = CirEstimate { taps: vec![1.0; 13], noise_var: 1.0 };
        assert!(matches!(detect_viterbi(&[1.0], &big), Err(Error::MemoryTooLarge(13))));
        let flat = CirEstimate { taps: vec![1.0], noise_var: 0.0 };
        assert!(matches!(detect_viterbi(&[1.0], &flat), Err(Error::NonPositiveVariance(_))));
    }

    #[test]
    fn noiseless_observations_are_recovered() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let c = CirEstimate { taps: vec![1.0, 0.6, 0.3, 0.15, 0.07], noise_var: 0.01 };
        let b: Vec<u8> = (0..300).map(|_| r.random_range(0..2)).collect();
        let u: Vec<f64> = (0..300)
            .map(|k| (0..5).filter(|&j| k >= j).map(|j| c.taps[j] * f64::from(b[k - j])).sum())
            .collect();
        assert_eq!(detect_viterbi(&u, &c).unwrap(), b);
    }

    /// Minimum-metric sequence by enumeration, ties to the smaller path.
    pub(crate) fn exhaustive(u: &[f64], c: &CirEstimate) -> Vec<u8> {
        let n = u.len();
        let mut best: Option<(f64, Vec<u8>)> = None;
        for code in 0u32..(1 << n) {
            // most significant bit first gives lexicographic enumeration order
            let bits: Vec<u8> = (0..n).map(|i| ((code >> (n - 1 - i)) & 1) as u8).collect();
            let m = path_metric(u, &bits, c).unwrap();
            if best.as_ref().is_none_or(|(bm, _)| m < *bm) {
                best = Some((m, bits));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn eight_symbols_match_enumeration() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let c = CirEstimate {
                taps: (0..3).map(|_| r.random_range(0.0..2.0)).collect(),
                noise_var: r.random_range(0.1..2.0),
            };
            let u: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..4.0)).collect();
            assert_eq!(detect_viterbi(&u, &c).unwrap(), exhaustive(&u, &c));
        }
    }

    #[test]
    fn ties_pick_the_smaller_path() {
        // zero taps make every path equal; the all-zero path must win
        let c = CirEstimate { taps: vec![0.0, 0.0, 0.0], noise_var: 1.0 };
        assert_eq!(detect_viterbi(&[1.0; 6], &c).unwrap(), vec![0; 6]);
        // integer data with symmetric taps produce exact metric ties
        let c = CirEstimate { taps: vec![1.0, 1.0], noise_var: 1.0 };
        let u = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(detect_viterbi(&u, &c).unwrap(), exhaustive(&u, &c));
    }

    proptest! {
        #[test]
        fn ema_zero_beta_is_difference_detector(u in prop::collection::vec(-5.0f64..5.0, 1..60)) {
            let d = detect_ema(&EmaModel { eta: 0.0, beta: 0.0, i_init: 0.0 }, &u);
            for k in 0..u.len() {
                let prev = if k == 0 { 0.0 } else { u[k - 1] };
                prop_assert_eq!(d[k] == 1, u[k] > prev);
            }
        }

        #[test]
        fn viterbi_matches_enumeration(
            taps in prop::collection::vec(-1i8..4, 1..4),
            obs in prop::collection::vec(-2i8..6, 1..10),
            var in 1u8..4,
        ) {
            // small integers produce frequent exact ties
            let c = CirEstimate { taps: taps.iter().map(|&t| f64::from(t) / 2.0).collect(), noise_var: f64::from(var) };
            let u: Vec<f64> = obs.iter().map(|&o| f64::from(o) / 2.0).collect();
            prop_assert_eq!(detect_viterbi(&u, &c).unwrap(), exhaustive(&u, &c));
        }
    }
}
