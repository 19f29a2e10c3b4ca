//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! The desk sweep (10 seeds, 10^3 symbols, T_b in {10, 50, 100} s) is cached
//! under the cargo target tmp dir, so reruns resume finished cells.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use rcmc::bench::{run_benchmark, BenchReport, Detector};
use rcmc::classical::{detect_viterbi, path_metric, CirEstimate};
use rcmc::config::RunConfig;
use rcmc::esn::{init_reservoir, train_readout, EsnModel, ReservoirConfig};
use rcmc::linalg::spectral_radius_dense;
use rcmc::metrics::roc;
use rcmc::neural::{build, MlpConfig};
use rcmc::sim::{Propagation, SimConfig, SimState};

const SWEEP_T_B: [f64; 3] = [10.0, 50.0, 100.0];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { id, pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c1_param_counts() -> Outcome {
    let mut r = rng(1);
    let u: Vec<f64> = (0..600).map(|_| r.random_range(-1.0..1.0)).collect();
    let bits: Vec<u8> = (0..600).map(|_| r.random_range(0..2)).collect();
    let rc = EsnModel::fit(&ReservoirConfig::standard(), &u, &bits, 0..600, None).unwrap().param_count();
    let isi = EsnModel::fit(&ReservoirConfig::default(), &u, &bits, 0..400, Some(400..600)).unwrap().param_count();
    let mut ok = rc == 301 && isi == 401;
    for w in (100..=2000).step_by(100) {
        ok &= MlpConfig::mlp(w).param_count() == 128 * w + 8449;
        ok &= MlpConfig::ann(w).param_count() == 32 * w + 577;
    }
    let built = [100, 2000].map(|w| build(&MlpConfig::mlp(w)).unwrap().param_count());
    let ann = build(&MlpConfig::ann(100)).unwrap().param_count();
    ok &= built == [21_249, 264_449] && ann == 3_777;
    outcome("1", ok, format!("rc {rc}, rc_isi {isi}, mlp(100/2000) {built:?}, ann(100) {ann}"))
}

/// `[X 1]` normal equations with the bias left unpenalised.
fn ridge_oracle(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> (DVector<f64>, f64) {
    let (n, p) = x.shape();
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j < p { x[(i, j)] } else { 1.0 });
    let mut g = a.tr_mul(&a);
    for j in 0..p {
        g[(j, j)] += lambda;
    }
    let rhs = a.tr_mul(&DVector::from_column_slice(y));
    let sol = g.lu().solve(&rhs).unwrap();
    (sol.rows(0, p).into_owned(), sol[p])
}

fn c2_ridge() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..20 {
        let mut r = rng(200 + s);
        let x = DMatrix::from_fn(200, 20, |_, _| r.random_range(-1.0..1.0));
        let bits: Vec<u8> = (0..200).map(|_| r.random_range(0..2)).collect();
        let y: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
        let lambda = 10f64.powf(r.random_range(-6.0..1.0));
        let ro = train_readout(&x, &bits, 0..200, lambda).unwrap();
        let (w, b) = ridge_oracle(&x, &y, lambda);
        let mut mine = ro.w.as_slice().to_vec();
        mine.push(ro.bias);
        let mut want = w.as_slice().to_vec();
        want.push(b);
        let scale = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (m, o) in mine.iter().zip(&want) {
            worst = worst.max((m - o).abs() / scale);
        }
    }
    outcome("2", worst < 1e-8, format!("max relative deviation {worst:.2e} (tol 1e-8)"))
}

/// Minimum path metric by enumeration, ties to the lexicographically smaller path.
fn enumerate(u: &[f64], c: &CirEstimate) -> Vec<u8> {
    let n = u.len();
    let mut best: Option<(f64, Vec<u8>)> = None;
    for code in 0u32..(1 << n) {
        let bits: Vec<u8> = (0..n).map(|i| ((code >> (n - 1 - i)) & 1) as u8).collect();
        let m = path_metric(u, &bits, c).unwrap();
        if best.as_ref().is_none_or(|(bm, _)| m < *bm) {
            best = Some((m, bits));
        }
    }
    best.unwrap().1
}

fn c3_viterbi() -> Outcome {
    let mut cases = 0;
    let mut mismatches = 0;
    for l in 1..=3usize {
        for draw in 0..100u64 {
            let mut r = rng(300 + 1000 * l as u64 + draw);
            let taps: Vec<f64> = (0..l).map(|_| r.random_range(0.0..2.0)).collect();
            let noise_var = r.random_range(0.05..1.0);
            let c = CirEstimate { taps, noise_var };
            let noise = Normal::new(0.0, noise_var.sqrt()).unwrap();
            let bits: Vec<u8> = (0..12).map(|_| r.random_range(0..2)).collect();
            let u: Vec<f64> = (0..12)
                .map(|k| (0..l).filter(|&j| k >= j).map(|j| c.taps[j] * f64::from(bits[k - j])).sum::<f64>() + noise.sample(&mut r))
                .collect();
            for n in 1..=12 {
                cases += 1;
                if detect_viterbi(&u[..n], &c).unwrap() != enumerate(&u[..n], &c) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome("3", mismatches == 0, format!("{mismatches} mismatches in {cases} sequences"))
}

fn c4_contraction() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let res = init_reservoir(&ReservoirConfig { rng_seed: seed, ..ReservoirConfig::default() }).unwrap();
        let mut r = rng(400 + seed);
        let mut a = DVector::from_fn(res.n_r(), |_, _| r.random_range(-1.0..1.0));
        let mut b = DVector::from_fn(res.n_r(), |_, _| r.random_range(-1.0..1.0));
        let d0 = (&a - &b).norm();
        for _ in 0..500 {
            let u = r.random_range(-2.0..2.0);
            a = res.update_state(&a, u);
            b = res.update_state(&b, u);
        }
        worst = worst.max((&a - &b).norm() / d0);
    }
    outcome("4", worst <= 1e-6, format!("worst final/initial distance {worst:.2e} (need <= 1e-6)"))
}

fn c5_spectral() -> Outcome {
    let mut seen = Vec::new();
    let mut ok = true;
    for n_r in [50, 300, 400] {
        for seed in 0..3 {
            let res = init_reservoir(&ReservoirConfig { n_r, rng_seed: seed, ..ReservoirConfig::default() }).unwrap();
            let rho = spectral_radius_dense(res.w_res());
            ok &= (0.699..=0.701).contains(&rho);
            seen.push(rho);
        }
    }
    let lo = seen.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = seen.iter().copied().fold(0.0, f64::max);
    outcome("5", ok, format!("rho in [{lo:.6}, {hi:.6}] over n_r 50/300/400, 3 seeds each"))
}

fn c6_physics(report: &BenchReport) -> Outcome {
    let cfg = SimConfig { k_f: 0.0, propagation: Propagation::Exact, ..SimConfig::desk() };
    let start = cfg.tx_init;
    let mut s = SimState::new(cfg.clone()).unwrap();
    s.emit(10_000);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        s.advance_ticks(250);
        let msd = s
            .molecules()
            .iter()
            .map(|m| (0..3).map(|i| (m.pos[i] - start[i]).powi(2)).sum::<f64>())
            .sum::<f64>()
            / 10_000.0;
        let want = 6.0 * cfg.d_mol * s.time();
        worst = worst.max((msd - want).abs() / want);
    }
    let broken = report.cells.iter().filter(|c| !c.conserved).count();
    outcome(
        "6",
        worst < 0.05 && broken == 0,
        format!("MSD worst relative error {:.2}% over t = 0.25..1 s; {broken}/{} traces violate conservation", 100.0 * worst, report.cells.len()),
    )
}

fn c7_gradient() -> Outcome {
    let mut worst = 0.0f64;
    let nets: Vec<(usize, Vec<usize>)> = std::iter::once((2, vec![1])).chain((0..10).map(|_| (3, vec![4, 3]))).collect();
    for (k, (window, hidden)) in nets.into_iter().enumerate() {
        let seed = 700 + k as u64;
        let m = build(&MlpConfig { window, hidden, rng_seed: seed, ..Default::default() }).unwrap();
        let mut r = rng(seed);
        let x = DMatrix::from_fn(window, 16, |_, _| r.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..16).map(|_| f64::from(r.random_range(0..2u8))).collect();
        let p = m.params();
        let g = m.gradient(&x, &y);
        let eps = 1e-5;
        for i in 0..p.len() {
            let mut probe = m.clone();
            let mut q = p.clone();
            q[i] = p[i] + eps;
            probe.set_params(&q);
            let up = probe.loss(&x, &y);
            q[i] = p[i] - eps;
            probe.set_params(&q);
            let down = probe.loss(&x, &y);
            let fd = (up - down) / (2.0 * eps);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-4));
        }
    }
    outcome("7", worst < 1e-5, format!("max relative error {worst:.2e} over 11 micro-nets"))
}

fn mann_whitney(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

fn c8_roc(report: &BenchReport) -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..50 {
        let mut r = rng(800 + s);
        let n = r.random_range(2..200);
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..25u8)) / 4.0).collect();
        worst = worst.max((roc(&scores, &labels).unwrap().auc - mann_whitney(&scores, &labels)).abs());
    }
    for c in report.cells.iter().filter(|c| c.t_b == 100.0) {
        if let Some(Ok(curve)) = c.roc(Detector::RcIsi) {
            let s = &c.scores.iter().find(|s| s.detector == Detector::RcIsi).unwrap().scores;
            worst = worst.max((curve.auc - mann_whitney(s, &c.test_labels)).abs());
        }
    }
    let (s, l) = report.pooled_scores(Detector::RcIsi, 100.0);
    let pooled = roc(&s, &l).unwrap().auc;
    let per_seed: Vec<f64> = report
        .cells
        .iter()
        .filter(|c| c.t_b == 100.0)
        .filter_map(|c| c.roc(Detector::RcIsi).and_then(|r| r.ok()).map(|r| r.auc))
        .collect();
    let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
    outcome(
        "8",
        worst <= 1e-12 && pooled > 0.90,
        format!("AUC vs Mann-Whitney max gap {worst:.1e}; RC-ISI AUC at T_b=100: pooled {pooled:.4}, per-seed mean {mean:.4} over {} seeds", per_seed.len()),
    )
}

fn mean(report: &BenchReport, d: Detector, t: f64) -> f64 {
    report.mean_accuracy(d, t).unwrap_or(f64::NAN)
}

fn c9_trends(report: &BenchReport) -> Vec<Outcome> {
    let mut non_monotone = Vec::new();
    for d in Detector::ALL {
        let m: Vec<f64> = SWEEP_T_B.iter().map(|&t| mean(report, d, t)).collect();
        if !(m[0] <= m[1] && m[1] <= m[2]) {
            non_monotone.push(format!("{d} {:.3}/{:.3}/{:.3}", m[0], m[1], m[2]));
        }
    }
    let table: Vec<String> = Detector::ALL
        .iter()
        .map(|&d| format!("{d} {}", SWEEP_T_B.map(|t| format!("{:.3}", mean(report, d, t))).join("/")))
        .collect();
    let a = outcome(
        "9a",
        non_monotone.is_empty(),
        format!("mean accuracy at T_b 10/50/100: {}{}", table.join(", "), if non_monotone.is_empty() { String::new() } else { format!("; increasing: {}", non_monotone.join(", ")) }),
    );

    let mut losses = Vec::new();
    let mut pairs = 0;
    for c in &report.cells {
        if let (Some(rc), Some(isi)) = (c.row(Detector::Rc), c.row(Detector::RcIsi)) {
            pairs += 1;
            if isi.accuracy < rc.accuracy {
                losses.push(format!("seed {} T_b {}: {:.3} < {:.3}", c.seed, c.t_b, isi.accuracy, rc.accuracy));
            }
        }
    }
    let b = outcome(
        "9b",
        losses.is_empty() && pairs > 0,
        format!("RC-ISI below RC in {}/{pairs} matched cells{}{}", losses.len(), if losses.is_empty() { "" } else { ": " }, losses.join(", ")),
    );

    let (isi, fixed, map) = (mean(report, Detector::RcIsi, 10.0), mean(report, Detector::PeakFixed, 10.0), mean(report, Detector::MapViterbi, 10.0));
    let c = outcome("9c", isi > fixed && isi > map, format!("T_b=10: RC-ISI {isi:.4}, peak_fixed {fixed:.4}, map_viterbi {map:.4}"));

    let top = mean(report, Detector::RcIsi, 100.0);
    let d = outcome("9d", top > 0.75, format!("T_b=100: RC-ISI mean accuracy {top:.4} (need > 0.75)"));
    vec![a, b, c, d]
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c10_latency(report: &BenchReport) -> Outcome {
    let lat = |d: Detector| {
        median(report.cells.iter().filter(|c| c.t_b == 100.0).filter_map(|c| c.row(d)).map(|r| r.latency_us_median).collect())
    };
    let (rc, isi, mlp, vit) = (lat(Detector::Rc), lat(Detector::RcIsi), lat(Detector::Mlp), lat(Detector::MapViterbi));
    let worst_rc = rc.max(isi);
    outcome(
        "10",
        worst_rc < mlp && mlp < vit && worst_rc < 50.0,
        format!("median us/symbol at T_b=100: rc {rc:.2}, rc_isi {isi:.2}, mlp(W=1000) {mlp:.2}, viterbi(L=8) {vit:.2}; need RC < MLP < Viterbi and RC < 50"),
    )
}

const MINI: &str = r#"
[sim]
domain_side = 4e-5
rx_init = [2e-5, 2e-5, 2e-5]
tx_init = [3e-5, 2e-5, 2e-5]
d_mol = 1e-10
n_per_bit = 20
receptors = 50
k_b = 20.0
t_phys = 1e-2
rebinding = "explicit"

[detectors]
enabled = ["peak_fixed", "adaptive_ema", "map_viterbi", "ann", "rc", "rc_isi"]
rc = { n_r = 40, washout = 20 }
rc_isi = { n_r = 50, washout = 20 }

[bench]
t_b = [1.0, 2.0]
seeds = 2
symbols = 200
latency_repetitions = 30
latency_symbols = 10
"#;

fn c11_determinism() -> Outcome {
    let cfg = RunConfig::from_toml(MINI).unwrap();
    let fields = |r: &BenchReport| {
        let mut v: Vec<(String, u64, usize, u64, u64)> =
            r.rows().map(|x| (x.detector.name().to_string(), x.t_b.to_bits(), x.seed, x.accuracy.to_bits(), x.ber.to_bits())).collect();
        v.sort();
        v
    };
    let a = run_benchmark(&cfg.sim, &cfg.detectors, &cfg.bench, None).unwrap();
    let b = run_benchmark(&cfg.sim, &cfg.detectors, &cfg.bench, None).unwrap();
    let (fa, fb) = (fields(&a), fields(&b));
    outcome("11", fa == fb && !fa.is_empty(), format!("{} report rows, {} differ", fa.len(), fa.iter().zip(&fb).filter(|(x, y)| x != y).count()))
}

fn sweep() -> BenchReport {
    let mut cfg = RunConfig::default();
    cfg.bench.t_b = SWEEP_T_B.to_vec();
    cfg.bench.seeds = 10;
    cfg.bench.symbols = 1000;
    cfg.detectors.enabled = Detector::ALL.to_vec();
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-sweep");
    std::fs::create_dir_all(&dir).unwrap();
    run_benchmark(&cfg.sim, &cfg.detectors, &cfg.bench, Some(&dir)).unwrap()
}

fn main() {
    let mut results = Vec::new();
    let mut timed = |f: &dyn Fn() -> Vec<Outcome>| {
        let t = Instant::now();
        let out = f();
        for o in out {
            println!("{} criterion {:>3}: {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail, t.elapsed().as_secs_f64());
            results.push(o.pass);
        }
    };
    timed(&|| vec![c1_param_counts()]);
    timed(&|| vec![c2_ridge()]);
    timed(&|| vec![c3_viterbi()]);
    timed(&|| vec![c4_contraction()]);
    timed(&|| vec![c5_spectral()]);
    timed(&|| vec![c7_gradient()]);
    timed(&|| vec![c11_determinism()]);

    let t = Instant::now();
    let report = sweep();
    println!("desk sweep: {} cells in {:.0} s", report.cells.len(), t.elapsed().as_secs_f64());
    timed(&|| vec![c6_physics(&report)]);
    timed(&|| vec![c8_roc(&report)]);
    timed(&|| c9_trends(&report));
    timed(&|| vec![c10_latency(&report)]);

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} checks passed", results.len());
}
