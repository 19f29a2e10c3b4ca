//! Multi-detector benchmark over symbol intervals and seeds.
//!
//! Each cell `(seed, T_b)` simulates one continuous bit sequence and splits
//! it chronologically into training, validation and test segments. Every
//! detector runs over the whole sequence so that ISI context carries across
//! segment boundaries, but fitting only ever sees training (and, for the
//! ROC-optimised threshold, validation) symbols. Scores are taken on the
//! test segment.

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::default_beta_grid;
use crate::detector::{FitSeeds, Fitted, Output, Prepared};
use crate::error::{Error, Result};
use crate::esn::ReservoirConfig;
use crate::latency::{self, LatencyStats};
use crate::metrics::{accuracy_ber, roc, wilson_interval, write_roc, RocCurve};
use crate::neural::MlpConfig;
use crate::seed::{derive_seed, fnv1a};
use crate::sim::{run_sequence, SimConfig};

/// Symbol intervals of the published sweep (s).
pub const DEFAULT_T_B: [f64; 7] = [10.0, 30.0, 50.0, 70.0, 90.0, 100.0, 200.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    PeakFixed,
    AdaptiveEma,
    MapViterbi,
    Mlp,
    Ann,
    Rc,
    RcIsi,
}

impl Detector {
    pub const ALL: [Detector; 7] = [
        Detector::PeakFixed,
        Detector::AdaptiveEma,
        Detector::MapViterbi,
        Detector::Mlp,
        Detector::Ann,
        Detector::Rc,
        Detector::RcIsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Detector::PeakFixed => "peak_fixed",
            Detector::AdaptiveEma => "adaptive_ema",
            Detector::MapViterbi => "map_viterbi",
            Detector::Mlp => "mlp",
            Detector::Ann => "ann",
            Detector::Rc => "rc",
            Detector::RcIsi => "rc_isi",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Detector::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::config("detectors.enabled", format!("unknown detector {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub enabled: Vec<Detector>,
    pub rc: ReservoirConfig,
    pub rc_isi: ReservoirConfig,
    /// `window = 0` picks one symbol's worth of samples.
    pub mlp: MlpConfig,
    pub ann: MlpConfig,
    pub viterbi_memory: usize,
    pub ema_beta_grid: Vec<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            enabled: Detector::ALL.to_vec(),
            rc: ReservoirConfig::standard(),
            rc_isi: ReservoirConfig::default(),
            mlp: MlpConfig::mlp(0),
            ann: MlpConfig::ann(0),
            viterbi_memory: 8,
            ema_beta_grid: default_beta_grid(),
        }
    }
}

impl DetectorConfig {
    /// Defaults with the ridge penalty raised to `1e-3` for the reduced-scale
    /// channel, where 300 post-washout rows face up to 400 features.
    pub fn desk() -> Self {
        let mut d = DetectorConfig::default();
        d.rc.ridge_lambda = 1e-3;
        d.rc_isi.ridge_lambda = 1e-3;
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled.is_empty() {
            return Err(Error::config("detectors.enabled", "at least one detector must be enabled"));
        }
        self.rc.validate()?;
        self.rc_isi.validate()?;
        for m in [&self.mlp, &self.ann] {
            MlpConfig { window: m.window.max(1), ..m.clone() }.validate()?;
        }
        if self.viterbi_memory == 0 || self.viterbi_memory > crate::classical::MAX_MEMORY {
            return Err(Error::config("detectors.viterbi_memory", "must lie in 1..=12"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub t_b: Vec<f64>,
    pub seeds: usize,
    pub root_seed: u64,
    pub symbols: usize,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub latency_repetitions: usize,
    /// Test symbols timed per detector and cell.
    pub latency_symbols: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            t_b: DEFAULT_T_B.to_vec(),
            seeds: 10,
            root_seed: 1,
            symbols: 1000,
            split: [0.6, 0.2, 0.2],
            latency_repetitions: 30,
            latency_symbols: 100,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_b.is_empty() {
            return Err(Error::config("bench.t_b", "at least one symbol interval is required"));
        }
        if self.seeds == 0 {
            return Err(Error::config("bench.seeds", "must be at least 1"));
        }
        if self.split.iter().any(|f| !(*f > 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("bench.split", "fractions must be positive and sum to 1"));
        }
        if self.latency_repetitions < latency::MIN_REPETITIONS {
            return Err(Error::config("bench.latency_repetitions", "must be at least 30"));
        }
        if self.latency_symbols == 0 {
            return Err(Error::config("bench.latency_symbols", "must be at least 1"));
        }
        let split = Split::new(self.symbols, self.split)?;
        if split.test.is_empty() || split.val.is_empty() || split.train.len() < 2 {
            return Err(Error::config("bench.symbols", "too few symbols for the split"));
        }
        Ok(())
    }
}

/// Chronological, disjoint and exhaustive partition of `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Split {
    pub fn new(n: usize, fractions: [f64; 3]) -> Result<Split> {
        let a = (n as f64 * fractions[0]).round() as usize;
        let b = (n as f64 * (fractions[0] + fractions[1])).round() as usize;
        if a > b || b > n {
            return Err(Error::config("bench.split", "fractions do not partition the sequence"));
        }
        Ok(Split { train: 0..a, val: a..b, test: b..n })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub detector: Detector,
    pub t_b: f64,
    pub seed: usize,
    pub accuracy: f64,
    pub ber: f64,
    pub param_count: usize,
    pub latency_us_median: f64,
    pub latency_us_mean: f64,
    pub threshold: Option<f64>,
    pub notes: String,
}

/// Test-segment scores of one detector in one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellScores {
    pub detector: Detector,
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub seed: usize,
    pub t_b: f64,
    pub rows: Vec<ReportRow>,
    pub scores: Vec<CellScores>,
    pub test_labels: Vec<u8>,
    pub conserved: bool,
}

impl Cell {
    pub fn row(&self, d: Detector) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.detector == d)
    }

    pub fn roc(&self, d: Detector) -> Option<Result<RocCurve>> {
        self.scores.iter().find(|s| s.detector == d).map(|s| roc(&s.scores, &self.test_labels))
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub cells: Vec<Cell>,
    pub fingerprint: u64,
    pub root_seed: u64,
}

impl BenchReport {
    pub fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.cells.iter().flat_map(|c| c.rows.iter())
    }

    /// Mean accuracy of `d` at `t_b` over seeds.
    pub fn mean_accuracy(&self, d: Detector, t_b: f64) -> Option<f64> {
        let acc: Vec<f64> = self.rows().filter(|r| r.detector == d && r.t_b == t_b).map(|r| r.accuracy).collect();
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }

    /// Pooled test scores and labels of `d` at `t_b` across seeds.
    pub fn pooled_scores(&self, d: Detector, t_b: f64) -> (Vec<f64>, Vec<u8>) {
        let (mut s, mut l) = (Vec::new(), Vec::new());
        for c in self.cells.iter().filter(|c| c.t_b == t_b) {
            if let Some(cs) = c.scores.iter().find(|x| x.detector == d) {
                s.extend(&cs.scores);
                l.extend(&c.test_labels);
            }
        }
        (s, l)
    }
}

/// Stable identifier of everything that determines a cell's accuracy.
pub fn fingerprint(sim: &SimConfig, det: &DetectorConfig, bench: &BenchConfig) -> u64 {
    let mut b = bench.clone();
    b.t_b.clear();
    b.seeds = 0;
    let text = format!("{sim:?}|{det:?}|{b:?}");
    fnv1a(&text)
}

/// Uniform random bits of replicate `seed`, shared by all symbol intervals.
pub fn cell_bits(root: u64, seed: usize, n: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(root, "bits", seed as u64));
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Channel configuration of cell `(seed, t_b)` under `root`.
pub fn cell_sim_config(sim: &SimConfig, root: u64, seed: usize, t_b: f64) -> SimConfig {
    SimConfig { t_b, rng_seed: derive_seed(root, &format!("sim/{}", tb_label(t_b)), seed as u64), ..sim.clone() }
}

/// Seeds of the trainable components of detector `d` in cell `(seed, t_b)`.
pub fn fit_seeds(root: u64, d: Detector, seed: usize, t_b: f64) -> FitSeeds {
    FitSeeds {
        reservoir: derive_seed(root, d.name(), seed as u64),
        network: derive_seed(root, &format!("{d}/{}", tb_label(t_b)), seed as u64),
    }
}

fn tb_label(t_b: f64) -> String {
    format!("{t_b}")
}

/// Report row of a fitted detector scored on `test`.
pub fn evaluate_row(
    fitted: &Fitted,
    out: &Output,
    test: &Range<usize>,
    bits: &[u8],
    lat: LatencyStats,
    t_b: f64,
    seed: usize,
) -> Result<ReportRow> {
    let (accuracy, ber) = accuracy_ber(&out.decisions[test.clone()], &bits[test.clone()])?;
    Ok(ReportRow {
        detector: fitted.detector(),
        t_b,
        seed,
        accuracy,
        ber,
        param_count: fitted.param_count(),
        latency_us_median: lat.median_us,
        latency_us_mean: lat.mean_us,
        threshold: fitted.threshold(),
        notes: fitted.notes(),
    })
}

/// Evaluate every enabled detector on one `(seed, T_b)` cell.
pub fn run_cell(sim: &SimConfig, det: &DetectorConfig, bench: &BenchConfig, seed: usize, t_b: f64) -> Result<Cell> {
    let root = bench.root_seed;
    let cfg = cell_sim_config(sim, root, seed, t_b);
    cfg.validate()?;
    let bits = cell_bits(root, seed, bench.symbols);
    let trace = run_sequence(&cfg, &bits)?;
    let split = Split::new(bench.symbols, bench.split)?;
    let test_labels = bits[split.test.clone()].to_vec();

    let prepared = Prepared::new(&trace)?;
    let lat_range = split.test.start..(split.test.start + bench.latency_symbols).min(split.test.end);
    let mut rows = Vec::new();
    let mut scores = Vec::new();
    for &d in &det.enabled {
        let fitted = Fitted::fit(d, &prepared, det, &split, fit_seeds(root, d, seed, t_b))?;
        let out = fitted.run(&prepared)?;
        let lat = fitted.latency(&prepared, lat_range.clone(), bench.latency_repetitions)?;
        rows.push(evaluate_row(&fitted, &out, &split.test, &bits, lat, t_b, seed)?);
        if let Some(s) = out.scores {
            scores.push(CellScores { detector: d, scores: s[split.test.clone()].to_vec() });
        }
    }
    Ok(Cell { seed, t_b, rows, scores, test_labels, conserved: trace.conserved })
}

fn cell_stem(dir: &Path, seed: usize, t_b: f64) -> PathBuf {
    dir.join(format!("seed{seed}_tb{}", tb_label(t_b)))
}

/// Persist a finished cell: scores first, then the row file, whose
/// presence marks the cell complete.
pub fn write_cell(cell: &Cell, dir: &Path, fp: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stem = cell_stem(dir, cell.seed, cell.t_b);
    let labels: String = cell.test_labels.iter().map(|b| char::from(b'0' + b)).collect();
    fs::write(stem.with_extension("labels"), labels + "\n")?;
    let mut w = csv::Writer::from_path(stem.with_extension("scores.csv"))?;
    w.write_record(["detector", "score"])?;
    for cs in &cell.scores {
        for v in &cs.scores {
            w.write_record([cs.detector.name().to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    let tmp = stem.with_extension("rows.tmp");
    {
        let mut body = format!("# fingerprint {fp:016x}\n# conserved {}\n", cell.conserved);
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &cell.rows {
            w.serialize(r)?;
        }
        body.push_str(&String::from_utf8(w.into_inner().map_err(|e| Error::NumericalFailure(e.to_string()))?).unwrap());
        fs::write(&tmp, body)?;
    }
    fs::rename(tmp, stem.with_extension("rows.csv"))?;
    Ok(())
}

/// Load a finished cell if it exists and was produced under `fp`.
pub fn read_cell(dir: &Path, seed: usize, t_b: f64, fp: u64) -> Result<Option<Cell>> {
    let stem = cell_stem(dir, seed, t_b);
    let rows_path = stem.with_extension("rows.csv");
    let Ok(text) = fs::read_to_string(&rows_path) else {
        return Ok(None);
    };
    let mut lines = text.lines();
    if lines.next() != Some(&format!("# fingerprint {fp:016x}")) {
        return Ok(None);
    }
    let conserved = match lines.next() {
        Some("# conserved true") => true,
        Some("# conserved false") => false,
        _ => return Ok(None),
    };
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
    let mut scores: Vec<CellScores> = Vec::new();
    let mut sr = csv::Reader::from_path(stem.with_extension("scores.csv"))?;
    for rec in sr.records() {
        let rec = rec?;
        let d: Detector = rec[0].parse()?;
        let v: f64 = rec[1].parse().map_err(|e| Error::parse("cell scores", e))?;
        match scores.last_mut() {
            Some(cs) if cs.detector == d => cs.scores.push(v),
            _ => scores.push(CellScores { detector: d, scores: vec![v] }),
        }
    }
    let test_labels = fs::read_to_string(stem.with_extension("labels"))?
        .trim()
        .bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(Error::parse("cell labels", format!("unexpected byte {b}"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(Some(Cell { seed, t_b, rows, scores, test_labels, conserved }))
}

/// One-line description of the host, for report headers.
pub fn machine_descriptor() -> String {
    let cpu = fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| s.lines().find(|l| l.starts_with("model name")).map(|l| l.split(':').nth(1).unwrap_or("").trim().to_string()))
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{} {} {cpu} threads={threads}", std::env::consts::OS, std::env::consts::ARCH)
}

/// Run every `(seed, T_b)` cell, reusing finished cells found under
/// `out/cells`, and write the report and ROC exports when `out` is given.
///
/// Cells run in parallel on the current rayon pool. A failing cell does not
/// discard the others: finished cells stay on disk and the first error is
/// returned after the pool drains.
pub fn run_benchmark(sim: &SimConfig, det: &DetectorConfig, bench: &BenchConfig, out: Option<&Path>) -> Result<BenchReport> {
    sim.validate()?;
    det.validate()?;
    bench.validate()?;
    let fp = fingerprint(sim, det, bench);
    let cell_dir = out.map(|o| o.join("cells"));
    let jobs: Vec<(usize, f64)> =
        bench.t_b.iter().flat_map(|&t| (0..bench.seeds).map(move |s| (s, t))).collect();
    let results: Vec<Result<Cell>> = jobs
        .par_iter()
        .map(|&(seed, t_b)| {
            if let Some(dir) = &cell_dir {
                if let Some(c) = read_cell(dir, seed, t_b, fp)? {
                    return Ok(c);
                }
            }
            let cell = run_cell(sim, det, bench, seed, t_b)?;
            if let Some(dir) = &cell_dir {
                write_cell(&cell, dir, fp)?;
            }
            Ok(cell)
        })
        .collect();
    let mut cells = Vec::with_capacity(results.len());
    for r in results {
        cells.push(r?);
    }
    let report = BenchReport { cells, fingerprint: fp, root_seed: bench.root_seed };
    if let Some(o) = out {
        write_report(&report, &o.join("report.csv"))?;
        write_summary(&report, bench, &o.join("summary.csv"))?;
        write_roc_exports(&report, bench, &o.join("roc"))?;
    }
    Ok(report)
}

/// Report CSV with a commented machine and seed header.
pub fn write_report(report: &BenchReport, path: &Path) -> Result<()> {
    let mut body = format!(
        "# machine: {}\n# root_seed: {}\n# fingerprint: {:016x}\n",
        machine_descriptor(),
        report.root_seed,
        report.fingerprint
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in report.rows() {
        w.serialize(r)?;
    }
    body.push_str(&String::from_utf8(w.into_inner().map_err(|e| Error::NumericalFailure(e.to_string()))?).unwrap());
    fs::write(path, body)?;
    Ok(())
}

/// Per `(detector, T_b)` mean accuracy with a Wilson 95% interval on the
/// pooled test decisions.
pub fn write_summary(report: &BenchReport, bench: &BenchConfig, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["detector", "t_b", "seeds", "mean_accuracy", "ci_low", "ci_high", "param_count", "latency_us_median"])?;
    let n_test = Split::new(bench.symbols, bench.split)?.test.len();
    for d in Detector::ALL {
        for &t in &bench.t_b {
            let rows: Vec<&ReportRow> = report.rows().filter(|r| r.detector == d && r.t_b == t).collect();
            if rows.is_empty() {
                continue;
            }
            let mean = rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
            let hits: usize = rows.iter().map(|r| (r.accuracy * n_test as f64).round() as usize).sum();
            let (lo, hi) = wilson_interval(hits, n_test * rows.len());
            let mut lat: Vec<f64> = rows.iter().map(|r| r.latency_us_median).collect();
            lat.sort_by(f64::total_cmp);
            w.write_record([
                d.name().to_string(),
                t.to_string(),
                rows.len().to_string(),
                mean.to_string(),
                lo.to_string(),
                hi.to_string(),
                rows[0].param_count.to_string(),
                lat[lat.len() / 2].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One pooled ROC file per `(detector, T_b)` under `dir`.
pub fn write_roc_exports(report: &BenchReport, bench: &BenchConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for d in Detector::ALL {
        for &t in &bench.t_b {
            let (s, l) = report.pooled_scores(d, t);
            if s.is_empty() || !l.contains(&0) || !l.contains(&1) {
                continue;
            }
            write_roc(&roc(&s, &l)?, &dir.join(format!("{d}_tb{}.csv", tb_label(t))))?;
        }
    }
    Ok(())
}
