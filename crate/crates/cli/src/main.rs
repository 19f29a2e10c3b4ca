use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcmc::bench::{self, cell_bits, cell_sim_config, fit_seeds, run_benchmark, Detector, Split};
use rcmc::config::RunConfig;
use rcmc::detector::{Fitted, Prepared};
use rcmc::metrics::{roc, write_roc};
use rcmc::sim::{read_trace, run_sequence, write_trace};
use rcmc::{Error, Result};

mod manifest;

#[derive(Parser)]
#[command(name = "rcmc", version, about = "Mobile molecular channel simulation and detector benchmarks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration, or `default` for the built-in one.
    #[arg(long, global = true, default_value = "default")]
    config: String,
    /// Root seed; overrides `bench.root_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one bit sequence and write its trace.
    Simulate {
        /// Symbol interval in seconds.
        #[arg(long)]
        tb: Option<f64>,
        /// Send N uniformly random bits.
        #[arg(long, conflicts_with = "bits", required_unless_present = "bits")]
        random: Option<usize>,
        /// Send an explicit bit string such as `0110`.
        #[arg(long)]
        bits: Option<String>,
    },
    /// Fit every enabled detector on the training part of a trace.
    Train {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Score trained detectors on the test part of a trace.
    Evaluate {
        #[arg(long)]
        trace: PathBuf,
        /// Directory holding `<detector>.model` files; defaults to `<output>/models`.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        repetitions: usize,
    },
    /// Run the full benchmark over seeds and symbol intervals.
    Sweep {
        /// Comma-separated symbol intervals.
        #[arg(long, value_delimiter = ',')]
        tb: Option<Vec<f64>>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// ROC curve of one trained detector on the test part of a trace.
    Roc {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value = "rc_isi")]
        detector: String,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.bench.root_seed = s;
    }
    if let Some(o) = &common.output {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidConfig { field: "bits".into(), reason: format!("{c:?} is not 0 or 1") }),
        })
        .collect()
}

fn split_of(cfg: &RunConfig, n: usize) -> Result<Split> {
    Split::new(n, cfg.bench.split)
}

fn simulate(cfg: &RunConfig, tb: Option<f64>, random: Option<usize>, bits: Option<&str>) -> Result<()> {
    let t_b = tb.unwrap_or(cfg.sim.t_b);
    let bits = match (random, bits) {
        (Some(n), _) => cell_bits(cfg.bench.root_seed, 0, n),
        (None, Some(b)) => parse_bits(b)?,
        (None, None) => return Err(Error::Empty("bit sequence")),
    };
    let sim = cell_sim_config(&cfg.sim, cfg.bench.root_seed, 0, t_b);
    sim.validate()?;
    let trace = run_sequence(&sim, &bits)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("trace.csv");
    write_trace(&trace, &path)?;
    println!("wrote {} ({} symbols, {} samples)", path.display(), bits.len(), trace.samples.len());
    Ok(())
}

fn train(cfg: &RunConfig, trace_path: &Path) -> Result<()> {
    let trace = read_trace(trace_path)?;
    let p = Prepared::new(&trace)?;
    let split = split_of(cfg, trace.bits.len())?;
    let dir = cfg.output_dir.join("models");
    std::fs::create_dir_all(&dir)?;
    for &d in &cfg.detectors.enabled {
        let fitted = Fitted::fit(d, &p, &cfg.detectors, &split, fit_seeds(cfg.bench.root_seed, d, 0, trace.t_b))?;
        let path = fitted.save(&dir)?;
        println!("{d}: {} trainable values -> {}", fitted.param_count(), path.display());
    }
    Ok(())
}

fn evaluate(cfg: &RunConfig, trace_path: &Path, models: &Path, repetitions: usize) -> Result<()> {
    let trace = read_trace(trace_path)?;
    let p = Prepared::new(&trace)?;
    let split = split_of(cfg, trace.bits.len())?;
    let mut rows = Vec::new();
    for &d in &cfg.detectors.enabled {
        let fitted = Fitted::load(models, d)?;
        let out = fitted.run(&p)?;
        let lat = fitted.latency(&p, split.test.clone(), repetitions)?;
        let row = bench::evaluate_row(&fitted, &out, &split.test, &trace.bits, lat, trace.t_b, 0)?;
        println!("{:<13} accuracy {:.4}  ber {:.4}  params {}", d.name(), row.accuracy, row.ber, row.param_count);
        rows.push(row);
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let report = bench::BenchReport {
        cells: vec![bench::Cell {
            seed: 0,
            t_b: trace.t_b,
            rows,
            scores: Vec::new(),
            test_labels: trace.bits[split.test].to_vec(),
            conserved: trace.conserved,
        }],
        fingerprint: 0,
        root_seed: cfg.bench.root_seed,
    };
    bench::write_report(&report, &cfg.output_dir.join("evaluation.csv"))
}

fn sweep(cfg: &mut RunConfig, tb: Option<Vec<f64>>, jobs: Option<usize>) -> Result<()> {
    if let Some(tb) = tb {
        cfg.bench.t_b = tb;
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let report = pool.install(|| run_benchmark(&cfg.sim, &cfg.detectors, &cfg.bench, Some(&cfg.output_dir)))?;
    for &t in &cfg.bench.t_b {
        for d in &cfg.detectors.enabled {
            if let Some(a) = report.mean_accuracy(*d, t) {
                println!("t_b {t:>5}  {:<13} mean accuracy {a:.4}", d.name());
            }
        }
    }
    if report.cells.iter().any(|c| !c.conserved) {
        return Err(Error::NumericalFailure("molecule conservation violated in a benchmark trace".into()));
    }
    Ok(())
}

fn roc_cmd(cfg: &RunConfig, trace_path: &Path, models: &Path, detector: &str) -> Result<()> {
    let d: Detector = detector.parse()?;
    let trace = read_trace(trace_path)?;
    let p = Prepared::new(&trace)?;
    let split = split_of(cfg, trace.bits.len())?;
    let fitted = Fitted::load(models, d)?;
    let scores = fitted
        .run(&p)?
        .scores
        .ok_or_else(|| Error::InvalidConfig { field: "detector".into(), reason: format!("{d} has no soft output") })?;
    let curve = roc(&scores[split.test.clone()], &trace.bits[split.test])?;
    let dir = cfg.output_dir.join("roc");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{d}.csv"));
    write_roc(&curve, &path)?;
    println!("{d}: AUC {:.4} -> {}", curve.auc, path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    let models_or = |m: &Option<PathBuf>| m.clone().unwrap_or_else(|| cfg.output_dir.join("models"));
    match &cli.command {
        Command::Simulate { tb, random, bits } => simulate(&cfg, *tb, *random, bits.as_deref())?,
        Command::Train { trace } => train(&cfg, trace)?,
        Command::Evaluate { trace, models, repetitions } => evaluate(&cfg, trace, &models_or(models), *repetitions)?,
        Command::Roc { trace, models, detector } => roc_cmd(&cfg, trace, &models_or(models), detector)?,
        Command::Sweep { tb, jobs } => {
            let result = sweep(&mut cfg, tb.clone(), *jobs);
            // finished cells are listed even when a later one failed
            manifest::write(&cfg.output_dir)?;
            return result;
        }
    }
    manifest::write(&cfg.output_dir)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
