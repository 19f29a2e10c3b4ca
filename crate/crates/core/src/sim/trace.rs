use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::state::SimState;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub time_s: f64,
    pub bound_count: u64,
}

/// Recorded receptor occupancy with its ground-truth bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub bits: Vec<u8>,
    pub t_b: f64,
    pub t_sample: f64,
    pub config: SimConfig,
    /// Free + bound == emitted held at every recorded sample and in the
    /// final full scan.
    pub conserved: bool,
}

impl Trace {
    pub fn samples_per_symbol(&self) -> usize {
        (self.t_b / self.t_sample).round() as usize
    }

    pub fn bound_counts(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.bound_count as f64).collect()
    }

    /// Checks the length, spacing and label invariants.
    pub fn validate(&self) -> Result<()> {
        let sps = self.samples_per_symbol();
        if sps == 0 {
            return Err(Error::MalformedTrace("t_b shorter than t_sample".into()));
        }
        if self.samples.len() != self.bits.len() * sps {
            return Err(Error::MalformedTrace(format!(
                "{} samples for {} bits at {} samples per symbol",
                self.samples.len(),
                self.bits.len(),
                sps
            )));
        }
        if self.bits.iter().any(|&b| b > 1) {
            return Err(Error::MalformedTrace("bits must be 0 or 1".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            let want = (i + 1) as f64 * self.t_sample;
            if (s.time_s - want).abs() > 1e-6 * self.t_sample.max(want * 1e-3) {
                return Err(Error::MalformedTrace(format!(
                    "sample {i} at {} s, expected {want} s",
                    s.time_s
                )));
            }
        }
        Ok(())
    }
}

/// Simulate on-off keyed transmission of `bits`.
///
/// A bit 1 releases `n_per_bit` molecules at the start of its interval.
/// Occupancy is recorded at the end of every recording step, so sample
/// `i` (zero-based) is taken at `(i + 1) * t_sample`.
pub fn run_sequence(config: &SimConfig, bits: &[u8]) -> Result<Trace> {
    if bits.is_empty() {
        return Err(Error::Empty("bit sequence"));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::config("bits", format!("bit value {b} is not 0 or 1")));
    }
    let mut state = SimState::new(config.clone())?;
    let sps = config.samples_per_symbol();
    let ticks = config.ticks_per_sample();
    let mut samples = Vec::with_capacity(bits.len() * sps);
    let mut conserved = true;
    for &bit in bits {
        if bit == 1 {
            state.emit(config.n_per_bit);
        }
        for _ in 0..sps {
            state.advance_ticks(ticks);
            conserved &= state.counters_conserved();
            samples.push(TraceSample {
                time_s: (samples.len() + 1) as f64 * config.t_sample,
                bound_count: state.bound_count(),
            });
        }
    }
    conserved &= state.conservation_holds();
    Ok(Trace {
        samples,
        bits: bits.to_vec(),
        t_b: config.t_b,
        t_sample: config.t_sample,
        config: config.clone(),
        conserved,
    })
}

#[derive(Serialize, Deserialize)]
struct TraceMeta {
    format: String,
    bits: String,
    t_b: f64,
    t_sample: f64,
    conserved: bool,
    config: SimConfig,
}

const TRACE_FORMAT: &str = "rcmc-trace-v1";

fn round_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

/// Path of the metadata sidecar belonging to a trace CSV.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

/// Write `<path>` (CSV `time_s,bound_count`) and its `.meta.toml` sidecar.
pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_s", "bound_count"])?;
    for s in &trace.samples {
        w.write_record([round_time(s.time_s).to_string(), s.bound_count.to_string()])?;
    }
    w.flush()?;
    let meta = TraceMeta {
        format: TRACE_FORMAT.to_string(),
        bits: trace.bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect(),
        t_b: trace.t_b,
        t_sample: trace.t_sample,
        conserved: trace.conserved,
        config: trace.config.clone(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::parse("trace metadata", e))?;
    fs::File::create(meta_path(path))?.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let meta_file = meta_path(path);
    let text = fs::read_to_string(&meta_file)?;
    let meta: TraceMeta =
        toml::from_str(&text).map_err(|e| Error::parse(meta_file.display().to_string(), e))?;
    if meta.format != TRACE_FORMAT {
        return Err(Error::parse("trace metadata", format!("unknown format {}", meta.format)));
    }
    let bits = meta
        .bits
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::parse("trace metadata", format!("bad bit {other:?}"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time_s", "bound_count"] {
        return Err(Error::parse(path.display().to_string(), "header must be time_s,bound_count"));
    }
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{} line {}", path.display(), line + 2);
        let time_s = rec[0].parse::<f64>().map_err(|e| Error::parse(ctx(), e))?;
        let bound_count = rec[1].parse::<u64>().map_err(|e| Error::parse(ctx(), e))?;
        samples.push(TraceSample { time_s, bound_count });
    }
    let trace = Trace {
        samples,
        bits,
        t_b: meta.t_b,
        t_sample: meta.t_sample,
        config: meta.config,
        conserved: meta.conserved,
    };
    trace.validate()?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SimConfig {
        SimConfig { t_b: 10.0, ..SimConfig::default() }
    }

    #[test]
    fn all_zero_bits_give_zero_occupancy() {
        let t = run_sequence(&quick(), &[0; 5]).unwrap();
        assert_eq!(t.samples.len(), 500);
        assert!(t.samples.iter().all(|s| s.bound_count == 0));
        assert!(t.conserved);
    }

    #[test]
    fn sample_count_follows_symbol_arithmetic() {
        let t = run_sequence(&quick(), &[1, 0, 1, 1, 0, 0, 1, 0, 1, 0]).unwrap();
        assert_eq!(t.samples.len(), 1000);
        t.validate().unwrap();
        assert!((t.samples[99].time_s - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_bits_rejected() {
        assert!(matches!(run_sequence(&quick(), &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let cfg = SimConfig { receptors: 1000, ..quick() };
        let t = run_sequence(&cfg, &[1, 0, 1]).unwrap();
        write_trace(&t, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back.bits, t.bits);
        assert_eq!(back.config, t.config);
        assert_eq!(
            back.samples.iter().map(|s| s.bound_count).collect::<Vec<_>>(),
            t.samples.iter().map(|s| s.bound_count).collect::<Vec<_>>()
        );
        let head = std::fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("time_s,bound_count\n0.1,"));
    }
}
