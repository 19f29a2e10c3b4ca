//! First-exit time of 3D Brownian motion from a sphere centred at its start.
//!
//! In units where `D = 1` and the radius is 1 the survival function is
//! `S(s) = 2 sum_{n>=1} (-1)^(n+1) exp(-n^2 pi^2 s)`, with mean `1/6`. The
//! physical time is `s * a^2 / D`. Sampling inverts a tabulated CDF and
//! switches to the single-term tail for late exits.

use std::f64::consts::PI;
use std::sync::OnceLock;

const S_MIN: f64 = 0.008;
const S_TAIL: f64 = 1.0;
const TABLE_LEN: usize = 8192;

/// Survival probability at dimensionless time `s`.
pub fn survival(s: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for n in 1..=400u32 {
        let term = (-(n as f64).powi(2) * PI * PI * s).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

struct Table {
    s: Vec<f64>,
    cdf: Vec<f64>,
    cdf_tail: f64,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let s: Vec<f64> = (0..TABLE_LEN)
            .map(|i| S_MIN + (S_TAIL - S_MIN) * i as f64 / (TABLE_LEN - 1) as f64)
            .collect();
        let mut cdf: Vec<f64> = s.iter().map(|&x| 1.0 - survival(x)).collect();
        // enforce monotonicity against rounding
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        let cdf_tail = *cdf.last().unwrap();
        Table { s, cdf, cdf_tail }
    })
}

/// Inverse-CDF sample of the dimensionless exit time for a uniform `u` in [0, 1).
pub fn sample_dimensionless(u: f64) -> f64 {
    let t = table();
    if u >= t.cdf_tail {
        // S(s) ~ 2 exp(-pi^2 s); the next term is below 1e-12 relative here.
        let tail = (1.0 - u).max(f64::MIN_POSITIVE);
        return (2.0 / tail).ln() / (PI * PI);
    }
    let idx = t.cdf.partition_point(|&c| c <= u);
    if idx == 0 {
        return t.s[0];
    }
    let (c0, c1) = (t.cdf[idx - 1], t.cdf[idx]);
    let (s0, s1) = (t.s[idx - 1], t.s[idx]);
    if c1 > c0 {
        s0 + (s1 - s0) * (u - c0) / (c1 - c0)
    } else {
        s0
    }
}

/// Exit time in seconds from a sphere of radius `a` for diffusion coefficient `d`.
pub fn sample_exit_time(u: f64, a: f64, d: f64) -> f64 {
    sample_dimensionless(u) * a * a / d
}
