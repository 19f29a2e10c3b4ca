use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How free molecules are advanced between micro-steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Every free molecule takes a Gaussian step on every micro-step.
    Exact,
    /// Molecules far from the receiver jump straight to the exit point of a
    /// protective sphere that cannot touch the receiver; only molecules in a
    /// thin shell around the receiver are micro-stepped.
    #[default]
    Lazy,
}

/// Explicitly released molecules reappear this far outside the surface
/// (relative to r0).
pub(crate) const RELEASE_GAP: f64 = 1e-6;

/// How unbinding is parameterised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rebinding {
    /// Unbind with probability `1 - exp(-k_b dt)` per micro-step.
    #[default]
    Explicit,
    /// Coarse-grained rebinding for diffusion-limited receivers. With
    /// `k_D = 4 pi D r0` and `phi = R k_f / (k_D + R k_f)` the net escape
    /// rate from the surface is `k_b (1 - phi)`. Released molecules reappear
    /// at `2 r0`, from where they are recaptured with probability `phi / 2`,
    /// so the release rate is `k_b (1 - phi) / (1 - phi / 2)`. This keeps
    /// the equilibrium occupancy at `c R k_f / k_b`.
    Renormalized,
}

/// Physical and protocol parameters of the mobile channel.
///
/// Units are SI throughout. The defaults reproduce the published
/// simulation table; geometry (`domain_side`, `tx_init`, `rx_init`) and the
/// internal micro-step are our own choices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Molecules released for a bit 1.
    pub n_per_bit: u32,
    /// Messenger molecule diffusion coefficient (m^2/s).
    pub d_mol: f64,
    /// Transmitter diffusion coefficient (m^2/s).
    pub d_tx: f64,
    /// Receiver diffusion coefficient (m^2/s).
    pub d_rx: f64,
    /// Receiver sphere radius (m).
    pub rx_radius: f64,
    /// Forward binding rate per receptor (m^3 / (molecule s)).
    pub k_f: f64,
    /// Backward (unbinding) rate (1/s).
    pub k_b: f64,
    /// Recording step (s).
    pub t_sample: f64,
    /// Internal physics micro-step (s).
    pub t_phys: f64,
    /// Edge of the reflective cubic domain (m).
    pub domain_side: f64,
    pub tx_init: [f64; 3],
    pub rx_init: [f64; 3],
    /// Symbol interval (s).
    pub t_b: f64,
    pub rng_seed: u64,
    /// Number of surface receptors sharing `k_f`; 1 treats `k_f` as the
    /// whole-cell rate.
    pub receptors: u32,
    pub rebinding: Rebinding,
    pub propagation: Propagation,
}

impl Default for SimConfig {
    fn default() -> Self {
        let side = 2e-4;
        let r0 = 5e-6;
        let c = side / 2.0;
        SimConfig {
            n_per_bit: 2000,
            d_mol: 1.01e-9,
            d_tx: 4.74e-14,
            d_rx: 2.31e-12,
            rx_radius: r0,
            k_f: 12.5e-15,
            k_b: 1000.0,
            t_sample: 0.1,
            t_phys: 1e-3,
            domain_side: side,
            tx_init: [c + 10.0 * r0, c, c],
            rx_init: [c, c, c],
            t_b: 100.0,
            rng_seed: 1,
            receptors: 1,
            rebinding: Rebinding::Explicit,
            propagation: Propagation::Lazy,
        }
    }
}

impl SimConfig {
    /// Reduced-scale benchmark channel.
    ///
    /// Molecule diffusion is slowed 100-fold and node mobility 10^4-fold in
    /// a 2 mm box with 2000 receptors and renormalised rebinding, so the
    /// channel response peaks within tens of seconds instead of saturating
    /// the box within one symbol. Rates, radii and emission size keep their
    /// default values.
    pub fn desk() -> Self {
        let side = 2e-3;
        let c = side / 2.0;
        let base = SimConfig::default();
        SimConfig {
            d_mol: base.d_mol * 1e-2,
            d_tx: base.d_tx * 1e-4,
            d_rx: base.d_rx * 1e-4,
            domain_side: side,
            tx_init: [c + 10.0 * base.rx_radius, c, c],
            rx_init: [c, c, c],
            receptors: 2000,
            rebinding: Rebinding::Renormalized,
            ..base
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be strictly positive, got {v}")))
    }
}

impl SimConfig {
    /// Checks every invariant and names the first offending field.
    pub fn validate(&self) -> Result<()> {
        positive("d_mol", self.d_mol)?;
        positive("d_tx", self.d_tx)?;
        positive("d_rx", self.d_rx)?;
        positive("rx_radius", self.rx_radius)?;
        // k_f = 0 is accepted and disables binding.
        if !(self.k_f.is_finite() && self.k_f >= 0.0) {
            return Err(Error::config("k_f", format!("must be non-negative, got {}", self.k_f)));
        }
        positive("k_b", self.k_b)?;
        positive("t_sample", self.t_sample)?;
        positive("t_phys", self.t_phys)?;
        positive("domain_side", self.domain_side)?;
        positive("t_b", self.t_b)?;
        if self.receptors == 0 {
            return Err(Error::config("receptors", "must be at least 1"));
        }
        if self.t_phys > self.t_sample {
            return Err(Error::config(
                "t_phys",
                format!("micro-step {} exceeds recording step {}", self.t_phys, self.t_sample),
            ));
        }
        let ratio = self.t_b / self.t_sample;
        if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::config(
                "t_b",
                format!("{} is not a whole multiple of t_sample {}", self.t_b, self.t_sample),
            ));
        }
        if self.rx_radius >= self.domain_side / 2.0 {
            return Err(Error::config("rx_radius", "must be below half the domain side"));
        }
        for (name, p) in [("tx_init", self.tx_init), ("rx_init", self.rx_init)] {
            if p.iter().any(|&x| !(x.is_finite() && (0.0..=self.domain_side).contains(&x))) {
                return Err(Error::config(name, format!("{p:?} lies outside the domain")));
            }
        }
        let sep = super::geometry::distance(self.tx_init, self.rx_init);
        if sep <= self.rx_radius {
            return Err(Error::config("tx_init", "transmitter starts inside the receiver sphere"));
        }
        Ok(())
    }

    /// Micro-steps per recording step; the micro-step is shrunk so that it
    /// tiles `t_sample` exactly.
    pub fn ticks_per_sample(&self) -> u64 {
        ((self.t_sample / self.t_phys) - 1e-9).ceil().max(1.0) as u64
    }

    /// Effective micro-step actually used by the engine.
    pub fn dt(&self) -> f64 {
        self.t_sample / self.ticks_per_sample() as f64
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.t_b / self.t_sample).round() as usize
    }

    /// Diffusion-limited encounter rate `4 pi D r0` (m^3/s).
    pub fn k_diffusion(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.d_mol * self.rx_radius
    }

    /// Per-contact binding probability of the partially absorbing receiver.
    pub fn p_bind(&self) -> f64 {
        let kappa = self.receptors as f64 * self.k_f
            / (4.0 * std::f64::consts::PI * self.rx_radius * self.rx_radius);
        (kappa * (std::f64::consts::PI * self.dt() / self.d_mol).sqrt()).min(1.0)
    }

    /// Fraction of surface contacts that end in binding in the continuum
    /// Robin model, `R k_f / (k_D + R k_f)`.
    pub fn capture_fraction(&self) -> f64 {
        let kf = self.receptors as f64 * self.k_f;
        kf / (self.k_diffusion() + kf)
    }

    /// Release rate after the selected rebinding treatment (1/s).
    pub fn effective_k_b(&self) -> f64 {
        match self.rebinding {
            Rebinding::Explicit => self.k_b,
            Rebinding::Renormalized => {
                let phi = self.capture_fraction();
                self.k_b * (1.0 - phi) / (1.0 - phi * self.rx_radius / self.release_radius())
            }
        }
    }

    /// Distance from the receiver centre at which released molecules reappear.
    pub fn release_radius(&self) -> f64 {
        match self.rebinding {
            Rebinding::Explicit => self.rx_radius * (1.0 + RELEASE_GAP),
            Rebinding::Renormalized => 2.0 * self.rx_radius,
        }
    }

    pub fn p_unbind(&self) -> f64 {
        -(-self.effective_k_b() * self.dt()).exp_m1()
    }
}
