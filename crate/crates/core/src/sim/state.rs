use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Propagation, SimConfig, RELEASE_GAP};
use super::exit_time::sample_exit_time;
use super::geometry::{distance, fold3, gaussian_step, offset, unit_vector, Vec3};
use crate::error::Result;

/// Fraction of the molecule-to-surface gap used as protective radius. The
/// remaining half absorbs receiver motion during the jump: the receiver
/// diffuses ~400x slower than the messenger, so it moves well under a tenth
/// of the gap over a typical exit time.
const PROTECT_FRACTION: f64 = 0.5;
/// Width of the micro-stepped shell around the receiver, in units of the
/// per-axis micro-step standard deviation.
const SHELL_SIGMAS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Free,
    Bound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Molecule {
    /// Position in the domain. Under lazy propagation a molecule in flight
    /// holds the point where its current jump lands.
    pub pos: Vec3,
    pub status: Status,
}

/// Brownian point (transmitter or receiver centre) that can be advanced
/// lazily: the displacement over `n` silent ticks is one Gaussian draw.
#[derive(Clone, Debug)]
struct Walker {
    pos: Vec3,
    tick: u64,
    sigma_tick: f64,
}

impl Walker {
    fn advance_to(&mut self, tick: u64, rng: &mut ChaCha8Rng, side: f64) {
        if tick > self.tick {
            let sigma = self.sigma_tick * ((tick - self.tick) as f64).sqrt();
            self.pos = fold3(gaussian_step(rng, self.pos, sigma), side);
            self.tick = tick;
        }
    }
}

/// Mutable simulation state. Not safe for concurrent mutation; independent
/// instances can run in parallel.
#[derive(Clone, Debug)]
pub struct SimState {
    config: SimConfig,
    dt: f64,
    tick: u64,
    time: f64,
    molecules: Vec<Molecule>,
    tx: Walker,
    rx: Walker,
    free_count: u64,
    bound_count: u64,
    emitted: u64,
    rng: ChaCha8Rng,
    far: BinaryHeap<Reverse<(u64, u32)>>,
    unbind: BinaryHeap<Reverse<(u64, u32)>>,
    near: Vec<u32>,
    scratch: Vec<u32>,
    p_bind: f64,
    shell: f64,
    sigma_mol: f64,
}

impl SimState {
    /// Fresh state: no molecules, endpoints at their initial positions.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let dt = config.dt();
        let sigma_mol = (2.0 * config.d_mol * dt).sqrt();
        Ok(SimState {
            dt,
            tick: 0,
            time: 0.0,
            molecules: Vec::new(),
            tx: Walker {
                pos: config.tx_init,
                tick: 0,
                sigma_tick: (2.0 * config.d_tx * dt).sqrt(),
            },
            rx: Walker {
                pos: config.rx_init,
                tick: 0,
                sigma_tick: (2.0 * config.d_rx * dt).sqrt(),
            },
            free_count: 0,
            bound_count: 0,
            emitted: 0,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            far: BinaryHeap::new(),
            unbind: BinaryHeap::new(),
            near: Vec::new(),
            scratch: Vec::new(),
            p_bind: config.p_bind(),
            shell: SHELL_SIGMAS * sigma_mol,
            sigma_mol,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn molecules(&self) -> &[Molecule] {
        &self.molecules
    }

    pub fn bound_count(&self) -> u64 {
        self.bound_count
    }

    pub fn free_count(&self) -> u64 {
        self.free_count
    }

    pub fn total_emitted(&self) -> u64 {
        self.emitted
    }

    /// Transmitter position at the last time it was materialised.
    pub fn tx_pos(&self) -> Vec3 {
        self.tx.pos
    }

    /// Receiver centre at the last time it was materialised.
    pub fn rx_pos(&self) -> Vec3 {
        self.rx.pos
    }

    /// Counter check: free + bound equals everything ever emitted.
    pub fn counters_conserved(&self) -> bool {
        self.free_count + self.bound_count == self.emitted
    }

    /// Full scan of molecule statuses against the counters.
    pub fn conservation_holds(&self) -> bool {
        let bound = self
            .molecules
            .iter()
            .filter(|m| m.status == Status::Bound)
            .count() as u64;
        bound == self.bound_count
            && self.molecules.len() as u64 == self.emitted
            && self.counters_conserved()
    }

    /// Every free molecule and both endpoints lie in the closed cube.
    pub fn contained(&self) -> bool {
        let side = self.config.domain_side;
        let inside = |p: &Vec3| p.iter().all(|x| (0.0..=side).contains(x));
        inside(&self.tx.pos)
            && inside(&self.rx.pos)
            && self
                .molecules
                .iter()
                .filter(|m| m.status == Status::Free)
                .all(|m| inside(&m.pos))
    }

    /// Release `n` free molecules at the current transmitter position.
    pub fn emit(&mut self, n: u32) {
        if n == 0 {
            return;
        }
        let side = self.config.domain_side;
        self.tx.advance_to(self.tick, &mut self.rng, side);
        let at = self.tx.pos;
        let first = self.molecules.len();
        self.molecules.extend(std::iter::repeat_n(
            Molecule { pos: at, status: Status::Free },
            n as usize,
        ));
        self.emitted += u64::from(n);
        self.free_count += u64::from(n);
        if self.config.propagation == Propagation::Lazy {
            self.rx.advance_to(self.tick, &mut self.rng, side);
            for idx in first..self.molecules.len() {
                self.classify(idx as u32);
            }
        }
    }

    /// Advance by `dt` seconds.
    ///
    /// A `dt` equal to the configured micro-step advances one tick. Under
    /// exact propagation any other positive `dt` performs a single step of
    /// that length; under lazy propagation it is rounded to whole ticks.
    pub fn step(&mut self, dt: f64) {
        assert!(dt > 0.0, "step length must be positive");
        let ticks = (dt / self.dt).round();
        let whole = ticks >= 1.0 && (ticks * self.dt - dt).abs() <= 1e-9 * dt;
        match self.config.propagation {
            Propagation::Exact if whole => {
                for _ in 0..ticks as u64 {
                    self.exact_step(self.dt);
                    self.tick += 1;
                    self.time = self.tick as f64 * self.dt;
                    self.tx.tick = self.tick;
                    self.rx.tick = self.tick;
                }
            }
            Propagation::Exact => {
                self.exact_step(dt);
                self.time += dt;
            }
            Propagation::Lazy => self.advance_ticks(ticks.max(1.0) as u64),
        }
    }

    /// Advance a whole number of micro-steps.
    pub fn advance_ticks(&mut self, n: u64) {
        match self.config.propagation {
            Propagation::Exact => {
                for _ in 0..n {
                    self.exact_step(self.dt);
                    self.tick += 1;
                    self.tx.tick = self.tick;
                    self.rx.tick = self.tick;
                }
            }
            Propagation::Lazy => {
                let target = self.tick + n;
                while self.tick < target {
                    if self.near.is_empty() {
                        let mut next = target;
                        if let Some(Reverse((t, _))) = self.far.peek() {
                            next = next.min(*t);
                        }
                        if let Some(Reverse((t, _))) = self.unbind.peek() {
                            next = next.min(*t);
                        }
                        self.tick = next.max(self.tick + 1);
                    } else {
                        self.micro_step_near();
                        self.tick += 1;
                    }
                    self.process_due();
                }
            }
        }
        self.time = self.tick as f64 * self.dt;
    }

    /// One literal micro-step of length `dt` over every entity.
    fn exact_step(&mut self, dt: f64) {
        let side = self.config.domain_side;
        let r0 = self.config.rx_radius;
        let sigma_tx = (2.0 * self.config.d_tx * dt).sqrt();
        let sigma_rx = (2.0 * self.config.d_rx * dt).sqrt();
        let sigma = (2.0 * self.config.d_mol * dt).sqrt();
        let p_bind = if (dt - self.dt).abs() <= 1e-12 * dt {
            self.p_bind
        } else {
            let cfg = SimConfig { t_phys: dt, t_sample: dt, t_b: dt, ..self.config.clone() };
            cfg.p_bind()
        };
        let p_unbind = -(-self.config.effective_k_b() * dt).exp_m1();

        self.tx.pos = fold3(gaussian_step(&mut self.rng, self.tx.pos, sigma_tx), side);
        self.rx.pos = fold3(gaussian_step(&mut self.rng, self.rx.pos, sigma_rx), side);
        let rx = self.rx.pos;

        for i in 0..self.molecules.len() {
            match self.molecules[i].status {
                Status::Free => {
                    let p = fold3(gaussian_step(&mut self.rng, self.molecules[i].pos, sigma), side);
                    let d = distance(p, rx);
                    if d < r0 {
                        if self.rng.random::<f64>() < p_bind {
                            self.molecules[i] = Molecule { pos: p, status: Status::Bound };
                            self.free_count -= 1;
                            self.bound_count += 1;
                        } else {
                            self.molecules[i].pos = reflect_out(&mut self.rng, p, rx, d, r0, side);
                        }
                    } else {
                        self.molecules[i].pos = p;
                    }
                }
                Status::Bound => {
                    if self.rng.random::<f64>() < p_unbind {
                        let dir = unit_vector(&mut self.rng);
                        let pos = fold3(offset(rx, dir, self.config.release_radius()), side);
                        self.molecules[i] = Molecule { pos, status: Status::Free };
                        self.bound_count -= 1;
                        self.free_count += 1;
                    }
                }
            }
        }
    }

    /// Micro-step the shell molecules from `tick` to `tick + 1`.
    fn micro_step_near(&mut self) {
        let side = self.config.domain_side;
        let next = self.tick + 1;
        self.rx.advance_to(next, &mut self.rng, side);
        let rx = self.rx.pos;
        let mut list = std::mem::take(&mut self.near);
        self.scratch.clear();
        for &idx in &list {
            let i = idx as usize;
            let p = fold3(gaussian_step(&mut self.rng, self.molecules[i].pos, self.sigma_mol), side);
            self.molecules[i].pos = p;
            if self.settle(idx, next, rx, p) {
                self.scratch.push(idx);
            }
        }
        list.clear();
        std::mem::swap(&mut list, &mut self.scratch);
        self.near = list;
    }

    /// Apply the contact rule at `tick` and route the molecule. Returns true
    /// when it stays in the micro-stepped shell.
    fn settle(&mut self, idx: u32, tick: u64, rx: Vec3, p: Vec3) -> bool {
        let side = self.config.domain_side;
        let r0 = self.config.rx_radius;
        let i = idx as usize;
        let mut d = distance(p, rx);
        if d < r0 {
            if self.rng.random::<f64>() < self.p_bind {
                self.molecules[i].status = Status::Bound;
                self.free_count -= 1;
                self.bound_count += 1;
                let wait = geometric_ticks(&mut self.rng, self.config.effective_k_b() * self.dt);
                self.unbind.push(Reverse((tick + wait, idx)));
                return false;
            }
            let q = reflect_out(&mut self.rng, p, rx, d, r0, side);
            self.molecules[i].pos = q;
            d = distance(q, rx);
        }
        if d - r0 > self.shell {
            self.schedule_far(idx, tick, d - r0);
            false
        } else {
            true
        }
    }

    /// Route a free molecule at the current tick into the shell or a jump.
    fn classify(&mut self, idx: u32) {
        let rx = self.rx.pos;
        let p = self.molecules[idx as usize].pos;
        let gap = distance(p, rx) - self.config.rx_radius;
        if gap > self.shell {
            self.schedule_far(idx, self.tick, gap);
        } else {
            self.near.push(idx);
        }
    }

    /// Jump to the exit point of the protective sphere of radius
    /// `PROTECT_FRACTION * gap`, then diffuse for the rounding remainder.
    fn schedule_far(&mut self, idx: u32, tick: u64, gap: f64) {
        let side = self.config.domain_side;
        let d = self.config.d_mol;
        let a = PROTECT_FRACTION * gap;
        let tau = sample_exit_time(self.rng.random::<f64>(), a, d);
        let ticks = ((tau / self.dt).ceil() as u64).max(1);
        let residual = (ticks as f64 * self.dt - tau).max(0.0);
        let dir = unit_vector(&mut self.rng);
        let i = idx as usize;
        let exit = offset(self.molecules[i].pos, dir, a);
        let land = gaussian_step(&mut self.rng, exit, (2.0 * d * residual).sqrt());
        self.molecules[i].pos = fold3(land, side);
        self.far.push(Reverse((tick + ticks, idx)));
    }

    fn process_due(&mut self) {
        let side = self.config.domain_side;
        let now = self.tick;
        let due = |h: &BinaryHeap<Reverse<(u64, u32)>>| matches!(h.peek(), Some(Reverse((t, _))) if *t <= now);
        if due(&self.far) || due(&self.unbind) {
            self.rx.advance_to(now, &mut self.rng, side);
        }
        let rx = self.rx.pos;
        while due(&self.far) {
            let Reverse((_, idx)) = self.far.pop().unwrap();
            let p = self.molecules[idx as usize].pos;
            if self.settle(idx, now, rx, p) {
                self.near.push(idx);
            }
        }
        while due(&self.unbind) {
            let Reverse((_, idx)) = self.unbind.pop().unwrap();
            let dir = unit_vector(&mut self.rng);
            let pos = fold3(offset(rx, dir, self.config.release_radius()), side);
            self.molecules[idx as usize] = Molecule { pos, status: Status::Free };
            self.bound_count -= 1;
            self.free_count += 1;
            self.near.push(idx);
        }
    }
}

/// Mirror a point that ended inside the receiver radially back outside.
fn reflect_out(rng: &mut ChaCha8Rng, p: Vec3, rx: Vec3, d: f64, r0: f64, side: f64) -> Vec3 {
    let dir = if d > 1e-12 * r0 {
        [(p[0] - rx[0]) / d, (p[1] - rx[1]) / d, (p[2] - rx[2]) / d]
    } else {
        unit_vector(rng)
    };
    let r = (2.0 * r0 - d).max(r0 * (1.0 + RELEASE_GAP));
    fold3(offset(rx, dir, r), side)
}

/// Number of ticks until the first success of a per-tick Bernoulli with
/// success probability `1 - exp(-rate_dt)`; always at least one.
fn geometric_ticks(rng: &mut ChaCha8Rng, rate_dt: f64) -> u64 {
    let u: f64 = rng.random();
    let e = -(1.0 - u).ln();
    let t = (e / rate_dt).ceil();
    if t.is_finite() && t < 1e18 {
        (t as u64).max(1)
    } else {
        u64::MAX / 4
    }
}
