//! Particle-level simulation of the mobile diffusion channel.
//!
//! Messenger molecules, the point transmitter and the spherical receiver
//! all diffuse inside a reflective cube. Molecules that end a micro-step
//! inside the receiver bind with the discretised Robin-boundary probability
//! `min(1, kappa sqrt(pi dt / D))`, `kappa = receptors * k_f / (4 pi r0^2)`,
//! and are otherwise mirrored radially outward. Bound molecules leave after
//! a geometric number of micro-steps and reappear just outside the surface.

mod config;
pub mod exit_time;
pub mod geometry;
mod state;
mod trace;

pub use config::{Propagation, Rebinding, SimConfig};
pub use state::{Molecule, SimState, Status};
pub use trace::{meta_path, read_trace, run_sequence, write_trace, Trace, TraceSample};
