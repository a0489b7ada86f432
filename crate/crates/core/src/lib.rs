//! Domain-separation physics-informed networks (DS-PINN / nDS-PINN) for steady
//! multi-material diffusion `-∇·(κ∇u) = Q` with discontinuous `κ`.
//!
//! A single network is trained on a domain whose material subdomains have been
//! translated apart, so that every interface point becomes two distinct input
//! points. Interface continuity (or jump) conditions couple the two copies, and
//! the trained field is mapped back onto the original domain for evaluation.
//!
//! Modules:
//! - [`net`]: the network with forward jets and reverse accumulation.
//! - [`optimize`]: Adam and L-BFGS over flat parameter vectors.
//! - [`geometry`]: subdomain shapes, separation offsets and training-set sampling.
//! - [`problems`]: built-in benchmark problems with exact solutions.
//! - [`loss`]: supervised, residual and interface loss terms and their gradient.
//! - [`harness`]: training driver, evaluation, sweeps and artifact output.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod loss;
pub mod net;
pub mod optimize;
pub mod problems;

pub use error::{Error, Result};
