//! Link-level simulator for downlink coordinated beamforming in clustered
//! cellular networks.
//!
//! A cluster of `B` coordinated base stations (BSs) serves mobile terminals
//! (MTs) over Rayleigh MIMO channels. Intra-cluster cross links carry
//! relative power `alpha`; out-of-cluster interference (OCI) carries relative
//! power `beta`. The crate provides closed-form rate expressions for a toy
//! scenario, full-CSI schemes for the interference channel, limited-overhead
//! schemes for the two-cell broadcast channel, codebook feedback and a Monte
//! Carlo ergodic-rate engine.

pub mod cli;
pub mod error;
pub mod eval;
pub mod feedback;
pub mod ibc;
pub mod ifc;
pub mod model;
pub mod numerics;
pub mod scheme;
pub mod strategy;
pub mod theory;

pub use error::{Error, Result};
pub use eval::{monte_carlo, monte_carlo_samples, RateReport};
pub use model::{generate_drop, ChannelDrop, ScenarioConfig};
pub use scheme::Scheme;
pub use strategy::{RxStrategy, SchemeOutput, TxStrategy};
