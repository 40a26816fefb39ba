//! Discrete-event simulator of a standalone XR task pipeline.
//!
//! The crate models the VIO / IMUi / SR / SRR / ATW / ATWR tasks sharing a
//! single FIFO GPU stream and measures Motion-to-Display (M2D) and
//! Camera-to-Display (C2D) latency per output frame under several scheduling
//! policies and runtime controllers.

pub mod config;
pub mod engine;
pub mod error;
pub mod geom;
pub mod harness;
pub mod metrics;
pub mod mvio;
pub mod pipeline;
pub mod profile;
pub mod sched;
pub mod sfr;
pub mod sim;
pub mod time;
pub mod workload;

pub use error::{Error, Result};
pub use time::{Duration, Instant};
