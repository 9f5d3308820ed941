//! Outage, capacity and battery-lifetime models for LoRaWAN message
//! replication: plain replication (RT), XOR-coded transmission (CT) and
//! their hybrid (HT).
//!
//! The analytic path runs `channel` (per-packet link outage) → `schemes`
//! (post-decoding outage) → `capacity` (supported devices). `oracle` and
//! `mcsim` check the first two independently; `energy` is separate.

pub mod capacity;
pub mod channel;
pub mod energy;
pub mod error;
pub mod mcsim;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod sampling;
pub mod schemes;
pub mod special;

pub use error::{Error, Result};
pub use params::{NetworkScenario, SchemeConfig, SchemeKind, SfParams};
pub use sampling::Estimate;
