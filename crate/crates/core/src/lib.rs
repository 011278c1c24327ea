//! wg-lite: a WireGuard-style pre-shared-key tunnel, a deterministic
//! discrete-event network simulator, and a benchmark harness that runs
//! wg-lite and two synthetic comparison protocols through identical
//! simulated conditions.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod baseline;
pub mod benchmark;
pub mod cli;
pub mod crypto;
pub mod netsim;
pub mod time;
pub mod tunnel;

pub use time::Timestamp;
