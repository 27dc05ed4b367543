//! Flow-level discrete-event network simulation.
//!
//! Transfers are simulated as fluid flows rather than packets. Bandwidth is
//! only contended at end-host access links; each flow receives the minimum
//! of its per-endpoint shares, and a flow starting or finishing only
//! reallocates the flows that share one of its endpoints.
//!
//! * [`engine`]: clock, event queue and dispatch loop.
//! * [`topology`]: transit-stub topologies, shortest-path latency tables and
//!   the topology file format.
//! * [`flowmodel`]: the bandwidth-share and naive models plus reference
//!   oracles.
//! * [`transport`]: socket-like message interface for applications.

pub mod engine;
pub mod flowmodel;
pub mod time;
pub mod topology;
pub mod transport;

pub use time::SimTime;
