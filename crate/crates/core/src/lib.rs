//! A detection/isolation/recovery (DIR) net: one manager and a set of backup
//! agents watching each other through heartbeats, each guarded by a local
//! I'm-Alive watchdog.
//!
//! Every participant is a pure state machine. The [`simnet`] module drives
//! them on a virtual clock with scripted faults, so crash detection and
//! recovery runs are reproducible tick for tick.
//!
//! Module map:
//!
//! * [`tom`]: keyed timeout list advanced by a virtual clock.
//! * [`protocol`]: message vocabulary, datagram shape, trace encoding.
//! * [`db`]: the replicated DIR database and its startup broadcast.
//! * [`component`]: the generic component (startup, manager, backup).
//! * [`iatask`]: the per-node I'm Alive Task.
//! * [`simnet`]: the deterministic discrete-event harness.
//! * [`scenario`]: the line-oriented scenario file format used by the CLI.

pub mod component;
pub mod db;
pub mod iatask;
pub mod protocol;
pub mod scenario;
pub mod simnet;
pub mod tom;

/// Index of a node in the net, `0..n_nodes`.
pub type NodeId = usize;

/// Virtual time. One tick is one simulated millisecond.
pub type Tick = u64;

pub use component::{Action, ComponentState, Input, Role, RoleConfig, Timing};
pub use db::DirDatabase;
pub use iatask::{IaFlag, IatState};
pub use protocol::{MailboxId, Message, MessageType};
pub use simnet::{run, Report, SimConfig, Trace};
pub use tom::{TimeoutKind, TimeoutList};
