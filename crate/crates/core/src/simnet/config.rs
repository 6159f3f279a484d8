use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::component::{ConfigError, RoleConfig, Timing};
use crate::db::{DbUpdate, DEFAULT_MAX_PROCS, MAX_TASKS};
use crate::{NodeId, Tick};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("n_nodes must be in 2..={max}, got {n}")]
    NodeCount { n: usize, max: usize },
    #[error("role table covers {roles} nodes but n_nodes is {n}")]
    RoleTable { roles: usize, n: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("latency range {min}..={max} is empty")]
    LatencyRange { min: Tick, max: Tick },
    #[error("fault at tick {at} targets node {node}, outside the net")]
    FaultNode { at: Tick, node: NodeId },
    #[error("fault at tick {at} is not before run_length {run_length}")]
    FaultTime { at: Tick, run_length: Tick },
    #[error("freeze duration must be positive")]
    ZeroFreeze,
    #[error("DB update at tick {at} targets node {node}, outside the net")]
    UpdateNode { at: Tick, node: NodeId },
    #[error("tasks_per_node {0} exceeds {MAX_TASKS}")]
    TooManyTasks(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Latency {
    Constant(Tick),
    /// Seeded uniform jitter, inclusive bounds.
    Uniform {
        min: Tick,
        max: Tick,
    },
}

impl Latency {
    pub fn max(self) -> Tick {
        match self {
            Latency::Constant(l) => l,
            Latency::Uniform { max, .. } => max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    /// Component stops; its timeout list is closed. The IAT keeps running.
    CrashComponent,
    /// Everything on the node stops; inbound messages are dropped.
    CrashNode,
    /// Component stops consuming for the given duration, then catches up.
    FreezeComponent(Tick),
    /// Node goes down now and restarts after the reboot delay.
    RebootNode,
}

impl FaultKind {
    pub fn name(self) -> &'static str {
        match self {
            FaultKind::CrashComponent => "CRASH_COMPONENT",
            FaultKind::CrashNode => "CRASH_NODE",
            FaultKind::FreezeComponent(_) => "FREEZE_COMPONENT",
            FaultKind::RebootNode => "REBOOT_NODE",
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::FreezeComponent(d) => write!(f, "{} {d}", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaultEvent {
    pub at: Tick,
    pub kind: FaultKind,
    pub node: NodeId,
}

/// A DB update raised locally on `node` at tick `at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DbInjection {
    pub at: Tick,
    pub update: DbUpdate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub max_procs: usize,
    pub roles: RoleConfig,
    pub timing: Timing,
    pub latency: Latency,
    pub run_length: Tick,
    pub seed: u64,
    pub faults: Vec<FaultEvent>,
    pub updates: Vec<DbInjection>,
    /// Arms the manager's one-shot fault-injection timeout.
    pub inject: bool,
    pub respawn_delay: Tick,
    pub reboot_delay: Tick,
    pub reboot_enabled: bool,
    pub tasks_per_node: usize,
    pub witm_retries: u32,
    /// When set, every persisted database is also written to
    /// `<dir>/node<N>.db` and read back on reboot.
    pub persist_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::new(4)
    }
}

impl SimConfig {
    /// Defaults for `n_nodes` nodes with node 0 as manager.
    pub fn new(n_nodes: usize) -> Self {
        SimConfig {
            n_nodes,
            max_procs: DEFAULT_MAX_PROCS.max(n_nodes),
            roles: RoleConfig::with_manager(n_nodes.max(1), 0),
            timing: Timing::default(),
            latency: Latency::Constant(10),
            run_length: 60_000,
            seed: 0,
            faults: Vec::new(),
            updates: Vec::new(),
            inject: false,
            respawn_delay: 500,
            reboot_delay: 2000,
            reboot_enabled: true,
            tasks_per_node: 2,
            witm_retries: 5,
            persist_dir: None,
        }
    }

    pub fn with_fault(mut self, at: Tick, kind: FaultKind, node: NodeId) -> Self {
        self.faults.push(FaultEvent { at, kind, node });
        self
    }

    /// Checks hard constraints and returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>, SimError> {
        if self.n_nodes < 2 || self.n_nodes > self.max_procs {
            return Err(SimError::NodeCount {
                n: self.n_nodes,
                max: self.max_procs,
            });
        }
        if self.roles.len() != self.n_nodes {
            return Err(SimError::RoleTable {
                roles: self.roles.len(),
                n: self.n_nodes,
            });
        }
        self.timing.validate()?;
        if let Latency::Uniform { min, max } = self.latency {
            if min > max {
                return Err(SimError::LatencyRange { min, max });
            }
        }
        for f in &self.faults {
            if f.node >= self.n_nodes {
                return Err(SimError::FaultNode {
                    at: f.at,
                    node: f.node,
                });
            }
            if f.at >= self.run_length {
                return Err(SimError::FaultTime {
                    at: f.at,
                    run_length: self.run_length,
                });
            }
            if f.kind == FaultKind::FreezeComponent(0) {
                return Err(SimError::ZeroFreeze);
            }
        }
        if let Some(u) = self
            .updates
            .iter()
            .find(|u| u.update.subject >= self.n_nodes)
        {
            return Err(SimError::UpdateNode {
                at: u.at,
                node: u.update.subject,
            });
        }
        if self.tasks_per_node > MAX_TASKS {
            return Err(SimError::TooManyTasks(self.tasks_per_node));
        }

        let t = &self.timing;
        let slack = 2 * self.latency.max();
        let mut warnings = Vec::new();
        if t.mia_send + slack >= t.mia_recv {
            warnings.push(format!(
                "MIA send {} + 2*latency {} >= MIA recv {}",
                t.mia_send, slack, t.mia_recv
            ));
        }
        if t.taia_send + slack >= t.taia_recv {
            warnings.push(format!(
                "TAIA send {} + 2*latency {} >= TAIA recv {}",
                t.taia_send, slack, t.taia_recv
            ));
        }
        if t.imalive_clear >= t.imalive_set {
            warnings.push(format!(
                "IA clear {} >= IA set {}",
                t.imalive_clear, t.imalive_set
            ));
        }
        Ok(warnings)
    }
}

impl FromStr for FaultKind {
    type Err = String;

    /// Parses the bare kind name; a freeze duration is supplied separately.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CRASH_COMPONENT" => Ok(FaultKind::CrashComponent),
            "CRASH_NODE" => Ok(FaultKind::CrashNode),
            "FREEZE_COMPONENT" => Ok(FaultKind::FreezeComponent(0)),
            "REBOOT_NODE" => Ok(FaultKind::RebootNode),
            other => Err(format!("unknown fault kind `{other}`")),
        }
    }
}
