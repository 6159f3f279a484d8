use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::db::DirDatabase;
use crate::{NodeId, Tick};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuspicionEntry {
    pub tick: Tick,
    pub watcher: NodeId,
    pub suspect: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TeifBroadcast {
    pub tick: Tick,
    pub node: NodeId,
}

/// A SPAN or reboot request. `latency` counts from the most recent fault
/// injected on the target, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryRequest {
    pub tick: Tick,
    pub requester: NodeId,
    pub target: NodeId,
    pub latency: Option<Tick>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Election {
    pub tick: Tick,
    pub node: NodeId,
    pub previous: NodeId,
    pub next: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub ticks: Tick,
    pub warnings: Vec<String>,
    pub suspicions: Vec<SuspicionEntry>,
    pub teif_broadcasts: Vec<TeifBroadcast>,
    pub spans: Vec<RecoveryRequest>,
    pub reboots: Vec<RecoveryRequest>,
    /// Ticks at which a fresh component incarnation started after SPAN.
    pub respawns: Vec<(Tick, NodeId)>,
    /// Ticks at which a node came back from reboot.
    pub reboots_executed: Vec<(Tick, NodeId)>,
    pub elections: Vec<Election>,
    pub message_counts: BTreeMap<String, u64>,
    /// Running components only; `None` for a node without one.
    pub managerids: Vec<Option<NodeId>>,
    pub final_dbs: Vec<Option<DirDatabase>>,
    pub active_suspicions: usize,
}

impl Report {
    /// Whether all running components hold equal replicas.
    pub fn replicas_equal(&self) -> bool {
        let mut dbs = self.final_dbs.iter().flatten();
        match dbs.next() {
            Some(first) => dbs.all(|d| d.replica_eq(first)),
            None => true,
        }
    }

    /// The manager all running components agree on.
    pub fn final_managerid(&self) -> Option<NodeId> {
        let mut ids = self.managerids.iter().flatten();
        let first = *ids.next()?;
        ids.all(|&m| m == first).then_some(first)
    }

    pub fn first_suspicion(&self, watcher: NodeId, suspect: NodeId) -> Option<Tick> {
        self.suspicions
            .iter()
            .find(|s| s.watcher == watcher && s.suspect == suspect)
            .map(|s| s.tick)
    }

    pub fn message_count(&self, label: &str) -> u64 {
        self.message_counts.get(label).copied().unwrap_or(0)
    }

    pub const METRICS: [&'static str; 10] = [
        "suspicions",
        "teif_broadcasts",
        "spans",
        "reboots",
        "elections",
        "final_managerid",
        "replicas_equal",
        "respawns",
        "reboots_executed",
        "active_suspicions",
    ];

    /// Numeric value of a named metric. `final_managerid` is -1 on
    /// disagreement; `replicas_equal` is 0 or 1.
    pub fn metric(&self, name: &str) -> Option<i64> {
        Some(match name {
            "suspicions" => self.suspicions.len() as i64,
            "teif_broadcasts" => self.teif_broadcasts.len() as i64,
            "spans" => self.spans.len() as i64,
            "reboots" => self.reboots.len() as i64,
            "elections" => self.elections.len() as i64,
            "final_managerid" => self.final_managerid().map_or(-1, |m| m as i64),
            "replicas_equal" => self.replicas_equal() as i64,
            "respawns" => self.respawns.len() as i64,
            "reboots_executed" => self.reboots_executed.len() as i64,
            "active_suspicions" => self.active_suspicions as i64,
            _ => return None,
        })
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!("ticks={}\n", self.ticks);
        for name in Self::METRICS {
            let _ = writeln!(out, "{name}={}", self.metric(name).unwrap_or_default());
        }
        for (label, count) in &self.message_counts {
            let _ = writeln!(out, "messages.{}={count}", label.replace(' ', "_"));
        }
        for (i, m) in self.managerids.iter().enumerate() {
            let v = m.map_or(-1, |m| m as i64);
            let _ = writeln!(out, "managerid.{i}={v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("run length: {} ticks\n", self.ticks);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(out, "suspicions: {}", self.suspicions.len());
        for s in &self.suspicions {
            let _ = writeln!(
                out,
                "  t={} node {} suspects {}",
                s.tick, s.watcher, s.suspect
            );
        }
        let _ = writeln!(out, "TEIF broadcasts: {}", self.teif_broadcasts.len());
        for t in &self.teif_broadcasts {
            let _ = writeln!(out, "  t={} from IAT@{}", t.tick, t.node);
        }
        for (name, list) in [
            ("SPAN requests", &self.spans),
            ("reboot requests", &self.reboots),
        ] {
            let _ = writeln!(out, "{name}: {}", list.len());
            for r in list {
                let lat = r.latency.map_or("-".to_string(), |l| l.to_string());
                let _ = writeln!(
                    out,
                    "  t={} node {} -> node {} (latency {lat})",
                    r.tick, r.requester, r.target
                );
            }
        }
        let _ = writeln!(out, "respawns: {}", self.respawns.len());
        let _ = writeln!(out, "reboots executed: {}", self.reboots_executed.len());
        let _ = writeln!(out, "elections: {}", self.elections.len());
        for e in &self.elections {
            let _ = writeln!(
                out,
                "  t={} node {}: {} -> {}",
                e.tick, e.node, e.previous, e.next
            );
        }
        let _ = writeln!(out, "messages:");
        for (label, count) in &self.message_counts {
            let _ = writeln!(out, "  {label}: {count}");
        }
        let fm = self
            .final_managerid()
            .map_or("disagreement".to_string(), |m| m.to_string());
        let _ = writeln!(out, "final managerid: {fm}");
        let _ = writeln!(out, "active suspicions: {}", self.active_suspicions);
        let _ = writeln!(out, "replicas equal: {}", self.replicas_equal());
        out
    }
}
