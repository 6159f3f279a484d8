//! Plain-text scenario files.
//!
//! One `key = value` per line, `#` starts a comment. Repeatable keys:
//!
//! ```text
//! role   = <node> <MANAGER|BACKUP>
//! fault  = <tick> <KIND> <node> [duration]
//! update = <tick> <node> <SUBCODE> [op1] [op2]
//! assert = <metric> <op> <value>
//! ```
//!
//! Nodes without a `role` line are backups. Without any `role` line node 0
//! is the manager.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::component::{Role, RoleConfig};
use crate::db::DbUpdate;
use crate::protocol::DbSubcode;
use crate::simnet::{DbInjection, FaultEvent, FaultKind, Latency, Report, SimConfig, SimError};
use crate::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error(transparent)]
    Invalid(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

impl FromStr for CmpOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|op| op.symbol() == s)
            .ok_or_else(|| format!("unknown comparison `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assertion {
    pub metric: String,
    pub op: CmpOp,
    pub value: i64,
}

impl Assertion {
    /// `Err` carries the observed value.
    pub fn check(&self, report: &Report) -> Result<(), i64> {
        let got = report
            .metric(&self.metric)
            .expect("metric validated on parse");
        if self.op.eval(got, self.value) {
            Ok(())
        } else {
            Err(got)
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.metric, self.op.symbol(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub config: SimConfig,
    pub asserts: Vec<Assertion>,
}

/// A whitespace-separated token and its 1-based column.
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

struct LineCtx<'a> {
    line: usize,
    key_col: usize,
    toks: Vec<Tok<'a>>,
}

impl<'a> LineCtx<'a> {
    fn err(&self, col: usize, msg: impl Into<String>) -> ScenarioError {
        ScenarioError::Syntax {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), ScenarioError> {
        let n = self.toks.len();
        if n < min {
            let col = self
                .toks
                .last()
                .map_or(self.key_col, |t| t.col + t.text.len());
            return Err(self.err(col, format!("expected at least {min} values, got {n}")));
        }
        if n > max {
            return Err(self.err(self.toks[max].col, "unexpected trailing value"));
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, i: usize, what: &str) -> Result<T, ScenarioError>
    where
        T::Err: fmt::Display,
    {
        let t = &self.toks[i];
        t.text
            .parse()
            .map_err(|e| self.err(t.col, format!("bad {what} `{}`: {e}", t.text)))
    }

    fn opt<T: FromStr>(&self, i: usize, what: &str, default: T) -> Result<T, ScenarioError>
    where
        T::Err: fmt::Display,
    {
        if i < self.toks.len() {
            self.get(i, what)
        } else {
            Ok(default)
        }
    }
}

fn tokens(s: &str, offset: usize) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (true, Some(b)) => {
                out.push(Tok {
                    text: &s[b..i],
                    col: offset + b + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut cfg = SimConfig::new(4);
        let mut n_nodes = None;
        let mut max_procs = None;
        let mut roles: BTreeMap<NodeId, (Role, usize, usize)> = BTreeMap::new();
        let mut asserts = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let Some(eq) = body.find('=') else {
                let col = body.len() - body.trim_start().len() + 1;
                return Err(ScenarioError::Syntax {
                    line,
                    col,
                    msg: "expected `key = value`".into(),
                });
            };
            let key = body[..eq].trim();
            let key_col = body.len() - body.trim_start().len() + 1;
            let cx = LineCtx {
                line,
                key_col,
                toks: tokens(&body[eq + 1..], eq + 1),
            };
            let single = |what: &str| -> Result<u64, ScenarioError> {
                cx.arity(1, 1)?;
                cx.get(0, what)
            };
            match key {
                "n_nodes" => n_nodes = Some(single("node count")? as usize),
                "max_procs" => max_procs = Some(single("process count")? as usize),
                "run_length" => cfg.run_length = single("tick")?,
                "seed" => cfg.seed = single("seed")?,
                "respawn_delay" => cfg.respawn_delay = single("tick")?,
                "reboot_delay" => cfg.reboot_delay = single("tick")?,
                "tasks_per_node" => cfg.tasks_per_node = single("task count")? as usize,
                "witm_retries" => {
                    cx.arity(1, 1)?;
                    cfg.witm_retries = cx.get(0, "retry count")?;
                }
                "inject" | "reboot_enabled" => {
                    cx.arity(1, 1)?;
                    let v: bool = cx.get(0, "boolean")?;
                    if key == "inject" {
                        cfg.inject = v;
                    } else {
                        cfg.reboot_enabled = v;
                    }
                }
                "persist_dir" => {
                    cx.arity(1, 1)?;
                    cfg.persist_dir = Some(PathBuf::from(cx.toks[0].text));
                }
                "latency" => {
                    cx.arity(1, 2)?;
                    let min: u64 = cx.get(0, "latency")?;
                    cfg.latency = if cx.toks.len() == 2 {
                        Latency::Uniform {
                            min,
                            max: cx.get(1, "latency")?,
                        }
                    } else {
                        Latency::Constant(min)
                    };
                }
                "role" => {
                    cx.arity(2, 2)?;
                    let node: NodeId = cx.get(0, "node")?;
                    let role: Role = cx.get(1, "role")?;
                    if roles.insert(node, (role, line, cx.toks[0].col)).is_some() {
                        return Err(
                            cx.err(cx.toks[0].col, format!("duplicate role for node {node}"))
                        );
                    }
                }
                "fault" => {
                    cx.arity(3, 4)?;
                    let at = cx.get(0, "tick")?;
                    let mut kind: FaultKind = cx.get(1, "fault kind")?;
                    let node = cx.get(2, "node")?;
                    match (kind, cx.toks.len()) {
                        (FaultKind::FreezeComponent(_), 4) => {
                            kind = FaultKind::FreezeComponent(cx.get(3, "duration")?)
                        }
                        (FaultKind::FreezeComponent(_), _) => {
                            return Err(cx.err(cx.toks[2].col, "freeze needs a duration"))
                        }
                        (_, 4) => {
                            return Err(cx.err(cx.toks[3].col, "only a freeze takes a duration"))
                        }
                        _ => {}
                    }
                    cfg.faults.push(FaultEvent { at, kind, node });
                }
                "update" => {
                    cx.arity(3, 5)?;
                    let at = cx.get(0, "tick")?;
                    let node = cx.get(1, "node")?;
                    let subcode: DbSubcode = cx.get(2, "DB subcode")?;
                    let op1 = cx.opt(3, "operand", 0)?;
                    let op2 = cx.opt(4, "operand", 0)?;
                    cfg.updates.push(DbInjection {
                        at,
                        update: DbUpdate::new(subcode, node, op1, op2),
                    });
                }
                "assert" => {
                    cx.arity(3, 3)?;
                    let metric = cx.toks[0].text.to_string();
                    if !Report::METRICS.contains(&metric.as_str()) {
                        return Err(cx.err(cx.toks[0].col, format!("unknown metric `{metric}`")));
                    }
                    asserts.push(Assertion {
                        metric,
                        op: cx.get(1, "comparison")?,
                        value: cx.get(2, "value")?,
                    });
                }
                _ => {
                    if !cfg.timing.fields().iter().any(|(n, _)| *n == key) {
                        return Err(cx.err(key_col, format!("unknown key `{key}`")));
                    }
                    let v = single("tick")?;
                    set_timing(&mut cfg, key, v);
                }
            }
        }

        let n = n_nodes.unwrap_or(4);
        cfg.n_nodes = n;
        cfg.max_procs = max_procs.unwrap_or_else(|| crate::db::DEFAULT_MAX_PROCS.max(n));
        if let Some((&node, &(_, line, col))) = roles.range(n..).next() {
            return Err(ScenarioError::Syntax {
                line,
                col,
                msg: format!("role for node {node} but n_nodes is {n}"),
            });
        }
        cfg.roles = if roles.is_empty() {
            RoleConfig::with_manager(n.max(1), 0)
        } else {
            let table = (0..n)
                .map(|i| roles.get(&i).map_or(Role::Backup, |r| r.0))
                .collect();
            RoleConfig::new(table).map_err(SimError::from)?
        };
        cfg.validate()?;
        Ok(Scenario {
            config: cfg,
            asserts,
        })
    }

    /// Canonical form. Parsing it yields the same scenario.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "n_nodes = {}", c.n_nodes);
        let _ = writeln!(out, "max_procs = {}", c.max_procs);
        let _ = writeln!(out, "run_length = {}", c.run_length);
        let _ = writeln!(out, "seed = {}", c.seed);
        match c.latency {
            Latency::Constant(l) => {
                let _ = writeln!(out, "latency = {l}");
            }
            Latency::Uniform { min, max } => {
                let _ = writeln!(out, "latency = {min} {max}");
            }
        }
        for (name, v) in c.timing.fields() {
            let _ = writeln!(out, "{name} = {v}");
        }
        let _ = writeln!(out, "inject = {}", c.inject);
        let _ = writeln!(out, "respawn_delay = {}", c.respawn_delay);
        let _ = writeln!(out, "reboot_delay = {}", c.reboot_delay);
        let _ = writeln!(out, "reboot_enabled = {}", c.reboot_enabled);
        let _ = writeln!(out, "tasks_per_node = {}", c.tasks_per_node);
        let _ = writeln!(out, "witm_retries = {}", c.witm_retries);
        if let Some(dir) = &c.persist_dir {
            let _ = writeln!(out, "persist_dir = {}", dir.display());
        }
        for (i, r) in c.roles.roles().iter().enumerate() {
            let _ = writeln!(out, "role = {i} {r}");
        }
        for f in &c.faults {
            let _ = writeln!(
                out,
                "fault = {} {} {}{}",
                f.at,
                f.kind.name(),
                f.node,
                match f.kind {
                    FaultKind::FreezeComponent(d) => format!(" {d}"),
                    _ => String::new(),
                }
            );
        }
        for u in &c.updates {
            let u2 = u.update;
            let _ = writeln!(
                out,
                "update = {} {} {} {} {}",
                u.at,
                u2.subject,
                u2.subcode.name(),
                u2.op1,
                u2.op2
            );
        }
        for a in &self.asserts {
            let _ = writeln!(out, "assert = {a}");
        }
        out
    }

    /// Failed assertions with the observed value.
    pub fn failed_asserts(&self, report: &Report) -> Vec<(Assertion, i64)> {
        self.asserts
            .iter()
            .filter_map(|a| a.check(report).err().map(|got| (a.clone(), got)))
            .collect()
    }
}

fn set_timing(cfg: &mut SimConfig, key: &str, v: u64) {
    let t = &mut cfg.timing;
    let slot = match key {
        "imalive_clear_timeout" => &mut t.imalive_clear,
        "imalive_set_timeout" => &mut t.imalive_set,
        "mia_send_timeout" => &mut t.mia_send,
        "mia_recv_timeout" => &mut t.mia_recv,
        "taia_send_timeout" => &mut t.taia_send,
        "taia_recv_timeout" => &mut t.taia_recv,
        "reply_db_timeout" => &mut t.reply_db,
        "inject_fault_deadline" => &mut t.inject_fault,
        _ => unreachable!("checked against Timing::fields"),
    };
    *slot = v;
}
