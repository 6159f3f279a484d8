//! The replicated DIR database.
//!
//! Each component holds a full replica: per-node role, status, task table
//! and error log. Replicas are filled at first startup by a pipelined
//! all-to-all broadcast and kept in sync afterwards by DB update messages.

use std::fmt;

use thiserror::Error;

use crate::protocol::{DbSubcode, MailboxId, Message, MessageType};
use crate::NodeId;

pub const MAX_TASKS: usize = 16;
pub const MAX_ERRORS: usize = 16;
pub const DEFAULT_MAX_PROCS: usize = 4;
pub const ERROR_RECORD_LEN: usize = 16;

const SNAPSHOT_MAGIC: &[u8; 4] = b"DIRD";
const TEXT_HEADER: &str = "dirdb v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DbError {
    #[error("node {0} is outside the database")]
    BadNode(i32),
    #[error("task {task} out of range for node {node} ({task_nr} tasks)")]
    BadTask {
        node: NodeId,
        task: i32,
        task_nr: usize,
    },
    #[error("unknown DB subcode {0}")]
    BadSubcode(i32),
    #[error("invalid role code {0}")]
    BadRole(i32),
    #[error("invalid task status code {0}")]
    BadStatus(i32),
    #[error("too many tasks: {0} (max {MAX_TASKS})")]
    TooManyTasks(usize),
    #[error("too many errors: {0} (max {MAX_ERRORS})")]
    TooManyErrors(usize),
    #[error("snapshot truncated or malformed at byte {0}")]
    Snapshot(usize),
    #[error("line {line}: {msg}")]
    Text { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TaskStatus {
    #[default]
    Running,
    Waiting,
    Isolated,
    Faulty,
}

impl TaskStatus {
    pub fn code(self) -> i32 {
        match self {
            TaskStatus::Running => 0,
            TaskStatus::Waiting => 1,
            TaskStatus::Isolated => 2,
            TaskStatus::Faulty => 3,
        }
    }

    pub fn from_code(code: i32) -> Result<Self, DbError> {
        Ok(match code {
            0 => TaskStatus::Running,
            1 => TaskStatus::Waiting,
            2 => TaskStatus::Isolated,
            3 => TaskStatus::Faulty,
            _ => return Err(DbError::BadStatus(code)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NodeRole {
    Manager,
    #[default]
    Backup,
    Agent,
}

impl NodeRole {
    pub fn code(self) -> i32 {
        match self {
            NodeRole::Manager => 1,
            NodeRole::Backup => 2,
            NodeRole::Agent => 3,
        }
    }

    pub fn from_code(code: i32) -> Result<Self, DbError> {
        Ok(match code {
            1 => NodeRole::Manager,
            2 => NodeRole::Backup,
            3 => NodeRole::Agent,
            _ => return Err(DbError::BadRole(code)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TaskRecord {
    pub status: TaskStatus,
    pub error_nr: u32,
}

/// Opaque fixed-size error blob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ErrorRecord(pub [u8; ERROR_RECORD_LEN]);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NodeRecord {
    pub status: i32,
    pub role: NodeRole,
    pub reboot_nr: u32,
    pub tasks: Vec<TaskRecord>,
    pub errors: Vec<ErrorRecord>,
    pub update_nr: u32,
}

impl NodeRecord {
    pub fn task_nr(&self) -> usize {
        self.tasks.len()
    }

    pub fn error_nr(&self) -> usize {
        self.errors.len()
    }
}

/// Local, non-replicated status of the owning node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DbStatus {
    pub primary: bool,
    pub role: NodeRole,
}

/// A decoded DB update message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DbUpdate {
    pub subcode: DbSubcode,
    pub subject: NodeId,
    pub op1: i32,
    pub op2: i32,
}

impl DbUpdate {
    pub fn new(subcode: DbSubcode, subject: NodeId, op1: i32, op2: i32) -> Self {
        DbUpdate {
            subcode,
            subject,
            op1,
            op2,
        }
    }

    pub fn from_message(m: &Message) -> Result<Self, DbError> {
        let subcode = DbSubcode::from_code(m.args[0]).ok_or(DbError::BadSubcode(m.args[0]))?;
        let subject = m.node().ok_or(DbError::BadNode(m.subid))?;
        Ok(DbUpdate::new(subcode, subject, m.args[1], m.args[2]))
    }

    pub fn to_message(self) -> Message {
        Message::new(MessageType::DB, self.subject)
            .with_arg(0, self.subcode.code())
            .with_arg(1, self.op1)
            .with_arg(2, self.op2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirDatabase {
    pub status: DbStatus,
    pub nodes: Vec<NodeRecord>,
}

impl DirDatabase {
    pub fn new(n_nodes: usize) -> Self {
        DirDatabase {
            status: DbStatus::default(),
            nodes: vec![NodeRecord::default(); n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn node_mut(&mut self, id: NodeId) -> Result<&mut NodeRecord, DbError> {
        self.nodes.get_mut(id).ok_or(DbError::BadNode(id as i32))
    }

    /// Records the owner's task table, with fresh error counters.
    pub fn build_local(&mut self, me: NodeId, statuses: &[TaskStatus]) -> Result<(), DbError> {
        if statuses.len() > MAX_TASKS {
            return Err(DbError::TooManyTasks(statuses.len()));
        }
        let node = self.node_mut(me)?;
        node.tasks = statuses
            .iter()
            .map(|&status| TaskRecord {
                status,
                error_nr: 0,
            })
            .collect();
        Ok(())
    }

    /// Applies one update. On error the database is left unchanged.
    pub fn apply_update(&mut self, u: DbUpdate) -> Result<(), DbError> {
        let node = self.node_mut(u.subject)?;
        let subject = u.subject;
        let task_index = |node: &NodeRecord| -> Result<usize, DbError> {
            usize::try_from(u.op1)
                .ok()
                .filter(|&i| i < node.task_nr())
                .ok_or(DbError::BadTask {
                    node: subject,
                    task: u.op1,
                    task_nr: node.task_nr(),
                })
        };
        match u.subcode {
            DbSubcode::NewStatus => node.status = u.op1,
            DbSubcode::NewRole => node.role = NodeRole::from_code(u.op1)?,
            DbSubcode::IncReboot => node.reboot_nr += 1,
            DbSubcode::NewTaskStatus => {
                let i = task_index(node)?;
                node.tasks[i].status = TaskStatus::from_code(u.op2)?;
            }
            DbSubcode::NewTaskError => {
                let i = task_index(node)?;
                let status = TaskStatus::from_code(u.op2)?;
                node.tasks[i].status = status;
                node.tasks[i].error_nr += 1;
            }
        }
        Ok(())
    }

    pub fn apply_message(&mut self, m: &Message) -> Result<(), DbError> {
        self.apply_update(DbUpdate::from_message(m)?)
    }

    /// Zeroes the dynamic counters on every node. Task tables are kept.
    pub fn reset_dynamic(&mut self) {
        for node in &mut self.nodes {
            node.errors.clear();
            node.update_nr = 0;
            node.reboot_nr = 0;
        }
    }

    /// The owner's share of the startup broadcast.
    pub fn part_for(&self, me: NodeId) -> DbPart {
        let node = &self.nodes[me];
        DbPart {
            sender: me,
            tasks: node.tasks.clone(),
            errors: node.errors.clone(),
        }
    }

    /// Stores a peer's share received during the startup broadcast.
    pub fn absorb_part(&mut self, part: &DbPart) -> Result<(), DbError> {
        let node = self.node_mut(part.sender)?;
        node.tasks = part.tasks.clone();
        node.errors = part.errors.clone();
        Ok(())
    }

    /// Replicated content only; the per-node status is excluded.
    pub fn replica_eq(&self, other: &DirDatabase) -> bool {
        self.nodes == other.nodes
    }

    pub fn replica_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u32(self.nodes.len() as u32);
        for node in &self.nodes {
            w.node(node);
        }
        w.0
    }

    pub fn snapshot(&self) -> DbSnapshot {
        let mut w = Writer::default();
        w.0.extend_from_slice(SNAPSHOT_MAGIC);
        w.u32(self.nodes.len() as u32);
        w.u8(self.status.primary as u8);
        w.u8(self.status.role.code() as u8);
        for node in &self.nodes {
            w.node(node);
        }
        DbSnapshot(w.0)
    }

    pub fn load(copy: &DbSnapshot) -> Result<DirDatabase, DbError> {
        let mut r = Reader {
            buf: &copy.0,
            pos: 0,
        };
        if r.take(4)? != SNAPSHOT_MAGIC {
            return Err(DbError::Snapshot(0));
        }
        let n = r.u32()? as usize;
        let primary = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(DbError::Snapshot(r.pos - 1)),
        };
        let role = NodeRole::from_code(r.u8()? as i32).map_err(|_| DbError::Snapshot(r.pos - 1))?;
        let nodes = (0..n).map(|_| r.node()).collect::<Result<Vec<_>, _>>()?;
        if r.pos != r.buf.len() {
            return Err(DbError::Snapshot(r.pos));
        }
        Ok(DirDatabase {
            status: DbStatus { primary, role },
            nodes,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{TEXT_HEADER} {}\n", self.nodes.len());
        out += &format!(
            "status {} {}\n",
            self.status.primary as u8,
            self.status.role.code()
        );
        for (id, node) in self.nodes.iter().enumerate() {
            out += &format!(
                "node {id} {} {} {} {}\n",
                node.status,
                node.role.code(),
                node.reboot_nr,
                node.update_nr
            );
            for (t, task) in node.tasks.iter().enumerate() {
                out += &format!("task {id} {t} {} {}\n", task.status.code(), task.error_nr);
            }
            for (e, err) in node.errors.iter().enumerate() {
                let bytes: Vec<String> = err.0.iter().map(|b| b.to_string()).collect();
                out += &format!("error {id} {e} {}\n", bytes.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<DirDatabase, DbError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| DbError::Text {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
        let n: usize = header
            .strip_prefix(TEXT_HEADER)
            .and_then(|rest| rest.trim().parse().ok())
            .ok_or_else(|| bad(hl, "expected `dirdb v1 <n>` header"))?;
        let mut db = DirDatabase::new(n);
        for (ln, line) in lines {
            let mut words = line.split_whitespace();
            let tag = words.next().unwrap_or_default();
            let nums: Vec<i64> = words
                .map(|w| w.parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(ln, "expected integers"))?;
            let arity = |k: usize| {
                if nums.len() == k {
                    Ok(())
                } else {
                    Err(bad(ln, &format!("`{tag}` takes {k} fields")))
                }
            };
            let node_at = |db: &mut DirDatabase, i: i64| -> Result<usize, DbError> {
                usize::try_from(i)
                    .ok()
                    .filter(|&i| i < db.nodes.len())
                    .ok_or_else(|| bad(ln, "node out of range"))
            };
            let wrap = |e: DbError| bad(ln, &e.to_string());
            match tag {
                "status" => {
                    arity(2)?;
                    db.status.primary = nums[0] != 0;
                    db.status.role = NodeRole::from_code(nums[1] as i32).map_err(wrap)?;
                }
                "node" => {
                    arity(5)?;
                    let id = node_at(&mut db, nums[0])?;
                    let node = &mut db.nodes[id];
                    node.status = nums[1] as i32;
                    node.role = NodeRole::from_code(nums[2] as i32).map_err(wrap)?;
                    node.reboot_nr = nums[3] as u32;
                    node.update_nr = nums[4] as u32;
                }
                "task" => {
                    arity(4)?;
                    let id = node_at(&mut db, nums[0])?;
                    let node = &mut db.nodes[id];
                    if nums[1] as usize != node.tasks.len() || node.tasks.len() == MAX_TASKS {
                        return Err(bad(ln, "task rows must be dense and in order"));
                    }
                    node.tasks.push(TaskRecord {
                        status: TaskStatus::from_code(nums[2] as i32).map_err(wrap)?,
                        error_nr: nums[3] as u32,
                    });
                }
                "error" => {
                    arity(2 + ERROR_RECORD_LEN)?;
                    let id = node_at(&mut db, nums[0])?;
                    let node = &mut db.nodes[id];
                    if nums[1] as usize != node.errors.len() || node.errors.len() == MAX_ERRORS {
                        return Err(bad(ln, "error rows must be dense and in order"));
                    }
                    let mut rec = [0u8; ERROR_RECORD_LEN];
                    for (b, v) in rec.iter_mut().zip(&nums[2..]) {
                        *b = u8::try_from(*v).map_err(|_| bad(ln, "error byte out of range"))?;
                    }
                    node.errors.push(ErrorRecord(rec));
                }
                other => return Err(bad(ln, &format!("unknown record `{other}`"))),
            }
        }
        Ok(db)
    }
}

/// Full fixed-shape copy of a database, as sent in reply to REQUEST_DB.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DbSnapshot(pub Vec<u8>);

impl DbSnapshot {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One node's contribution to the startup broadcast.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DbPart {
    pub sender: NodeId,
    pub tasks: Vec<TaskRecord>,
    pub errors: Vec<ErrorRecord>,
}

/// One point-to-point piece of a transfer, in wire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferPart {
    SenderId,
    TaskCount,
    TaskBulk,
    ErrorCount,
    ErrorBulk,
}

impl TransferPart {
    pub fn mailbox(self) -> MailboxId {
        match self {
            TransferPart::TaskBulk | TransferPart::ErrorBulk => MailboxId::DB,
            _ => MailboxId::MBOX,
        }
    }

    /// The pieces actually transmitted for the given table sizes.
    pub fn sequence(task_nr: usize, error_nr: usize) -> Vec<TransferPart> {
        let mut seq = vec![TransferPart::SenderId, TransferPart::TaskCount];
        if task_nr > 0 {
            seq.push(TransferPart::TaskBulk);
        }
        seq.push(TransferPart::ErrorCount);
        if error_nr > 0 {
            seq.push(TransferPart::ErrorBulk);
        }
        seq
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BroadcastStep {
    Send { to: Vec<NodeId> },
    Receive { from: NodeId },
}

impl fmt::Display for BroadcastStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BroadcastStep::Send { to } => write!(f, "send-to-{to:?}"),
            BroadcastStep::Receive { from } => write!(f, "receive-from-{from}"),
        }
    }
}

/// Round `i` of the pipelined broadcast: node `i` sends to all others,
/// every other node receives from `i`.
pub fn broadcast_plan(me: NodeId, n: usize) -> Vec<BroadcastStep> {
    (0..n)
        .map(|round| {
            if round == me {
                BroadcastStep::Send {
                    to: (0..n).filter(|&j| j != me).collect(),
                }
            } else {
                BroadcastStep::Receive { from: round }
            }
        })
        .collect()
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    // Every slot is written so the encoding size depends only on n_nodes.
    fn node(&mut self, node: &NodeRecord) {
        self.i32(node.status);
        self.u8(node.role.code() as u8);
        self.u32(node.reboot_nr);
        self.u32(node.update_nr);
        self.u8(node.tasks.len() as u8);
        for i in 0..MAX_TASKS {
            let t = node.tasks.get(i).copied().unwrap_or_default();
            self.u8(t.status.code() as u8);
            self.u32(t.error_nr);
        }
        self.u8(node.errors.len() as u8);
        for i in 0..MAX_ERRORS {
            let e = node.errors.get(i).copied().unwrap_or_default();
            self.0.extend_from_slice(&e.0);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], DbError> {
        let end = self.pos + k;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or(DbError::Snapshot(self.pos))?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DbError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DbError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32, DbError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn node(&mut self) -> Result<NodeRecord, DbError> {
        let status = self.i32()?;
        let at = self.pos;
        let role = NodeRole::from_code(self.u8()? as i32).map_err(|_| DbError::Snapshot(at))?;
        let reboot_nr = self.u32()?;
        let update_nr = self.u32()?;
        let at = self.pos;
        let task_nr = self.u8()? as usize;
        if task_nr > MAX_TASKS {
            return Err(DbError::Snapshot(at));
        }
        let mut tasks = Vec::with_capacity(task_nr);
        for i in 0..MAX_TASKS {
            let at = self.pos;
            let status =
                TaskStatus::from_code(self.u8()? as i32).map_err(|_| DbError::Snapshot(at))?;
            let error_nr = self.u32()?;
            if i < task_nr {
                tasks.push(TaskRecord { status, error_nr });
            }
        }
        let at = self.pos;
        let error_nr = self.u8()? as usize;
        if error_nr > MAX_ERRORS {
            return Err(DbError::Snapshot(at));
        }
        let mut errors = Vec::with_capacity(error_nr);
        for i in 0..MAX_ERRORS {
            let rec: [u8; ERROR_RECORD_LEN] = self.take(ERROR_RECORD_LEN)?.try_into().unwrap();
            if i < error_nr {
                errors.push(ErrorRecord(rec));
            }
        }
        Ok(NodeRecord {
            status,
            role,
            reboot_nr,
            tasks,
            errors,
            update_nr,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DirDatabase {
        let mut db = DirDatabase::new(4);
        for i in 0..4 {
            db.build_local(i, &[TaskStatus::Running, TaskStatus::Waiting])
                .unwrap();
            db.nodes[i].role = if i == 0 {
                NodeRole::Manager
            } else {
                NodeRole::Backup
            };
        }
        db.nodes[2].reboot_nr = 3;
        db.nodes[3].errors.push(ErrorRecord([7; ERROR_RECORD_LEN]));
        db.status = DbStatus {
            primary: true,
            role: NodeRole::Backup,
        };
        db
    }

    #[test]
    fn build_local_sets_tasks() {
        let mut db = DirDatabase::new(4);
        db.build_local(1, &[TaskStatus::Running, TaskStatus::Running])
            .unwrap();
        assert_eq!(db.nodes[1].task_nr(), 2);
        assert!(db.nodes[1].tasks.iter().all(|t| t.error_nr == 0));
        db.build_local(1, &[]).unwrap();
        assert_eq!(db.nodes[1].task_nr(), 0);
    }

    #[test]
    fn updates() {
        let mut db = sample();
        db.apply_update(DbUpdate::new(DbSubcode::IncReboot, 1, 0, 0))
            .unwrap();
        assert_eq!(db.nodes[1].reboot_nr, 1);

        db.apply_update(DbUpdate::new(
            DbSubcode::NewRole,
            1,
            NodeRole::Manager.code(),
            0,
        ))
        .unwrap();
        assert_eq!(db.nodes[1].role, NodeRole::Manager);

        let u = DbUpdate::new(DbSubcode::NewStatus, 2, 9, 0);
        db.apply_update(u).unwrap();
        let once = db.clone();
        db.apply_update(u).unwrap();
        assert_eq!(db, once);

        db.apply_update(DbUpdate::new(DbSubcode::NewTaskError, 0, 1, 3))
            .unwrap();
        assert_eq!(
            db.nodes[0].tasks[1],
            TaskRecord {
                status: TaskStatus::Faulty,
                error_nr: 1
            }
        );
        db.apply_update(DbUpdate::new(DbSubcode::NewTaskStatus, 0, 1, 0))
            .unwrap();
        assert_eq!(db.nodes[0].tasks[1].error_nr, 1);
    }

    #[test]
    fn rejected_updates_leave_db_unchanged() {
        let mut db = sample();
        let before = db.clone();
        for u in [
            DbUpdate::new(DbSubcode::NewTaskStatus, 0, 2, 0),
            DbUpdate::new(DbSubcode::NewTaskError, 0, -1, 0),
            DbUpdate::new(DbSubcode::NewRole, 0, 9, 0),
            DbUpdate::new(DbSubcode::NewTaskStatus, 0, 0, 7),
            DbUpdate::new(DbSubcode::IncReboot, 4, 0, 0),
        ] {
            assert!(db.apply_update(u).is_err());
            assert_eq!(db, before);
        }
        let m = Message::new(MessageType::DB, 0).with_arg(0, 999);
        assert_eq!(db.apply_message(&m), Err(DbError::BadSubcode(999)));
    }

    #[test]
    fn update_message_round_trip() {
        let u = DbUpdate::new(DbSubcode::NewTaskStatus, 3, 1, 2);
        let m = u.to_message();
        assert_eq!(
            (m.ty, m.subid, m.args),
            (MessageType::DB, 3, [203, 1, 2, 0, 0])
        );
        assert_eq!(DbUpdate::from_message(&m), Ok(u));
    }

    #[test]
    fn reset_dynamic_keeps_tasks() {
        let mut db = sample();
        db.nodes[1].update_nr = 5;
        db.nodes[1].tasks[0].error_nr = 2;
        let tasks: Vec<_> = db.nodes.iter().map(|n| n.tasks.clone()).collect();
        db.reset_dynamic();
        let once = db.clone();
        db.reset_dynamic();
        assert_eq!(db, once);
        for (node, t) in db.nodes.iter().zip(&tasks) {
            assert_eq!((node.error_nr(), node.update_nr, node.reboot_nr), (0, 0, 0));
            assert_eq!(&node.tasks, t);
        }
    }

    #[test]
    fn plan_for_three_nodes() {
        let plan = broadcast_plan(1, 3);
        assert_eq!(
            plan,
            vec![
                BroadcastStep::Receive { from: 0 },
                BroadcastStep::Send { to: vec![0, 2] },
                BroadcastStep::Receive { from: 2 },
            ]
        );
        for me in 0..2 {
            let plan = broadcast_plan(me, 2);
            let sends = plan
                .iter()
                .filter(|s| matches!(s, BroadcastStep::Send { .. }));
            assert_eq!(sends.count(), 1);
            assert_eq!(plan.len(), 2);
        }
    }

    #[test]
    fn transfer_sequence() {
        use TransferPart::*;
        assert_eq!(
            TransferPart::sequence(0, 0),
            vec![SenderId, TaskCount, ErrorCount]
        );
        assert_eq!(
            TransferPart::sequence(2, 1),
            vec![SenderId, TaskCount, TaskBulk, ErrorCount, ErrorBulk]
        );
        assert_eq!(TaskBulk.mailbox(), MailboxId::DB);
        assert_eq!(ErrorCount.mailbox(), MailboxId::MBOX);
    }

    #[test]
    fn plan_execution_converges() {
        let n = 4;
        let mut dbs: Vec<DirDatabase> = (0..n)
            .map(|me| {
                let mut db = DirDatabase::new(n);
                let statuses = vec![TaskStatus::Running; me + 1];
                db.build_local(me, &statuses).unwrap();
                db
            })
            .collect();
        for round in 0..n {
            for me in 0..n {
                if let BroadcastStep::Send { to } = &broadcast_plan(me, n)[round] {
                    let part = dbs[me].part_for(me);
                    for &j in to {
                        assert_eq!(
                            broadcast_plan(j, n)[round],
                            BroadcastStep::Receive { from: me }
                        );
                        dbs[j].absorb_part(&part).unwrap();
                    }
                }
            }
        }
        assert!(dbs.iter().all(|d| d.replica_eq(&dbs[0])));
        assert_eq!(dbs[0].nodes[3].task_nr(), 4);
    }

    #[test]
    fn snapshot_round_trip() {
        let db = sample();
        assert_eq!(DirDatabase::load(&db.snapshot()).unwrap(), db);
    }

    #[test]
    fn snapshot_size_is_fixed() {
        let a = DirDatabase::new(4);
        let mut b = sample();
        b.nodes[0].reboot_nr = u32::MAX;
        assert_eq!(a.snapshot().len(), b.snapshot().len());
    }

    #[test]
    fn truncated_snapshot_fails() {
        let snap = sample().snapshot();
        for cut in [0, 3, 4, 10, snap.len() - 1] {
            let short = DbSnapshot(snap.0[..cut].to_vec());
            assert!(DirDatabase::load(&short).is_err(), "cut at {cut}");
        }
        let mut long = snap.clone();
        long.0.push(0);
        assert!(DirDatabase::load(&long).is_err());
    }

    #[test]
    fn text_round_trip() {
        let db = sample();
        let text = db.to_text();
        assert!(text.starts_with("dirdb v1 4\n"));
        assert_eq!(DirDatabase::from_text(&text).unwrap(), db);
        assert!(DirDatabase::from_text("").is_err());
        assert!(DirDatabase::from_text("dirdb v1 2\nnode 5 0 1 0 0\n").is_err());
        assert!(DirDatabase::from_text("dirdb v1 2\ntask 0 1 0 0\n").is_err());
    }

    #[test]
    fn replica_eq_ignores_status() {
        let a = sample();
        let mut b = a.clone();
        b.status.primary = false;
        assert!(a.replica_eq(&b));
        assert_eq!(a.replica_bytes(), b.replica_bytes());
        b.nodes[0].reboot_nr += 1;
        assert!(!a.replica_eq(&b));
    }
}
