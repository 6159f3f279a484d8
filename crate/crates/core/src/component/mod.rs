//! The generic DIR-net component.
//!
//! A component first resolves its role (startup), then runs either the
//! manager loop or the backup loop. Both are pure transition functions:
//! [`ComponentState::handle`] consumes one [`Input`] and returns the
//! [`Action`]s the harness must carry out. Timeout operations are applied
//! to the component's own list by the handler itself and reported as
//! records.

mod backup;
mod manager;
mod startup;

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::db::{DbPart, DbSnapshot, DirDatabase};
use crate::protocol::{MailboxId, Message, MessageType};
use crate::tom::{Timeout, TimeoutKind, TimeoutList};
use crate::{NodeId, Tick};

pub use startup::{Phase, StartMode, Startup};

/// Key of the IA-flag timeout. Both roles use subid 1.
pub const IA_FLAG_SUBID: NodeId = 1;
/// Key of the backup's single outgoing TAIA timeout.
pub const TAIA_B_SUBID: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Manager,
    Backup,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Manager => "MANAGER",
            Role::Backup => "BACKUP",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Role {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MANAGER" => Ok(Role::Manager),
            "BACKUP" => Ok(Role::Backup),
            other => Err(ConfigError::UnknownRole(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("role table is empty")]
    Empty,
    #[error("role table has no manager")]
    NoManager,
    #[error("role table has {0} managers, expected exactly one")]
    ManyManagers(usize),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("timeout `{0}` must be positive")]
    ZeroTimeout(&'static str),
}

/// Initial role of every node. Exactly one manager.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoleConfig {
    roles: Vec<Role>,
}

impl RoleConfig {
    pub fn new(roles: Vec<Role>) -> Result<Self, ConfigError> {
        if roles.is_empty() {
            return Err(ConfigError::Empty);
        }
        match roles.iter().filter(|r| **r == Role::Manager).count() {
            0 => Err(ConfigError::NoManager),
            1 => Ok(RoleConfig { roles }),
            k => Err(ConfigError::ManyManagers(k)),
        }
    }

    pub fn with_manager(n_nodes: usize, manager: NodeId) -> Self {
        let roles = (0..n_nodes)
            .map(|i| {
                if i == manager {
                    Role::Manager
                } else {
                    Role::Backup
                }
            })
            .collect();
        RoleConfig::new(roles).expect("manager index within range")
    }

    pub fn manager(&self) -> NodeId {
        self.roles
            .iter()
            .position(|r| *r == Role::Manager)
            .expect("validated on construction")
    }

    pub fn role(&self, node: NodeId) -> Role {
        self.roles[node]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }
}

/// Timeout parameters, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Timing {
    pub imalive_clear: Tick,
    pub imalive_set: Tick,
    pub mia_send: Tick,
    pub mia_recv: Tick,
    pub taia_send: Tick,
    pub taia_recv: Tick,
    pub reply_db: Tick,
    pub inject_fault: Tick,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            imalive_clear: 300,
            imalive_set: 1000,
            mia_send: 500,
            mia_recv: 1500,
            taia_send: 500,
            taia_recv: 1500,
            reply_db: 2000,
            inject_fault: 6_000_000,
        }
    }
}

impl Timing {
    pub fn fields(&self) -> [(&'static str, Tick); 8] {
        [
            ("imalive_clear_timeout", self.imalive_clear),
            ("imalive_set_timeout", self.imalive_set),
            ("mia_send_timeout", self.mia_send),
            ("mia_recv_timeout", self.mia_recv),
            ("taia_send_timeout", self.taia_send),
            ("taia_recv_timeout", self.taia_recv),
            ("reply_db_timeout", self.reply_db),
            ("inject_fault_deadline", self.inject_fault),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.fields().into_iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(ConfigError::ZeroTimeout(name)),
            None => Ok(()),
        }
    }

    /// Cyclicity and deadline bound to each timeout kind.
    pub fn binding(&self, kind: TimeoutKind) -> (bool, Tick) {
        match kind {
            TimeoutKind::InjectFault => (false, self.inject_fault),
            TimeoutKind::IaFlag | TimeoutKind::IaFlagB => (true, self.imalive_clear),
            TimeoutKind::Mia => (true, self.mia_send),
            TimeoutKind::Taia => (true, self.taia_recv),
            TimeoutKind::Teif | TimeoutKind::TeifB => (false, self.imalive_set),
            TimeoutKind::Iat => (true, self.imalive_set),
            TimeoutKind::MiaB => (true, self.mia_recv),
            TimeoutKind::TaiaB => (true, self.taia_send),
        }
    }

    pub fn declare(&self, kind: TimeoutKind, subid: NodeId) -> Timeout {
        let (cyclic, deadline) = self.binding(kind);
        Timeout::declare(kind, subid, cyclic, deadline).expect("timing validated positive")
    }
}

/// Side effects requested by a component or IAT, in emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Send {
        dest: NodeId,
        mailbox: MailboxId,
        message: Message,
    },
    /// One node's share of the startup broadcast, to the DB mailbox.
    SendDbPart {
        dest: NodeId,
        part: DbPart,
    },
    /// Full database copy, to the DB mailbox.
    SendDbCopy {
        dest: NodeId,
        copy: DbSnapshot,
    },
    InsertTimeout {
        kind: TimeoutKind,
        subid: NodeId,
    },
    RenewTimeout {
        kind: TimeoutKind,
        subid: NodeId,
    },
    DeleteTimeout {
        kind: TimeoutKind,
        subid: NodeId,
    },
    ClearIaFlag,
    CloseTom,
    /// Sends SPAN to the target's IAT.
    RequestAgentRespawn {
        target: NodeId,
    },
    RequestNodeReboot {
        target: NodeId,
    },
    BecomeManagerAndRestart,
    Elected {
        previous: NodeId,
        next: NodeId,
    },
    PersistDb(DbSnapshot),
    /// Asks for [`Input::Wakeup`] after the given delay.
    ArmWakeup {
        after: Tick,
        token: u64,
    },
    EmitTrace(String),
}

impl Action {
    pub fn is_timeout_record(&self) -> bool {
        matches!(
            self,
            Action::InsertTimeout { .. }
                | Action::RenewTimeout { .. }
                | Action::DeleteTimeout { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    /// Anything arriving on the component's MBOX, including its own
    /// timeout messages.
    Message(Message),
    DbPart(DbPart),
    DbCopy(DbSnapshot),
    Wakeup(u64),
}

pub fn choose_next_manager(managerid: NodeId, n_nodes: usize) -> NodeId {
    (managerid + 1) % n_nodes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentState {
    pub me: NodeId,
    pub n_nodes: usize,
    pub role: Role,
    pub managerid: NodeId,
    pub suspicion: Vec<bool>,
    pub db: DirDatabase,
    pub tom: TimeoutList,
    pub alive: bool,
    pub first_activation: bool,
    pub primary: bool,
    pub phase: Phase,
    pub timing: Timing,
    pub inject: bool,
    pub witm_retries: u32,
    deferred: VecDeque<Message>,
    next_token: u64,
}

impl ComponentState {
    pub fn is_running(&self) -> bool {
        self.phase == Phase::Running
    }

    pub fn suspicion_count(&self) -> usize {
        self.suspicion.iter().filter(|s| **s).count()
    }

    pub fn handle(&mut self, input: Input) -> Vec<Action> {
        let mut out = Vec::new();
        match (&self.phase, input) {
            (Phase::Running, Input::Message(m)) => self.handle_message(&m, &mut out),
            (Phase::Running, Input::DbPart(p)) => {
                out.push(Action::EmitTrace(format!(
                    "stray DB part from {}",
                    p.sender
                )));
            }
            (Phase::Running, Input::DbCopy(_)) => {
                out.push(Action::EmitTrace("stray DB copy ignored".to_string()));
            }
            (Phase::Running, Input::Wakeup(_)) => {}
            (_, input) => self.handle_startup(input, &mut out),
        }
        out
    }

    fn handle_message(&mut self, m: &Message, out: &mut Vec<Action>) {
        match self.role {
            Role::Manager => self.manager_handle(m, out),
            Role::Backup => self.backup_handle(m, out),
        }
        self.epilogue(out);
    }

    fn epilogue(&mut self, out: &mut Vec<Action>) {
        out.push(Action::ClearIaFlag);
        self.renew(out, TimeoutKind::IaFlag, IA_FLAG_SUBID);
    }

    fn fresh_token(&mut self) -> u64 {
        self.next_token += 1;
        self.next_token
    }

    fn peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n_nodes).filter(move |&i| i != self.me)
    }

    fn valid_node(&self, m: &Message) -> Option<NodeId> {
        m.node().filter(|&s| s < self.n_nodes)
    }

    fn send(&self, out: &mut Vec<Action>, dest: NodeId, message: Message) {
        out.push(Action::Send {
            dest,
            mailbox: MailboxId::MBOX,
            message,
        });
    }

    fn insert(&mut self, out: &mut Vec<Action>, kind: TimeoutKind, subid: NodeId) {
        let _ = self.tom.insert(self.timing.declare(kind, subid));
        out.push(Action::InsertTimeout { kind, subid });
    }

    fn renew(&mut self, out: &mut Vec<Action>, kind: TimeoutKind, subid: NodeId) {
        self.tom.renew(kind, subid);
        out.push(Action::RenewTimeout { kind, subid });
    }

    fn delete(&mut self, out: &mut Vec<Action>, kind: TimeoutKind, subid: NodeId) {
        self.tom.delete(kind, subid);
        out.push(Action::DeleteTimeout { kind, subid });
    }

    fn renew_or_insert(&mut self, out: &mut Vec<Action>, kind: TimeoutKind, subid: NodeId) {
        if self.tom.is_present(kind, subid) {
            self.renew(out, kind, subid);
        } else {
            self.insert(out, kind, subid);
        }
    }

    /// Starts the one-shot wait for a TEIF about `suspect`.
    fn arm_teif(&mut self, out: &mut Vec<Action>, kind: TimeoutKind, suspect: NodeId) {
        self.renew_or_insert(out, kind, suspect);
    }

    fn rouse_iat(&self, out: &mut Vec<Action>) {
        out.push(Action::ClearIaFlag);
        out.push(Action::Send {
            dest: self.me,
            mailbox: MailboxId::IAT,
            message: Message::new(MessageType::ROUSE, self.me),
        });
    }

    fn apply_db(&mut self, m: &Message, out: &mut Vec<Action>) {
        match self.db.apply_message(m) {
            Ok(()) => out.push(Action::PersistDb(self.db.snapshot())),
            Err(e) => out.push(Action::EmitTrace(format!("DB update rejected: {e}"))),
        }
    }

    fn broadcast_db(&self, m: &Message, out: &mut Vec<Action>) {
        for i in self.peers() {
            self.send(out, i, *m);
        }
    }

    fn reply_db(&self, m: &Message, out: &mut Vec<Action>) {
        match self.valid_node(m) {
            Some(dest) => out.push(Action::SendDbCopy {
                dest,
                copy: self.db.snapshot(),
            }),
            None => out.push(Action::EmitTrace(format!(
                "REQUEST_DB from bad node {}",
                m.subid
            ))),
        }
    }

    fn unhandled(&self, m: &Message, out: &mut Vec<Action>) {
        out.push(Action::EmitTrace(format!(
            "unhandled {} subid={}",
            m.ty.label(),
            m.subid
        )));
    }

    /// Inserts the role's timeout set, clears suspicion and the IA-flag,
    /// and rouses the local IAT.
    fn setup_role(&mut self, out: &mut Vec<Action>) {
        match self.role {
            Role::Manager => {
                self.managerid = self.me;
                let peers: Vec<NodeId> = self.peers().collect();
                for &i in &peers {
                    self.insert(out, TimeoutKind::Mia, i);
                }
                if self.inject {
                    self.insert(out, TimeoutKind::InjectFault, self.me);
                }
                self.insert(out, TimeoutKind::IaFlag, IA_FLAG_SUBID);
                for &i in &peers {
                    self.insert(out, TimeoutKind::Taia, i);
                }
            }
            Role::Backup => {
                self.insert(out, TimeoutKind::MiaB, self.managerid);
                self.insert(out, TimeoutKind::IaFlag, IA_FLAG_SUBID);
                self.insert(out, TimeoutKind::TaiaB, TAIA_B_SUBID);
            }
        }
        self.suspicion.iter_mut().for_each(|s| *s = false);
        self.rouse_iat(out);
    }

    /// Restarts this component in `role` with a fresh timeout list.
    pub fn restart_as(&mut self, role: Role) -> Vec<Action> {
        let mut out = Vec::new();
        self.role = role;
        self.db.status.role = match role {
            Role::Manager => crate::db::NodeRole::Manager,
            Role::Backup => crate::db::NodeRole::Backup,
        };
        self.first_activation = false;
        self.tom = TimeoutList::starting_at(self.tom.now());
        self.deferred.clear();
        self.phase = Phase::Running;
        self.setup_role(&mut out);
        out
    }
}
