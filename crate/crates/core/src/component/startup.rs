use std::collections::{BTreeMap, VecDeque};

use super::{Action, ComponentState, Input, Role, RoleConfig, Timing};
use crate::db::{DbPart, DirDatabase, NodeRole, TaskStatus};
use crate::protocol::{Message, MessageType};
use crate::tom::TimeoutList;
use crate::{NodeId, Tick};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phase {
    /// Pipelined broadcast in progress; `round` is the next round to run.
    /// Parts that arrive ahead of their round wait in `parts`.
    Broadcast {
        round: usize,
        parts: BTreeMap<NodeId, DbPart>,
    },
    /// WITM burst sent. `token` is `None` once retries are exhausted.
    AwaitNmi {
        attempt: u32,
        token: Option<u64>,
    },
    /// REQUEST_DB sent to `candidate`; `tried` candidates asked so far.
    AwaitDbCopy {
        candidate: NodeId,
        tried: usize,
        token: u64,
    },
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StartMode {
    FirstActivation,
    Rejoin,
}

/// Everything a component needs to start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Startup {
    pub me: NodeId,
    pub mode: StartMode,
    pub primary: bool,
    pub roles: RoleConfig,
    pub timing: Timing,
    pub inject: bool,
    pub witm_retries: u32,
    pub tasks: Vec<TaskStatus>,
    pub persisted_db: Option<DirDatabase>,
    pub persisted_role: Option<Role>,
    pub now: Tick,
}

impl Startup {
    pub fn new(me: NodeId, roles: RoleConfig) -> Self {
        Startup {
            me,
            mode: StartMode::FirstActivation,
            primary: true,
            roles,
            timing: Timing::default(),
            inject: false,
            witm_retries: 5,
            tasks: vec![TaskStatus::Running; 2],
            persisted_db: None,
            persisted_role: None,
            now: 0,
        }
    }

    pub fn rejoin(mut self) -> Self {
        self.mode = StartMode::Rejoin;
        self
    }

    pub fn start(self) -> (ComponentState, Vec<Action>) {
        let n = self.roles.len();
        let me = self.me;
        let first = self.mode == StartMode::FirstActivation;
        let role = match (first, self.persisted_role) {
            (false, Some(r)) => r,
            _ => self.roles.role(me),
        };
        let mut db = match (first, self.persisted_db) {
            (false, Some(db)) if db.n_nodes() == n => db,
            _ => {
                let mut db = DirDatabase::new(n);
                let _ = db.build_local(me, &self.tasks);
                db
            }
        };
        db.status.primary = self.primary;
        db.status.role = node_role(role);
        let mut st = ComponentState {
            me,
            n_nodes: n,
            role,
            managerid: self.roles.manager(),
            suspicion: vec![false; n],
            db,
            tom: TimeoutList::starting_at(self.now),
            alive: true,
            first_activation: first,
            primary: self.primary,
            phase: Phase::Running,
            timing: self.timing,
            inject: self.inject,
            witm_retries: self.witm_retries.max(1),
            deferred: VecDeque::new(),
            next_token: 0,
        };
        let mut out = Vec::new();
        if first && self.primary {
            for (i, node) in st.db.nodes.iter_mut().enumerate() {
                node.role = node_role(self.roles.role(i));
            }
            st.phase = Phase::Broadcast {
                round: 0,
                parts: BTreeMap::new(),
            };
            st.progress_broadcast(&mut out);
        } else {
            st.phase = Phase::AwaitNmi {
                attempt: 0,
                token: None,
            };
            st.witm_burst(&mut out);
        }
        (st, out)
    }
}

fn node_role(role: Role) -> NodeRole {
    match role {
        Role::Manager => NodeRole::Manager,
        Role::Backup => NodeRole::Backup,
    }
}

impl ComponentState {
    pub(super) fn handle_startup(&mut self, input: Input, out: &mut Vec<Action>) {
        match (&mut self.phase, input) {
            (Phase::Broadcast { .. }, Input::Message(m)) => self.deferred.push_back(m),
            (Phase::Broadcast { parts, .. }, Input::DbPart(p)) => {
                parts.insert(p.sender, p);
                self.progress_broadcast(out);
            }
            (Phase::AwaitNmi { .. }, Input::Message(m)) if m.ty == MessageType::NMI => {
                self.adopt_nmi(&m, out)
            }
            (Phase::AwaitNmi { .. }, Input::Message(m)) => out.push(Action::EmitTrace(format!(
                "awaiting NMI, discarded {} subid={}",
                m.ty.label(),
                m.subid
            ))),
            (Phase::AwaitNmi { token, .. }, Input::Wakeup(t)) if *token == Some(t) => {
                self.witm_burst(out)
            }
            (Phase::AwaitDbCopy { .. }, Input::Message(m)) => self.deferred.push_back(m),
            (Phase::AwaitDbCopy { .. }, Input::DbCopy(copy)) => match DirDatabase::load(&copy) {
                Ok(db) if db.n_nodes() == self.n_nodes => {
                    let status = self.db.status;
                    self.db = db;
                    self.db.status = status;
                    self.enter_running(out);
                }
                Ok(db) => out.push(Action::EmitTrace(format!(
                    "DB copy has {} nodes, expected {}",
                    db.n_nodes(),
                    self.n_nodes
                ))),
                Err(e) => out.push(Action::EmitTrace(format!("bad DB copy: {e}"))),
            },
            (
                Phase::AwaitDbCopy {
                    candidate,
                    tried,
                    token,
                },
                Input::Wakeup(t),
            ) if *token == t => {
                let (candidate, tried) = (*candidate, *tried);
                if tried + 1 >= self.n_nodes {
                    out.push(Action::EmitTrace(format!(
                        "no DB copy after asking {tried} nodes, keeping local copy"
                    )));
                    self.enter_running(out);
                } else {
                    let mut next = (candidate + 1) % self.n_nodes;
                    if next == self.me {
                        next = (next + 1) % self.n_nodes;
                    }
                    self.request_db(next, tried + 1, out);
                }
            }
            (_, Input::Wakeup(_)) => {}
            (_, input) => out.push(Action::EmitTrace(format!(
                "startup ignored {}",
                describe(&input)
            ))),
        }
    }

    /// Runs broadcast rounds until one needs a part that has not arrived.
    fn progress_broadcast(&mut self, out: &mut Vec<Action>) {
        loop {
            let Phase::Broadcast { round, parts } = &mut self.phase else {
                return;
            };
            let r = *round;
            if r >= self.n_nodes {
                self.db.reset_dynamic();
                self.enter_running(out);
                return;
            }
            if r == self.me {
                *round += 1;
                let part = self.db.part_for(self.me);
                for dest in self.peers() {
                    out.push(Action::SendDbPart {
                        dest,
                        part: part.clone(),
                    });
                }
            } else if let Some(part) = parts.remove(&r) {
                *round += 1;
                if let Err(e) = self.db.absorb_part(&part) {
                    out.push(Action::EmitTrace(format!("bad DB part: {e}")));
                }
            } else {
                return;
            }
        }
    }

    fn witm_burst(&mut self, out: &mut Vec<Action>) {
        let Phase::AwaitNmi { attempt, .. } = self.phase else {
            return;
        };
        if attempt >= self.witm_retries {
            self.phase = Phase::AwaitNmi {
                attempt,
                token: None,
            };
            out.push(Action::EmitTrace(format!(
                "no NMI after {attempt} WITM bursts, waiting"
            )));
            return;
        }
        let witm = Message::new(MessageType::WITM, self.me);
        for dest in self.peers() {
            self.send(out, dest, witm);
        }
        let token = self.fresh_token();
        self.phase = Phase::AwaitNmi {
            attempt: attempt + 1,
            token: Some(token),
        };
        out.push(Action::ArmWakeup {
            after: self.timing.reply_db,
            token,
        });
    }

    fn adopt_nmi(&mut self, m: &Message, out: &mut Vec<Action>) {
        let Some(manager) = usize::try_from(m.args[0])
            .ok()
            .filter(|&i| i < self.n_nodes)
        else {
            out.push(Action::EmitTrace(format!(
                "NMI names bad manager {}",
                m.args[0]
            )));
            return;
        };
        self.managerid = manager;
        self.role = if manager == self.me {
            Role::Manager
        } else {
            Role::Backup
        };
        self.db.status.role = node_role(self.role);
        self.request_db((self.me + 1) % self.n_nodes, 1, out);
    }

    fn request_db(&mut self, candidate: NodeId, tried: usize, out: &mut Vec<Action>) {
        self.send(
            out,
            candidate,
            Message::new(MessageType::REQUEST_DB, self.me),
        );
        let token = self.fresh_token();
        self.phase = Phase::AwaitDbCopy {
            candidate,
            tried,
            token,
        };
        out.push(Action::ArmWakeup {
            after: self.timing.reply_db,
            token,
        });
    }

    fn enter_running(&mut self, out: &mut Vec<Action>) {
        self.phase = Phase::Running;
        out.push(Action::PersistDb(self.db.snapshot()));
        self.setup_role(out);
        while let Some(m) = self.deferred.pop_front() {
            self.handle_message(&m, out);
        }
    }
}

fn describe(input: &Input) -> String {
    match input {
        Input::Message(m) => format!("{} subid={}", m.ty.label(), m.subid),
        Input::DbPart(p) => format!("DB part from {}", p.sender),
        Input::DbCopy(_) => "DB copy".to_string(),
        Input::Wakeup(t) => format!("wakeup {t}"),
    }
}
