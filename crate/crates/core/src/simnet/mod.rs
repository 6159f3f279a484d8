//! Deterministic discrete-event harness for the DIR net.
//!
//! Each node hosts one component, one IAT, one IA-flag cell and a
//! persistence slot. The loop repeatedly picks the earliest pending item,
//! keyed by `(tick, node, rank, insertion order)`. Rank orders what happens
//! on one node at one tick: component timer firings, then IAT timer
//! firings, then deliveries and wakeups, then faults and recovery steps.

mod config;
mod report;
mod trace;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::component::{Action, ComponentState, Input, Role, Startup};
use crate::db::{DbUpdate, DirDatabase, TaskStatus};
use crate::iatask::{IaFlag, IatState};
use crate::protocol::{make_timeout_message, MailboxId, Message, MessageType};
use crate::tom::TimeoutList;
use crate::{NodeId, Tick};

pub use config::{DbInjection, FaultEvent, FaultKind, Latency, SimConfig, SimError};
pub use report::{Election, RecoveryRequest, Report, SuspicionEntry, TeifBroadcast};
pub use trace::{Payload, Record, Trace, TraceEvent};

const RANK_COMPONENT_TIMER: u8 = 0;
const RANK_IAT_TIMER: u8 = 1;
const RANK_DELIVERY: u8 = 2;
const RANK_CONTROL: u8 = 3;

/// Brings a list's clock up to `now`. The loop has already fired every
/// entry due before `now`; entries due exactly at `now` are left for it.
fn sync_clock(tom: &mut TimeoutList, now: Tick) {
    let lag = now.saturating_sub(tom.now());
    if lag > 0 {
        let missed = tom.advance(lag);
        debug_assert!(missed.is_empty(), "timers are fired before inputs");
    }
}

/// Runs one simulation to completion.
pub fn run(cfg: &SimConfig) -> Result<(Trace, Report), SimError> {
    let warnings = cfg.validate()?;
    let mut world = World::new(cfg);
    world.report.warnings = warnings;
    world.boot();
    world.run_loop();
    Ok(world.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CompStatus {
    Live,
    Crashed,
    Frozen,
}

struct Comp {
    state: ComponentState,
    incarnation: u64,
    status: CompStatus,
    backlog: VecDeque<Input>,
}

struct Node {
    up: bool,
    comp: Option<Comp>,
    iat: Option<IatState>,
    flag: IaFlag,
    slot_db: Option<DirDatabase>,
    slot_role: Option<Role>,
    last_fault: Option<Tick>,
    respawn_pending: bool,
    reboot_pending: bool,
}

enum Event {
    Deliver {
        src: NodeId,
        mailbox: MailboxId,
        payload: Payload,
    },
    Wakeup {
        incarnation: u64,
        token: u64,
    },
    Update(DbUpdate),
    Fault(FaultKind),
    Thaw {
        incarnation: u64,
    },
    Respawn,
    RebootStart,
    RebootDone,
}

type Key = (Tick, NodeId, u8, u64);

struct Scheduled {
    key: Key,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

struct World<'a> {
    cfg: &'a SimConfig,
    now: Tick,
    nodes: Vec<Node>,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    rng: ChaCha8Rng,
    channel_tail: HashMap<(NodeId, NodeId, MailboxId), Tick>,
    next_incarnation: u64,
    trace: Vec<TraceEvent>,
    report: Report,
}

impl<'a> World<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let nodes = (0..cfg.n_nodes)
            .map(|_| Node {
                up: true,
                comp: None,
                iat: None,
                flag: IaFlag::default(),
                slot_db: None,
                slot_role: None,
                last_fault: None,
                respawn_pending: false,
                reboot_pending: false,
            })
            .collect();
        World {
            cfg,
            now: 0,
            nodes,
            queue: BinaryHeap::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            channel_tail: HashMap::new(),
            next_incarnation: 0,
            trace: Vec::new(),
            report: Report {
                ticks: cfg.run_length,
                ..Report::default()
            },
        }
    }

    fn log(&mut self, node: NodeId, record: Record) {
        self.trace.push(TraceEvent {
            tick: self.now,
            node,
            record,
        });
    }

    fn note(&mut self, node: NodeId, text: impl Into<String>) {
        self.log(node, Record::Note(text.into()));
    }

    fn schedule(&mut self, at: Tick, node: NodeId, event: Event) {
        let rank = match event {
            Event::Deliver { .. } | Event::Wakeup { .. } | Event::Update(_) => RANK_DELIVERY,
            _ => RANK_CONTROL,
        };
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            key: (at, node, rank, self.seq),
            event,
        }));
    }

    fn startup(&self, node: NodeId, rejoin: bool) -> Startup {
        let mut s = Startup::new(node, self.cfg.roles.clone());
        s.timing = self.cfg.timing;
        s.inject = self.cfg.inject;
        s.witm_retries = self.cfg.witm_retries;
        s.tasks = vec![TaskStatus::Running; self.cfg.tasks_per_node];
        s.now = self.now;
        if rejoin {
            s = s.rejoin();
            s.persisted_db = self.nodes[node].slot_db.clone();
            s.persisted_role = self.nodes[node].slot_role;
        }
        s
    }

    fn start_component(&mut self, node: NodeId, rejoin: bool) {
        let (state, actions) = self.startup(node, rejoin).start();
        self.next_incarnation += 1;
        let incarnation = self.next_incarnation;
        self.nodes[node].comp = Some(Comp {
            state,
            incarnation,
            status: CompStatus::Live,
            backlog: VecDeque::new(),
        });
        self.execute(node, incarnation, actions);
    }

    fn start_iat(&mut self, node: NodeId) {
        let iat = IatState::new(
            node,
            self.cfg.n_nodes,
            self.cfg.timing.imalive_set,
            self.now,
        );
        self.nodes[node].iat = Some(iat);
        self.nodes[node].flag.clear();
    }

    fn boot(&mut self) {
        for node in 0..self.cfg.n_nodes {
            self.start_iat(node);
            self.start_component(node, false);
        }
        for f in &self.cfg.faults {
            self.schedule(f.at, f.node, Event::Fault(f.kind));
        }
        for u in &self.cfg.updates {
            self.schedule(u.at, u.update.subject, Event::Update(u.update));
        }
    }

    /// Earliest pending timer as a queue key.
    fn next_timer(&self) -> Option<Key> {
        let mut best: Option<Key> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            let comp = n
                .comp
                .as_ref()
                .filter(|c| c.status != CompStatus::Crashed)
                .and_then(|c| c.state.tom.next_expiry())
                .map(|t| (t, i, RANK_COMPONENT_TIMER, 0));
            let iat = n
                .iat
                .as_ref()
                .and_then(|iat| iat.tom.next_expiry())
                .map(|t| (t, i, RANK_IAT_TIMER, 0));
            for k in [comp, iat].into_iter().flatten() {
                if best.is_none_or(|b| k < b) {
                    best = Some(k);
                }
            }
        }
        best
    }

    fn run_loop(&mut self) {
        loop {
            let timer = self.next_timer();
            let queued = self.queue.peek().map(|s| s.0.key);
            let take_timer = match (timer, queued) {
                (Some(t), Some(q)) => t < q,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_timer {
                let (tick, node, rank, _) = timer.expect("checked above");
                if tick > self.cfg.run_length {
                    break;
                }
                self.now = tick;
                if rank == RANK_COMPONENT_TIMER {
                    self.fire_component_timer(node);
                } else {
                    self.fire_iat_timer(node);
                }
            } else {
                let Reverse(s) = self.queue.pop().expect("peeked");
                if s.key.0 > self.cfg.run_length {
                    break;
                }
                self.now = s.key.0;
                self.dispatch(s.key.1, s.event);
            }
        }
    }

    fn fire_component_timer(&mut self, node: NodeId) {
        let now = self.now;
        let Some(comp) = self.nodes[node].comp.as_mut() else {
            return;
        };
        let Some(f) = comp.state.tom.fire_next(now) else {
            return;
        };
        let frozen = comp.status == CompStatus::Frozen;
        let input = Input::Message(make_timeout_message(f.kind, f.subid));
        self.log(
            node,
            Record::Fired {
                kind: f.kind,
                subid: f.subid,
            },
        );
        if frozen {
            if let Some(comp) = self.nodes[node].comp.as_mut() {
                comp.backlog.push_back(input);
            }
        } else {
            self.component_input(node, input);
        }
    }

    fn fire_iat_timer(&mut self, node: NodeId) {
        let now = self.now;
        let n = &mut self.nodes[node];
        let Some(iat) = n.iat.as_mut() else {
            return;
        };
        let Some(f) = iat.tom.fire_next(now) else {
            return;
        };
        let actions = iat.handle(&make_timeout_message(f.kind, f.subid), &mut n.flag);
        self.log(
            node,
            Record::Fired {
                kind: f.kind,
                subid: f.subid,
            },
        );
        self.execute_iat(node, actions);
    }

    fn component_input(&mut self, node: NodeId, input: Input) {
        let now = self.now;
        let Some(comp) = self.nodes[node].comp.as_mut() else {
            return;
        };
        sync_clock(&mut comp.state.tom, now);
        let before = comp.state.suspicion.clone();
        let actions = comp.state.handle(input);
        let incarnation = comp.incarnation;
        let raised: Vec<NodeId> = comp
            .state
            .suspicion
            .iter()
            .zip(&before)
            .enumerate()
            .filter(|(_, (after, before))| **after && !**before)
            .map(|(i, _)| i)
            .collect();
        for suspect in raised {
            self.report.suspicions.push(SuspicionEntry {
                tick: now,
                watcher: node,
                suspect,
            });
        }
        self.execute(node, incarnation, actions);
    }

    fn execute_iat(&mut self, node: NodeId, actions: Vec<Action>) {
        if actions
            .iter()
            .any(|a| matches!(a, Action::Send { message, .. } if message.ty == MessageType::TEIF))
        {
            self.report.teif_broadcasts.push(TeifBroadcast {
                tick: self.now,
                node,
            });
        }
        self.execute(node, 0, actions);
    }

    fn latency_from_fault(&self, target: NodeId) -> Option<Tick> {
        self.nodes[target].last_fault.map(|f| self.now - f)
    }

    fn execute(&mut self, node: NodeId, incarnation: u64, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Send {
                    dest,
                    mailbox,
                    message,
                } => self.send(node, dest, mailbox, Payload::Msg(message)),
                Action::SendDbPart { dest, part } => {
                    self.send(node, dest, MailboxId::DB, Payload::Part(part))
                }
                Action::SendDbCopy { dest, copy } => {
                    self.send(node, dest, MailboxId::DB, Payload::Copy(copy))
                }
                Action::InsertTimeout { kind, subid } => {
                    self.note(node, format!("tom insert {} {subid}", kind.code()))
                }
                Action::RenewTimeout { kind, subid } => {
                    self.note(node, format!("tom renew {} {subid}", kind.code()))
                }
                Action::DeleteTimeout { kind, subid } => {
                    self.note(node, format!("tom delete {} {subid}", kind.code()))
                }
                Action::ClearIaFlag => self.nodes[node].flag.clear(),
                Action::CloseTom => self.note(node, "timeout list closed"),
                Action::RequestAgentRespawn { target } => {
                    self.report.spans.push(RecoveryRequest {
                        tick: self.now,
                        requester: node,
                        target,
                        latency: self.latency_from_fault(target),
                    });
                    let span = Message::new(MessageType::SPAN, target);
                    self.send(node, target, MailboxId::IAT, Payload::Msg(span));
                }
                Action::RequestNodeReboot { target } => self.request_reboot(node, target),
                Action::BecomeManagerAndRestart => {
                    self.nodes[node].slot_role = Some(Role::Manager);
                    self.log(
                        node,
                        Record::Recovery {
                            kind: "PROMOTE",
                            target: node,
                        },
                    );
                }
                Action::Elected { previous, next } => self.report.elections.push(Election {
                    tick: self.now,
                    node,
                    previous,
                    next,
                }),
                Action::PersistDb(snapshot) => match DirDatabase::load(&snapshot) {
                    Ok(db) => self.persist(node, db),
                    Err(e) => self.note(node, format!("persist failed: {e}")),
                },
                Action::ArmWakeup { after, token } => {
                    self.schedule(self.now + after, node, Event::Wakeup { incarnation, token })
                }
                Action::EmitTrace(text) => self.note(node, text),
            }
        }
    }

    fn persist_path(&self, node: NodeId) -> Option<PathBuf> {
        self.cfg
            .persist_dir
            .as_ref()
            .map(|d| d.join(format!("node{node}.db")))
    }

    fn persist(&mut self, node: NodeId, db: DirDatabase) {
        if let Some(path) = self.persist_path(node) {
            if let Err(e) = std::fs::write(&path, db.to_text()) {
                self.note(node, format!("cannot write {}: {e}", path.display()));
            }
        }
        self.nodes[node].slot_db = Some(db);
    }

    fn restore_slot(&mut self, node: NodeId) {
        let Some(path) = self.persist_path(node) else {
            return;
        };
        match std::fs::read_to_string(&path).map(|t| DirDatabase::from_text(&t)) {
            Ok(Ok(db)) => self.nodes[node].slot_db = Some(db),
            Ok(Err(e)) => self.note(node, format!("bad persisted db: {e}")),
            Err(_) => self.note(node, "no persisted db on disk"),
        }
    }

    fn sample_latency(&mut self) -> Tick {
        match self.cfg.latency {
            Latency::Constant(l) => l,
            Latency::Uniform { min, max } => self.rng.random_range(min..=max),
        }
    }

    fn send(&mut self, src: NodeId, dest: NodeId, mailbox: MailboxId, payload: Payload) {
        if dest >= self.cfg.n_nodes {
            self.note(
                src,
                format!("unknown destination {dest}, dropped {payload}"),
            );
            return;
        }
        let latency = if src == dest {
            0
        } else {
            self.sample_latency()
        };
        let tail = self.channel_tail.entry((src, dest, mailbox)).or_insert(0);
        let at = (self.now + latency).max(*tail);
        *tail = at;
        *self
            .report
            .message_counts
            .entry(payload.label().to_string())
            .or_default() += 1;
        self.log(
            src,
            Record::Sent {
                dest,
                mailbox,
                payload: payload.clone(),
            },
        );
        self.schedule(
            at,
            dest,
            Event::Deliver {
                src,
                mailbox,
                payload,
            },
        );
    }

    fn dispatch(&mut self, node: NodeId, event: Event) {
        match event {
            Event::Deliver {
                src,
                mailbox,
                payload,
            } => self.deliver(node, src, mailbox, payload),
            Event::Wakeup { incarnation, token } => {
                let Some(comp) = self.nodes[node].comp.as_mut() else {
                    return;
                };
                if comp.incarnation != incarnation {
                    return;
                }
                match comp.status {
                    CompStatus::Live => self.component_input(node, Input::Wakeup(token)),
                    CompStatus::Frozen => comp.backlog.push_back(Input::Wakeup(token)),
                    CompStatus::Crashed => {}
                }
            }
            Event::Update(u) => {
                self.note(node, format!("DB update raised: {}", u.subcode.name()));
                self.send(node, node, MailboxId::MBOX, Payload::Msg(u.to_message()));
            }
            Event::Fault(kind) => self.apply_fault(node, kind),
            Event::Thaw { incarnation } => self.thaw(node, incarnation),
            Event::Respawn => self.respawn(node),
            Event::RebootStart => self.reboot_start(node),
            Event::RebootDone => self.reboot_done(node),
        }
    }

    fn deliver(&mut self, node: NodeId, src: NodeId, mailbox: MailboxId, payload: Payload) {
        if !self.nodes[node].up {
            self.note(node, format!("DROPPED from {src} on {mailbox}: {payload}"));
            return;
        }
        self.log(
            node,
            Record::Delivered {
                src,
                mailbox,
                payload: payload.clone(),
            },
        );
        let input = match (mailbox, payload) {
            (MailboxId::IAT, Payload::Msg(m)) if m.ty == MessageType::SPAN => {
                return self.span_received(node);
            }
            (MailboxId::IAT, Payload::Msg(m)) => {
                let n = &mut self.nodes[node];
                let Some(iat) = n.iat.as_mut() else {
                    return;
                };
                sync_clock(&mut iat.tom, self.now);
                let actions = iat.handle(&m, &mut n.flag);
                return self.execute_iat(node, actions);
            }
            (_, Payload::Msg(m)) => Input::Message(m),
            (_, Payload::Part(p)) => Input::DbPart(p),
            (_, Payload::Copy(c)) => Input::DbCopy(c),
        };
        let Some(comp) = self.nodes[node].comp.as_mut() else {
            return self.note(node, "no component, input lost");
        };
        match comp.status {
            CompStatus::Live => self.component_input(node, input),
            CompStatus::Crashed | CompStatus::Frozen => comp.backlog.push_back(input),
        }
    }

    fn span_received(&mut self, node: NodeId) {
        if self.nodes[node].respawn_pending {
            return self.note(node, "respawn already pending");
        }
        self.nodes[node].respawn_pending = true;
        let at = self.now + self.cfg.respawn_delay;
        self.schedule(at, node, Event::Respawn);
    }

    fn respawn(&mut self, node: NodeId) {
        self.nodes[node].respawn_pending = false;
        if !self.nodes[node].up || self.nodes[node].iat.is_none() {
            return self.note(node, "respawn skipped, node is down");
        }
        if let Some(old) = self.nodes[node].comp.take() {
            if !old.backlog.is_empty() {
                let k = old.backlog.len();
                self.note(
                    node,
                    format!("discarded {k} queued inputs of the old component"),
                );
            }
        }
        self.log(
            node,
            Record::Recovery {
                kind: "RESPAWN",
                target: node,
            },
        );
        self.report.respawns.push((self.now, node));
        self.start_component(node, true);
    }

    fn request_reboot(&mut self, requester: NodeId, target: NodeId) {
        self.report.reboots.push(RecoveryRequest {
            tick: self.now,
            requester,
            target,
            latency: self.latency_from_fault(target),
        });
        self.log(
            requester,
            Record::Recovery {
                kind: "REBOOT_REQUEST",
                target,
            },
        );
        if !self.cfg.reboot_enabled {
            return self.note(requester, "reboot disabled");
        }
        if self.nodes[target].reboot_pending {
            return self.note(requester, format!("reboot of {target} already pending"));
        }
        self.nodes[target].reboot_pending = true;
        self.schedule(self.now, target, Event::RebootStart);
    }

    fn kill(&mut self, node: NodeId) {
        let n = &mut self.nodes[node];
        n.up = false;
        n.comp = None;
        n.iat = None;
    }

    fn reboot_start(&mut self, node: NodeId) {
        self.kill(node);
        self.log(
            node,
            Record::Recovery {
                kind: "REBOOT",
                target: node,
            },
        );
        let at = self.now + self.cfg.reboot_delay;
        self.schedule(at, node, Event::RebootDone);
    }

    fn reboot_done(&mut self, node: NodeId) {
        self.nodes[node].reboot_pending = false;
        self.nodes[node].up = true;
        self.restore_slot(node);
        self.log(
            node,
            Record::Recovery {
                kind: "REBOOTED",
                target: node,
            },
        );
        self.report.reboots_executed.push((self.now, node));
        self.start_iat(node);
        self.start_component(node, true);
    }

    fn apply_fault(&mut self, node: NodeId, kind: FaultKind) {
        self.log(node, Record::Fault(kind.to_string()));
        self.nodes[node].last_fault = Some(self.now);
        let up = self.nodes[node].up;
        match kind {
            FaultKind::CrashNode if up => self.kill(node),
            FaultKind::RebootNode if self.nodes[node].reboot_pending => {
                self.note(node, "reboot already pending")
            }
            FaultKind::RebootNode => {
                self.nodes[node].reboot_pending = true;
                self.reboot_start(node);
            }
            FaultKind::CrashComponent | FaultKind::FreezeComponent(_) if up => {
                let now = self.now;
                let comp = self.nodes[node]
                    .comp
                    .as_mut()
                    .filter(|c| c.status == CompStatus::Live);
                let Some(comp) = comp else {
                    return self.note(node, "component not running, fault ignored");
                };
                if let FaultKind::FreezeComponent(d) = kind {
                    comp.status = CompStatus::Frozen;
                    let incarnation = comp.incarnation;
                    self.schedule(now + d, node, Event::Thaw { incarnation });
                } else {
                    comp.status = CompStatus::Crashed;
                    comp.state.tom.close();
                    comp.state.alive = false;
                }
            }
            _ => self.note(node, "node is down, fault ignored"),
        }
    }

    fn thaw(&mut self, node: NodeId, incarnation: u64) {
        let Some(comp) = self.nodes[node].comp.as_mut() else {
            return;
        };
        if comp.incarnation != incarnation || comp.status != CompStatus::Frozen {
            return;
        }
        comp.status = CompStatus::Live;
        let backlog = std::mem::take(&mut comp.backlog);
        self.note(node, format!("thawed with {} queued inputs", backlog.len()));
        for input in backlog {
            self.component_input(node, input);
        }
    }

    fn finish(mut self) -> (Trace, Report) {
        let running: Vec<Option<&ComponentState>> = self
            .nodes
            .iter()
            .map(|n| {
                n.comp
                    .as_ref()
                    .filter(|c| c.status == CompStatus::Live && c.state.is_running())
                    .map(|c| &c.state)
            })
            .collect();
        self.report.managerids = running.iter().map(|s| s.map(|s| s.managerid)).collect();
        self.report.final_dbs = running.iter().map(|s| s.map(|s| s.db.clone())).collect();
        self.report.active_suspicions = running.iter().flatten().map(|s| s.suspicion_count()).sum();
        (Trace { events: self.trace }, self.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifo_under_jitter() {
        let mut cfg = SimConfig::new(2);
        cfg.latency = Latency::Uniform { min: 1, max: 40 };
        cfg.run_length = 5000;
        cfg.seed = 7;
        let (trace, _) = run(&cfg).unwrap();
        let mut sent: HashMap<(NodeId, NodeId, MailboxId), VecDeque<String>> = HashMap::new();
        for e in &trace.events {
            match &e.record {
                Record::Sent {
                    dest,
                    mailbox,
                    payload,
                } => sent
                    .entry((e.node, *dest, *mailbox))
                    .or_default()
                    .push_back(payload.to_string()),
                Record::Delivered {
                    src,
                    mailbox,
                    payload,
                } => {
                    let q = sent
                        .get_mut(&(*src, e.node, *mailbox))
                        .expect("sent before delivered");
                    assert_eq!(q.pop_front().as_deref(), Some(payload.to_string().as_str()));
                }
                _ => {}
            }
        }
    }

    #[test]
    fn local_send_has_zero_latency() {
        let (trace, _) = run(&SimConfig::new(2)).unwrap();
        let rouse = trace
            .events
            .iter()
            .find(|e| e.is_delivered() && e.message().is_some_and(|m| m.ty == MessageType::ROUSE))
            .unwrap();
        let sent = trace
            .events
            .iter()
            .find(|e| e.is_sent() && e.message().is_some_and(|m| m.ty == MessageType::ROUSE))
            .unwrap();
        assert_eq!(rouse.tick, sent.tick);
    }

    #[test]
    fn crashed_node_drops_inbound() {
        let cfg = SimConfig::new(3).with_fault(1000, FaultKind::CrashNode, 2);
        let (trace, _) = run(&cfg).unwrap();
        assert!(trace.events.iter().any(
            |e| e.node == 2 && matches!(&e.record, Record::Note(t) if t.starts_with("DROPPED"))
        ));
        assert!(!trace
            .events
            .iter()
            .any(|e| e.node == 2 && e.tick > 1000 && e.is_delivered() && e.tick < 3000));
    }

    #[test]
    fn trace_ticks_are_monotone() {
        let cfg = SimConfig::new(4).with_fault(5000, FaultKind::CrashComponent, 1);
        let (trace, _) = run(&cfg).unwrap();
        assert!(trace.events.windows(2).all(|w| w[0].tick <= w[1].tick));
    }
}
