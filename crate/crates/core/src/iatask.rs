//! The per-node I'm Alive Task (IAT).
//!
//! Once roused, the IAT checks a shared flag every `set_timeout` ticks. A
//! zero flag is set to one; a flag still set means the co-located component
//! missed its clearing duty, so the IAT broadcasts TEIF and goes dormant
//! until the next ROUSE.

use crate::component::Action;
use crate::protocol::{MailboxId, Message, MessageType};
use crate::tom::{Timeout, TimeoutKind, TimeoutList};
use crate::{NodeId, Tick};

/// The liveness cell shared by a component and its IAT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IaFlag(u8);

impl IaFlag {
    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_set(self) -> bool {
        self.0 != 0
    }

    pub fn set(&mut self) {
        self.0 = 1;
    }

    pub fn clear(&mut self) {
        self.0 = 0;
    }
}

pub fn clear_flag(flag: &mut IaFlag) {
    flag.clear();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IatPhase {
    Dormant,
    Active,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IatState {
    pub me: NodeId,
    pub n_nodes: usize,
    pub phase: IatPhase,
    pub guarded: NodeId,
    pub tom: TimeoutList,
    pub set_timeout: Tick,
}

impl IatState {
    pub fn new(me: NodeId, n_nodes: usize, set_timeout: Tick, now: Tick) -> Self {
        IatState {
            me,
            n_nodes,
            phase: IatPhase::Dormant,
            guarded: me,
            tom: TimeoutList::starting_at(now),
            set_timeout,
        }
    }

    pub fn is_active(&self) -> bool {
        self.phase == IatPhase::Active
    }

    pub fn handle(&mut self, m: &Message, flag: &mut IaFlag) -> Vec<Action> {
        match (self.phase, m.ty) {
            (IatPhase::Dormant, MessageType::ROUSE) => {
                let Some(guarded) = m.node() else {
                    return vec![Action::EmitTrace(format!(
                        "ROUSE with bad subid {}",
                        m.subid
                    ))];
                };
                self.phase = IatPhase::Active;
                self.guarded = guarded;
                let t = Timeout::declare(TimeoutKind::Iat, guarded, true, self.set_timeout)
                    .expect("set timeout is validated positive");
                let _ = self.tom.insert(t);
                vec![Action::InsertTimeout {
                    kind: TimeoutKind::Iat,
                    subid: guarded,
                }]
            }
            (IatPhase::Active, MessageType::IAT_TIMEOUT) => {
                if !flag.is_set() {
                    flag.set();
                    return Vec::new();
                }
                let teif = Message::new(MessageType::TEIF, self.me);
                let mut actions: Vec<Action> = (0..self.n_nodes)
                    .filter(|&i| i != self.guarded && i != self.me)
                    .map(|dest| Action::Send {
                        dest,
                        mailbox: MailboxId::MBOX,
                        message: teif,
                    })
                    .collect();
                self.tom.delete(TimeoutKind::Iat, self.guarded);
                actions.push(Action::DeleteTimeout {
                    kind: TimeoutKind::Iat,
                    subid: self.guarded,
                });
                self.phase = IatPhase::Dormant;
                actions
            }
            _ => Vec::new(),
        }
    }
}
