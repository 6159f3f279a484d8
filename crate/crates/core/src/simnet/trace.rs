use std::fmt;

use crate::db::{DbPart, DbSnapshot};
use crate::protocol::{MailboxId, Message};
use crate::tom::TimeoutKind;
use crate::{NodeId, Tick};

/// What travelled over a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Msg(Message),
    Part(DbPart),
    Copy(DbSnapshot),
}

impl Payload {
    pub fn message(&self) -> Option<&Message> {
        match self {
            Payload::Msg(m) => Some(m),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Payload::Msg(m) => m.ty.label(),
            Payload::Part(_) => "DBPART",
            Payload::Copy(_) => "DBCOPY",
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Msg(m) => write!(f, "{}", m.encode_trace()),
            Payload::Part(p) => write!(
                f,
                "DBPART {} {} {}",
                p.sender,
                p.tasks.len(),
                p.errors.len()
            ),
            Payload::Copy(c) => write!(f, "DBCOPY {}", c.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Sent {
        dest: NodeId,
        mailbox: MailboxId,
        payload: Payload,
    },
    Delivered {
        src: NodeId,
        mailbox: MailboxId,
        payload: Payload,
    },
    Fired {
        kind: TimeoutKind,
        subid: NodeId,
    },
    Note(String),
    Fault(String),
    Recovery {
        kind: &'static str,
        target: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: Tick,
    pub node: NodeId,
    pub record: Record,
}

impl TraceEvent {
    /// The message carried by a SENT or DELIVERED record.
    pub fn message(&self) -> Option<&Message> {
        match &self.record {
            Record::Sent { payload, .. } | Record::Delivered { payload, .. } => payload.message(),
            _ => None,
        }
    }

    pub fn is_sent(&self) -> bool {
        matches!(self.record, Record::Sent { .. })
    }

    pub fn is_delivered(&self) -> bool {
        matches!(self.record, Record::Delivered { .. })
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.tick, self.node)?;
        match &self.record {
            Record::Sent {
                dest,
                mailbox,
                payload,
            } => write!(f, "SENT {dest} {mailbox} {payload}"),
            Record::Delivered {
                src,
                mailbox,
                payload,
            } => write!(f, "DELIVERED {src} {mailbox} {payload}"),
            Record::Fired { kind, subid } => {
                write!(f, "FIRED {} {subid} {}", kind.code(), kind.label())
            }
            Record::Note(text) => write!(f, "NOTE {text}"),
            Record::Fault(kind) => write!(f, "FAULT {kind}"),
            Record::Recovery { kind, target } => write!(f, "RECOVERY {kind} {target}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.events.iter().map(|e| e.to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in self.lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}
