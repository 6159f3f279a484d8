//! Message vocabulary of the DIR net.
//!
//! Timeout-derived message types share their code with the corresponding
//! [`TimeoutKind`]. Named protocol messages live in the 100 block and DB
//! update subcodes in the 200 block.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tom::TimeoutKind;
use crate::NodeId;

/// Number of integer arguments carried by every message.
pub const MAXARG: usize = 5;

/// First mailbox id used by the net on every node.
pub const DIR_MBOX_OFFSET: u32 = 20;

/// Protocol message type. Unknown codes are representable so that a
/// component can log and skip them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageType(pub i32);

impl MessageType {
    pub const INJECT_FAULT_TIMEOUT: Self = Self(6);
    pub const IA_FLAG_TIMEOUT: Self = Self(10);
    pub const MIA_TIMEOUT: Self = Self(15);
    pub const TAIA_TIMEOUT: Self = Self(20);
    pub const TEIF_TIMEOUT: Self = Self(30);
    pub const IAT_TIMEOUT: Self = Self(40);
    pub const IA_FLAG_TIMEOUT_B: Self = Self(50);
    pub const MIA_TIMEOUT_B: Self = Self(55);
    pub const TAIA_TIMEOUT_B: Self = Self(60);
    pub const TEIF_TIMEOUT_B: Self = Self(70);

    /// Manager Is Alive.
    pub const MIA: Self = Self(100);
    /// This Agent Is Alive.
    pub const TAIA: Self = Self(101);
    /// Alarm broadcast by an I'm Alive Task.
    pub const TEIF: Self = Self(102);
    /// ENable IAt.
    pub const ENIA: Self = Self(103);
    /// Who Is The Manager.
    pub const WITM: Self = Self(104);
    /// New Manager Is.
    pub const NMI: Self = Self(105);
    /// Node Is Up Again.
    pub const NIUA: Self = Self(106);
    /// A Node Is Down.
    pub const ANID: Self = Self(107);
    /// SPAwN a new component.
    pub const SPAN: Self = Self(108);
    /// Activation of the local I'm Alive Task.
    pub const ROUSE: Self = Self(109);
    pub const DB: Self = Self(110);
    pub const REQUEST_DB: Self = Self(111);

    const NAMED: [(MessageType, &'static str); 12] = [
        (Self::MIA, "MIA"),
        (Self::TAIA, "TAIA"),
        (Self::TEIF, "TEIF"),
        (Self::ENIA, "ENIA"),
        (Self::WITM, "WITM"),
        (Self::NMI, "NMI"),
        (Self::NIUA, "NIUA"),
        (Self::ANID, "ANID"),
        (Self::SPAN, "SPAN"),
        (Self::ROUSE, "ROUSE"),
        (Self::DB, "DB"),
        (Self::REQUEST_DB, "REQUEST_DB"),
    ];

    pub fn code(self) -> i32 {
        self.0
    }

    pub fn timeout_kind(self) -> Option<TimeoutKind> {
        TimeoutKind::from_code(self.0)
    }

    pub fn label(self) -> &'static str {
        pretty(self.0)
    }

    /// Every type with a defined meaning.
    pub fn known() -> impl Iterator<Item = MessageType> {
        TimeoutKind::ALL
            .into_iter()
            .map(MessageType::from)
            .chain(Self::NAMED.iter().map(|(t, _)| *t))
    }
}

impl From<TimeoutKind> for MessageType {
    fn from(k: TimeoutKind) -> Self {
        MessageType(k.code())
    }
}

/// Human-readable label for a message or timeout code; `"<unknown>"` for
/// anything outside the vocabulary.
pub fn pretty(code: i32) -> &'static str {
    if let Some(k) = TimeoutKind::from_code(code) {
        return k.label();
    }
    MessageType::NAMED
        .iter()
        .find(|(t, _)| t.0 == code)
        .map(|(_, name)| *name)
        .unwrap_or("<unknown>")
}

/// Subcode carried in `arg[0]` of a DB message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DbSubcode {
    NewStatus,
    NewRole,
    IncReboot,
    NewTaskStatus,
    NewTaskError,
}

impl DbSubcode {
    pub const ALL: [DbSubcode; 5] = [
        DbSubcode::NewStatus,
        DbSubcode::NewRole,
        DbSubcode::IncReboot,
        DbSubcode::NewTaskStatus,
        DbSubcode::NewTaskError,
    ];

    pub fn code(self) -> i32 {
        match self {
            DbSubcode::NewStatus => 200,
            DbSubcode::NewRole => 201,
            DbSubcode::IncReboot => 202,
            DbSubcode::NewTaskStatus => 203,
            DbSubcode::NewTaskError => 204,
        }
    }

    pub fn from_code(code: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            DbSubcode::NewStatus => "DB_NEW_STATUS",
            DbSubcode::NewRole => "DB_NEW_ROLE",
            DbSubcode::IncReboot => "DB_INC_REBOOT",
            DbSubcode::NewTaskStatus => "DB_NEW_TASK_STATUS",
            DbSubcode::NewTaskError => "DB_NEW_TASK_ERROR",
        }
    }
}

impl FromStr for DbSubcode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown DB subcode `{s}`"))
    }
}

/// Per-node mailbox. Every node exposes the same ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MailboxId(pub u32);

impl MailboxId {
    pub const MBOX: Self = Self(DIR_MBOX_OFFSET);
    pub const IAT: Self = Self(DIR_MBOX_OFFSET + 1);
    pub const RINT: Self = Self(DIR_MBOX_OFFSET + 2);
    pub const DB: Self = Self(DIR_MBOX_OFFSET + 3);
    pub const TOM: Self = Self(DIR_MBOX_OFFSET + 4);
}

impl fmt::Display for MailboxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The fixed-shape datagram exchanged by components and I'm Alive Tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Message {
    pub ty: MessageType,
    /// Sender or subject node, depending on the type.
    pub subid: i32,
    pub args: [i32; MAXARG],
    /// Set only on messages produced by the node's own timeout engine.
    pub local: bool,
}

impl Message {
    pub fn new(ty: MessageType, subid: NodeId) -> Self {
        Message {
            ty,
            subid: subid as i32,
            args: [0; MAXARG],
            local: false,
        }
    }

    pub fn with_arg(mut self, index: usize, value: i32) -> Self {
        self.args[index] = value;
        self
    }

    /// `subid` as a node index, if it is one.
    pub fn node(&self) -> Option<NodeId> {
        usize::try_from(self.subid).ok()
    }

    /// Fixed field order: `type subid arg0..arg4 local`.
    pub fn encode_trace(&self) -> String {
        let mut s = format!("{} {}", self.ty.0, self.subid);
        for a in self.args {
            s.push(' ');
            s.push_str(&a.to_string());
        }
        s.push_str(if self.local { " 1" } else { " 0" });
        s
    }

    pub fn decode_trace(line: &str) -> Result<Message, ProtocolError> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != MAXARG + 3 {
            return Err(ProtocolError::FieldCount(fields.len()));
        }
        let int = |i: usize| -> Result<i32, ProtocolError> {
            fields[i]
                .parse()
                .map_err(|_| ProtocolError::BadInteger(fields[i].to_string()))
        };
        let mut args = [0; MAXARG];
        for (k, a) in args.iter_mut().enumerate() {
            *a = int(2 + k)?;
        }
        let local = match fields[MAXARG + 2] {
            "0" => false,
            "1" => true,
            other => return Err(ProtocolError::BadLocalFlag(other.to_string())),
        };
        Ok(Message {
            ty: MessageType(int(0)?),
            subid: int(1)?,
            args,
            local,
        })
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode_trace())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("expected {want} fields, found {0}", want = MAXARG + 3)]
    FieldCount(usize),
    #[error("not an integer: `{0}`")]
    BadInteger(String),
    #[error("local flag must be 0 or 1, found `{0}`")]
    BadLocalFlag(String),
}

/// Translates an expiration into the message delivered to the owner.
pub fn make_timeout_message(kind: TimeoutKind, subid: NodeId) -> Message {
    Message {
        local: true,
        ..Message::new(kind.into(), subid)
    }
}
