//! Time-outs management: a list of keyed timeouts advanced by a virtual clock.
//!
//! Expirations are returned from [`TimeoutList::advance`] rather than invoked
//! through a stored callback. The owner turns each [`Firing`] into a local
//! message with [`crate::protocol::make_timeout_message`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::{NodeId, Tick};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TomError {
    #[error("timeout deadline must be positive")]
    ZeroDeadline,
    #[error("timeout list is closed")]
    Closed,
}

/// Identifier of a timeout. Declaration order matches code order, so the
/// derived `Ord` sorts by code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeoutKind {
    InjectFault,
    IaFlag,
    Mia,
    Taia,
    Teif,
    Iat,
    IaFlagB,
    MiaB,
    TaiaB,
    TeifB,
}

impl TimeoutKind {
    pub const ALL: [TimeoutKind; 10] = [
        TimeoutKind::InjectFault,
        TimeoutKind::IaFlag,
        TimeoutKind::Mia,
        TimeoutKind::Taia,
        TimeoutKind::Teif,
        TimeoutKind::Iat,
        TimeoutKind::IaFlagB,
        TimeoutKind::MiaB,
        TimeoutKind::TaiaB,
        TimeoutKind::TeifB,
    ];

    pub const fn code(self) -> i32 {
        match self {
            TimeoutKind::InjectFault => 6,
            TimeoutKind::IaFlag => 10,
            TimeoutKind::Mia => 15,
            TimeoutKind::Taia => 20,
            TimeoutKind::Teif => 30,
            TimeoutKind::Iat => 40,
            TimeoutKind::IaFlagB => 50,
            TimeoutKind::MiaB => 55,
            TimeoutKind::TaiaB => 60,
            TimeoutKind::TeifB => 70,
        }
    }

    pub fn from_code(code: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub const fn label(self) -> &'static str {
        match self {
            TimeoutKind::IaFlag => "IA flag timeout",
            TimeoutKind::Mia => "MIA timeout",
            TimeoutKind::Taia => "TAIA timeout",
            TimeoutKind::Teif => "TEIF timeout",
            TimeoutKind::IaFlagB => "IA flag `B' timeout",
            TimeoutKind::MiaB => "MIA `B' timeout",
            TimeoutKind::TaiaB => "TAIA `B' timeout",
            TimeoutKind::TeifB => "TEIF `B' timeout",
            TimeoutKind::Iat => "IA Task timeout",
            TimeoutKind::InjectFault => "F. Injecting timeout",
        }
    }
}

/// A declared timeout. Its identity inside a list is `(kind, subid)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeout {
    pub kind: TimeoutKind,
    pub subid: NodeId,
    pub deadline: Tick,
    pub cyclic: bool,
    pub remaining: Tick,
    /// Carried for parity with the original record layout; never set here.
    pub suspended: bool,
}

impl Timeout {
    pub fn declare(
        kind: TimeoutKind,
        subid: NodeId,
        cyclic: bool,
        deadline: Tick,
    ) -> Result<Self, TomError> {
        if deadline == 0 {
            return Err(TomError::ZeroDeadline);
        }
        Ok(Timeout {
            kind,
            subid,
            deadline,
            cyclic,
            remaining: deadline,
            suspended: false,
        })
    }

    pub fn key(&self) -> (TimeoutKind, NodeId) {
        (self.kind, self.subid)
    }
}

/// One expiration reported by [`TimeoutList::advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Firing {
    pub at: Tick,
    pub kind: TimeoutKind,
    pub subid: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    timeout: Timeout,
    expiry: Tick,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimeoutList {
    entries: BTreeMap<(TimeoutKind, NodeId), Entry>,
    now: Tick,
    closed: bool,
}

impl TimeoutList {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty list whose clock already reads `now`.
    pub fn starting_at(now: Tick) -> Self {
        TimeoutList {
            now,
            ..Self::default()
        }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `t` with a full deadline. Returns `Ok(false)` and leaves the list
    /// untouched when an entry with the same key is already present.
    pub fn insert(&mut self, t: Timeout) -> Result<bool, TomError> {
        if self.closed {
            return Err(TomError::Closed);
        }
        if t.deadline == 0 {
            return Err(TomError::ZeroDeadline);
        }
        if self.entries.contains_key(&t.key()) {
            return Ok(false);
        }
        let expiry = self.now + t.deadline;
        let mut timeout = t;
        timeout.remaining = timeout.deadline;
        self.entries
            .insert(timeout.key(), Entry { timeout, expiry });
        Ok(true)
    }

    pub fn renew(&mut self, kind: TimeoutKind, subid: NodeId) -> bool {
        if self.closed {
            return false;
        }
        let now = self.now;
        match self.entries.get_mut(&(kind, subid)) {
            Some(e) if !e.timeout.suspended => {
                e.expiry = now + e.timeout.deadline;
                true
            }
            _ => false,
        }
    }

    pub fn delete(&mut self, kind: TimeoutKind, subid: NodeId) -> bool {
        if self.closed {
            return false;
        }
        self.entries.remove(&(kind, subid)).is_some()
    }

    pub fn is_present(&self, kind: TimeoutKind, subid: NodeId) -> bool {
        self.entries.contains_key(&(kind, subid))
    }

    /// A copy of the entry with `remaining` brought up to date.
    pub fn get(&self, kind: TimeoutKind, subid: NodeId) -> Option<Timeout> {
        self.entries.get(&(kind, subid)).map(|e| self.snapshot(e))
    }

    /// Absolute tick of the earliest pending expiration.
    pub fn next_expiry(&self) -> Option<Tick> {
        if self.closed {
            return None;
        }
        self.entries.values().map(|e| e.expiry).min()
    }

    /// Moves the clock forward by `dt` and reports every expiration in
    /// order of absolute expiry time, ties broken by kind then subid.
    /// Cyclic entries re-arm and may fire several times within `dt`.
    pub fn advance(&mut self, dt: Tick) -> Vec<Firing> {
        if self.closed {
            return Vec::new();
        }
        let target = self.now + dt;
        let fired = std::iter::from_fn(|| self.fire_next(target)).collect();
        self.now = target;
        fired
    }

    /// Fires only the earliest expiration due at or before `until`, moving
    /// the clock to it. Lets a driver react to each firing before the next
    /// one is selected.
    pub fn fire_next(&mut self, until: Tick) -> Option<Firing> {
        if self.closed {
            return None;
        }
        let (key, at) = self
            .entries
            .iter()
            .filter(|(_, e)| e.expiry <= until)
            .min_by_key(|(key, e)| (e.expiry, **key))
            .map(|(key, e)| (*key, e.expiry))?;
        self.now = self.now.max(at);
        let entry = self.entries.get_mut(&key).expect("entry just found");
        if entry.timeout.cyclic {
            entry.expiry += entry.timeout.deadline;
        } else {
            self.entries.remove(&key);
        }
        Some(Firing {
            at,
            kind: key.0,
            subid: key.1,
        })
    }

    /// Freezes the list: no further firings, and mutations are rejected.
    pub fn close(&mut self) {
        self.closed = true;
    }

    /// Entries in expiry order (then key), with `remaining` up to date.
    pub fn entries(&self) -> Vec<Timeout> {
        let mut v: Vec<&Entry> = self.entries.values().collect();
        v.sort_by_key(|e| (e.expiry, e.timeout.key()));
        v.into_iter().map(|e| self.snapshot(e)).collect()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in self.entries() {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = write!(
                out,
                "{} subid={} remaining={} cyclic={}",
                t.kind.label(),
                t.subid,
                t.remaining,
                u8::from(t.cyclic)
            );
        }
        out
    }

    fn snapshot(&self, e: &Entry) -> Timeout {
        let mut t = e.timeout.clone();
        t.remaining = e.expiry.saturating_sub(self.now);
        t
    }
}
