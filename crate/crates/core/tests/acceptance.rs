//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! Bounds are computed from the configured parameters. Where a bound has an
//! exact value on the deterministic timeline, that value is recomputed from
//! independent trace facts (e.g. the last heartbeat delivered before a fault)
//! and compared with what the report claims.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dirnet_core::db::DbUpdate;
use dirnet_core::protocol::{DbSubcode, MailboxId, MessageType};
use dirnet_core::simnet::{DbInjection, FaultKind, Record, Report, SimConfig, Trace, TraceEvent};
use dirnet_core::tom::{Timeout, TimeoutKind, TimeoutList};
use dirnet_core::{run, NodeId, Tick};

type Outcome = Result<(), String>;
type Criterion = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const FAULT_AT: Tick = 10_000;

fn sim(cfg: &SimConfig) -> (Trace, Report) {
    run(cfg).expect("valid config")
}

fn crash(kind: FaultKind, node: NodeId) -> SimConfig {
    SimConfig::new(4).with_fault(FAULT_AT, kind, node)
}

fn is_msg(e: &TraceEvent, ty: MessageType) -> bool {
    e.message().is_some_and(|m| m.ty == ty)
}

fn sent<'a>(t: &'a Trace, ty: MessageType) -> impl Iterator<Item = (&'a TraceEvent, NodeId)> + 'a {
    t.events.iter().filter_map(move |e| match &e.record {
        Record::Sent { dest, .. } if is_msg(e, ty) => Some((e, *dest)),
        _ => None,
    })
}

fn delivered<'a>(
    t: &'a Trace,
    ty: MessageType,
) -> impl Iterator<Item = (&'a TraceEvent, NodeId)> + 'a {
    t.events.iter().filter_map(move |e| match &e.record {
        Record::Delivered { src, .. } if is_msg(e, ty) => Some((e, *src)),
        _ => None,
    })
}

fn fired(t: &Trace, node: NodeId, kind: TimeoutKind, subid: NodeId) -> Vec<Tick> {
    t.events
        .iter()
        .filter(|e| e.node == node && e.record == Record::Fired { kind, subid })
        .map(|e| e.tick)
        .collect()
}

fn notes<'a>(t: &'a Trace, node: NodeId, text: &'a str) -> impl Iterator<Item = Tick> + 'a {
    t.events.iter().filter_map(move |e| match &e.record {
        Record::Note(n) if e.node == node && n == text => Some(e.tick),
        _ => None,
    })
}

fn quiescent() -> Outcome {
    let cfg = SimConfig::new(4);
    let start = Instant::now();
    let (trace, r) = sim(&cfg);
    let took = start.elapsed();
    ensure!(r.suspicions.is_empty(), "suspicions: {:?}", r.suspicions);
    ensure!(
        r.teif_broadcasts.is_empty(),
        "TEIF: {:?}",
        r.teif_broadcasts
    );
    ensure!(r.elections.is_empty(), "elections: {:?}", r.elections);
    ensure!(
        r.spans.is_empty() && r.reboots.is_empty(),
        "recoveries requested"
    );
    ensure!(
        r.final_dbs.iter().all(Option::is_some),
        "not every node is running at the end"
    );
    ensure!(r.replicas_equal(), "replicas differ");
    ensure!(
        r.final_managerid() == Some(0),
        "managerid {:?}",
        r.managerids
    );
    // The run should be busy: every backup keeps sending TAIA.
    let taia = sent(&trace, MessageType::TAIA).count() as u64;
    let expected = 3 * (cfg.run_length / cfg.timing.taia_send);
    ensure!(
        taia + 3 >= expected,
        "only {taia} TAIA sent, expected about {expected}"
    );
    ensure!(took < Duration::from_secs(1), "run took {took:?}");
    Ok(())
}

fn agent_crash() -> Outcome {
    let cfg = crash(FaultKind::CrashComponent, 2);
    let t = cfg.timing;
    let lat = cfg.latency.max();
    let (trace, r) = sim(&cfg);

    let suspected = r
        .first_suspicion(0, 2)
        .ok_or("manager never suspected node 2")?;
    ensure!(
        suspected - FAULT_AT <= t.taia_recv + lat + 1,
        "suspicion after {} ticks",
        suspected - FAULT_AT
    );
    let last_taia = delivered(&trace, MessageType::TAIA)
        .filter(|(e, src)| e.node == 0 && *src == 2 && e.tick <= FAULT_AT)
        .map(|(e, _)| e.tick)
        .last()
        .ok_or("no TAIA from 2 before the fault")?;
    ensure!(
        suspected == last_taia + t.taia_recv,
        "suspicion at {suspected}, last TAIA delivered at {last_taia}"
    );

    let teif = delivered(&trace, MessageType::TEIF)
        .find(|(e, src)| e.node == 0 && *src == 2)
        .map(|(e, _)| e.tick)
        .ok_or("TEIF from IAT@2 never reached the manager")?;
    ensure!(
        teif - FAULT_AT <= 2 * t.imalive_set + lat,
        "TEIF after {} ticks",
        teif - FAULT_AT
    );

    let spans: Vec<_> = trace
        .events
        .iter()
        .filter(|e| {
            is_msg(e, MessageType::SPAN)
                && matches!(
                    e.record,
                    Record::Sent {
                        dest: 2,
                        mailbox: MailboxId::IAT,
                        ..
                    }
                )
        })
        .collect();
    ensure!(spans.len() == 1, "{} SPANs sent to IAT@2", spans.len());

    let respawn = r
        .respawns
        .iter()
        .find(|(_, n)| *n == 2)
        .map(|(tick, _)| *tick)
        .ok_or("node 2 never respawned")?;
    ensure!(
        respawn == spans[0].tick + lat + cfg.respawn_delay,
        "respawn at {respawn}, SPAN sent at {}",
        spans[0].tick
    );
    let niua: BTreeSet<NodeId> = sent(&trace, MessageType::NIUA)
        .filter(|(e, _)| e.node == 0 && e.tick > respawn && e.message().unwrap().subid == 2)
        .map(|(_, dest)| dest)
        .collect();
    ensure!(niua == BTreeSet::from([1, 3]), "NIUA(2) sent to {niua:?}");
    ensure!(
        r.active_suspicions == 0,
        "{} suspicions left",
        r.active_suspicions
    );
    ensure!(r.reboots.is_empty(), "reboot requested: {:?}", r.reboots);
    ensure!(r.replicas_equal(), "replicas differ after recovery");
    Ok(())
}

fn node_crash() -> Outcome {
    let cfg = crash(FaultKind::CrashNode, 2);
    let t = cfg.timing;
    let lat = cfg.latency.max();
    let (trace, r) = sim(&cfg);

    let suspected = r.first_suspicion(0, 2).ok_or("manager never suspected 2")?;
    let teif_timeout = fired(&trace, 0, TimeoutKind::Teif, 2);
    ensure!(
        teif_timeout.len() == 1,
        "TEIF timeout fired at {teif_timeout:?}"
    );
    ensure!(
        teif_timeout[0].abs_diff(suspected + t.imalive_set) <= 1,
        "TEIF timeout at {}, suspicion at {suspected}",
        teif_timeout[0]
    );

    let reboots: Vec<_> = r.reboots.iter().filter(|q| q.target == 2).collect();
    ensure!(
        reboots.len() == 1,
        "{} reboot requests for 2",
        reboots.len()
    );
    ensure!(
        r.reboots.len() == 1,
        "extra reboot requests: {:?}",
        r.reboots
    );
    ensure!(r.spans.is_empty(), "SPANs: {:?}", r.spans);
    let lag = reboots[0].latency.ok_or("latency missing")?;
    ensure!(
        lag <= t.taia_recv + t.imalive_set + 2 * lat + 2,
        "reboot requested {lag} ticks after the crash"
    );
    ensure!(
        r.teif_broadcasts.is_empty(),
        "a crashed node broadcast TEIF"
    );

    let back = r
        .reboots_executed
        .iter()
        .find(|(_, n)| *n == 2)
        .map(|(tick, _)| *tick)
        .ok_or("node 2 never came back")?;
    let after = |ty, from: NodeId| {
        sent(&trace, ty)
            .find(|(e, _)| e.node == from && e.tick >= back)
            .map(|(e, _)| e.tick)
    };
    let witm = after(MessageType::WITM, 2).ok_or("no WITM after reboot")?;
    let nmi = delivered(&trace, MessageType::NMI)
        .find(|(e, _)| e.node == 2 && e.tick >= witm)
        .map(|(e, _)| e.tick)
        .ok_or("no NMI reached node 2")?;
    let request = after(MessageType::REQUEST_DB, 2).ok_or("no REQUEST_DB after reboot")?;
    ensure!(
        witm <= nmi && nmi <= request,
        "WITM {witm}, NMI {nmi}, REQUEST_DB {request}"
    );
    let niua = sent(&trace, MessageType::NIUA)
        .any(|(e, _)| e.node == 0 && e.tick > request && e.message().unwrap().subid == 2);
    ensure!(niua, "manager never broadcast NIUA(2)");
    ensure!(
        r.active_suspicions == 0,
        "{} suspicions left",
        r.active_suspicions
    );
    Ok(())
}

fn manager_crash() -> Outcome {
    let cfg = crash(FaultKind::CrashNode, 0);
    let t = cfg.timing;
    let lat = cfg.latency.max();
    let (trace, r) = sim(&cfg);
    let survivors = [1, 2, 3];
    let next = 1;

    for b in survivors {
        let s = r
            .first_suspicion(b, 0)
            .ok_or(format!("node {b} never suspected 0"))?;
        ensure!(
            s - FAULT_AT <= t.mia_recv + lat + 1,
            "node {b} suspected after {} ticks",
            s - FAULT_AT
        );
        let f = fired(&trace, b, TimeoutKind::TeifB, 0);
        ensure!(f.len() == 1, "node {b} TEIF_B fired at {f:?}");
        let anid: BTreeSet<NodeId> = sent(&trace, MessageType::ANID)
            .filter(|(e, _)| e.node == b && e.message().unwrap().subid == 0)
            .map(|(_, d)| d)
            .collect();
        let expect: BTreeSet<NodeId> = survivors.into_iter().filter(|&o| o != b).collect();
        ensure!(anid == expect, "node {b} sent ANID to {anid:?}");
        let elections: Vec<_> = r.elections.iter().filter(|e| e.node == b).collect();
        ensure!(
            elections.len() == 1,
            "node {b}: {} elections",
            elections.len()
        );
        ensure!(
            elections[0].previous == 0 && elections[0].next == next,
            "node {b} elected {:?}",
            elections[0]
        );
    }

    let promoted = trace.events.iter().any(|e| {
        e.node == next
            && e.record
                == Record::Recovery {
                    kind: "PROMOTE",
                    target: next,
                }
    });
    ensure!(promoted, "node 1 never restarted as manager");
    let elected_at = r.elections[0].tick;
    for b in [2, 3] {
        let accepted = delivered(&trace, MessageType::MIA).any(|(e, src)| {
            e.node == b
                && src == next
                && e.tick > elected_at
                && e.message().unwrap().args[0] == next as i32
        });
        ensure!(accepted, "node {b} never received MIA from the new manager");
        ensure!(
            !r.suspicions
                .iter()
                .any(|s| s.watcher == b && s.suspect == next),
            "node {b} suspected the new manager"
        );
    }
    for b in survivors {
        ensure!(
            r.managerids[b] == Some(next),
            "node {b} ends with managerid {:?}",
            r.managerids[b]
        );
    }
    ensure!(
        r.final_managerid() == Some(next),
        "managerids {:?}",
        r.managerids
    );
    Ok(())
}

/// Every firing of a timeout list under single-tick stepping, kept as an
/// independent oracle for `advance`.
fn naive_fire(
    entries: &[(TimeoutKind, NodeId, bool, Tick)],
    horizon: Tick,
) -> Vec<(Tick, TimeoutKind, NodeId)> {
    let mut live: Vec<(TimeoutKind, NodeId, bool, Tick, Tick)> = entries
        .iter()
        .map(|&(k, s, c, d)| (k, s, c, d, d))
        .collect();
    let mut out = Vec::new();
    for now in 1..=horizon {
        live.sort_by_key(|e| (e.0, e.1));
        for e in live.iter_mut() {
            if e.4 == now {
                out.push((now, e.0, e.1));
                e.4 = if e.2 { now + e.3 } else { Tick::MAX };
            }
        }
    }
    out
}

fn tom_suite() -> Outcome {
    let mut l = TimeoutList::new();
    l.insert(Timeout::declare(TimeoutKind::Mia, 1, true, 500).unwrap())
        .unwrap();
    let at: Vec<Tick> = l.advance(1600).iter().map(|f| f.at).collect();
    ensure!(at == [500, 1000, 1500], "cyclic firings {at:?}");

    let mut l = TimeoutList::new();
    l.insert(Timeout::declare(TimeoutKind::Mia, 1, true, 500).unwrap())
        .unwrap();
    l.advance(300);
    ensure!(l.renew(TimeoutKind::Mia, 1), "renew rejected");
    let first = l.advance(1000).first().map(|f| f.at);
    ensure!(first == Some(800), "first firing after renew at {first:?}");

    let mut l = TimeoutList::new();
    l.insert(Timeout::declare(TimeoutKind::Taia, 2, false, 100).unwrap())
        .unwrap();
    ensure!(l.delete(TimeoutKind::Taia, 2), "delete rejected");
    ensure!(l.advance(1000).is_empty(), "deleted entry fired");

    let mut l = TimeoutList::new();
    l.insert(Timeout::declare(TimeoutKind::IaFlag, 1, true, 10).unwrap())
        .unwrap();
    l.close();
    ensure!(l.advance(1000).is_empty(), "closed list fired");
    ensure!(
        l.insert(Timeout::declare(TimeoutKind::Mia, 0, true, 10).unwrap())
            .is_err(),
        "closed list accepted an insert"
    );

    let kinds = TimeoutKind::ALL;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7011);
    for schedule in 0..1000 {
        let n = rng.random_range(1..=6);
        let entries: Vec<_> = (0..n)
            .map(|_| {
                (
                    kinds[rng.random_range(0..kinds.len())],
                    rng.random_range(0..4usize),
                    rng.random_bool(0.5),
                    rng.random_range(1..=300u64),
                )
            })
            .collect();
        let mut whole = TimeoutList::new();
        let mut split = TimeoutList::new();
        let mut inserted = Vec::new();
        for &(k, s, c, d) in &entries {
            let t = Timeout::declare(k, s, c, d).unwrap();
            if whole.insert(t.clone()).unwrap() {
                split.insert(t).unwrap();
                inserted.push((k, s, c, d));
            }
        }
        let horizon = rng.random_range(0..=2000u64);
        let expect: Vec<_> = whole
            .advance(horizon)
            .into_iter()
            .map(|f| (f.at, f.kind, f.subid))
            .collect();
        let mut got = Vec::new();
        let mut left = horizon;
        while left > 0 {
            let step = rng.random_range(0..=left.min(400));
            got.extend(
                split
                    .advance(step)
                    .into_iter()
                    .map(|f| (f.at, f.kind, f.subid)),
            );
            left -= step;
        }
        ensure!(
            got == expect,
            "schedule {schedule}: split {got:?} vs whole {expect:?}"
        );
        ensure!(
            split.now() == whole.now(),
            "schedule {schedule}: clocks differ"
        );
        let oracle = naive_fire(&inserted, horizon);
        ensure!(
            expect == oracle,
            "schedule {schedule}: advance disagrees with stepping"
        );
    }
    Ok(())
}

fn freeze(d: Tick) -> SimConfig {
    crash(FaultKind::FreezeComponent(d), 2)
}

fn watchdog() -> Outcome {
    let cfg = SimConfig::new(4);
    let set = cfg.timing.imalive_set;
    let (_, r) = sim(&cfg);
    ensure!(
        r.teif_broadcasts.is_empty(),
        "TEIF with every component alive"
    );

    for d in [2 * set, 2 * set + 700, 5 * set] {
        let (_, r) = sim(&freeze(d));
        ensure!(
            r.teif_broadcasts.len() == 1,
            "freeze {d}: {} TEIF broadcasts",
            r.teif_broadcasts.len()
        );
        let b = r.teif_broadcasts[0];
        ensure!(b.node == 2, "freeze {d}: TEIF from IAT@{}", b.node);
        ensure!(
            b.tick <= FAULT_AT + 2 * set + 1,
            "freeze {d}: TEIF at {}",
            b.tick
        );
    }
    for d in [1, set / 2, set - 100, set - 1] {
        let (_, r) = sim(&freeze(d));
        ensure!(
            r.teif_broadcasts.is_empty(),
            "freeze {d}: {} TEIF broadcasts",
            r.teif_broadcasts.len()
        );
    }
    Ok(())
}

fn db_convergence() -> Outcome {
    let mut cfg = SimConfig::new(4);
    cfg.run_length = 1000;
    let (_, r) = sim(&cfg);
    let bytes: Vec<Vec<u8>> = r
        .final_dbs
        .iter()
        .map(|d| {
            d.as_ref()
                .map(|d| d.replica_bytes())
                .ok_or("node not running")
        })
        .collect::<Result<_, _>>()?;
    ensure!(
        bytes.windows(2).all(|w| w[0] == w[1]),
        "replicas differ after startup"
    );

    let at = 20_000;
    let mut cfg = SimConfig::new(4);
    cfg.run_length = 21_000;
    cfg.updates = vec![
        DbInjection {
            at,
            update: DbUpdate::new(DbSubcode::IncReboot, 3, 0, 0),
        },
        DbInjection {
            at: at + 200,
            update: DbUpdate::new(DbSubcode::IncReboot, 0, 0, 0),
        },
    ];
    let lat = cfg.latency.max();
    let (trace, r) = sim(&cfg);
    for dest in 0..3 {
        let got = delivered(&trace, MessageType::DB)
            .find(|(e, src)| e.node == dest && *src == 3 && e.tick >= at)
            .map(|(e, _)| e.tick)
            .ok_or(format!("DB update never reached node {dest}"))?;
        ensure!(
            got - at <= lat + 1,
            "node {dest} got the update after {} ticks",
            got - at
        );
    }
    ensure!(r.replicas_equal(), "replicas differ after the update");
    for (i, db) in r.final_dbs.iter().enumerate() {
        let db = db.as_ref().ok_or("node not running")?;
        ensure!(
            db.nodes[3].reboot_nr == 1 && db.nodes[0].reboot_nr == 1,
            "node {i} counts reboots {} and {}",
            db.nodes[0].reboot_nr,
            db.nodes[3].reboot_nr
        );
    }
    ensure!(
        notes(&trace, 3, "tom renew 60 0").any(|t| t == at),
        "backup did not renew its TAIA timeout on a local update"
    );
    for i in 1..4 {
        let text = format!("tom renew 15 {i}");
        ensure!(
            notes(&trace, 0, &text).any(|t| t == at + 200),
            "manager did not renew MIA({i}) on a local update"
        );
    }
    ensure!(
        notes(&trace, 0, "tom renew 20 3").any(|t| t == at + lat),
        "manager did not renew TAIA(3) on a remote update"
    );
    Ok(())
}

fn determinism() -> Outcome {
    let mut jitter = SimConfig::new(4).with_fault(FAULT_AT, FaultKind::CrashNode, 0);
    jitter.latency = dirnet_core::simnet::Latency::Uniform { min: 2, max: 30 };
    jitter.seed = 99;
    let cfgs = [
        SimConfig::new(4),
        crash(FaultKind::CrashComponent, 2),
        crash(FaultKind::CrashNode, 2),
        crash(FaultKind::CrashNode, 0),
        freeze(2000),
        freeze(900),
        jitter,
    ];
    for (i, cfg) in cfgs.iter().enumerate() {
        let (a, ra) = sim(cfg);
        let (b, rb) = sim(cfg);
        ensure!(a.to_text() == b.to_text(), "scenario {i}: traces differ");
        ensure!(ra == rb, "scenario {i}: reports differ");
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("quiescent stability", quiescent),
        ("agent-crash detection and recovery", agent_crash),
        ("node-crash discrimination", node_crash),
        ("manager crash and election", manager_crash),
        ("TOM unit suite", tom_suite),
        ("IA-flag watchdog law", watchdog),
        ("DB convergence and update propagation", db_convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(()) => println!("acceptance {}: {name}: PASS", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {}: {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
