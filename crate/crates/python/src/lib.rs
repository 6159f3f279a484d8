//! Python bindings: timeout lists, message codec, election and broadcast
//! helpers, and a scenario runner.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use dirnet_core::component::choose_next_manager as next_manager;
use dirnet_core::db::{broadcast_plan as plan, BroadcastStep};
use dirnet_core::protocol::{self, MessageType, MAXARG};
use dirnet_core::scenario::Scenario;
use dirnet_core::tom::{self, Timeout, TimeoutKind};

fn kind_of(code: i32) -> PyResult<TimeoutKind> {
    TimeoutKind::from_code(code)
        .ok_or_else(|| PyKeyError::new_err(format!("no timeout with code {code}")))
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Keyed timeout list on a virtual clock.
#[pyclass(name = "TimeoutList")]
struct PyTimeoutList(tom::TimeoutList);

#[pymethods]
impl PyTimeoutList {
    #[new]
    #[pyo3(signature = (now = 0))]
    fn new(now: u64) -> Self {
        PyTimeoutList(tom::TimeoutList::starting_at(now))
    }

    /// Returns False if the key is already present.
    fn insert(&mut self, code: i32, subid: usize, cyclic: bool, deadline: u64) -> PyResult<bool> {
        let t = Timeout::declare(kind_of(code)?, subid, cyclic, deadline).map_err(value_err)?;
        self.0.insert(t).map_err(value_err)
    }

    fn renew(&mut self, code: i32, subid: usize) -> PyResult<bool> {
        Ok(self.0.renew(kind_of(code)?, subid))
    }

    fn delete(&mut self, code: i32, subid: usize) -> PyResult<bool> {
        Ok(self.0.delete(kind_of(code)?, subid))
    }

    fn is_present(&self, code: i32, subid: usize) -> PyResult<bool> {
        Ok(self.0.is_present(kind_of(code)?, subid))
    }

    /// Moves the clock forward; returns `(tick, code, subid)` per firing.
    fn advance(&mut self, dt: u64) -> Vec<(u64, i32, usize)> {
        self.0
            .advance(dt)
            .into_iter()
            .map(|f| (f.at, f.kind.code(), f.subid))
            .collect()
    }

    fn next_expiry(&self) -> Option<u64> {
        self.0.next_expiry()
    }

    fn close(&mut self) {
        self.0.close();
    }

    #[getter]
    fn now(&self) -> u64 {
        self.0.now()
    }

    #[getter]
    fn closed(&self) -> bool {
        self.0.is_closed()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeoutList(now={}, entries={})",
            self.0.now(),
            self.0.len()
        )
    }
}

#[pyclass(name = "Message", skip_from_py_object)]
#[derive(Clone)]
struct PyMessage(protocol::Message);

#[pymethods]
impl PyMessage {
    #[new]
    #[pyo3(signature = (ty, subid, args = Vec::new(), local = false))]
    fn new(ty: i32, subid: i32, args: Vec<i32>, local: bool) -> PyResult<Self> {
        if args.len() > MAXARG {
            return Err(PyValueError::new_err(format!("at most {MAXARG} args")));
        }
        let mut a = [0; MAXARG];
        a[..args.len()].copy_from_slice(&args);
        Ok(PyMessage(protocol::Message {
            ty: MessageType(ty),
            subid,
            args: a,
            local,
        }))
    }

    #[staticmethod]
    fn decode(line: &str) -> PyResult<Self> {
        protocol::Message::decode_trace(line)
            .map(PyMessage)
            .map_err(value_err)
    }

    fn encode(&self) -> String {
        self.0.encode_trace()
    }

    #[getter]
    fn ty(&self) -> i32 {
        self.0.ty.code()
    }

    #[getter]
    fn subid(&self) -> i32 {
        self.0.subid
    }

    #[getter]
    fn args(&self) -> Vec<i32> {
        self.0.args.to_vec()
    }

    #[getter]
    fn local(&self) -> bool {
        self.0.local
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Message({})", self.0)
    }
}

/// Printable name of a message or timeout code.
#[pyfunction]
fn pretty(code: i32) -> &'static str {
    protocol::pretty(code)
}

#[pyfunction]
fn choose_next_manager(managerid: usize, n_nodes: usize) -> PyResult<usize> {
    if n_nodes == 0 {
        return Err(PyValueError::new_err("n_nodes must be positive"));
    }
    Ok(next_manager(managerid, n_nodes))
}

/// Per-round steps of the startup broadcast for node `me`:
/// `("send", [dest, ...])` or `("receive", [src])`.
#[pyfunction]
fn broadcast_plan(me: usize, n_nodes: usize) -> Vec<(&'static str, Vec<usize>)> {
    plan(me, n_nodes)
        .into_iter()
        .map(|s| match s {
            BroadcastStep::Send { to } => ("send", to),
            BroadcastStep::Receive { from } => ("receive", vec![from]),
        })
        .collect()
}

type RunResult = (Vec<String>, BTreeMap<String, i64>, Vec<String>);

/// Parses and runs a scenario. Returns `(trace_lines, metrics, failed_asserts)`.
#[pyfunction]
#[pyo3(signature = (text, seed = None, ticks = None))]
fn run_scenario(text: &str, seed: Option<u64>, ticks: Option<u64>) -> PyResult<RunResult> {
    let mut s = Scenario::parse(text).map_err(value_err)?;
    if let Some(seed) = seed {
        s.config.seed = seed;
    }
    if let Some(ticks) = ticks {
        s.config.run_length = ticks;
    }
    let (trace, report) = dirnet_core::run(&s.config).map_err(value_err)?;
    let mut metrics: BTreeMap<String, i64> = dirnet_core::Report::METRICS
        .iter()
        .filter_map(|&m| report.metric(m).map(|v| (m.to_string(), v)))
        .collect();
    for (label, count) in &report.message_counts {
        metrics.insert(format!("messages.{label}"), *count as i64);
    }
    let failed = s
        .failed_asserts(&report)
        .into_iter()
        .map(|(a, got)| format!("{a} (got {got})"))
        .collect();
    Ok((trace.lines().collect(), metrics, failed))
}

#[pymodule]
fn dirnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeoutList>()?;
    m.add_class::<PyMessage>()?;
    m.add_function(wrap_pyfunction!(pretty, m)?)?;
    m.add_function(wrap_pyfunction!(choose_next_manager, m)?)?;
    m.add_function(wrap_pyfunction!(broadcast_plan, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
