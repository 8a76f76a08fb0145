//! Python bindings: a `Net` class wrapping the net system with the firing,
//! projection, explanation, diagnosis, and precision-analysis operations.
//!
//! Markings cross the boundary as `dict[str, int]`, sequences and
//! observations as `list[str]` of transition names, and analysis results as
//! plain dicts mirroring the CLI's JSON reports.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use pndiag_core::diagnose::{
    compare, diagnose_efficient, diagnose_exact, precision_check, DiagnoseError, DiagnosisTrace,
};
use pndiag_core::explain::{
    enumerate_runs, explain_multiset, explain_ordered, ExplainError, Explanation, SearchBudget,
};
use pndiag_core::net::{Marking, NetError, NetSystem, TransitionId};
use pndiag_core::observation::Observation;
use pndiag_core::{fig1, parse_net, serialize_net};

fn net_err(e: NetError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn explain_err(e: ExplainError) -> PyErr {
    match e {
        ExplainError::BudgetExhausted { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn diagnose_err(e: DiagnoseError) -> PyErr {
    match e {
        DiagnoseError::Explain(inner) => explain_err(inner),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A Petri net with an initial marking and an observable/unobservable/fault
/// transition labeling.
#[pyclass]
struct Net {
    inner: NetSystem,
}

impl Net {
    fn tid(&self, name: &str) -> PyResult<TransitionId> {
        self.inner
            .transition_id(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown transition {name:?}")))
    }

    fn sequence(&self, names: Vec<String>) -> PyResult<Vec<TransitionId>> {
        names.iter().map(|n| self.tid(n)).collect()
    }

    fn marking(&self, counts: BTreeMap<String, u64>) -> PyResult<Marking> {
        let mut m = Marking::new();
        for (name, count) in counts {
            let id = self
                .inner
                .place_id(&name)
                .ok_or_else(|| PyValueError::new_err(format!("unknown place {name:?}")))?;
            m.add(id, count);
        }
        Ok(m)
    }

    fn marking_out(&self, m: &Marking) -> BTreeMap<String, u64> {
        m.tokens()
            .map(|(p, c)| (self.inner.place_name(p).to_owned(), c))
            .collect()
    }

    fn names(&self, seq: &[TransitionId]) -> Vec<String> {
        seq.iter()
            .map(|&t| self.inner.transition_name(t).to_owned())
            .collect()
    }

    fn observation(&self, events: Vec<String>) -> PyResult<Observation> {
        let events = self.sequence(events)?;
        Observation::new(&self.inner, events).map_err(net_err)
    }

    fn budget(
        &self,
        max_unobs_segment: Option<usize>,
        max_explanations: Option<usize>,
    ) -> PyResult<SearchBudget> {
        let default = SearchBudget::default_for(&self.inner);
        SearchBudget::new(
            max_unobs_segment.unwrap_or(default.max_unobs_segment()),
            max_explanations.unwrap_or(default.max_explanations()),
        )
        .map_err(explain_err)
    }

    fn explanations_out<'py>(
        &self,
        py: Python<'py>,
        set: &std::collections::BTreeSet<Explanation>,
    ) -> PyResult<Bound<'py, PyList>> {
        let entries: PyResult<Vec<Bound<'py, PyDict>>> = set
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("sequence", self.names(&e.sequence))?;
                d.set_item("contains_fault", e.contains_fault)?;
                Ok(d)
            })
            .collect();
        PyList::new(py, entries?)
    }

    fn trace_out<'py>(
        &self,
        py: Python<'py>,
        trace: &DiagnosisTrace,
    ) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("mode", trace.mode.as_str())?;
        let rows: PyResult<Vec<Bound<'py, PyDict>>> = trace
            .per_prefix
            .iter()
            .map(|p| {
                let row = PyDict::new(py);
                row.set_item("index", p.index)?;
                row.set_item("explanations", p.explanation_count)?;
                row.set_item("faulty", p.faulty_count)?;
                row.set_item("verdict", p.verdict.as_str())?;
                Ok(row)
            })
            .collect();
        d.set_item("per_prefix", PyList::new(py, rows?)?)?;
        d.set_item("final", trace.final_verdict.as_str())?;
        d.set_item("first_certain_prefix", trace.first_certain_prefix())?;
        d.set_item("anomalous", trace.anomalous)?;
        Ok(d)
    }
}

#[pymethods]
impl Net {
    /// Parse a net from its JSON text form.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = parse_net(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Net { inner })
    }

    /// The bundled example net (ten places, eight transitions, fault f).
    #[staticmethod]
    fn fig1() -> Self {
        Net { inner: fig1() }
    }

    /// Canonical JSON text form.
    fn to_json(&self) -> String {
        serialize_net(&self.inner)
    }

    fn places(&self) -> Vec<String> {
        self.inner
            .places()
            .map(|p| self.inner.place_name(p).to_owned())
            .collect()
    }

    fn transitions(&self) -> Vec<String> {
        self.inner
            .transitions()
            .map(|t| self.inner.transition_name(t).to_owned())
            .collect()
    }

    fn observable(&self) -> Vec<String> {
        self.inner
            .transitions()
            .filter(|&t| self.inner.labeling().is_observable(t))
            .map(|t| self.inner.transition_name(t).to_owned())
            .collect()
    }

    fn fault(&self) -> Vec<String> {
        self.inner
            .labeling()
            .fault()
            .iter()
            .map(|&t| self.inner.transition_name(t).to_owned())
            .collect()
    }

    fn initial_marking(&self) -> BTreeMap<String, u64> {
        self.marking_out(self.inner.initial())
    }

    /// True iff every input place of the transition holds a token.
    fn is_enabled(&self, marking: BTreeMap<String, u64>, transition: &str) -> PyResult<bool> {
        let m = self.marking(marking)?;
        let t = self.tid(transition)?;
        self.inner.is_enabled(&m, t).map_err(net_err)
    }

    /// Fire one transition; raises ValueError if it is not enabled.
    fn fire(
        &self,
        marking: BTreeMap<String, u64>,
        transition: &str,
    ) -> PyResult<BTreeMap<String, u64>> {
        let m = self.marking(marking)?;
        let t = self.tid(transition)?;
        let next = self.inner.fire(&m, t).map_err(net_err)?;
        Ok(self.marking_out(&next))
    }

    /// Fold fire over a sequence; the error names the first disabled step.
    fn fire_sequence(
        &self,
        marking: BTreeMap<String, u64>,
        sequence: Vec<String>,
    ) -> PyResult<BTreeMap<String, u64>> {
        let m = self.marking(marking)?;
        let seq = self.sequence(sequence)?;
        let end = self.inner.fire_sequence(&m, &seq).map_err(net_err)?;
        Ok(self.marking_out(&end))
    }

    /// Run a sequence from the initial marking.
    fn run(&self, sequence: Vec<String>) -> PyResult<BTreeMap<String, u64>> {
        self.fire_sequence(self.initial_marking(), sequence)
    }

    /// All transitions enabled in the marking.
    fn enabled(&self, marking: BTreeMap<String, u64>) -> PyResult<Vec<String>> {
        let m = self.marking(marking)?;
        Ok(self
            .inner
            .enabled_set(&m)
            .into_iter()
            .map(|t| self.inner.transition_name(t).to_owned())
            .collect())
    }

    /// Structural validation report as a dict.
    fn check_structure<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = self.inner.check_structure();
        let d = PyDict::new(py);
        d.set_item("acyclic_unobservable", report.acyclic_unobservable)?;
        d.set_item("cycle_witness", report.cycle_witness)?;
        d.set_item("fault_count", report.fault_count)?;
        d.set_item("findings", report.findings)?;
        Ok(d)
    }

    /// Remove unobservable transitions from a sequence.
    fn project(&self, sequence: Vec<String>) -> PyResult<Vec<String>> {
        let seq = self.sequence(sequence)?;
        let o = pndiag_core::observation::project(self.inner.labeling(), &seq);
        Ok(self.names(o.events()))
    }

    /// All prefixes of an observation, the empty one included.
    fn prefixes(&self, observation: Vec<String>) -> PyResult<Vec<Vec<String>>> {
        let o = self.observation(observation)?;
        Ok(o.prefixes()
            .iter()
            .map(|p| self.names(p.events()))
            .collect())
    }

    /// Event counts of an observation, order dropped.
    fn to_multiset(&self, observation: Vec<String>) -> PyResult<BTreeMap<String, usize>> {
        let o = self.observation(observation)?;
        Ok(o.to_multiset()
            .counts()
            .iter()
            .map(|(&t, &c)| (self.inner.transition_name(t).to_owned(), c))
            .collect())
    }

    /// Explanations reproducing the observation in order.
    #[pyo3(signature = (observation, max_unobs_segment=None, max_explanations=None))]
    fn explain_ordered<'py>(
        &self,
        py: Python<'py>,
        observation: Vec<String>,
        max_unobs_segment: Option<usize>,
        max_explanations: Option<usize>,
    ) -> PyResult<Bound<'py, PyList>> {
        let o = self.observation(observation)?;
        let budget = self.budget(max_unobs_segment, max_explanations)?;
        let set = explain_ordered(&self.inner, &o, &budget).map_err(explain_err)?;
        self.explanations_out(py, &set)
    }

    /// Explanations matching the observation's event counts, order dropped.
    #[pyo3(signature = (observation, max_unobs_segment=None, max_explanations=None))]
    fn explain_multiset<'py>(
        &self,
        py: Python<'py>,
        observation: Vec<String>,
        max_unobs_segment: Option<usize>,
        max_explanations: Option<usize>,
    ) -> PyResult<Bound<'py, PyList>> {
        let o = self.observation(observation)?;
        let budget = self.budget(max_unobs_segment, max_explanations)?;
        let set = explain_multiset(&self.inner, &o.to_multiset(), &budget).map_err(explain_err)?;
        self.explanations_out(py, &set)
    }

    /// Every fireable sequence up to the length bound.
    fn enumerate_runs(&self, max_len: usize) -> Vec<Vec<String>> {
        enumerate_runs(&self.inner, max_len)
            .iter()
            .map(|r| self.names(r))
            .collect()
    }

    /// Per-prefix diagnosis trace; mode is "exact" or "efficient".
    #[pyo3(signature = (observation, mode="exact", max_unobs_segment=None, max_explanations=None))]
    fn diagnose<'py>(
        &self,
        py: Python<'py>,
        observation: Vec<String>,
        mode: &str,
        max_unobs_segment: Option<usize>,
        max_explanations: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let o = self.observation(observation)?;
        let budget = self.budget(max_unobs_segment, max_explanations)?;
        let trace = match mode {
            "exact" => diagnose_exact(&self.inner, &o, &budget),
            "efficient" => diagnose_efficient(&self.inner, &o, &budget),
            other => {
                return Err(PyValueError::new_err(format!(
                    "mode must be \"exact\" or \"efficient\", got {other:?}"
                )))
            }
        }
        .map_err(diagnose_err)?;
        self.trace_out(py, &trace)
    }

    /// Both diagnosis traces for the observation, as (exact, efficient).
    #[pyo3(signature = (observation, max_unobs_segment=None, max_explanations=None))]
    fn compare<'py>(
        &self,
        py: Python<'py>,
        observation: Vec<String>,
        max_unobs_segment: Option<usize>,
        max_explanations: Option<usize>,
    ) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
        let o = self.observation(observation)?;
        let budget = self.budget(max_unobs_segment, max_explanations)?;
        let (exact, efficient) = compare(&self.inner, &o, &budget).map_err(diagnose_err)?;
        Ok((self.trace_out(py, &exact)?, self.trace_out(py, &efficient)?))
    }

    /// Bounded precision and diagnosability report as a dict.
    #[pyo3(signature = (bound, jobs=1, max_unobs_segment=None, max_explanations=None))]
    fn precision_check<'py>(
        &self,
        py: Python<'py>,
        bound: usize,
        jobs: usize,
        max_unobs_segment: Option<usize>,
        max_explanations: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        if jobs == 0 {
            return Err(PyValueError::new_err("jobs must be positive"));
        }
        let budget = self.budget(max_unobs_segment, max_explanations)?;
        let report = precision_check(&self.inner, bound, &budget, jobs).map_err(diagnose_err)?;
        let d = PyDict::new(py);
        d.set_item("bound", report.bound)?;
        d.set_item("diagnosable_within_bound", report.diagnosable_within_bound)?;
        d.set_item("detection_delay", report.detection_delay)?;
        let witnesses: PyResult<Vec<Bound<'py, PyDict>>> = report
            .imprecise_witnesses
            .iter()
            .map(|w| {
                let row = PyDict::new(py);
                row.set_item("run", self.names(&w.run))?;
                row.set_item("observation", self.names(&w.observation))?;
                row.set_item("exact", w.exact.as_str())?;
                row.set_item("efficient", w.efficient.as_str())?;
                Ok(row)
            })
            .collect();
        d.set_item("imprecise_witnesses", PyList::new(py, witnesses?)?)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Net(places={}, transitions={}, observable={}, fault={})",
            self.inner.place_count(),
            self.inner.transition_count(),
            self.inner.labeling().observable().len(),
            self.inner.labeling().fault().len(),
        )
    }
}

#[pymodule]
fn pndiag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Net>()?;
    Ok(())
}
