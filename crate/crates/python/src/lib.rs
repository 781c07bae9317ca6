//! Python bindings for the advice-timing library.
//!
//! Model parameters are a class; beliefs are plain lists of grid masses;
//! contexts, actions and decisions are lowercase strings. Scenario and sweep
//! configs use the same JSON layout as the command line tool, passed as
//! dicts, and results come back as dicts.

use advice_timing as core;
use advice_timing::experiments::{run_sweep as core_run_sweep, BaseConfig, SweepSpec};
use advice_timing::{Action, Adherence, Belief, Context, ContextView, Decision, Planner, PolicyKind, ThetaGrid};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_context(s: &str) -> PyResult<Context> {
    s.parse().map_err(value_error)
}

fn parse_action(s: &str) -> PyResult<Action> {
    match s {
        "on" => Ok(Action::On),
        "off" => Ok(Action::Off),
        _ => Err(PyValueError::new_err(format!("unknown action {s:?}, expected \"on\" or \"off\""))),
    }
}

fn parse_decision(s: &str) -> PyResult<Decision> {
    match s {
        "correct" => Ok(Decision::Correct),
        "incorrect" => Ok(Decision::Incorrect),
        _ => Err(PyValueError::new_err(format!(
            "unknown decision {s:?}, expected \"correct\" or \"incorrect\""
        ))),
    }
}

fn parse_adherence(s: Option<&str>) -> PyResult<Option<Adherence>> {
    match s {
        None => Ok(None),
        Some("adhered") => Ok(Some(Adherence::Adhered)),
        Some("ignored") => Ok(Some(Adherence::Ignored)),
        Some(other) => Err(PyValueError::new_err(format!(
            "unknown adherence {other:?}, expected \"adhered\", \"ignored\" or None"
        ))),
    }
}

fn to_json(py: Python<'_>, obj: Option<&Bound<'_, PyAny>>) -> PyResult<String> {
    match obj {
        None => Ok("{}".to_owned()),
        Some(o) => py.import("json")?.call_method1("dumps", (o,))?.extract(),
    }
}

fn from_json<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Parameters of the human model and the planner.
#[pyclass(name = "ModelParams", module = "advice_timing", skip_from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: core::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (
        alpha_low=0.3, alpha_high=1.0, eta=0.3, phi=0.1, gamma=0.95,
        r_correct=1.0, r_incorrect=0.0, grid_size=20, horizon=4
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha_low: f64,
        alpha_high: f64,
        eta: f64,
        phi: f64,
        gamma: f64,
        r_correct: f64,
        r_incorrect: f64,
        grid_size: usize,
        horizon: usize,
    ) -> PyResult<Self> {
        let inner = core::ModelParams {
            alpha_low,
            alpha_high,
            eta,
            phi,
            gamma,
            r_correct,
            r_incorrect,
            grid_size,
            horizon,
        };
        inner.validate().map_err(value_error)?;
        Ok(PyModelParams { inner })
    }

    #[getter]
    fn alpha_low(&self) -> f64 {
        self.inner.alpha_low
    }

    #[getter]
    fn alpha_high(&self) -> f64 {
        self.inner.alpha_high
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn r_correct(&self) -> f64 {
        self.inner.r_correct
    }

    #[getter]
    fn r_incorrect(&self) -> f64 {
        self.inner.r_incorrect
    }

    #[getter]
    fn grid_size(&self) -> usize {
        self.inner.grid_size
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    /// Grid points `0, 1/K, ..., 1` the belief is defined on.
    fn grid(&self) -> PyResult<Vec<f64>> {
        Ok(ThetaGrid::for_params(&self.inner).map_err(value_error)?.points().collect())
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        from_json(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(alpha_low={}, alpha_high={}, eta={}, phi={}, gamma={}, r_correct={}, r_incorrect={}, grid_size={}, horizon={})",
            p.alpha_low, p.alpha_high, p.eta, p.phi, p.gamma, p.r_correct, p.r_incorrect, p.grid_size, p.horizon
        )
    }
}

fn belief_from(params: &core::ModelParams, mass: Vec<f64>) -> PyResult<(ThetaGrid, Belief)> {
    let grid = ThetaGrid::for_params(params).map_err(value_error)?;
    let belief = Belief::from_masses(&grid, mass).map_err(value_error)?;
    Ok((grid, belief))
}

/// Probability of a correct decision without advice in a context.
#[pyfunction]
fn prob_correct_no_ai(params: &PyModelParams, context: &str) -> PyResult<f64> {
    Ok(core::prob_correct_no_ai(&params.inner, parse_context(context)?))
}

/// Probability of a correct decision when advice is shown.
#[pyfunction]
fn prob_correct_with_ai(params: &PyModelParams, context: &str, theta: f64) -> PyResult<f64> {
    Ok(core::prob_correct_with_ai(&params.inner, parse_context(context)?, theta))
}

/// Engagement after one observed step.
#[pyfunction]
#[pyo3(signature = (params, theta, action, decision, counterfactual, adherence=None))]
fn update_engagement(
    params: &PyModelParams,
    theta: f64,
    action: &str,
    decision: &str,
    counterfactual: &str,
    adherence: Option<&str>,
) -> PyResult<f64> {
    let outcome = core::StepOutcome {
        decision: parse_decision(decision)?,
        counterfactual: parse_decision(counterfactual)?,
        adherence: parse_adherence(adherence)?,
        theta_after: theta,
    };
    core::update_engagement(&params.inner, theta, parse_action(action)?, &outcome).map_err(value_error)
}

/// Point mass on full engagement.
#[pyfunction]
fn initial_belief(params: &PyModelParams) -> PyResult<Vec<f64>> {
    let grid = ThetaGrid::for_params(&params.inner).map_err(value_error)?;
    Ok(core::initial_belief(&grid).mass().to_vec())
}

/// Posterior belief after observing the decision made in `context` under `action`.
#[pyfunction]
#[pyo3(signature = (belief, params, context, action, decision, next_context=None))]
fn update_belief(
    belief: Vec<f64>,
    params: &PyModelParams,
    context: &str,
    action: &str,
    decision: &str,
    next_context: Option<&str>,
) -> PyResult<Vec<f64>> {
    let (grid, belief) = belief_from(&params.inner, belief)?;
    let context = parse_context(context)?;
    let obs = core::Observation {
        decision: parse_decision(decision)?,
        next_context: next_context.map(parse_context).transpose()?.unwrap_or(context),
    };
    let posterior = core::update_belief(&belief, &grid, &params.inner, context, parse_action(action)?, &obs)
        .map_err(value_error)?;
    Ok(posterior.mass().to_vec())
}

#[pyfunction]
fn expected_theta(belief: Vec<f64>, params: &PyModelParams) -> PyResult<f64> {
    let (grid, belief) = belief_from(&params.inner, belief)?;
    Ok(belief.expected_theta(&grid))
}

/// Planner values `(on, off)` for a belief and context.
#[pyfunction]
#[pyo3(signature = (belief, params, context, depth=None, view="current"))]
fn forward_search_value(
    belief: Vec<f64>,
    params: &PyModelParams,
    context: &str,
    depth: Option<usize>,
    view: &str,
) -> PyResult<(f64, f64)> {
    let (_, belief) = belief_from(&params.inner, belief)?;
    let view: ContextView = view.parse().map_err(value_error)?;
    let planner = Planner::with_view(&params.inner, view).map_err(value_error)?;
    let values = planner
        .action_values(&belief, parse_context(context)?, depth.unwrap_or(params.inner.horizon))
        .map_err(value_error)?;
    Ok((values.on, values.off))
}

/// Action ("on" or "off") a policy takes for a belief and context.
#[pyfunction]
#[pyo3(signature = (belief, params, context, policy="optimal", view="current"))]
fn select_action(belief: Vec<f64>, params: &PyModelParams, context: &str, policy: &str, view: &str) -> PyResult<String> {
    let (_, belief) = belief_from(&params.inner, belief)?;
    let policy: PolicyKind = policy.parse().map_err(value_error)?;
    let view: ContextView = view.parse().map_err(value_error)?;
    let context = parse_context(context)?;
    let decision = policy
        .build(&params.inner, view)
        .and_then(|p| p.decide(&belief, context))
        .map_err(value_error)?;
    Ok(decision.action.as_str().to_owned())
}

fn scenario(py: Python<'_>, config: Option<&Bound<'_, PyAny>>, policy: &str) -> PyResult<core::ScenarioConfig> {
    let base: BaseConfig = serde_json::from_str(&to_json(py, config)?).map_err(value_error)?;
    base.validate().map_err(value_error)?;
    Ok(base.scenario(policy.parse().map_err(value_error)?))
}

/// Run one episode. `config` uses the run-config layout (params, schedule,
/// steps, seed, context_view); missing keys take their defaults. Returns
/// the summary with the full trace.
#[pyfunction]
#[pyo3(signature = (config=None, policy="optimal"))]
fn run_episode<'py>(py: Python<'py>, config: Option<&Bound<'py, PyAny>>, policy: &str) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario(py, config, policy)?;
    let summary = py.detach(|| core::run_episode(&scenario)).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("accuracy", summary.accuracy)?;
    out.set_item("advice_on_fraction", summary.advice_on_fraction)?;
    out.set_item("mean_theta", summary.mean_theta)?;
    out.set_item("total_discounted_reward", summary.total_discounted_reward)?;
    out.set_item("trace", from_json(py, &summary.trace)?)?;
    Ok(out.into_any())
}

/// Run `episodes` episodes with derived seeds and return mean/std statistics.
#[pyfunction]
#[pyo3(signature = (config=None, policy="optimal", episodes=100))]
fn run_batch<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
    policy: &str,
    episodes: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario(py, config, policy)?;
    let stats = py.detach(|| core::run_batch(&scenario, episodes)).map_err(value_error)?;
    from_json(py, &stats)
}

/// Run a one-parameter sweep described by a sweep-file dict.
#[pyfunction]
fn run_sweep<'py>(py: Python<'py>, spec: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let spec = SweepSpec::from_json(&to_json(py, Some(spec))?).map_err(value_error)?;
    let result = py.detach(|| core_run_sweep(&spec)).map_err(value_error)?;
    from_json(py, &result)
}

#[pymodule]
#[pyo3(name = "advice_timing")]
fn advice_timing_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyModelParams>()?;
    m.add_function(wrap_pyfunction!(prob_correct_no_ai, m)?)?;
    m.add_function(wrap_pyfunction!(prob_correct_with_ai, m)?)?;
    m.add_function(wrap_pyfunction!(update_engagement, m)?)?;
    m.add_function(wrap_pyfunction!(initial_belief, m)?)?;
    m.add_function(wrap_pyfunction!(update_belief, m)?)?;
    m.add_function(wrap_pyfunction!(expected_theta, m)?)?;
    m.add_function(wrap_pyfunction!(forward_search_value, m)?)?;
    m.add_function(wrap_pyfunction!(select_action, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
