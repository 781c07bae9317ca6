//! Experiment drivers behind the command-line tool: JSON run and sweep
//! files, trace/summary/sweep outputs and an optional SVG figure.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Belief, ThetaGrid};
use crate::error::Error;
use crate::model::{Action, Context, ModelParams};
use crate::policy::{ContextView, PolicyKind};
use crate::sim::{run_batch, run_episode, write_trace_csv, EpisodeSummary, ScenarioConfig, Schedule, StepRecord};

/// Two policies whose mean accuracies differ by less than this share the
/// "best" mark (half of the 0.1 percentage-point display resolution).
pub const BEST_TOLERANCE: f64 = 0.0005;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Runtime(#[from] Error),
}

impl ExperimentError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Io { .. } | ExperimentError::Runtime(_) => 3,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

fn config_err(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(e.to_string())
}

/// Settings shared by single runs and sweep bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfig {
    pub params: ModelParams,
    pub schedule: Schedule,
    pub steps: usize,
    pub seed: u64,
    pub context_view: ContextView,
}

impl BaseConfig {
    pub fn scenario(&self, policy: PolicyKind) -> ScenarioConfig {
        ScenarioConfig {
            schedule: self.schedule,
            steps: self.steps,
            seed: self.seed,
            params: self.params,
            policy,
            context_view: self.context_view,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario(PolicyKind::AlwaysOff).validate().map_err(config_err)
    }
}

impl Default for BaseConfig {
    /// The alternating 100-step demonstration scenario.
    fn default() -> Self {
        BaseConfig {
            params: ModelParams::default(),
            schedule: Schedule::default(),
            steps: 100,
            seed: 0,
            context_view: ContextView::default(),
        }
    }
}

/// Contents of a `simulate` config file: a [`BaseConfig`] plus the
/// policies to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SimulateFile", into = "SimulateFile")]
pub struct SimulateConfig {
    pub base: BaseConfig,
    pub policies: Vec<PolicyKind>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateFile {
    params: ModelParams,
    schedule: Schedule,
    steps: usize,
    seed: u64,
    context_view: ContextView,
    policies: Vec<PolicyKind>,
}

impl Default for SimulateFile {
    fn default() -> Self {
        SimulateConfig::default().into()
    }
}

impl From<SimulateFile> for SimulateConfig {
    fn from(f: SimulateFile) -> Self {
        SimulateConfig {
            base: BaseConfig {
                params: f.params,
                schedule: f.schedule,
                steps: f.steps,
                seed: f.seed,
                context_view: f.context_view,
            },
            policies: f.policies,
        }
    }
}

impl From<SimulateConfig> for SimulateFile {
    fn from(c: SimulateConfig) -> Self {
        SimulateFile {
            params: c.base.params,
            schedule: c.base.schedule,
            steps: c.base.steps,
            seed: c.base.seed,
            context_view: c.base.context_view,
            policies: c.policies,
        }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            base: BaseConfig::default(),
            policies: PolicyKind::ALL.to_vec(),
        }
    }
}

impl SimulateConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SimulateConfig = serde_json::from_str(text).map_err(config_err)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.policies.is_empty() {
            return Err(config_err("policies must not be empty"));
        }
        Ok(())
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    AlphaLow,
    AlphaHigh,
    Eta,
    Phi,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::AlphaLow => "alpha_low",
            SweepVariable::AlphaHigh => "alpha_high",
            SweepVariable::Eta => "eta",
            SweepVariable::Phi => "phi",
        }
    }

    pub fn apply(self, params: &ModelParams, value: f64) -> ModelParams {
        let mut p = *params;
        match self {
            SweepVariable::AlphaLow => p.alpha_low = value,
            SweepVariable::AlphaHigh => p.alpha_high = value,
            SweepVariable::Eta => p.eta = value,
            SweepVariable::Phi => p.phi = value,
        }
        p
    }
}

fn default_sweep_base() -> BaseConfig {
    BaseConfig {
        schedule: Schedule::Stochastic { initial: Context::High },
        steps: 1000,
        ..BaseConfig::default()
    }
}

/// Partially specified [`BaseConfig`], resolved against context-specific defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BaseOverrides {
    params: Option<ModelParams>,
    schedule: Option<Schedule>,
    steps: Option<usize>,
    seed: Option<u64>,
    context_view: Option<ContextView>,
}

impl BaseOverrides {
    fn resolve(self, defaults: BaseConfig) -> BaseConfig {
        BaseConfig {
            params: self.params.unwrap_or(defaults.params),
            schedule: self.schedule.unwrap_or(defaults.schedule),
            steps: self.steps.unwrap_or(defaults.steps),
            seed: self.seed.unwrap_or(defaults.seed),
            context_view: self.context_view.unwrap_or(defaults.context_view),
        }
    }
}

fn sweep_base<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BaseConfig, D::Error> {
    Ok(BaseOverrides::deserialize(d)?.resolve(default_sweep_base()))
}

fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}

fn default_episodes() -> usize {
    200
}

/// Contents of a `sweep` file: one parameter varied over `values`, all
/// others fixed at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default = "default_sweep_base", deserialize_with = "sweep_base")]
    pub base: BaseConfig,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(config_err)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(config_err("sweep values must not be empty"));
        }
        if let Some(v) = self.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(config_err(format!(
                "{} value {v} is outside [0, 1]",
                self.variable.as_str()
            )));
        }
        if self.policies.is_empty() {
            return Err(config_err("policies must not be empty"));
        }
        if self.episodes == 0 {
            return Err(config_err("episodes must be at least 1"));
        }
        self.base.validate()?;
        for &v in &self.values {
            self.variable
                .apply(&self.base.params, v)
                .validate()
                .map_err(config_err)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub policy: PolicyKind,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_advice_on_fraction: f64,
    pub std_advice_on_fraction: f64,
    pub mean_theta: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub episodes: usize,
    pub steps: usize,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let base = BaseConfig {
            params: spec.variable.apply(&spec.base.params, value),
            ..spec.base.clone()
        };
        let mut cells = Vec::with_capacity(spec.policies.len());
        for &policy in &spec.policies {
            let stats = run_batch(&base.scenario(policy), spec.episodes)?;
            cells.push(SweepCell {
                policy,
                mean_accuracy: stats.accuracy.mean,
                std_accuracy: stats.accuracy.std,
                mean_advice_on_fraction: stats.advice_on_fraction.mean,
                std_advice_on_fraction: stats.advice_on_fraction.std,
                mean_theta: stats.mean_theta.mean,
                best: false,
            });
        }
        let top = cells.iter().map(|c| c.mean_accuracy).fold(f64::NEG_INFINITY, f64::max);
        for c in &mut cells {
            c.best = top - c.mean_accuracy < BEST_TOLERANCE;
        }
        rows.push(SweepRow { value, cells });
    }
    Ok(SweepResult {
        variable: spec.variable,
        episodes: spec.episodes,
        steps: spec.base.steps,
        seed: spec.base.seed,
        rows,
    })
}

pub const SWEEP_HEADER: &str = "variable,value,policy,mean_accuracy,std_accuracy,mean_advice_on_fraction,best";

/// One line per (value, policy) pair.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &result.rows {
        for c in &row.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                result.variable.as_str(),
                row.value,
                c.policy,
                c.mean_accuracy,
                c.std_accuracy,
                c.mean_advice_on_fraction,
                c.best
            ));
        }
    }
    out
}

/// Per-policy entry of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub accuracy: f64,
    pub advice_on_fraction: f64,
    pub mean_theta: f64,
    pub total_discounted_reward: f64,
    pub seed: u64,
    pub context_view: ContextView,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub episodes: Vec<(PolicyKind, EpisodeSummary)>,
}

impl SimulationRun {
    pub fn summaries(&self, config: &SimulateConfig) -> Vec<PolicySummary> {
        self.episodes
            .iter()
            .map(|(policy, s)| PolicySummary {
                policy: *policy,
                accuracy: s.accuracy,
                advice_on_fraction: s.advice_on_fraction,
                mean_theta: s.mean_theta,
                total_discounted_reward: s.total_discounted_reward,
                seed: config.base.seed,
                context_view: config.base.context_view,
                params: config.base.params,
            })
            .collect()
    }
}

/// One episode per requested policy, all with the same seed.
pub fn run_simulation(config: &SimulateConfig) -> Result<SimulationRun> {
    config.validate()?;
    let episodes = config
        .policies
        .iter()
        .map(|&p| Ok((p, run_episode(&config.base.scenario(p))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationRun { episodes })
}

/// Write `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| ExperimentError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| ExperimentError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))
}

pub fn trace_file_name(policy: PolicyKind) -> String {
    format!("trace_{policy}.csv")
}

/// Run `simulate` and write traces, `summary.json` and optionally `figure.svg`.
/// Returns the paths written.
pub fn simulate_to_dir(config: &SimulateConfig, out: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    let run = run_simulation(config)?;
    ensure_dir(out)?;
    let mut written = Vec::new();
    for (policy, summary) in &run.episodes {
        let path = out.join(trace_file_name(*policy));
        let mut buf = Vec::new();
        write_trace_csv(&summary.trace, &mut buf).map_err(|e| ExperimentError::io(&path, e))?;
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    let path = out.join("summary.json");
    let mut json = serde_json::to_string_pretty(&run.summaries(config)).expect("summary serializes");
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    written.push(path);
    if plot {
        let panels: Vec<(PolicyKind, &[StepRecord])> =
            run.episodes.iter().map(|(p, s)| (*p, s.trace.as_slice())).collect();
        let path = out.join("figure.svg");
        write_atomic(&path, render_svg(&panels).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Run a sweep and write `sweep.csv` and `sweep.json`.
pub fn sweep_to_dir(spec: &SweepSpec, out: &Path) -> Result<(SweepResult, Vec<PathBuf>)> {
    let result = run_sweep(spec)?;
    ensure_dir(out)?;
    let csv_path = out.join("sweep.csv");
    write_atomic(&csv_path, sweep_csv(&result).as_bytes())?;
    let json_path = out.join("sweep.json");
    let mut json = serde_json::to_string_pretty(&result).expect("sweep result serializes");
    json.push('\n');
    write_atomic(&json_path, json.as_bytes())?;
    Ok((result, vec![csv_path, json_path]))
}

/// Parse `point:<theta>` (snapped to the nearest grid point) or a
/// comma-separated list of grid masses.
pub fn parse_belief_spec(spec: &str, grid: &ThetaGrid) -> std::result::Result<Belief, Error> {
    let spec = spec.trim();
    if let Some(theta) = spec.strip_prefix("point:") {
        let theta: f64 = theta
            .trim()
            .parse()
            .map_err(|_| Error::InvalidBelief(format!("cannot parse `{theta}` as a number")))?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidBelief(format!("point {theta} is outside [0, 1]")));
        }
        return Ok(Belief::point(grid, grid.snap(theta)));
    }
    let mass = spec
        .split(',')
        .map(|m| {
            m.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidBelief(format!("cannot parse mass `{}`", m.trim())))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Belief::from_masses(grid, mass)
}

/// Four stacked panels per policy (context, advice, true engagement,
/// correctness), one column per policy.
pub fn render_svg(panels: &[(PolicyKind, &[StepRecord])]) -> String {
    const COL_W: f64 = 320.0;
    const PANEL_H: f64 = 60.0;
    const GAP: f64 = 22.0;
    const MARGIN: f64 = 30.0;
    let titles = ["context", "advice", "engagement", "correct"];
    let width = MARGIN * 2.0 + COL_W * panels.len() as f64;
    let height = MARGIN * 2.0 + (PANEL_H + GAP) * titles.len() as f64;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (col, (policy, trace)) in panels.iter().enumerate() {
        let x0 = MARGIN + col as f64 * COL_W;
        let n = trace.len().max(1) as f64;
        let accuracy = trace.iter().filter(|r| r.decision.is_correct()).count() as f64 / n;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-weight=\"bold\">{policy} ({:.0}% correct)</text>\n",
            x0,
            MARGIN - 12.0,
            accuracy * 100.0
        ));
        let plot_w = COL_W - 20.0;
        let x = |t: usize| x0 + plot_w * t as f64 / n;
        for (row, title) in titles.iter().enumerate() {
            let y0 = MARGIN + row as f64 * (PANEL_H + GAP);
            let y = |v: f64| y0 + PANEL_H * (1.0 - v);
            svg.push_str(&format!(
                "<rect x=\"{x0}\" y=\"{y0}\" width=\"{plot_w}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#999\"/>\n<text x=\"{x0}\" y=\"{}\">{title}</text>\n",
                y0 - 3.0
            ));
            let value = |r: &StepRecord| match row {
                0 => f64::from(u8::from(r.context == Context::High)),
                1 => f64::from(u8::from(r.action == Action::On)),
                2 => r.theta_true,
                _ => f64::from(u8::from(r.decision.is_correct())),
            };
            if row == 3 {
                for r in trace.iter() {
                    let colour = if r.decision.is_correct() { "#2a7" } else { "#c33" };
                    svg.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.6\" fill=\"{colour}\"/>\n",
                        x(r.t) + 0.5 * plot_w / n,
                        y(0.1 + 0.8 * value(r))
                    ));
                }
                continue;
            }
            let mut d = String::new();
            for r in trace.iter() {
                let v = y(value(r));
                let cmd = if r.t == 0 { 'M' } else { 'L' };
                d.push_str(&format!("{cmd}{:.2},{v:.2} H{:.2} ", x(r.t), x(r.t + 1)));
            }
            svg.push_str(&format!("<path d=\"{}\" fill=\"none\" stroke=\"#247\" stroke-width=\"1.2\"/>\n", d.trim_end()));
        }
    }
    svg.push_str("</svg>\n");
    svg
}
