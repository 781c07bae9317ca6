//! Closed-loop episodes: simulated human, context process, policy and filter.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, BeliefDynamics, ThetaGrid};
use crate::error::{Error, Result};
use crate::model::{
    sample_context_transition, Action, Adherence, Context, Decision, HumanState, ModelParams,
};
use crate::policy::{ContextView, PolicyKind};

/// Multiplier used to derive per-episode seeds (2^64 / golden ratio).
pub const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of episode `index` in a batch; episode 0 reuses the base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ index.wrapping_mul(SEED_MIX)
}

/// How the task context evolves over an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// Deterministic flip every `block_length` steps.
    Alternating { block_length: usize, start: Context },
    /// Flip with probability `phi` after every step.
    Stochastic { initial: Context },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Alternating {
            block_length: 20,
            start: Context::High,
        }
    }
}

impl Schedule {
    pub fn initial(&self) -> Context {
        match *self {
            Schedule::Alternating { start, .. } => start,
            Schedule::Stochastic { initial } => initial,
        }
    }

    /// Context at step `t + 1` given the context at step `t`.
    fn advance(&self, t: usize, current: Context, params: &ModelParams, rng: &mut ChaCha8Rng) -> Context {
        match *self {
            Schedule::Alternating { block_length, start } => {
                if ((t + 1) / block_length).is_multiple_of(2) {
                    start
                } else {
                    start.flipped()
                }
            }
            Schedule::Stochastic { .. } => sample_context_transition(params, current, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schedule: Schedule,
    pub steps: usize,
    pub seed: u64,
    pub params: ModelParams,
    pub policy: PolicyKind,
    #[serde(default)]
    pub context_view: ContextView,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.steps == 0 {
            return Err(Error::InvalidScenario("steps must be at least 1".into()));
        }
        if let Schedule::Alternating { block_length: 0, .. } = self.schedule {
            return Err(Error::InvalidScenario("block_length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioConfig { seed, ..self.clone() }
    }
}

/// One row of an episode trace. `theta_true` and `belief_expected_theta`
/// are the values in effect when the step's decision was made.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub context: Context,
    pub action: Action,
    pub adherence: Option<Adherence>,
    pub decision: Decision,
    pub counterfactual: Decision,
    pub theta_true: f64,
    pub belief_expected_theta: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub accuracy: f64,
    pub advice_on_fraction: f64,
    pub mean_theta: f64,
    pub total_discounted_reward: f64,
    pub trace: Vec<StepRecord>,
}

pub fn run_episode(config: &ScenarioConfig) -> Result<EpisodeSummary> {
    config.validate()?;
    let params = &config.params;
    let policy = config.policy.build(params, config.context_view)?;
    let grid = ThetaGrid::for_params(params)?;
    let dynamics = BeliefDynamics::new(grid, params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut belief = Belief::initial(&grid);
    let mut human = HumanState::engaged();
    let mut context = config.schedule.initial();
    // before the first outcome the AI only knows where the schedule starts
    let mut last_seen = context;
    let mut trace = Vec::with_capacity(config.steps);
    let mut discount = 1.0;
    let mut total_discounted_reward = 0.0;

    for t in 0..config.steps {
        let visible = match config.context_view {
            ContextView::Current => context,
            ContextView::Previous | ContextView::PreviousPredictive => last_seen,
        };
        let action = policy.decide(&belief, visible)?.action;
        let theta_true = human.theta;
        let outcome = human.step(params, context, action, &mut rng);
        let reward = params.reward(outcome.decision);
        total_discounted_reward += discount * reward;
        discount *= params.gamma;
        let next_context = config.schedule.advance(t, context, params, &mut rng);

        trace.push(StepRecord {
            t,
            context,
            action,
            adherence: outcome.adherence,
            decision: outcome.decision,
            counterfactual: outcome.counterfactual,
            theta_true,
            belief_expected_theta: belief.expected_theta(&grid),
            reward,
        });

        belief = dynamics
            .posterior(&belief, context, action, outcome.decision)
            .map(|(_, b)| b)
            .ok_or(Error::ImpossibleObservation)?;
        last_seen = context;
        context = next_context;
    }

    let n = trace.len() as f64;
    Ok(EpisodeSummary {
        accuracy: trace.iter().filter(|r| r.decision.is_correct()).count() as f64 / n,
        advice_on_fraction: trace.iter().filter(|r| r.action == Action::On).count() as f64 / n,
        mean_theta: trace.iter().map(|r| r.theta_true).sum::<f64>() / n,
        total_discounted_reward,
        trace,
    })
}

/// Sample mean and standard deviation (`n - 1` denominator, 0 for one sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std, n }
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub episodes: usize,
    pub accuracy: MeanStd,
    pub advice_on_fraction: MeanStd,
    pub mean_theta: MeanStd,
}

/// Run `episodes` independent episodes in parallel with seeds from
/// [`derive_seed`]. Results are reduced in episode order.
pub fn run_batch(config: &ScenarioConfig, episodes: usize) -> Result<BatchStats> {
    config.validate()?;
    if episodes == 0 {
        return Err(Error::InvalidScenario("episodes must be at least 1".into()));
    }
    let metrics = (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            run_episode(&config.with_seed(derive_seed(config.seed, i)))
                .map(|s| (s.accuracy, s.advice_on_fraction, s.mean_theta))
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |f: fn(&(f64, f64, f64)) -> f64| MeanStd::from_samples(&metrics.iter().map(f).collect::<Vec<_>>());
    Ok(BatchStats {
        episodes,
        accuracy: column(|m| m.0),
        advice_on_fraction: column(|m| m.1),
        mean_theta: column(|m| m.2),
    })
}

pub const TRACE_HEADER: &str =
    "t,context,action,adherence,decision,counterfactual,theta_true,belief_expected_theta,reward";

/// Write a trace as CSV; absent adherence is an empty field.
pub fn write_trace_csv<W: Write>(trace: &[StepRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.context,
            r.action,
            r.adherence.map(Adherence::as_str).unwrap_or(""),
            r.decision,
            r.counterfactual,
            r.theta_true,
            r.belief_expected_theta,
            r.reward
        )?;
    }
    Ok(())
}
