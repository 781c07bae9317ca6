//! Generative model of a human decision-maker receiving optional AI advice.
//!
//! Unassisted accuracy depends only on the task context. When advice is
//! shown, the human adheres with probability equal to their engagement
//! `theta`, which guarantees a correct decision; otherwise they decide on
//! their own. Engagement then moves by a fraction `eta` toward 0 when advice
//! turned out redundant, or toward 1 when advice was (or would have been)
//! useful.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Task familiarity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Context {
    Low,
    High,
}

impl Context {
    pub const ALL: [Context; 2] = [Context::Low, Context::High];

    pub fn flipped(self) -> Context {
        match self {
            Context::Low => Context::High,
            Context::High => Context::Low,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Context::Low => "low",
            Context::High => "high",
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(Context::Low),
            "high" => Ok(Context::High),
            other => Err(Error::InvalidScenario(format!("unknown context `{other}`"))),
        }
    }
}

/// Whether the AI shows advice at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    On,
    Off,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::On, Action::Off];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::On => "on",
            Action::Off => "off",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Correct,
    Incorrect,
}

impl Decision {
    pub const ALL: [Decision; 2] = [Decision::Correct, Decision::Incorrect];

    pub fn from_bool(correct: bool) -> Decision {
        if correct {
            Decision::Correct
        } else {
            Decision::Incorrect
        }
    }

    pub fn is_correct(self) -> bool {
        self == Decision::Correct
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Correct => "correct",
            Decision::Incorrect => "incorrect",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Latent per-step adherence to shown advice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adherence {
    Adhered,
    Ignored,
}

impl Adherence {
    pub fn as_str(self) -> &'static str {
        match self {
            Adherence::Adhered => "adhered",
            Adherence::Ignored => "ignored",
        }
    }
}

impl fmt::Display for Adherence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full parameter vector of the human model, reward and planner.
///
/// Every field has a default, so a JSON document may override any subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Unassisted accuracy in low-familiarity contexts.
    pub alpha_low: f64,
    /// Unassisted accuracy in high-familiarity contexts.
    pub alpha_high: f64,
    /// Engagement adjustment rate.
    pub eta: f64,
    /// Per-step probability that the context switches.
    pub phi: f64,
    /// Planner discount factor.
    pub gamma: f64,
    pub r_correct: f64,
    pub r_incorrect: f64,
    /// Number of intervals of the engagement grid (grid has `grid_size + 1` points).
    pub grid_size: usize,
    /// Forward-search depth.
    pub horizon: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha_low: 0.3,
            alpha_high: 1.0,
            eta: 0.3,
            phi: 0.1,
            gamma: 0.95,
            r_correct: 1.0,
            r_incorrect: 0.0,
            grid_size: 20,
            horizon: 4,
        }
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParams {
            name,
            reason: format!("{value} is outside [0, 1]"),
        })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("alpha_low", self.alpha_low)?;
        check_unit("alpha_high", self.alpha_high)?;
        check_unit("eta", self.eta)?;
        check_unit("phi", self.phi)?;
        check_unit("gamma", self.gamma)?;
        if !(self.r_correct.is_finite() && self.r_incorrect.is_finite()) {
            return Err(Error::InvalidParams {
                name: "r_correct",
                reason: "rewards must be finite".into(),
            });
        }
        if self.r_correct <= self.r_incorrect {
            return Err(Error::InvalidParams {
                name: "r_correct",
                reason: format!(
                    "r_correct ({}) must exceed r_incorrect ({})",
                    self.r_correct, self.r_incorrect
                ),
            });
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidParams {
                name: "grid_size",
                reason: format!("{} < 2", self.grid_size),
            });
        }
        if self.horizon < 1 {
            return Err(Error::InvalidParams {
                name: "horizon",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn reward(&self, decision: Decision) -> f64 {
        match decision {
            Decision::Correct => self.r_correct,
            Decision::Incorrect => self.r_incorrect,
        }
    }
}

/// Ground-truth latent state of a simulated human.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanState {
    pub theta: f64,
    pub last_adherence: Option<Adherence>,
}

impl HumanState {
    /// Fully engaged human, the starting point of every episode.
    pub fn engaged() -> Self {
        HumanState {
            theta: 1.0,
            last_adherence: None,
        }
    }

    /// Advance by one sampled step and return the outcome.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        params: &ModelParams,
        context: Context,
        action: Action,
        rng: &mut R,
    ) -> StepOutcome {
        let outcome = sample_step(params, context, self.theta, action, rng);
        self.theta = outcome.theta_after;
        if outcome.adherence.is_some() {
            self.last_adherence = outcome.adherence;
        }
        outcome
    }
}

/// Sampled result of one human step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub decision: Decision,
    /// What the human would have decided without advice.
    pub counterfactual: Decision,
    /// Present only when advice was shown.
    pub adherence: Option<Adherence>,
    pub theta_after: f64,
}

pub fn prob_correct_no_ai(params: &ModelParams, context: Context) -> f64 {
    match context {
        Context::Low => params.alpha_low,
        Context::High => params.alpha_high,
    }
}

/// Probability of a correct decision with advice shown, marginalized over adherence.
pub fn prob_correct_with_ai(params: &ModelParams, context: Context, theta: f64) -> f64 {
    theta + (1.0 - theta) * prob_correct_no_ai(params, context)
}

/// Engagement after advice proved useful (or its absence proved costly).
pub fn engagement_increase(theta: f64, eta: f64) -> f64 {
    (theta + (1.0 - theta) * eta).clamp(0.0, 1.0)
}

/// Engagement after redundant advice.
pub fn engagement_decrease(theta: f64, eta: f64) -> f64 {
    (theta * (1.0 - eta)).clamp(0.0, 1.0)
}

/// Apply the five-case engagement update to an observed step.
///
/// Returns [`Error::UncoveredOutcome`] for tuples no case covers, which can
/// only arise from outcomes that break the [`StepOutcome`] invariants.
pub fn update_engagement(
    params: &ModelParams,
    theta: f64,
    action: Action,
    outcome: &StepOutcome,
) -> Result<f64> {
    check_unit("theta", theta)?;
    use Decision::{Correct, Incorrect};
    let eta = params.eta;
    match (action, outcome.adherence, outcome.decision, outcome.counterfactual) {
        (Action::On, Some(_), Correct, Correct) => Ok(engagement_decrease(theta, eta)),
        (Action::On, Some(Adherence::Adhered), Correct, Incorrect) => {
            Ok(engagement_increase(theta, eta))
        }
        (Action::On, Some(Adherence::Ignored), Incorrect, _) => Ok(engagement_increase(theta, eta)),
        (Action::Off, None, Correct, _) => Ok(theta),
        (Action::Off, None, Incorrect, _) => Ok(engagement_increase(theta, eta)),
        (action, adherence, decision, counterfactual) => Err(Error::UncoveredOutcome(format!(
            "action={action}, adherence={adherence:?}, decision={decision}, counterfactual={counterfactual}"
        ))),
    }
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Sample one human step, including the engagement update.
///
/// An ignored piece of advice means the human decided on their own, so the
/// realized decision doubles as the counterfactual.
pub fn sample_step<R: Rng + ?Sized>(
    params: &ModelParams,
    context: Context,
    theta: f64,
    action: Action,
    rng: &mut R,
) -> StepOutcome {
    debug_assert!((0.0..=1.0).contains(&theta));
    let alpha = prob_correct_no_ai(params, context);
    let (decision, counterfactual, adherence) = match action {
        Action::Off => {
            let y = Decision::from_bool(bernoulli(rng, alpha));
            (y, y, None)
        }
        Action::On => {
            if bernoulli(rng, theta) {
                let y_cf = Decision::from_bool(bernoulli(rng, alpha));
                (Decision::Correct, y_cf, Some(Adherence::Adhered))
            } else {
                let y = Decision::from_bool(bernoulli(rng, alpha));
                (y, y, Some(Adherence::Ignored))
            }
        }
    };
    let mut outcome = StepOutcome {
        decision,
        counterfactual,
        adherence,
        theta_after: theta,
    };
    outcome.theta_after = update_engagement(params, theta, action, &outcome)
        .expect("sampled outcomes always satisfy the engagement-update cases");
    outcome
}

pub fn sample_context_transition<R: Rng + ?Sized>(
    params: &ModelParams,
    context: Context,
    rng: &mut R,
) -> Context {
    if bernoulli(rng, params.phi) {
        context.flipped()
    } else {
        context
    }
}
