//! Advice policies: the two fixed baselines and a belief-space forward search.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::{Belief, BeliefDynamics, ThetaGrid};
use crate::error::{Error, Result};
use crate::model::{prob_correct_no_ai, Context, Decision, ModelParams};

pub use crate::model::Action;

/// Value differences at or below this resolve to withholding advice.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Optimal,
    AlwaysOn,
    AlwaysOff,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Optimal, PolicyKind::AlwaysOn, PolicyKind::AlwaysOff];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Optimal => "optimal",
            PolicyKind::AlwaysOn => "always_on",
            PolicyKind::AlwaysOff => "always_off",
        }
    }

    /// Instantiate the policy for a parameter set.
    pub fn build(self, params: &ModelParams, view: ContextView) -> Result<Box<dyn AdvicePolicy + Send + Sync>> {
        Ok(match self {
            PolicyKind::Optimal => Box::new(Planner::with_view(params, view)?),
            PolicyKind::AlwaysOn => Box::new(Fixed(Action::On)),
            PolicyKind::AlwaysOff => Box::new(Fixed(Action::Off)),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "optimal" => Ok(PolicyKind::Optimal),
            "always_on" => Ok(PolicyKind::AlwaysOn),
            "always_off" => Ok(PolicyKind::AlwaysOff),
            other => Err(Error::InvalidScenario(format!("unknown policy `{other}`"))),
        }
    }
}

/// Which context the AI conditions on when it chooses an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextView {
    /// The step's own context is revealed before acting.
    Current,
    /// The context is observed together with the decision. The AI acts on the
    /// previous step's context and plans as if it still holds.
    #[default]
    Previous,
    /// As [`ContextView::Previous`], but the planner averages the step over
    /// the context transition out of the previous context.
    PreviousPredictive,
}

impl ContextView {
    pub const ALL: [ContextView; 3] = [ContextView::Current, ContextView::Previous, ContextView::PreviousPredictive];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextView::Current => "current",
            ContextView::Previous => "previous",
            ContextView::PreviousPredictive => "previous_predictive",
        }
    }
}

impl fmt::Display for ContextView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "current" => Ok(ContextView::Current),
            "previous" => Ok(ContextView::Previous),
            "previous_predictive" => Ok(ContextView::PreviousPredictive),
            other => Err(Error::InvalidScenario(format!("unknown context view `{other}`"))),
        }
    }
}

/// Expected discounted returns of the two actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValues {
    pub on: f64,
    pub off: f64,
}

impl ActionValues {
    pub fn best(&self) -> f64 {
        self.on.max(self.off)
    }

    /// Advise only when it is strictly better by more than [`TIE_EPSILON`].
    pub fn choose(&self) -> Action {
        if self.on - self.off > TIE_EPSILON {
            Action::On
        } else {
            Action::Off
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub action: Action,
    /// Only the planner computes values.
    pub values: Option<ActionValues>,
}

pub trait AdvicePolicy {
    /// `context` is the context the AI conditions on, see [`ContextView`].
    fn decide(&self, belief: &Belief, context: Context) -> Result<PolicyDecision>;
}

/// A baseline that always takes the same action.
#[derive(Debug, Clone, Copy)]
pub struct Fixed(pub Action);

impl AdvicePolicy for Fixed {
    fn decide(&self, _belief: &Belief, _context: Context) -> Result<PolicyDecision> {
        Ok(PolicyDecision {
            action: self.0,
            values: None,
        })
    }
}

/// Probability that the human decides correctly under `action`.
fn prob_correct(belief: &Belief, grid: &ThetaGrid, params: &ModelParams, context: Context, action: Action) -> f64 {
    let alpha = prob_correct_no_ai(params, context);
    match action {
        Action::Off => alpha,
        Action::On => belief
            .mass()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let theta = grid.point(i);
                b * (theta + (1.0 - theta) * alpha)
            })
            .sum(),
    }
}

pub fn expected_immediate_reward(
    belief: &Belief,
    grid: &ThetaGrid,
    params: &ModelParams,
    context: Context,
    action: Action,
) -> f64 {
    let p = prob_correct(belief, grid, params, context, action);
    p * params.r_correct + (1.0 - p) * params.r_incorrect
}

/// Exhaustive finite-horizon expectimax over actions, decisions and context
/// transitions, replanned from the current belief at every step.
#[derive(Debug, Clone)]
pub struct Planner {
    params: ModelParams,
    dynamics: BeliefDynamics,
    predictive: bool,
}

impl Planner {
    /// Planner that treats the given context as the one it acts in.
    pub fn new(params: &ModelParams) -> Result<Self> {
        Planner::with_view(params, ContextView::Current)
    }

    pub fn with_view(params: &ModelParams, view: ContextView) -> Result<Self> {
        params.validate()?;
        let grid = ThetaGrid::for_params(params)?;
        Ok(Planner {
            params: *params,
            dynamics: BeliefDynamics::new(grid, params),
            predictive: view == ContextView::PreviousPredictive,
        })
    }

    /// Whether the given context is treated as the previous step's.
    pub fn is_predictive(&self) -> bool {
        self.predictive
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &ThetaGrid {
        self.dynamics.grid()
    }

    /// Q-values of both actions at the given search depth.
    pub fn action_values(&self, belief: &Belief, context: Context, depth: usize) -> Result<ActionValues> {
        if depth == 0 {
            return Err(Error::InvalidParams {
                name: "horizon",
                reason: "search depth must be at least 1".into(),
            });
        }
        if belief.len() != self.grid().len() {
            return Err(Error::InvalidBelief(format!(
                "belief has {} entries but grid has {}",
                belief.len(),
                self.grid().len()
            )));
        }
        let q = |action| {
            if self.predictive {
                self.q_value_unseen(belief, context, action, depth)
            } else {
                self.q_value(belief, context, action, depth)
            }
        };
        Ok(ActionValues {
            on: q(Action::On),
            off: q(Action::Off),
        })
    }

    fn transitions(&self, context: Context) -> [(Context, f64); 2] {
        let phi = self.params.phi;
        [(context, 1.0 - phi), (context.flipped(), phi)]
    }

    /// Q-value when the current context is drawn from the transition out of
    /// `previous` and revealed only after acting.
    fn q_value_unseen(&self, belief: &Belief, previous: Context, action: Action, depth: usize) -> f64 {
        let mut total = 0.0;
        for (context, p_context) in self.transitions(previous) {
            if p_context == 0.0 {
                continue;
            }
            let mut q = expected_immediate_reward(belief, self.grid(), &self.params, context, action);
            if depth > 1 {
                let mut future = 0.0;
                for decision in Decision::ALL {
                    if let Some((p_decision, next)) = self.dynamics.posterior(belief, context, action, decision) {
                        future += p_decision * self.value_unseen(&next, context, depth - 1);
                    }
                }
                q += self.params.gamma * future;
            }
            total += p_context * q;
        }
        total
    }

    fn value_unseen(&self, belief: &Belief, previous: Context, depth: usize) -> f64 {
        self.q_value_unseen(belief, previous, Action::On, depth)
            .max(self.q_value_unseen(belief, previous, Action::Off, depth))
    }

    fn q_value(&self, belief: &Belief, context: Context, action: Action, depth: usize) -> f64 {
        let immediate = expected_immediate_reward(belief, self.grid(), &self.params, context, action);
        if depth == 1 {
            return immediate;
        }
        let mut future = 0.0;
        for decision in Decision::ALL {
            let Some((p_decision, next)) = self.dynamics.posterior(belief, context, action, decision) else {
                continue;
            };
            for (next_context, p_context) in self.transitions(context) {
                if p_context == 0.0 {
                    continue;
                }
                future += p_decision * p_context * self.value(&next, next_context, depth - 1);
            }
        }
        immediate + self.params.gamma * future
    }

    fn value(&self, belief: &Belief, context: Context, depth: usize) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        self.q_value(belief, context, Action::On, depth)
            .max(self.q_value(belief, context, Action::Off, depth))
    }
}

impl AdvicePolicy for Planner {
    fn decide(&self, belief: &Belief, context: Context) -> Result<PolicyDecision> {
        let values = self.action_values(belief, context, self.params.horizon)?;
        Ok(PolicyDecision {
            action: values.choose(),
            values: Some(values),
        })
    }
}

/// Values of advising and withholding at a given depth.
pub fn forward_search_value(
    belief: &Belief,
    params: &ModelParams,
    context: Context,
    depth: usize,
) -> Result<ActionValues> {
    Planner::new(params)?.action_values(belief, context, depth)
}

pub fn select_action(
    policy: PolicyKind,
    belief: &Belief,
    context: Context,
    params: &ModelParams,
) -> Result<PolicyDecision> {
    policy.build(params, ContextView::Current)?.decide(belief, context)
}
