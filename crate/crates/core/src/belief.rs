//! Discrete Bayesian filter over the latent engagement level.
//!
//! Engagement is tracked on a uniform grid `0, 1/K, ..., 1`. Each step the
//! filter weights every grid point by the likelihood of the observed decision,
//! splits it over the latent (adherence, counterfactual) branches consistent
//! with that decision, moves each branch through the engagement update and
//! snaps the result to the nearest grid point (ties go to the lower point).
//! The context is observed directly and is carried beside the belief.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    engagement_decrease, engagement_increase, prob_correct_no_ai, Action, Context, Decision,
    ModelParams,
};

/// Absolute tolerance on the total mass of a belief.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Tolerance applied to externally supplied mass vectors before renormalizing.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// Uniform grid `g_i = i / K` for `i = 0..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaGrid {
    intervals: usize,
}

impl ThetaGrid {
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::InvalidParams {
                name: "grid_size",
                reason: format!("{intervals} < 2"),
            });
        }
        Ok(ThetaGrid { intervals })
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        ThetaGrid::new(params.grid_size)
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of grid points, `K + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, index: usize) -> f64 {
        index as f64 / self.intervals as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Index of the nearest grid point; exact midpoints go to the lower one.
    pub fn snap(&self, theta: f64) -> usize {
        let scaled = theta.clamp(0.0, 1.0) * self.intervals as f64;
        let lower = scaled.floor();
        let index = if scaled - lower > 0.5 { lower + 1.0 } else { lower };
        (index as usize).min(self.intervals)
    }
}

/// Probability mass over the points of a [`ThetaGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    mass: Vec<f64>,
}

impl Belief {
    /// All mass on `theta = 1`, i.e. a fully engaged human.
    pub fn initial(grid: &ThetaGrid) -> Self {
        Belief::point(grid, grid.intervals)
    }

    pub fn point(grid: &ThetaGrid, index: usize) -> Self {
        let mut mass = vec![0.0; grid.len()];
        mass[index.min(grid.intervals)] = 1.0;
        Belief { mass }
    }

    pub fn uniform(grid: &ThetaGrid) -> Self {
        let n = grid.len();
        Belief {
            mass: vec![1.0 / n as f64; n],
        }
    }

    /// Build a belief from user-supplied masses.
    ///
    /// Masses must be finite and nonnegative and sum to 1 within
    /// [`INPUT_TOLERANCE`]; they are then renormalized exactly.
    pub fn from_masses(grid: &ThetaGrid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::InvalidBelief(format!(
                "expected {} masses for a grid of size {}, got {}",
                grid.len(),
                grid.intervals,
                mass.len()
            )));
        }
        if let Some(bad) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidBelief(format!("mass {bad} is not a probability")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > INPUT_TOLERANCE {
            return Err(Error::InvalidBelief(format!("masses sum to {total}, not 1")));
        }
        Ok(Belief {
            mass: mass.into_iter().map(|m| m / total).collect(),
        })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        self.mass.iter().all(|m| *m >= 0.0 && m.is_finite())
            && (self.total() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    pub fn expected_theta(&self, grid: &ThetaGrid) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * grid.point(i))
            .sum()
    }
}

/// What the AI sees after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub decision: Decision,
    pub next_context: Context,
}

/// Grid-snapped engagement transitions for a fixed grid and parameter set.
///
/// Shared by the filter and the planner so both use identical arithmetic.
#[derive(Debug, Clone)]
pub struct BeliefDynamics {
    grid: ThetaGrid,
    alpha_low: f64,
    alpha_high: f64,
    decrease: Vec<usize>,
    increase: Vec<usize>,
}

impl BeliefDynamics {
    pub fn new(grid: ThetaGrid, params: &ModelParams) -> Self {
        let decrease = grid
            .points()
            .map(|g| grid.snap(engagement_decrease(g, params.eta)))
            .collect();
        let increase = grid
            .points()
            .map(|g| grid.snap(engagement_increase(g, params.eta)))
            .collect();
        BeliefDynamics {
            grid,
            alpha_low: params.alpha_low,
            alpha_high: params.alpha_high,
            decrease,
            increase,
        }
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    fn alpha(&self, context: Context) -> f64 {
        match context {
            Context::Low => self.alpha_low,
            Context::High => self.alpha_high,
        }
    }

    /// Unnormalized predictive mass over next-step engagement, jointly with
    /// the observed decision. The masses sum to `P(decision | belief)`.
    pub fn joint(&self, belief: &Belief, context: Context, action: Action, decision: Decision) -> Vec<f64> {
        let alpha = self.alpha(context);
        let mut next = vec![0.0; self.grid.len()];
        for (i, &b) in belief.mass.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let theta = self.grid.point(i);
            match (action, decision) {
                (Action::Off, Decision::Correct) => next[i] += b * alpha,
                (Action::Off, Decision::Incorrect) => next[self.increase[i]] += b * (1.0 - alpha),
                (Action::On, Decision::Incorrect) => {
                    // only an ignored recommendation can yield an error
                    next[self.increase[i]] += b * (1.0 - theta) * (1.0 - alpha);
                }
                (Action::On, Decision::Correct) => {
                    // adhered, counterfactual correct: redundant advice
                    next[self.decrease[i]] += b * theta * alpha;
                    // adhered, counterfactual incorrect: advice prevented an error
                    next[self.increase[i]] += b * theta * (1.0 - alpha);
                    // ignored and correct on their own
                    next[self.decrease[i]] += b * (1.0 - theta) * alpha;
                }
            }
        }
        next
    }

    /// Probability of the decision and the normalized posterior, or `None`
    /// when the decision has zero probability.
    pub fn posterior(
        &self,
        belief: &Belief,
        context: Context,
        action: Action,
        decision: Decision,
    ) -> Option<(f64, Belief)> {
        let mut mass = self.joint(belief, context, action, decision);
        let likelihood: f64 = mass.iter().sum();
        if likelihood <= 0.0 {
            return None;
        }
        mass.iter_mut().for_each(|m| *m /= likelihood);
        Some((likelihood, Belief { mass }))
    }
}

pub fn initial_belief(grid: &ThetaGrid) -> Belief {
    Belief::initial(grid)
}

pub fn expected_theta(belief: &Belief, grid: &ThetaGrid) -> f64 {
    belief.expected_theta(grid)
}

/// One exact filtering step. The observed next context carries no
/// information about engagement and does not reweight the belief.
pub fn update_belief(
    belief: &Belief,
    grid: &ThetaGrid,
    params: &ModelParams,
    context: Context,
    action: Action,
    obs: &Observation,
) -> Result<Belief> {
    if belief.len() != grid.len() {
        return Err(Error::InvalidBelief(format!(
            "belief has {} entries but grid has {}",
            belief.len(),
            grid.len()
        )));
    }
    debug_assert!(prob_correct_no_ai(params, context).is_finite());
    BeliefDynamics::new(*grid, params)
        .posterior(belief, context, action, obs.decision)
        .map(|(_, b)| b)
        .ok_or(Error::ImpossibleObservation)
}
