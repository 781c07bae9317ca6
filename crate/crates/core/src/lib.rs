//! Engagement-aware timing of AI advice.
//!
//! A simulated human decides with or without advice; their engagement with
//! the advice rises when it proves useful and decays when it is redundant.
//! The AI tracks a discrete belief over that engagement and plans when to
//! advise with a finite-horizon forward search.

pub mod belief;
pub mod error;
pub mod experiments;
pub mod model;
pub mod policy;
pub mod sim;

pub use belief::{expected_theta, initial_belief, update_belief, Belief, BeliefDynamics, Observation, ThetaGrid};
pub use error::{Error, Result};
pub use model::{
    prob_correct_no_ai, prob_correct_with_ai, sample_context_transition, sample_step, update_engagement, Action,
    Adherence, Context, Decision, HumanState, ModelParams, StepOutcome,
};
pub use policy::{ContextView, 
    expected_immediate_reward, forward_search_value, select_action, ActionValues, AdvicePolicy, Planner,
    PolicyDecision, PolicyKind,
};
pub use sim::{run_batch, run_episode, BatchStats, EpisodeSummary, MeanStd, ScenarioConfig, Schedule, StepRecord};
