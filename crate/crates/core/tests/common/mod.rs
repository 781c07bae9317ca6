//! Reference implementations used only by tests. Each one is written from
//! the generative description of the human model, independently of the
//! library's filter, planner and simulator code paths.

#![allow(dead_code)]

use advice_timing::{Action, Context, Decision, ModelParams, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nearest grid index on `0, 1/k, ..., 1`, exact midpoints rounding down.
pub fn oracle_snap(theta: f64, k: usize) -> usize {
    let x = theta * k as f64;
    let below = x.floor();
    let idx = if x - below > 0.5 { below as usize + 1 } else { below as usize };
    idx.min(k)
}

fn alpha(params: &ModelParams, c: Context) -> f64 {
    if c == Context::High {
        params.alpha_high
    } else {
        params.alpha_low
    }
}

/// Engagement after one step, written case by case.
fn next_theta(theta: f64, eta: f64, action: Action, adhered: bool, y: bool, y_cf: bool) -> f64 {
    let up = theta + (1.0 - theta) * eta;
    match action {
        Action::On if y && y_cf => theta * (1.0 - eta),
        Action::On if adhered && y && !y_cf => up,
        Action::On if !adhered && !y => up,
        Action::Off if y => theta,
        Action::Off => up,
        _ => unreachable!("inconsistent latent tuple"),
    }
}

/// Every latent (adherence, decision, counterfactual) outcome with its
/// probability given engagement `theta`.
fn latent_outcomes(theta: f64, a: f64, action: Action) -> Vec<(bool, bool, bool, f64)> {
    match action {
        Action::Off => vec![(false, true, true, a), (false, false, false, 1.0 - a)],
        Action::On => {
            let mut out = Vec::new();
            for adhered in [true, false] {
                for y_cf in [true, false] {
                    let p = if adhered { theta } else { 1.0 - theta } * if y_cf { a } else { 1.0 - a };
                    let y = adhered || y_cf;
                    out.push((adhered, y, y_cf, p));
                }
            }
            out
        }
    }
}

#[derive(Debug, PartialEq)]
pub struct OracleImpossible;

/// Posterior over grid indices after an episode, by enumerating every
/// latent trajectory separately and normalizing once at the end.
pub fn enumerate_filter_oracle(
    params: &ModelParams,
    prior: &[f64],
    episode: &[(Context, Action, Observation)],
) -> Result<Vec<f64>, OracleImpossible> {
    let k = params.grid_size;
    let mut paths: Vec<(usize, f64)> = prior
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| (i, *w))
        .collect();
    for &(c, action, obs) in episode {
        let a = alpha(params, c);
        let mut next = Vec::with_capacity(paths.len() * 3);
        for &(i, w) in &paths {
            let theta = i as f64 / k as f64;
            for (adhered, y, y_cf, p) in latent_outcomes(theta, a, action) {
                if y != (obs.decision == Decision::Correct) || p == 0.0 {
                    continue;
                }
                let j = oracle_snap(next_theta(theta, params.eta, action, adhered, y, y_cf), k);
                next.push((j, w * p));
            }
        }
        paths = next;
    }
    let mut mass = vec![0.0; k + 1];
    for (i, w) in paths {
        mass[i] += w;
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(OracleImpossible);
    }
    Ok(mass.into_iter().map(|m| m / total).collect())
}

/// Unnormalized weights over grid indices after one (context, action,
/// decision) step, together with the expected reward of the step.
fn oracle_step(params: &ModelParams, w: &[f64], c: Context, action: Action) -> (f64, [Vec<f64>; 2]) {
    let k = params.grid_size;
    let a = alpha(params, c);
    let mut reward = 0.0;
    let mut by_decision = [vec![0.0; k + 1], vec![0.0; k + 1]];
    for (i, &wi) in w.iter().enumerate() {
        let theta = i as f64 / k as f64;
        for (adhered, y, y_cf, p) in latent_outcomes(theta, a, action) {
            reward += wi * p * if y { params.r_correct } else { params.r_incorrect };
            let j = oracle_snap(next_theta(theta, params.eta, action, adhered, y, y_cf), k);
            by_decision[usize::from(!y)][j] += wi * p;
        }
    }
    (reward, by_decision)
}

/// Brute-force expectimax over unnormalized joint weights, with the
/// acting context known. Returns `(Q_on, Q_off)` scaled by the total weight.
pub fn expectimax_oracle(params: &ModelParams, w: &[f64], c: Context, depth: usize) -> (f64, f64) {
    let q = |action| {
        let (reward, children) = oracle_step(params, w, c, action);
        if depth == 1 {
            return reward;
        }
        let mut future = 0.0;
        for child in &children {
            for (next_c, p) in [(c, 1.0 - params.phi), (flip(c), params.phi)] {
                let (on, off) = expectimax_oracle(params, &scale(child, p), next_c, depth - 1);
                future += on.max(off);
            }
        }
        reward + params.gamma * future
    };
    (q(Action::On), q(Action::Off))
}

/// As [`expectimax_oracle`], but the acting context is drawn from the
/// transition out of `previous` and revealed only afterwards.
pub fn expectimax_oracle_predictive(params: &ModelParams, w: &[f64], previous: Context, depth: usize) -> (f64, f64) {
    let q = |action| {
        let mut total = 0.0;
        for (c, p) in [(previous, 1.0 - params.phi), (flip(previous), params.phi)] {
            let wc = scale(w, p);
            let (reward, children) = oracle_step(params, &wc, c, action);
            total += reward;
            if depth > 1 {
                for child in &children {
                    let (on, off) = expectimax_oracle_predictive(params, child, c, depth - 1);
                    total += params.gamma * on.max(off);
                }
            }
        }
        total
    };
    (q(Action::On), q(Action::Off))
}

fn flip(c: Context) -> Context {
    if c == Context::High {
        Context::Low
    } else {
        Context::High
    }
}

fn scale(w: &[f64], p: f64) -> Vec<f64> {
    w.iter().map(|x| x * p).collect()
}

/// Accuracy of the always-advise policy by direct simulation of the
/// engagement chain under a stochastic context process.
pub fn always_on_chain_oracle(params: &ModelParams, steps: usize, episodes: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..episodes)
        .map(|_| {
            let mut theta: f64 = 1.0;
            let mut high = true;
            let mut correct = 0usize;
            for _ in 0..steps {
                let a = if high { params.alpha_high } else { params.alpha_low };
                let adhered = rng.random::<f64>() < theta;
                let y_cf = rng.random::<f64>() < a;
                let y = adhered || y_cf;
                correct += usize::from(y);
                theta = next_theta(theta, params.eta, Action::On, adhered, y, y_cf);
                if rng.random::<f64>() < params.phi {
                    high = !high;
                }
            }
            correct as f64 / steps as f64
        })
        .collect()
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Random valid parameters with a small grid, for oracle comparisons.
pub fn random_params<R: Rng>(rng: &mut R, max_grid: usize, max_horizon: usize) -> ModelParams {
    // occasionally pin values to the edges of their range
    let unit = |rng: &mut R| match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    };
    ModelParams {
        alpha_low: unit(rng),
        alpha_high: unit(rng),
        eta: unit(rng),
        phi: unit(rng),
        gamma: rng.random::<f64>(),
        r_correct: 1.0 + rng.random::<f64>(),
        r_incorrect: rng.random::<f64>() - 0.5,
        grid_size: rng.random_range(2..=max_grid),
        horizon: rng.random_range(1..=max_horizon),
    }
}

pub fn random_belief<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..=k)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut point = vec![0.0; k + 1];
        point[k] = 1.0;
        return point;
    }
    raw.into_iter().map(|x| x / total).collect()
}
