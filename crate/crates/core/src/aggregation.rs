//! Ground-truth predictors: majority vote, weighted majority with log-odds
//! weights, and the TE plug-in that uses estimated reliabilities as weights.
//!
//! With the true reliabilities, the weighted majority vote with weights
//! `w_i = ln((1 + theta_i) / (1 - theta_i))` is the sign of the log-likelihood
//! ratio and therefore Bayes optimal. Ties (`W = 0`) and contradicting
//! infinite weights are resolved by a fair coin drawn from the caller's RNG.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{log_odds, signed_sum, ModelParams, ReliabilityVector, TaskSample};
use crate::te::TeState;

/// Per-worker vote weights; entries may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: i8,
    /// `W = (1/n) sum_i w_i x_i`; NaN when infinite weights contradict.
    pub score: f64,
    pub tie_broken: bool,
}

pub fn weights_from_theta(theta: &ReliabilityVector) -> WeightVector {
    WeightVector(theta.iter().map(|&t| log_odds(t)).collect())
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

/// Deterministic part of the vote: `Some(sign)` or `None` on a tie.
fn decide(x: &[i8], w: &WeightVector) -> (Option<i8>, f64) {
    let score = signed_sum(&w.0, x) / x.len().max(1) as f64;
    let value = if score > 0.0 {
        Some(1)
    } else if score < 0.0 {
        Some(-1)
    } else {
        None
    };
    (value, score)
}

pub fn weighted_majority<R: Rng + ?Sized>(
    x: &[i8],
    w: &WeightVector,
    rng: &mut R,
) -> Result<Prediction> {
    if x.len() != w.n() {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            actual: x.len(),
        });
    }
    let (value, score) = decide(x, w);
    Ok(match value {
        Some(value) => Prediction {
            value,
            score,
            tie_broken: false,
        },
        None => Prediction {
            value: coin(rng),
            score,
            tie_broken: true,
        },
    })
}

pub fn majority<R: Rng + ?Sized>(x: &[i8], rng: &mut R) -> Prediction {
    weighted_majority(x, &WeightVector::uniform(x.len()), rng).expect("lengths match")
}

/// Predicts every task with fixed weights; returns predictions and the error
/// rate against each sample's ground truth.
pub fn predict_with_weights<R: Rng + ?Sized>(
    samples: &[TaskSample],
    w: &WeightVector,
    rng: &mut R,
) -> Result<(Vec<Prediction>, f64)> {
    let predictions = samples
        .iter()
        .map(|s| weighted_majority(&s.answers, w, rng))
        .collect::<Result<Vec<_>>>()?;
    let wrong = predictions
        .iter()
        .zip(samples)
        .filter(|(p, s)| p.value != s.ground_truth)
        .count();
    Ok((predictions, wrong as f64 / samples.len().max(1) as f64))
}

/// Weighted majority with log-odds weights of `theta` on every task.
pub fn predict_dataset<R: Rng + ?Sized>(
    samples: &[TaskSample],
    theta: &ReliabilityVector,
    rng: &mut R,
) -> Result<(Vec<Prediction>, f64)> {
    predict_with_weights(samples, &weights_from_theta(theta), rng)
}

/// Online plug-in predictor: task `t` is predicted from the estimate built on
/// tasks `1..t-1`, then ingested.
#[derive(Debug, Clone)]
pub struct OnlinePlugIn {
    state: TeState,
}

impl OnlinePlugIn {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(format!(
                "the plug-in predictor needs at least 3 workers, got {n}"
            )));
        }
        Ok(Self {
            state: TeState::new(n),
        })
    }

    pub fn state(&self) -> &TeState {
        &self.state
    }

    pub fn predict_then_update<R: Rng + ?Sized>(
        &mut self,
        x: &[i8],
        rng: &mut R,
    ) -> Result<Prediction> {
        let theta_hat = self.state.estimate()?.theta_hat;
        let prediction = weighted_majority(x, &weights_from_theta(&theta_hat), rng)?;
        self.state.update(x)?;
        Ok(prediction)
    }
}

/// Exact error probability of the weighted vote under the model, enumerating
/// all `3^n` answer vectors; ties count as half an error.
pub fn exact_error_rate(params: &ModelParams, w: &WeightVector) -> Result<f64> {
    let n = params.n();
    if w.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: w.n(),
        });
    }
    let dist = crate::bounds::conditional_distributions(params)?;
    let mut error = 0.0;
    for (code, (p_pos, p_neg)) in dist.iter().enumerate() {
        let x = crate::bounds::decode_state(code, n);
        // P(x, G = g) = P(x | g) / 2
        error += match decide(&x, w).0 {
            Some(1) => p_neg / 2.0,
            Some(_) => p_pos / 2.0,
            None => (p_pos + p_neg) / 4.0,
        };
    }
    Ok(error)
}
