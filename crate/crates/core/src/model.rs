//! The one-coin crowdsourcing model.
//!
//! Each task `t` has a hidden truth `G(t)` in {-1, +1}. Worker `i` answers with
//! probability `alpha`; when answering, the answer is correct with probability
//! `(1 + theta_i) / 2`. An answer of `0` means "no answer".
//!
//! This module holds the domain types plus the population quantities that the
//! estimator and the tests use as exact references.

use std::ops::Index;

use crate::error::{Error, Result};

/// Worker reliabilities, one entry in `[-1, 1]` per worker.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityVector(Vec<f64>);

impl ReliabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(-1.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidParameter(format!(
                "reliability of worker {i} is {v}, outside [-1, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// `max_i |self_i - other_i|`.
    pub fn sup_distance(&self, other: &ReliabilityVector) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: other.n(),
            });
        }
        Ok(self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }
}

impl Index<usize> for ReliabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ReliabilityVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: ReliabilityVector,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(theta: ReliabilityVector, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "answer probability alpha={alpha} must lie in (0, 1]"
            )));
        }
        Ok(Self { theta, alpha })
    }

    pub fn n(&self) -> usize {
        self.theta.n()
    }
}

/// The answers of all workers to one task, with the hidden truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSample {
    pub answers: Vec<i8>,
    pub ground_truth: i8,
}

impl TaskSample {
    pub fn new(answers: Vec<i8>, ground_truth: i8) -> Result<Self> {
        if let Some(a) = answers.iter().find(|a| !(-1..=1).contains(*a)) {
            return Err(Error::InvalidParameter(format!(
                "answer {a} is not in {{-1, 0, 1}}"
            )));
        }
        if ground_truth != 1 && ground_truth != -1 {
            return Err(Error::InvalidParameter(format!(
                "ground truth {ground_truth} is not in {{-1, 1}}"
            )));
        }
        Ok(Self {
            answers,
            ground_truth,
        })
    }

    pub fn n(&self) -> usize {
        self.answers.len()
    }
}

/// Symmetric `n x n` matrix of pairwise agreement statistics.
///
/// Only off-diagonal entries carry meaning; the diagonal is stored as zero and
/// never read by any consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// Builds the matrix from a function evaluated on every pair `i < j`.
    pub fn from_pairs(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut c = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                c.set(i, j, f(i, j));
            }
        }
        c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. Writes to the diagonal are ignored.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if i == j {
            return;
        }
        self.entries[i * self.n + j] = value;
        self.entries[j * self.n + i] = value;
    }

    /// Off-diagonal row sum `sum_{i != k} C_ik`.
    pub fn row_sum(&self, k: usize) -> f64 {
        (0..self.n)
            .filter(|&i| i != k)
            .map(|i| self.get(i, k))
            .sum()
    }

    /// `max_{i != j} |self_ij - other_ij|`.
    pub fn sup_distance(&self, other: &CovarianceMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                d = d.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        d
    }
}

/// `min_k max_{i<j, i,j != k} sqrt(|theta_i theta_j|)`.
///
/// For a fixed `k` the inner max is attained by the two largest `|theta|`
/// outside `k`, so only the three largest magnitudes matter.
pub fn a_functional(theta: &ReliabilityVector) -> Result<f64> {
    let n = theta.n();
    if n < 3 {
        return Err(Error::InvalidDimension(format!(
            "A(theta) needs at least 3 workers, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()));
    let second = theta[order[1]].abs();
    let third = theta[order[2]].abs();

    // Removing the largest leaves (second, third), which is the smallest of
    // the remaining-pair maxima.
    Ok((second * third).sqrt())
}

pub fn b_functional(theta: &ReliabilityVector) -> f64 {
    theta.iter().sum()
}

/// At least three nonzero reliabilities and a positive total.
pub fn in_identifiable_set(theta: &ReliabilityVector) -> bool {
    theta.iter().filter(|v| **v != 0.0).count() >= 3 && b_functional(theta) > 0.0
}

/// `C_ij = theta_i * theta_j` off the diagonal.
pub fn population_covariance(theta: &ReliabilityVector) -> CovarianceMatrix {
    CovarianceMatrix::from_pairs(theta.n(), |i, j| theta[i] * theta[j])
}

/// Log-odds weight `ln((1 + theta) / (1 - theta))`, infinite at `|theta| = 1`.
pub fn log_odds(theta: f64) -> f64 {
    if theta >= 1.0 {
        f64::INFINITY
    } else if theta <= -1.0 {
        f64::NEG_INFINITY
    } else {
        ((1.0 + theta) / (1.0 - theta)).ln()
    }
}

/// Sums `w_i * x_i`, resolving infinite terms by sign.
///
/// Returns `+inf` / `-inf` when infinite terms of only one sign occur, and NaN
/// when both signs occur (the indeterminate case).
pub(crate) fn signed_sum(weights: &[f64], x: &[i8]) -> f64 {
    let mut finite = 0.0;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for (&w, &xi) in weights.iter().zip(x) {
        if xi == 0 || w == 0.0 {
            continue;
        }
        let term = w * f64::from(xi);
        if term == f64::INFINITY {
            pos_inf = true;
        } else if term == f64::NEG_INFINITY {
            neg_inf = true;
        } else {
            finite += term;
        }
    }
    match (pos_inf, neg_inf) {
        (true, true) => f64::NAN,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => finite,
    }
}

/// `ln(P(x | G = +1) / P(x | G = -1))` for an answer vector `x`.
///
/// NaN signals the indeterminate case where workers with `theta = 1` and
/// `theta = -1` contradict each other.
pub fn loglikelihood_ratio(x: &[i8], theta: &ReliabilityVector) -> Result<f64> {
    if x.len() != theta.n() {
        return Err(Error::DimensionMismatch {
            expected: theta.n(),
            actual: x.len(),
        });
    }
    let weights: Vec<f64> = theta.iter().map(|&t| log_odds(t)).collect();
    Ok(signed_sum(&weights, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(v: &[f64]) -> ReliabilityVector {
        ReliabilityVector::new(v.to_vec()).unwrap()
    }

    fn a_brute(theta: &ReliabilityVector) -> f64 {
        let n = theta.n();
        let mut best = f64::INFINITY;
        for k in 0..n {
            let mut inner: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    if i != k && j != k {
                        inner = inner.max((theta[i] * theta[j]).abs().sqrt());
                    }
                }
            }
            best = best.min(inner);
        }
        best
    }

    /// `P(x | G = g)` from the per-worker kernel.
    fn likelihood(x: &[i8], theta: &ReliabilityVector, g: i8) -> f64 {
        x.iter()
            .zip(theta.iter())
            .map(|(&xi, &t)| match xi {
                0 => 1.0,
                _ if xi == g => (1.0 + t) / 2.0,
                _ => (1.0 - t) / 2.0,
            })
            .product()
    }

    #[test]
    fn rejects_out_of_range_reliability() {
        assert!(ReliabilityVector::new(vec![0.5, 1.2]).is_err());
        assert!(ModelParams::new(rv(&[0.5, 0.5, 0.5]), 0.0).is_err());
        assert!(TaskSample::new(vec![1, 2], 1).is_err());
        assert!(TaskSample::new(vec![1, 0], 0).is_err());
    }

    #[test]
    fn a_functional_examples() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        v[1] = 0.5;
        v[2] = 0.5;
        assert!((a_functional(&rv(&v)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(a_functional(&rv(&[0.0, 0.0, 0.0])).unwrap(), 0.0);

        let t = rv(&[0.9, -0.9, 0.9, -0.9, 0.25, 0.25]);
        assert_eq!(a_functional(&t).unwrap(), a_brute(&t));
        assert!((a_functional(&t).unwrap() - 0.9).abs() < 1e-15);

        assert!(matches!(
            a_functional(&rv(&[1.0, 1.0])),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn b_functional_examples() {
        assert_eq!(b_functional(&rv(&[1.0, 0.5, 0.5, 0.0, 0.0])), 2.0);
        let (a, b, m) = (0.7, 1.0, 4usize);
        let mut v = vec![a, -a, a, -a];
        v.extend(std::iter::repeat_n(b / m as f64, m));
        assert!((b_functional(&rv(&v)) - b).abs() < 1e-15);
        assert_eq!(b_functional(&rv(&[])), 0.0);
    }

    #[test]
    fn identifiable_set_examples() {
        assert!(in_identifiable_set(&rv(&[0.5, 0.5, 0.5, 0.0, 0.0])));
        assert!(!in_identifiable_set(&rv(&[0.9, 0.9, 0.0, 0.0, 0.0])));
        assert!(!in_identifiable_set(&rv(&[-0.5, -0.5, -0.5])));
    }

    #[test]
    fn population_covariance_examples() {
        let c = population_covariance(&rv(&[1.0, 0.5, 0.5]));
        assert_eq!(c.get(0, 1), 0.5);
        assert_eq!(c.get(0, 2), 0.5);
        assert_eq!(c.get(1, 2), 0.25);
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(
            population_covariance(&rv(&[0.0; 4])),
            CovarianceMatrix::zeros(4)
        );
        let c = population_covariance(&rv(&[0.9, -0.9, 0.25]));
        assert!((c.get(0, 1) + 0.81).abs() < 1e-15);
    }

    #[test]
    fn loglikelihood_ratio_examples() {
        let theta = rv(&[0.5, 0.5, 0.5]);
        let llr = loglikelihood_ratio(&[1, 1, 1], &theta).unwrap();
        assert!((llr - 3.0 * 3f64.ln()).abs() < 1e-12);
        assert_eq!(loglikelihood_ratio(&[0, 0, 0], &theta).unwrap(), 0.0);
    }

    #[test]
    fn loglikelihood_ratio_sentinels() {
        let theta = rv(&[1.0, -1.0, 0.3]);
        assert_eq!(
            loglikelihood_ratio(&[1, 0, -1], &theta).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            loglikelihood_ratio(&[0, 1, 1], &theta).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(loglikelihood_ratio(&[1, 1, 0], &theta).unwrap().is_nan());
        // The theta = 1 worker abstains, so only finite terms remain.
        let v = loglikelihood_ratio(&[0, 0, 1], &theta).unwrap();
        assert!((v - log_odds(0.3)).abs() < 1e-15);
    }

    #[test]
    fn loglikelihood_ratio_matches_enumeration_up_to_five_workers() {
        let thetas = [
            vec![0.8, 0.3, -0.3],
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.9, -0.5, 0.0, 0.7, 0.05],
        ];
        for t in thetas {
            let theta = rv(&t);
            let n = theta.n();
            for code in 0..3usize.pow(n as u32) {
                let mut c = code;
                let x: Vec<i8> = (0..n)
                    .map(|_| {
                        let d = (c % 3) as i8 - 1;
                        c /= 3;
                        d
                    })
                    .collect();
                let brute = (likelihood(&x, &theta, 1) / likelihood(&x, &theta, -1)).ln();
                let llr = loglikelihood_ratio(&x, &theta).unwrap();
                assert!((llr - brute).abs() < 1e-12, "x={x:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn a_functional_matches_brute_force_and_symmetries(
            v in prop::collection::vec(-1.0f64..=1.0, 3..9),
            rot in 0usize..9,
        ) {
            let theta = rv(&v);
            let a = a_functional(&theta).unwrap();
            prop_assert!((a - a_brute(&theta)).abs() < 1e-15);
            prop_assert_eq!(a, a_functional(&theta.negated()).unwrap());
            let mut p = v.clone();
            let len = p.len();
            p.rotate_left(rot % len);
            p.swap(0, len - 1);
            prop_assert_eq!(a, a_functional(&rv(&p)).unwrap());
        }

        #[test]
        fn identifiable_iff_a_and_b_positive(
            v in prop::collection::vec(
                prop_oneof![Just(0.0f64), -1.0f64..=1.0], 3..8),
        ) {
            let theta = rv(&v);
            let expected = a_functional(&theta).unwrap() > 0.0 && b_functional(&theta) > 0.0;
            prop_assert_eq!(in_identifiable_set(&theta), expected);
        }

        #[test]
        fn population_covariance_is_rank_one(v in prop::collection::vec(-1.0f64..=1.0, 3..8)) {
            let theta = rv(&v);
            let c = population_covariance(&theta);
            let n = theta.n();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if i == j || j == k || i == k {
                            continue;
                        }
                        prop_assert_eq!(c.get(i, j), c.get(j, i));
                        let lhs = c.get(i, k) * c.get(j, k);
                        let rhs = c.get(i, j) * theta[k] * theta[k];
                        prop_assert!((lhs - rhs).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
