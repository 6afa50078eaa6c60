//! Numerical laboratory for the information-theoretic side of TE.
//!
//! Exact joint distributions of the answer vector are enumerated over
//! `{-1, 0, 1}^n` (for `n <= 10`) so that divergences between hard instance
//! pairs can be computed by brute force and compared with closed-form bounds.
//! Concentration and Chernoff tails are checked by Monte Carlo.
//!
//! Every constant that enters a bound lives in [`BoundConstants`]; the default
//! values are the published ones, and overriding one is how the negative
//! control in the `bounds` command is exercised.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    a_functional, b_functional, population_covariance, ModelParams, ReliabilityVector,
};
use crate::sim::{sample_task, RngSeed};
use crate::te::TeState;

/// Largest `n` for which `3^n` states are enumerated.
pub const MAX_ENUMERATED_WORKERS: usize = 10;

/// Numeric constants of the lower- and upper-bound statements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// `1/c1`: KL bound for the magnitude-hard pair, and `T1 = (1/this) ...`.
    pub abs_hard: f64,
    /// `1/c2`: KL bound for the sign-hard pair, and `T2 = (1/this) ...`.
    pub sign_hard: f64,
    /// `c1'` in the upper sample complexity `T1'`.
    pub upper_abs: f64,
    /// `c2'` in the upper sample complexity `T2'`.
    pub upper_sign: f64,
    /// Denominator of the exponent in the `||C_hat - C||` tail.
    pub pairwise_exponent: f64,
    /// Multiplier `k` in the `k n^2` union bound of the sup-norm tail.
    pub union_factor: f64,
    /// Denominator of the Gaussian term in the row-sum tail.
    pub row_sum_exponent: f64,
    /// Denominator `8` in the `exp(-t alpha^2 / (8 (n-1)))` row-sum term.
    pub coverage_exponent: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            abs_hard: 512.0,
            sign_hard: 1024.0,
            upper_abs: 120.0 * 24.0 * 24.0,
            upper_sign: 30.0 * 8.0 * 8.0,
            pairwise_exponent: 120.0,
            union_factor: 3.0,
            row_sum_exponent: 30.0,
            coverage_exponent: 8.0,
        }
    }
}

/// Answer vector for state `code`: base-3 digits, worker 0 least significant,
/// digit `d` meaning answer `d - 1`.
pub fn decode_state(mut code: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|_| {
            let d = (code % 3) as i8 - 1;
            code /= 3;
            d
        })
        .collect()
}

pub fn encode_state(x: &[i8]) -> usize {
    x.iter()
        .rev()
        .fold(0, |acc, &xi| acc * 3 + (xi + 1) as usize)
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATED_WORKERS {
        return Err(Error::Capacity {
            n,
            cap: MAX_ENUMERATED_WORKERS,
        });
    }
    Ok(())
}

/// `(P(x | G = +1), P(x | G = -1))` for every state, indexed by [`encode_state`].
pub fn conditional_distributions(params: &ModelParams) -> Result<Vec<(f64, f64)>> {
    let n = params.n();
    check_enumerable(n)?;
    let alpha = params.alpha;
    let mut table = vec![(1.0, 1.0)];
    // Each new worker becomes the most significant digit so far.
    for &t in params.theta.iter() {
        let right = alpha * (1.0 + t) / 2.0;
        let wrong = alpha * (1.0 - t) / 2.0;
        // x = -1, 0, +1 under G = +1 and G = -1.
        let kernel = [(wrong, right), (1.0 - alpha, 1.0 - alpha), (right, wrong)];
        let mut next = Vec::with_capacity(table.len() * 3);
        for &(kp, kn) in &kernel {
            next.extend(table.iter().map(|&(p, q)| (p * kp, q * kn)));
        }
        table = next;
    }
    Ok(table)
}

/// Exact distribution of the answer vector `X` over `{-1, 0, 1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Wraps an explicit table indexed by [`encode_state`].
    pub fn from_probs(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_enumerable(n)?;
        if probs.len() != 3usize.pow(n as u32) {
            return Err(Error::DimensionMismatch {
                expected: 3usize.pow(n as u32),
                actual: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities must be non-negative and sum to 1 (sum = {total})"
            )));
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &[i8]) -> f64 {
        self.probs[encode_state(x)]
    }
}

pub fn joint_distribution(params: &ModelParams) -> Result<JointDistribution> {
    let probs = conditional_distributions(params)?
        .into_iter()
        .map(|(p, q)| 0.5 * (p + q))
        .collect();
    Ok(JointDistribution {
        n: params.n(),
        probs,
    })
}

fn same_support(p: &JointDistribution, q: &JointDistribution) -> Result<()> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            actual: q.n,
        });
    }
    Ok(())
}

/// `D(P || Q) = sum_x P(x) ln(P(x) / Q(x))`; `+inf` if `P` is not dominated by `Q`.
pub fn kl_divergence(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    same_support(p, q)?;
    let mut d = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += pi * (pi / qi).ln();
    }
    Ok(d)
}

/// `E_P[(P - Q)^2 / (P Q)]`; `+inf` when exactly one of `P(x)`, `Q(x)` is zero.
pub fn chi2_divergence(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    same_support(p, q)?;
    let mut d = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        match (pi == 0.0, qi == 0.0) {
            (true, true) => continue,
            (false, false) => d += (pi - qi).powi(2) / qi,
            _ => return Ok(f64::INFINITY),
        }
    }
    Ok(d)
}

/// KL divergence between Bernoulli(`p`) and Bernoulli(`q`).
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardKind {
    /// `(1, a, a, 0, ...)` against a perturbation that is hard to tell apart
    /// when `a` is small: magnitudes are hard.
    AbsHard,
    /// `(a, a, -a, -a, c, ...)` against its partial negation: signs are hard.
    SignHard,
}

const MEMBERSHIP_TOL: f64 = 1e-12;

/// The two parameters of a hard pair, both in `{A >= a, B >= b}`.
pub fn hard_instance_pair(
    kind: HardKind,
    n: usize,
    a: f64,
    b: f64,
    epsilon: f64,
) -> Result<(ReliabilityVector, ReliabilityVector)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("a={a} must lie in (0, 1)")));
    }
    let (theta, theta_prime) = match kind {
        HardKind::AbsHard => {
            if n < 3 {
                return Err(Error::InvalidDimension(format!(
                    "the magnitude-hard pair needs n >= 3, got {n}"
                )));
            }
            let limit = abs_hard_epsilon_limit(a);
            if !(epsilon >= 0.0 && epsilon < limit) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon={epsilon} must lie in [0, {limit})"
                )));
            }
            let mut theta = vec![0.0; n];
            theta[..3].copy_from_slice(&[1.0, a, a]);
            let s = 1.0 - 2.0 * epsilon;
            let mut prime = vec![0.0; n];
            prime[..3].copy_from_slice(&[s, a / s, a / s]);
            (theta, prime)
        }
        HardKind::SignHard => {
            if n <= 4 {
                return Err(Error::InvalidDimension(format!(
                    "the sign-hard pair needs n > 4, got {n}"
                )));
            }
            if b.is_nan() || b <= 0.0 {
                return Err(Error::InvalidParameter(format!("b={b} must be positive")));
            }
            let c = b / (n - 4) as f64;
            let mut theta = vec![a, a, -a, -a];
            theta.resize(n, c);
            let mut prime = vec![-a, -a, a, a];
            prime.resize(n, c);
            (theta, prime)
        }
    };
    let theta = ReliabilityVector::new(theta)?;
    let theta_prime = ReliabilityVector::new(theta_prime)?;
    for v in [&theta, &theta_prime] {
        let a_v = a_functional(v)?;
        let b_v = b_functional(v);
        if a_v < a - MEMBERSHIP_TOL || b_v < b - MEMBERSHIP_TOL {
            return Err(Error::InvalidParameter(format!(
                "hard pair member {:?} has A={a_v}, B={b_v}, outside A>={a}, B>={b}",
                v.values()
            )));
        }
    }
    Ok((theta, theta_prime))
}

/// `min(a, (1 - a) / 2, 1/4)`, the open upper limit on epsilon.
pub fn abs_hard_epsilon_limit(a: f64) -> f64 {
    a.min((1.0 - a) / 2.0).min(0.25)
}

/// One bound check: `satisfied` is `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub n: Option<usize>,
    pub t: Option<u64>,
    pub delta: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// The bound is a probability bound `>= 1`, so it holds trivially.
    pub vacuous: bool,
}

impl BoundReport {
    fn new(kind: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            kind: kind.into(),
            a: None,
            b: None,
            alpha: None,
            epsilon: None,
            n: None,
            t: None,
            delta: None,
            lhs,
            rhs,
            satisfied: lhs <= rhs,
            vacuous: false,
        }
    }
}

/// Brute-force `D(P_theta' || P_theta)` for a hard pair against its closed-form bound.
pub fn verify_hard_pair(
    kind: HardKind,
    n: usize,
    a: f64,
    b: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<BoundReport> {
    verify_hard_pair_with(&BoundConstants::default(), kind, n, a, b, epsilon, alpha)
}

pub fn verify_hard_pair_with(
    constants: &BoundConstants,
    kind: HardKind,
    n: usize,
    a: f64,
    b: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<BoundReport> {
    // Workers with theta = 0 on both sides leave the divergence unchanged, so
    // the magnitude-hard pair is evaluated on its three informative workers.
    let enumerated_n = match kind {
        HardKind::AbsHard => 3,
        HardKind::SignHard => n,
    };
    check_enumerable(enumerated_n)?;
    let (theta, theta_prime) = hard_instance_pair(kind, enumerated_n, a, b, epsilon)?;
    let p = joint_distribution(&ModelParams::new(theta, alpha)?)?;
    let p_prime = joint_distribution(&ModelParams::new(theta_prime, alpha)?)?;
    let lhs = kl_divergence(&p_prime, &p)?;
    let (label, rhs) = match kind {
        HardKind::AbsHard => (
            "hard-pair-abs",
            constants.abs_hard * alpha.powi(2) * a.powi(4) * epsilon.powi(2) / (1.0 - a),
        ),
        HardKind::SignHard => (
            "hard-pair-sign",
            constants.sign_hard * alpha.powi(2) * a.powi(2) * b.powi(2)
                / ((n - 4) as f64 * (1.0 - a).powi(4)),
        ),
    };
    let mut report = BoundReport::new(label, lhs, rhs);
    report.a = Some(a);
    report.alpha = Some(alpha);
    report.n = Some(n);
    match kind {
        HardKind::AbsHard => report.epsilon = Some(epsilon),
        HardKind::SignHard => report.b = Some(b),
    }
    Ok(report)
}

/// The full hard-pair grid: magnitude-hard over `a in {0.1..0.9}` x five valid
/// epsilons x `alpha in {0.1, 0.25, 0.5, 1}`, and sign-hard over
/// `n in {5..8}` x `a` x `b in {0.25, 0.5, 1}` x `alpha`.
pub fn hard_pair_grid(constants: &BoundConstants) -> Result<Vec<BoundReport>> {
    let a_values: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let alphas = [0.1, 0.25, 0.5, 1.0];
    let mut jobs = Vec::new();
    for &a in &a_values {
        let limit = abs_hard_epsilon_limit(a);
        for k in 1..=5 {
            for &alpha in &alphas {
                jobs.push((HardKind::AbsHard, 3, a, 0.0, limit * k as f64 / 6.0, alpha));
            }
        }
    }
    for n in 5..=8 {
        for &a in &a_values {
            for b in [0.25, 0.5, 1.0] {
                for &alpha in &alphas {
                    jobs.push((HardKind::SignHard, n, a, b, 0.0, alpha));
                }
            }
        }
    }
    jobs.into_par_iter()
        .map(|(kind, n, a, b, eps, alpha)| {
            verify_hard_pair_with(constants, kind, n, a, b, eps, alpha)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Lower bound, magnitude term.
    pub t1: f64,
    /// Lower bound, sign term.
    pub t2: f64,
    /// TE upper bound, magnitude term.
    pub t1_prime: f64,
    /// TE upper bound, sign term.
    pub t2_prime: f64,
}

impl Thresholds {
    pub fn lower(&self) -> f64 {
        self.t1.max(self.t2)
    }

    pub fn upper(&self) -> f64 {
        self.t1_prime.max(self.t2_prime)
    }
}

/// Minimax lower-bound sample sizes `T1`, `T2` and TE's sufficient sample sizes
/// `T1'`, `T2'` for accuracy `epsilon` with confidence `delta`.
pub fn sample_complexity_thresholds(
    a: f64,
    b: f64,
    alpha: f64,
    epsilon: f64,
    delta: f64,
    n: usize,
) -> Result<Thresholds> {
    sample_complexity_thresholds_with(&BoundConstants::default(), a, b, alpha, epsilon, delta, n)
}

pub fn sample_complexity_thresholds_with(
    constants: &BoundConstants,
    a: f64,
    b: f64,
    alpha: f64,
    epsilon: f64,
    delta: f64,
    n: usize,
) -> Result<Thresholds> {
    let bad = |what: String| Err(Error::InvalidParameter(what));
    if !(a > 0.0 && a < 1.0) || b.is_nan() || b <= 0.0 || !(alpha > 0.0 && alpha <= 1.0) {
        return bad(format!(
            "need a in (0,1), b > 0, alpha in (0,1]; got a={a}, b={b}, alpha={alpha}"
        ));
    }
    if n <= 4 {
        return Err(Error::InvalidDimension(format!(
            "thresholds need n > 4, got {n}"
        )));
    }
    let lower_eps = abs_hard_epsilon_limit(a);
    if !(epsilon > 0.0 && epsilon < lower_eps) {
        return bad(format!("epsilon={epsilon} must lie in (0, {lower_eps})"));
    }
    let upper_eps = (b / 3.0).min(1.0);
    if epsilon >= upper_eps {
        return bad(format!(
            "epsilon={epsilon} must be below min(b/3, 1) = {upper_eps}"
        ));
    }
    // The lower bound is stated for delta < 1/4; delta = 1/4 is admitted as
    // the degenerate point where both thresholds vanish.
    if !(delta > 0.0 && delta <= 0.25) {
        return bad(format!("delta={delta} must lie in (0, 1/4]"));
    }
    let nf = n as f64;
    let log_lower = (1.0 / (4.0 * delta)).ln();
    let t1 = (1.0 / constants.abs_hard) * (1.0 - a) / (alpha.powi(2) * a.powi(4) * epsilon.powi(2))
        * log_lower;
    let t2 = (1.0 / constants.sign_hard) * (1.0 - a).powi(4) * (nf - 4.0)
        / (alpha.powi(2) * a.powi(2) * b.powi(2))
        * log_lower;
    let t1_prime = constants.upper_abs / (alpha.powi(2) * a.powi(4) * epsilon.powi(2))
        * (6.0 * nf * nf / delta).ln();
    let t2_prime = constants.upper_sign * nf / (alpha.powi(2) * a.powi(2) * b.powi(2))
        * (4.0 * nf * nf / delta).ln();
    Ok(Thresholds {
        t1,
        t2,
        t1_prime,
        t2_prime,
    })
}

/// Tail bound `k n^2 exp(-eps^2 alpha^2 t / c)` on `P(||C_hat - C|| >= eps)`.
pub fn sup_norm_tail_bound(
    constants: &BoundConstants,
    n: usize,
    alpha: f64,
    t: u64,
    epsilon: f64,
) -> f64 {
    constants.union_factor
        * (n * n) as f64
        * (-(epsilon * alpha).powi(2) * t as f64 / constants.pairwise_exponent).exp()
}

/// Tail bound on `P(|sum_{j != i} (C_hat_ij - C_ij)| >= eps)` for any `i`.
pub fn row_sum_tail_bound(
    constants: &BoundConstants,
    theta: &ReliabilityVector,
    alpha: f64,
    t: u64,
    epsilon: f64,
) -> f64 {
    let n = theta.n() as f64;
    let spread = b_functional(theta).powi(2).max(n);
    let t = t as f64;
    2.0 * (-(epsilon * alpha).powi(2) * t / (constants.row_sum_exponent * spread)).exp()
        + 2.0 * n * (-t * alpha * alpha / (constants.coverage_exponent * (n - 1.0))).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub sup_norm: BoundReport,
    pub row_sum: BoundReport,
}

fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn tail_report(kind: &str, hits: usize, trials: usize, bound: f64) -> BoundReport {
    let p = hits as f64 / trials as f64;
    let mut r = BoundReport::new(kind, p, bound);
    r.satisfied = p <= bound + 4.0 * binomial_se(p, trials);
    r.vacuous = bound >= 1.0;
    r
}

/// Monte Carlo check of the covariance concentration bounds.
///
/// Each trial draws `t` tasks from `theta` with its own ChaCha stream and
/// records whether `||C_hat - C|| >= epsilon` and, per worker, whether the row
/// sum deviation reaches `epsilon`.
pub fn concentration_tail_check(
    theta: &ReliabilityVector,
    alpha: f64,
    t: u64,
    epsilon: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<ConcentrationReport> {
    concentration_tail_check_with(
        &BoundConstants::default(),
        theta,
        alpha,
        t,
        epsilon,
        trials,
        seed,
    )
}

pub fn concentration_tail_check_with(
    constants: &BoundConstants,
    theta: &ReliabilityVector,
    alpha: f64,
    t: u64,
    epsilon: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<ConcentrationReport> {
    let n = theta.n();
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "need at least 2 workers, got {n}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let params = ModelParams::new(theta.clone(), alpha)?;
    let truth = population_covariance(theta);
    let outcomes: Vec<(bool, Vec<bool>)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.stream(trial);
            let mut state = TeState::new(n);
            for _ in 0..t {
                let s = sample_task(&params, &mut rng);
                state.update(&s.answers).expect("dimension fixed");
            }
            let c = state.empirical_covariance();
            let sup = c.sup_distance(&truth) >= epsilon;
            let rows = (0..n)
                .map(|i| (c.row_sum(i) - truth.row_sum(i)).abs() >= epsilon)
                .collect();
            (sup, rows)
        })
        .collect();
    let sup_hits = outcomes.iter().filter(|(s, _)| *s).count();
    let row_hits = (0..n)
        .map(|i| outcomes.iter().filter(|(_, r)| r[i]).count())
        .max()
        .unwrap_or(0);

    let tag = |mut r: BoundReport| {
        r.alpha = Some(alpha);
        r.epsilon = Some(epsilon);
        r.n = Some(n);
        r.t = Some(t);
        r
    };
    Ok(ConcentrationReport {
        sup_norm: tag(tail_report(
            "concentration-sup-norm",
            sup_hits,
            trials,
            sup_norm_tail_bound(constants, n, alpha, t, epsilon),
        )),
        row_sum: tag(tail_report(
            "concentration-row-sum",
            row_hits,
            trials,
            row_sum_tail_bound(constants, theta, alpha, t, epsilon),
        )),
    })
}

/// The two analytic Chernoff facts at `mu`: `D(2mu || mu) >= mu/2` and
/// `D(mu/2 || mu) >= mu/8`, reported with `lhs` the claimed lower value and
/// `rhs` the divergence.
pub fn chernoff_analytic(mu: f64) -> Result<[BoundReport; 2]> {
    if !(mu > 0.0 && mu <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "mu={mu} must lie in (0, 1/2]"
        )));
    }
    let mut up = BoundReport::new("chernoff-doubling", mu / 2.0, bernoulli_kl(2.0 * mu, mu));
    let mut down = BoundReport::new("chernoff-halving", mu / 8.0, bernoulli_kl(mu / 2.0, mu));
    up.a = Some(mu);
    down.a = Some(mu);
    Ok([up, down])
}

/// Monte Carlo tail of a Bernoulli(`mu`) sum against `exp(-t D(mu' || mu))`.
///
/// For `mu' >= mu` the upper tail `P(sum >= t mu')` is measured, otherwise the
/// lower tail `P(sum <= t mu')`.
pub fn verify_chernoff(
    mu: f64,
    mu_prime: f64,
    t: u64,
    trials: usize,
    seed: RngSeed,
) -> Result<BoundReport> {
    if !(mu > 0.0 && mu < 1.0) || !(mu_prime > 0.0 && mu_prime < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mu={mu} and mu'={mu_prime} must lie in (0, 1)"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let target = t as f64 * mu_prime;
    let upper = mu_prime >= mu;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = seed.stream(trial);
            let sum = (0..t).filter(|_| rng.gen::<f64>() < mu).count() as f64;
            if upper {
                sum >= target
            } else {
                sum <= target
            }
        })
        .count();
    let bound = (-(t as f64) * bernoulli_kl(mu_prime, mu)).exp();
    let mut r = tail_report("chernoff-tail", hits, trials, bound);
    r.a = Some(mu);
    r.b = Some(mu_prime);
    r.t = Some(t);
    Ok(r)
}
