//! Triangular estimation in streaming form.
//!
//! [`TeState`] keeps two exact integer counters per worker pair,
//!
//! ```text
//! M_ij = sum_s X_i(s) X_j(s)        N_ij = sum_s |X_i(s) X_j(s)|
//! ```
//!
//! and the empirical covariance `C_ij = M_ij / max(N_ij, 1)` is formed only
//! when an estimate is requested. Because the counters are integers, streaming,
//! batch construction and sharded ingestion followed by [`TeState::merge`] all
//! give bit-identical states.
//!
//! Estimation runs in two stages over any [`CovarianceSource`]:
//!
//! 1. [`estimate_abs`]: for each worker `k`, take the pair `(i, j)` not
//!    involving `k` with the largest `|C_ij|` and set
//!    `|theta_k| = sqrt(|C_ik C_jk / C_ij|)`, clipped to `[0, 1]`.
//! 2. [`estimate_sign`]: pick `k*` maximising `|theta_k^2 + sum_{i != k} C_ik|`;
//!    its sign is the sign of that quantity and every other worker takes
//!    `sign(theta_k* C_kk*)`, with `sign(0) = +1`.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{population_covariance, CovarianceMatrix, ReliabilityVector};

/// Streaming sufficient statistics for TE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeState {
    n: usize,
    t: u64,
    // Packed strict upper triangle, row-major.
    m: Vec<i64>,
    nn: Vec<u64>,
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl TeState {
    pub fn new(n: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        Self {
            n,
            t: 0,
            m: vec![0; pairs],
            nn: vec![0; pairs],
        }
    }

    pub fn from_answers<'a, I>(n: usize, stream: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [i8]>,
    {
        let mut state = Self::new(n);
        for x in stream {
            state.update(x)?;
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of tasks ingested.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// `M_ij`; zero on the diagonal.
    pub fn m(&self, i: usize, j: usize) -> i64 {
        match i.cmp(&j) {
            Ordering::Equal => 0,
            Ordering::Less => self.m[pair_index(self.n, i, j)],
            Ordering::Greater => self.m[pair_index(self.n, j, i)],
        }
    }

    /// `N_ij`; zero on the diagonal.
    pub fn n_pair(&self, i: usize, j: usize) -> u64 {
        match i.cmp(&j) {
            Ordering::Equal => 0,
            Ordering::Less => self.nn[pair_index(self.n, i, j)],
            Ordering::Greater => self.nn[pair_index(self.n, j, i)],
        }
    }

    /// Ingests one task. Only workers that answered touch the counters, so the
    /// cost is quadratic in the number of answers, `O(n^2)` at worst.
    pub fn update(&mut self, x: &[i8]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let answered: Vec<usize> = (0..self.n).filter(|&i| x[i] != 0).collect();
        for (a, &i) in answered.iter().enumerate() {
            let row = i * (2 * self.n - i - 1) / 2;
            for &j in &answered[a + 1..] {
                let idx = row + (j - i - 1);
                self.m[idx] += i64::from(x[i] * x[j]);
                self.nn[idx] += 1;
            }
        }
        self.t += 1;
        Ok(())
    }

    /// Entrywise sum of two states over the same workers.
    pub fn merge(&self, other: &TeState) -> Result<TeState> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &TeState) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        for (a, b) in self.m.iter_mut().zip(&other.m) {
            *a += b;
        }
        for (a, b) in self.nn.iter_mut().zip(&other.nn) {
            *a += b;
        }
        self.t += other.t;
        Ok(())
    }

    pub fn empirical_covariance(&self) -> CovarianceMatrix {
        CovarianceMatrix::from_pairs(self.n, |i, j| {
            let idx = pair_index(self.n, i, j);
            self.m[idx] as f64 / self.nn[idx].max(1) as f64
        })
    }

    pub fn estimate(&self) -> Result<TeEstimate> {
        estimate(self)
    }

    /// Writes the state as versioned CSV: a header, `n` and `t`, then one
    /// `i,j,m,n` row per pair with at least one co-answered task.
    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SNAPSHOT_MAGIC}")?;
        writeln!(w, "n,{}", self.n)?;
        writeln!(w, "t,{}", self.t)?;
        writeln!(w, "i,j,m,n")?;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let idx = pair_index(self.n, i, j);
                if self.nn[idx] > 0 {
                    writeln!(w, "{i},{j},{},{}", self.m[idx], self.nn[idx])?;
                }
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<TeState> {
        let mut lines = r.lines().enumerate().map(|(no, line)| {
            line.map(|l| (no + 1, l))
                .map_err(|e| Error::Snapshot(format!("line {}: {e}", no + 1)))
        });
        let mut header = |what: &str| -> Result<(usize, String)> {
            lines
                .next()
                .unwrap_or_else(|| Err(Error::Snapshot(format!("truncated before {what}"))))
        };
        let (_, magic) = header("header")?;
        if magic.trim() != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot(format!("unrecognised header {magic:?}")));
        }
        let n: usize = parse_keyed(header("n")?, "n")?;
        let t: u64 = parse_keyed(header("t")?, "t")?;
        let (no, cols) = header("column header")?;
        if cols.trim() != "i,j,m,n" {
            return Err(Error::Snapshot(format!("line {no}: expected i,j,m,n")));
        }
        let mut state = TeState::new(n);
        state.t = t;
        for row in lines {
            let (no, line) = row?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Snapshot(format!("line {no}: malformed row {line:?}"));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let i: usize = f[0].parse().map_err(|_| bad())?;
            let j: usize = f[1].parse().map_err(|_| bad())?;
            let m: i64 = f[2].parse().map_err(|_| bad())?;
            let c: u64 = f[3].parse().map_err(|_| bad())?;
            if i >= j || j >= n || m.unsigned_abs() > c || c > t {
                return Err(bad());
            }
            let idx = pair_index(n, i, j);
            state.m[idx] = m;
            state.nn[idx] = c;
        }
        Ok(state)
    }
}

const SNAPSHOT_MAGIC: &str = "# crowd-te state v1";

fn parse_keyed<T: std::str::FromStr>((no, line): (usize, String), key: &str) -> Result<T> {
    line.trim()
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(','))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Snapshot(format!("line {no}: expected {key},<value>")))
}

/// Anything TE can read pairwise covariances from.
pub trait CovarianceSource {
    fn n(&self) -> usize;

    fn covariance(&self) -> CovarianceMatrix;

    /// Exact test for `C_ij != 0`, used by the `|C_ij| > 0` guard.
    fn is_nonzero(&self, i: usize, j: usize) -> bool;
}

impl CovarianceSource for TeState {
    fn n(&self) -> usize {
        self.n
    }

    fn covariance(&self) -> CovarianceMatrix {
        self.empirical_covariance()
    }

    // M_ij / max(N_ij, 1) is nonzero exactly when M_ij is.
    fn is_nonzero(&self, i: usize, j: usize) -> bool {
        self.m(i, j) != 0
    }
}

impl CovarianceSource for CovarianceMatrix {
    fn n(&self) -> usize {
        CovarianceMatrix::n(self)
    }

    fn covariance(&self) -> CovarianceMatrix {
        self.clone()
    }

    fn is_nonzero(&self, i: usize, j: usize) -> bool {
        self.get(i, j) != 0.0
    }
}

/// The population covariance `C_ij = theta_i theta_j` as an estimation source,
/// so TE can be run against exact rather than sampled statistics.
pub fn inject_population(theta: &ReliabilityVector) -> CovarianceMatrix {
    population_covariance(theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeEstimate {
    pub theta_hat: ReliabilityVector,
    pub abs_theta: Vec<f64>,
    pub signs: Vec<i8>,
    pub k_star: usize,
    /// The pair `(i_k, j_k)`, `i_k < j_k`, used for each worker's magnitude.
    pub pairs: Vec<(usize, usize)>,
}

#[inline]
fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidDimension(format!(
            "triangular estimation needs at least 3 workers, got {n}"
        )));
    }
    Ok(())
}

/// The pair `{i, j}`, both different from `k`, maximising `|C_ij|`; ties go to
/// the lexicographically smallest `(i, j)` with `i < j`.
pub fn most_informative_pair(c: &CovarianceMatrix, k: usize) -> Result<(usize, usize)> {
    let n = c.n();
    check_dimension(n)?;
    let mut best: Option<((usize, usize), f64)> = None;
    for i in (0..n).filter(|&i| i != k) {
        for j in (i + 1..n).filter(|&j| j != k) {
            let v = c.get(i, j).abs();
            if best.is_none_or(|(_, b)| v > b) {
                best = Some(((i, j), v));
            }
        }
    }
    Ok(best.expect("n >= 3 leaves at least one pair").0)
}

/// All pairs `i < j` ordered by decreasing `|C_ij|`, then lexicographically.
fn sorted_pairs(c: &CovarianceMatrix) -> Vec<(usize, usize)> {
    let n = c.n();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&(a, b), &(p, q)| {
        c.get(p, q)
            .abs()
            .total_cmp(&c.get(a, b).abs())
            .then((a, b).cmp(&(p, q)))
    });
    pairs
}

/// Per-worker magnitudes and the pair `(i_k, j_k)` each was computed from.
pub type Magnitudes = (Vec<f64>, Vec<(usize, usize)>);

fn abs_from(source: &impl CovarianceSource, c: &CovarianceMatrix) -> Result<Magnitudes> {
    let n = c.n();
    check_dimension(n)?;
    let order = sorted_pairs(c);
    let mut abs = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        // At most n - 1 pairs contain k, so this scan is O(n).
        let (i, j) = *order
            .iter()
            .find(|&&(i, j)| i != k && j != k)
            .expect("n >= 3 leaves at least one pair");
        let value = if source.is_nonzero(i, j) {
            (c.get(i, k) * c.get(j, k) / c.get(i, j))
                .abs()
                .sqrt()
                .min(1.0)
        } else {
            0.0
        };
        abs.push(value);
        pairs.push((i, j));
    }
    Ok((abs, pairs))
}

fn signs_from(c: &CovarianceMatrix, abs: &[f64]) -> (Vec<i8>, usize) {
    let n = c.n();
    let score = |k: usize| abs[k] * abs[k] + c.row_sum(k);
    let mut k_star = 0;
    let mut best = score(0);
    for k in 1..n {
        let v = score(k);
        if v.abs() > best.abs() {
            k_star = k;
            best = v;
        }
    }
    let star_sign = sign(best);
    let star_value = f64::from(star_sign) * abs[k_star];
    let signs = (0..n)
        .map(|k| {
            if k == k_star {
                star_sign
            } else {
                sign(star_value * c.get(k, k_star))
            }
        })
        .collect();
    (signs, k_star)
}

/// First stage: magnitudes and the pair each one was computed from.
pub fn estimate_abs(source: &impl CovarianceSource) -> Result<Magnitudes> {
    abs_from(source, &source.covariance())
}

/// Second stage: signs given magnitudes from the same source.
pub fn estimate_sign(
    source: &impl CovarianceSource,
    abs_theta: &[f64],
) -> Result<(Vec<i8>, usize)> {
    check_dimension(source.n())?;
    if abs_theta.len() != source.n() {
        return Err(Error::DimensionMismatch {
            expected: source.n(),
            actual: abs_theta.len(),
        });
    }
    Ok(signs_from(&source.covariance(), abs_theta))
}

pub fn estimate(source: &impl CovarianceSource) -> Result<TeEstimate> {
    let c = source.covariance();
    let (abs_theta, pairs) = abs_from(source, &c)?;
    let (signs, k_star) = signs_from(&c, &abs_theta);
    let theta_hat = abs_theta
        .iter()
        .zip(&signs)
        .map(|(&a, &s)| f64::from(s) * a)
        .collect();
    Ok(TeEstimate {
        theta_hat: ReliabilityVector::new(theta_hat)?,
        abs_theta,
        signs,
        k_star,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_run, InstanceSpec, RngSeed};
    use proptest::prelude::*;

    fn rv(v: &[f64]) -> ReliabilityVector {
        ReliabilityVector::new(v.to_vec()).unwrap()
    }

    /// Recomputes M and N from the stored stream with a plain double loop.
    fn batch(n: usize, stream: &[Vec<i8>]) -> (Vec<Vec<i64>>, Vec<Vec<u64>>) {
        let mut m = vec![vec![0i64; n]; n];
        let mut c = vec![vec![0u64; n]; n];
        for x in stream {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[i][j] += i64::from(x[i]) * i64::from(x[j]);
                        c[i][j] += u64::from((x[i] * x[j]).unsigned_abs());
                    }
                }
            }
        }
        (m, c)
    }

    fn answers() -> impl Strategy<Value = (usize, Vec<Vec<i8>>)> {
        (3usize..9).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(-1i8..=1, n), 0..60),
            )
        })
    }

    #[test]
    fn update_single_task() {
        let mut s = TeState::new(3);
        s.update(&[1, 1, 0]).unwrap();
        assert_eq!((s.m(0, 1), s.n_pair(0, 1)), (1, 1));
        assert_eq!((s.m(1, 0), s.n_pair(1, 0)), (1, 1));
        assert_eq!((s.m(0, 2), s.n_pair(0, 2)), (0, 0));
        assert_eq!((s.m(1, 2), s.n_pair(1, 2)), (0, 0));
        assert_eq!(s.t(), 1);

        let mut z = TeState::new(4);
        z.update(&[0, 0, 0, 0]).unwrap();
        assert_eq!(z.t(), 1);
        assert_eq!(z.empirical_covariance(), CovarianceMatrix::zeros(4));

        assert!(matches!(
            s.update(&[1, 1]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn empirical_covariance_edges() {
        assert_eq!(
            TeState::new(5).empirical_covariance(),
            CovarianceMatrix::zeros(5)
        );
        let mut s = TeState::new(3);
        for x in [[1, 1, -1], [-1, -1, 0], [1, 1, 1], [0, 1, 1]] {
            s.update(&x).unwrap();
        }
        assert_eq!(s.empirical_covariance().get(0, 1), 1.0);
        assert_eq!(s.empirical_covariance().get(1, 2), 1.0 / 3.0);
    }

    #[test]
    fn empirical_covariance_converges() {
        let spec = InstanceSpec {
            t: 10_000,
            ..InstanceSpec::half_informative(0.9)
        };
        let run = generate_run(&spec, RngSeed(11)).unwrap();
        let state = TeState::from_answers(spec.n, run.samples.iter().map(|s| s.answers.as_slice()))
            .unwrap();
        let informative: Vec<usize> = (0..spec.n).filter(|&i| run.theta[i] != 0.0).collect();
        let c = state.empirical_covariance();
        let v = c.get(informative[0], informative[1]);
        assert!((v - 0.81).abs() < 0.02, "C={v}");
    }

    #[test]
    fn most_informative_pair_examples() {
        let mut c = CovarianceMatrix::zeros(6);
        c.set(1, 4, -0.7);
        c.set(0, 1, 0.9);
        c.set(2, 3, 0.3);
        assert_eq!(most_informative_pair(&c, 0).unwrap(), (1, 4));
        assert_eq!(most_informative_pair(&c, 2).unwrap(), (0, 1));
        assert_eq!(
            most_informative_pair(&CovarianceMatrix::zeros(5), 0).unwrap(),
            (1, 2)
        );
        assert_eq!(
            most_informative_pair(&CovarianceMatrix::zeros(5), 1).unwrap(),
            (0, 2)
        );

        let mut theta = vec![0.0; 6];
        theta[..3].copy_from_slice(&[1.0, 0.5, 0.5]);
        let c = population_covariance(&rv(&theta));
        assert_eq!(most_informative_pair(&c, 0).unwrap(), (1, 2));
        assert_eq!(most_informative_pair(&c, 1).unwrap(), (0, 2));

        assert!(most_informative_pair(&CovarianceMatrix::zeros(2), 0).is_err());
    }

    #[test]
    fn estimate_abs_examples() {
        let (abs, _) = estimate_abs(&inject_population(&rv(&[1.0, 0.5, 0.5]))).unwrap();
        assert_eq!(abs, vec![1.0, 0.5, 0.5]);

        let (abs, _) = estimate_abs(&TeState::new(4)).unwrap();
        assert_eq!(abs, vec![0.0; 4]);

        let mut c = CovarianceMatrix::zeros(3);
        c.set(0, 1, 0.9);
        c.set(0, 2, 0.9);
        c.set(1, 2, 0.5);
        let raw = (0.9f64 * 0.9 / 0.5).sqrt();
        assert!(raw > 1.27 && raw < 1.28);
        let (abs, pairs) = estimate_abs(&c).unwrap();
        assert_eq!(abs[0], 1.0);
        assert_eq!(pairs[0], (1, 2));
    }

    #[test]
    fn estimate_sign_examples() {
        let c = inject_population(&rv(&[0.5; 4]));
        let (abs, _) = estimate_abs(&c).unwrap();
        assert_eq!(estimate_sign(&c, &abs).unwrap().0, vec![1; 4]);

        let c = inject_population(&rv(&[0.9, -0.9, 0.9, -0.9, 0.5, 0.5]));
        let (abs, _) = estimate_abs(&c).unwrap();
        let (signs, k_star) = estimate_sign(&c, &abs).unwrap();
        assert_eq!(signs, vec![1, -1, 1, -1, 1, 1]);
        // v_k = theta_k * B(theta) with B = 1; the first of the |0.9| ties wins.
        assert_eq!(k_star, 0);

        let zero = TeState::new(5);
        let (signs, k_star) = estimate_sign(&zero, &[0.0; 5]).unwrap();
        assert_eq!((signs, k_star), (vec![1; 5], 0));

        assert!(estimate_sign(&zero, &[0.0; 4]).is_err());
    }

    #[test]
    fn inject_population_examples() {
        let theta = rv(&[1.0, 0.5, 0.5]);
        assert_eq!(
            estimate(&inject_population(&theta)).unwrap().theta_hat,
            theta
        );

        let neg = rv(&[-0.8, 0.3, -0.6, -0.2]);
        let est = estimate(&inject_population(&neg)).unwrap();
        assert!(est.theta_hat.sup_distance(&neg.negated()).unwrap() < 1e-12);

        let est = estimate(&inject_population(&rv(&[0.7, 0.7, 0.7, 0.0, 0.0]))).unwrap();
        assert_eq!(&est.abs_theta[3..], &[0.0, 0.0]);
        assert!((est.abs_theta[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn estimate_rejects_small_n() {
        assert!(matches!(
            estimate(&TeState::new(2)),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let mut s = TeState::new(4);
        s.update(&[1, -1, 0, 1]).unwrap();
        assert_eq!(s.merge(&TeState::new(4)).unwrap(), s);
        assert!(s.merge(&TeState::new(3)).is_err());
    }

    #[test]
    fn halves_of_long_stream_merge_exactly() {
        let spec = InstanceSpec::half_informative(0.6);
        let run = generate_run(&spec, RngSeed(5)).unwrap();
        let xs: Vec<&[i8]> = run.samples.iter().map(|s| s.answers.as_slice()).collect();
        let full = TeState::from_answers(spec.n, xs.iter().copied()).unwrap();
        let a = TeState::from_answers(spec.n, xs[..500].iter().copied()).unwrap();
        let b = TeState::from_answers(spec.n, xs[500..].iter().copied()).unwrap();
        assert_eq!(a.merge(&b).unwrap(), full);
        assert_eq!(
            a.merge(&b).unwrap().estimate().unwrap(),
            full.estimate().unwrap()
        );
    }

    #[test]
    fn snapshot_round_trip_and_rejects_garbage() {
        let spec = InstanceSpec {
            t: 300,
            n: 12,
            ..InstanceSpec::half_informative(0.7)
        };
        let run = generate_run(&spec, RngSeed(8)).unwrap();
        let s = TeState::from_answers(spec.n, run.samples.iter().map(|x| x.answers.as_slice()))
            .unwrap();
        let mut buf = Vec::new();
        s.save(&mut buf).unwrap();
        assert_eq!(TeState::load(buf.as_slice()).unwrap(), s);

        assert!(TeState::load("nope\n".as_bytes()).is_err());
        let bad = "# crowd-te state v1\nn,3\nt,1\ni,j,m,n\n0,1,2,1\n";
        assert!(TeState::load(bad.as_bytes()).is_err());
        let truncated = "# crowd-te state v1\nn,3\n";
        assert!(TeState::load(truncated.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn streamed_equals_batch((n, stream) in answers()) {
            let s = TeState::from_answers(n, stream.iter().map(Vec::as_slice)).unwrap();
            let (m, c) = batch(n, &stream);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        prop_assert_eq!(s.m(i, j), m[i][j]);
                        prop_assert_eq!(s.n_pair(i, j), c[i][j]);
                        prop_assert!(s.m(i, j).unsigned_abs() <= s.n_pair(i, j));
                        prop_assert!(s.n_pair(i, j) <= s.t());
                    }
                }
            }
            prop_assert_eq!(s.t(), stream.len() as u64);
        }

        #[test]
        fn merge_is_commutative_and_associative(
            (n, stream) in answers(),
            cut1 in 0usize..60,
            cut2 in 0usize..60,
        ) {
            let len = stream.len();
            let (c1, c2) = (cut1.min(len), cut2.min(len));
            let (lo, hi) = (c1.min(c2), c1.max(c2));
            let part = |r: std::ops::Range<usize>| {
                TeState::from_answers(n, stream[r].iter().map(Vec::as_slice)).unwrap()
            };
            let (a, b, c) = (part(0..lo), part(lo..hi), part(hi..len));
            let whole = part(0..len);
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(
                a.merge(&b).unwrap().merge(&c).unwrap(),
                a.merge(&b.merge(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(c.merge(&a).unwrap().merge(&b).unwrap(), whole);
        }

        #[test]
        fn estimates_stay_in_range((n, stream) in answers()) {
            let s = TeState::from_answers(n, stream.iter().map(Vec::as_slice)).unwrap();
            let est = s.estimate().unwrap();
            for k in 0..n {
                prop_assert!((-1.0..=1.0).contains(&est.theta_hat[k]));
                prop_assert_eq!(est.theta_hat[k], f64::from(est.signs[k]) * est.abs_theta[k]);
                let (i, j) = est.pairs[k];
                prop_assert!(i < j && i != k && j != k);
            }
        }

        #[test]
        fn sorted_scan_agrees_with_linear_scan(
            v in prop::collection::vec(
                prop_oneof![Just(0.0f64), Just(0.5), Just(-0.5), -1.0f64..=1.0], 3..36),
            n in 3usize..9,
        ) {
            let c = CovarianceMatrix::from_pairs(n, |i, j| v[(i * n + j) % v.len()]);
            let (_, pairs) = estimate_abs(&c).unwrap();
            for (k, pair) in pairs.iter().enumerate() {
                prop_assert_eq!(*pair, most_informative_pair(&c, k).unwrap());
            }
        }

        #[test]
        fn exact_recovery_on_population(
            v in prop::collection::vec(
                prop_oneof![-0.95f64..-0.05, 0.05f64..0.95], 3..12),
        ) {
            let theta = rv(&v);
            prop_assume!(crate::model::b_functional(&theta) > 0.0);
            let est = estimate(&inject_population(&theta)).unwrap();
            prop_assert!(est.theta_hat.sup_distance(&theta).unwrap() <= 1e-10);
        }

        #[test]
        fn permutation_equivariance(
            v in prop::collection::vec(-1.0f64..=1.0, 3..10),
            seed in 0u64..1000,
        ) {
            use crate::model::TaskSample;
            use rand::seq::SliceRandom;
            let n = v.len();
            let spec = InstanceSpec::explicit(rv(&v), 400, 0.6);
            let run = generate_run(&spec, RngSeed(seed)).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut RngSeed(seed).derive(1).rng());
            // Permuted worker p answers as original worker perm[p].
            let permuted: Vec<TaskSample> = run
                .samples
                .iter()
                .map(|s| TaskSample {
                    answers: perm.iter().map(|&p| s.answers[p]).collect(),
                    ground_truth: s.ground_truth,
                })
                .collect();
            let s = TeState::from_answers(n, run.samples.iter().map(|x| x.answers.as_slice())).unwrap();
            let sp = TeState::from_answers(n, permuted.iter().map(|x| x.answers.as_slice())).unwrap();
            let c = s.empirical_covariance();
            let cp = sp.empirical_covariance();
            for p in 0..n {
                for q in 0..n {
                    if p != q {
                        prop_assert_eq!(cp.get(p, q), c.get(perm[p], perm[q]));
                    }
                }
            }
            // Pair choice is equivariant only when the maximum is unique, since
            // ties resolve by index.
            let mut mags: Vec<f64> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| c.get(i, j).abs())
                .collect();
            mags.sort_by(|a, b| b.total_cmp(a));
            mags.dedup();
            if mags.len() == n * (n - 1) / 2 {
                let est = s.estimate().unwrap();
                let est_p = sp.estimate().unwrap();
                // Row sums are accumulated in a different order after permuting,
                // so k* can only be compared when it maps across.
                let same_star = perm[est_p.k_star] == est.k_star;
                for (p, &q) in perm.iter().enumerate() {
                    prop_assert_eq!(est_p.abs_theta[p], est.abs_theta[q]);
                    if same_star {
                        prop_assert_eq!(est_p.theta_hat[p], est.theta_hat[q]);
                    }
                }
            }
        }
    }
}
