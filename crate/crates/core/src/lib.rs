//! Triangular estimation (TE) of crowd-worker reliabilities from binary labels.
//!
//! Workers answer binary tasks under the one-coin model: worker `i` answers a
//! task with probability `alpha` and, when answering, is correct with
//! probability `(1 + theta_i) / 2`. TE recovers `theta` from pairwise agreement
//! statistics alone. It is a streaming estimator with `O(n^2)` memory and no
//! iterative refinement:
//!
//! * `|theta_k|` comes from the triangle identity `theta_k^2 = C_ik C_jk / C_ij`
//!   applied to the most informative pair `(i, j)` not involving `k`;
//! * the global sign comes from the worker whose `theta_k^2 + sum_i C_ik` is
//!   largest in magnitude, and every other sign follows from its covariance with
//!   that worker.
//!
//! Around the estimator sit a seeded simulator ([`sim`]), label aggregation
//! rules ([`aggregation`]), a numerical laboratory for the information-theoretic
//! bounds ([`bounds`]), CSV ingestion of real label files ([`data`]), and the
//! benchmark/command layer behind the `crowd-te` binary ([`bench`]).
//!
//! ```
//! use crowd_te::model::ReliabilityVector;
//! use crowd_te::te::{estimate, inject_population};
//!
//! let theta = ReliabilityVector::new(vec![0.9, -0.4, 0.6, 0.3]).unwrap();
//! let est = estimate(&inject_population(&theta)).unwrap();
//! assert!(est.theta_hat.sup_distance(&theta).unwrap() < 1e-12);
//! ```

pub mod aggregation;
pub mod bench;
pub mod bounds;
pub mod data;
pub mod error;
pub mod model;
pub mod sim;
pub mod te;

pub use error::{Error, Result};
pub use model::{CovarianceMatrix, ModelParams, ReliabilityVector, TaskSample};
pub use te::{TeEstimate, TeState};
