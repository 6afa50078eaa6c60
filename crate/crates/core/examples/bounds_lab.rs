//! Exact divergences between hard instance pairs, the resulting sample
//! complexity thresholds, and a Monte Carlo look at covariance concentration.
//!
//! cargo run --release --example bounds_lab

use crowd_te::bounds::{
    chernoff_analytic, chi2_divergence, concentration_tail_check, hard_instance_pair,
    joint_distribution, kl_divergence, sample_complexity_thresholds, verify_hard_pair, HardKind,
};
use crowd_te::model::ModelParams;
use crowd_te::sim::RngSeed;

fn main() -> crowd_te::Result<()> {
    let (alpha, a, eps) = (0.25, 0.5, 0.05);
    let (theta, theta_prime) = hard_instance_pair(HardKind::AbsHard, 3, a, 0.0, eps)?;
    let p = joint_distribution(&ModelParams::new(theta.clone(), alpha)?)?;
    let q = joint_distribution(&ModelParams::new(theta_prime.clone(), alpha)?)?;
    println!(
        "theta  = {:?}\ntheta' = {:.4?}",
        theta.values(),
        theta_prime.values()
    );
    println!(
        "KL = {:.3e}  chi2 = {:.3e}",
        kl_divergence(&q, &p)?,
        chi2_divergence(&q, &p)?
    );

    for (kind, n, b) in [(HardKind::AbsHard, 3, 0.0), (HardKind::SignHard, 8, 0.5)] {
        let r = verify_hard_pair(kind, n, a, b, eps, alpha)?;
        println!(
            "{}: KL {:.3e} <= bound {:.3e}: {}",
            r.kind, r.lhs, r.rhs, r.satisfied
        );
    }

    let th = sample_complexity_thresholds(a, 1.0, alpha, eps, 0.1, 50)?;
    println!(
        "tasks needed for eps={eps}, delta=0.1: at least {:.3e}, TE suffices with {:.3e}",
        th.lower(),
        th.upper()
    );

    let theta =
        crowd_te::ReliabilityVector::new(vec![0.9; 5].into_iter().chain(vec![0.0; 5]).collect())?;
    for t in [500, 200_000] {
        let r = concentration_tail_check(&theta, alpha, t, 0.3, 500, RngSeed(3))?;
        println!(
            "t = {t}: P(sup deviation >= 0.3) = {:.3}, bound {:.3e}{}",
            r.sup_norm.lhs,
            r.sup_norm.rhs,
            if r.sup_norm.vacuous { " (vacuous)" } else { "" }
        );
    }

    for mu in [0.05, 0.3] {
        for r in chernoff_analytic(mu)? {
            println!(
                "{} at mu={mu}: {:.4} >= {:.4}? {}",
                r.kind, r.rhs, r.lhs, r.satisfied
            );
        }
    }
    Ok(())
}
