//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so every criterion reports even when an earlier one fails.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use ipp_core::attacks::attack::{attack_mechanism, AttackConfig, ExactMedianWords};
use ipp_core::attacks::fpc::{FpcParams, Pirate};
use ipp_core::attacks::hard_dist::HardDistParams;
use ipp_core::audit::{audit_laplace_count, audit_solver};
use ipp_core::interior_point::{close_pairs, is_strong_interior, required_sample_size, RecPrefix};
use ipp_core::learning::{pac_learner, subsample_amplify, ThresholdLearner};
use ipp_core::mechanisms::{choosing_mechanism, ChoosingParams, QualityFunction, ValueFrequency};
use ipp_core::release::{tree_error_bound, tree_release, AccuracyParams, NoiseMode, Thresh, ThresholdReleaser};
use ipp_core::{Dataset, LabeledDataset, OrderedDomain, PrivacyBudget, RandomSource, StepCdf};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn uniform_rows(width: u32, n: usize, rng: &mut RandomSource) -> Vec<u64> {
    (0..n).map(|_| rng.random_range(0..1u64 << width)).collect()
}

/// Criteria 1 and 2 share their trials.
fn rec_prefix_trials() -> (Outcome, Outcome) {
    let domain = OrderedDomain::new(16).unwrap();
    let (beta, eps, delta) = (0.1, 1.0, 0.1);
    let solver = RecPrefix::new(beta, eps, delta).unwrap();
    let n = required_sample_size(&domain, beta, eps, delta).unwrap() as usize;
    let k = solver.level_params(&domain).k;
    let trials = 200;
    let (mut interior, mut strong, mut slowest) = (0, 0, 0.0f64);
    for t in 0..trials {
        let mut rng = RandomSource::for_trial(1, t);
        let data = Dataset::new(domain, uniform_rows(16, n, &mut rng)).unwrap();
        let start = Instant::now();
        let out = solver.run(&data, &mut rng).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let sorted = data.sorted_rows();
        interior += data.is_interior(&out.point) as u32;
        strong += is_strong_interior(&sorted, &out.point, k) as u32;
    }
    let rate = interior as f64 / trials as f64;
    let strong_rate = strong as f64 / trials as f64;
    (
        outcome(
            rate >= 0.9 && slowest < 120.0,
            format!("interior in {rate:.3} of {trials} trials at n = {n} (need >= 0.90); slowest trial {slowest:.2}s"),
        ),
        outcome(strong_rate >= 0.85, format!("strong interior (k = {k}) in {strong_rate:.3} of trials (need >= 0.85)")),
    )
}

fn choosing() -> Outcome {
    let params = ChoosingParams { beta: 0.1, eps: 1.0, delta: 0.1 };
    let level = params.score_one_level(1).ceil() as usize;
    // One value reaching the score-one level, plus many low-frequency values.
    let mut data: Vec<u64> = vec![0; level];
    for v in 1..=300u64 {
        data.extend(std::iter::repeat_n(v, 1 + (v % 5) as usize));
    }
    let m = data.len();
    let opt = level as f64;
    let loss = params.utility_loss(1, m);
    let trials = 10_000;
    let (mut positive, mut near_opt, mut zero_quality) = (0, 0, 0);
    for t in 0..trials {
        let mut rng = RandomSource::for_trial(3, t);
        if let Some(c) = choosing_mechanism(&data[..], &ValueFrequency, params, &mut rng).unwrap() {
            let q = ValueFrequency.score(&data[..], &c) as f64;
            positive += (q >= 1.0) as u32;
            near_opt += (q >= opt - loss) as u32;
            zero_quality += (q == 0.0) as u32;
        }
    }
    let (p1, p2) = (positive as f64 / trials as f64, near_opt as f64 / trials as f64);
    outcome(
        p1 >= 0.9 && p2 >= 0.9 && zero_quality == 0,
        format!(
            "quality >= 1 in {p1:.4}, quality >= OPT - {loss:.1} in {p2:.4} (need >= 0.90 each); \
             zero-quality outputs {zero_quality}"
        ),
    )
}

fn permutation_claim() -> Outcome {
    let n = 1000;
    let trials = 100_000u64;
    let mut details = Vec::new();
    let mut pass = true;
    for r in [10usize, 15, 20] {
        let hits = (0..trials)
            .filter(|&t| {
                let mut rng = RandomSource::for_trial(4 + r as u64, t);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                close_pairs(&perm, r as f64) >= r
            })
            .count();
        let p = 2f64.powi(-(r as i32));
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let est = hits as f64 / trials as f64;
        pass &= est <= p + 3.0 * sigma;
        details.push(format!("r={r}: {est:.2e} <= {:.2e}", p + 3.0 * sigma));
    }
    outcome(pass, details.join(", "))
}

fn thresh_release() -> Outcome {
    let domain = OrderedDomain::new(16).unwrap();
    let acc = AccuracyParams::new(0.1, 0.1).unwrap();
    let thresh = Thresh::new(acc, 1.0, 0.1).unwrap();
    let n = ThresholdReleaser::<u64>::required_rows(&thresh, &domain).unwrap() as usize;
    let trials = 100;
    let (mut accurate, mut exhausted, mut interior, mut blocks, mut tree) = (0, 0, 0, 0, 0);
    let start = Instant::now();
    for t in 0..trials {
        let mut rng = RandomSource::for_trial(5, t);
        let data = Dataset::new(domain, uniform_rows(16, n, &mut rng)).unwrap();
        let out = thresh.run(&data, &mut rng).unwrap();
        let err = out.cdf.max_abs_difference(&StepCdf::empirical(&data));
        accurate += (err <= acc.alpha) as u32;
        exhausted += out.report.exhausted as u32;
        interior += out.report.all_interior as u32;
        blocks += out.report.blocks_within_limit() as u32;
        tree += out.report.tree_within_limit() as u32;
    }
    let rate = |c: u32| c as f64 / trials as f64;
    let events = [exhausted, interior, blocks, tree];
    let pass = rate(accurate) >= 0.9 && events.iter().all(|&e| rate(e) >= 0.975);
    outcome(
        pass,
        format!(
            "n = {n}: error <= 0.1 in {:.2} (need >= 0.90); sub-events exhausted {:.2}, interior {:.2}, \
             block sizes {:.2}, tree {:.2} (need >= 0.975 each); {:.0}s",
            rate(accurate),
            rate(exhausted),
            rate(interior),
            rate(blocks),
            rate(tree),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn tree_mechanism() -> Outcome {
    let domain = OrderedDomain::new(6).unwrap();
    let (n, eps, beta, trials) = (10_000usize, 1.0, 0.1, 200);
    let bound = tree_error_bound(beta, eps, n as u64, 64);
    let mut within = 0;
    let mut exact_match = true;
    for t in 0..trials {
        let mut rng = RandomSource::for_trial(6, t);
        let data = Dataset::new(domain, uniform_rows(6, n, &mut rng)).unwrap();
        let exact = StepCdf::empirical(&data);
        let noisy = tree_release(&data, eps, NoiseMode::Laplace, &mut rng).unwrap();
        within += (noisy.max_abs_difference(&exact) <= bound) as u32;
        let plain = tree_release(&data, eps, NoiseMode::Disabled, &mut rng).unwrap();
        exact_match &= (0..64u64).all(|x| plain.value_at(&x) == exact.value_at(&x));
    }
    let rate = within as f64 / trials as f64;
    outcome(
        rate >= 0.9 && exact_match,
        format!("error <= {bound:.4} in {rate:.3} of trials (need >= 0.90); zero-noise exact: {exact_match}"),
    )
}

fn pac_learning() -> Outcome {
    let width = 16;
    let domain = OrderedDomain::new(width).unwrap();
    let (alpha, beta) = (0.1, 0.1);
    let learner = pac_learner(alpha, beta, 1.0, 0.1).unwrap();
    let n = ThresholdLearner::<u64>::sample_size(&learner, &domain).unwrap() as usize;
    let trials = 100;
    let (mut good, mut proper) = (0, true);
    for t in 0..trials {
        let mut rng = RandomSource::for_trial(7, t);
        let cutoff = rng.random_range(0..1u64 << width);
        let rows = uniform_rows(width, n, &mut rng).into_iter().map(|y| (y, y <= cutoff)).collect();
        let data = LabeledDataset::new(domain, rows).unwrap();
        let h = learner.learn(&data, &mut rng).unwrap();
        proper &= domain.contains(&h.cutoff);
        // Uniform source: the hypotheses disagree exactly on the values between the cutoffs.
        let err = h.cutoff.abs_diff(cutoff) as f64 / (1u64 << width) as f64;
        good += (err <= 2.0 * alpha) as u32;
    }
    let rate = good as f64 / trials as f64;
    outcome(
        rate >= 1.0 - 2.0 * beta && proper,
        format!("n = {n}: held-out error <= 0.2 in {rate:.2} of trials (need >= 0.80); proper: {proper}"),
    )
}

fn amplification() -> Outcome {
    let delta = 1e-6;
    let m = 1000;
    let b = subsample_amplify(1.0, delta, m, 9 * m).unwrap();
    let expected = PrivacyBudget { epsilon: 2.0 / 3.0, delta: (2.0f64 / 3.0).exp() * (4.0 / 9.0) * delta };
    outcome(b == expected, format!("got ({}, {:e}), expected ({}, {:e})", b.epsilon, b.delta, expected.epsilon, expected.delta))
}

fn fingerprinting() -> Outcome {
    let (users, xi, trials) = (3, 0.05, 10_000);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for (i, pirate) in Pirate::FEASIBLE.iter().enumerate() {
        let report = attack_mechanism(pirate, &AttackConfig { users, xi, trials, seed: 90 + i as u64 }).unwrap();
        failures += report.completeness_failures();
        worst = worst.max(report.non_member_rate());
    }
    let limit = xi + 3.0 * (xi * (1.0 - xi) / trials as f64).sqrt();
    outcome(
        failures == 0 && worst <= limit,
        format!("failed traces on feasible outputs: {failures}; worst non-member accusation rate {worst:.4} (limit {limit:.4})"),
    )
}

fn attack_demo() -> Outcome {
    let report = attack_mechanism(&ExactMedianWords, &AttackConfig { users: 3, xi: 0.05, trials: 10_000, seed: 10 }).unwrap();
    let rate = report.trace_rate();
    outcome(rate >= 0.99, format!("exact median traced in {rate:.4} of trials (need >= 0.99)"))
}

fn audits() -> Outcome {
    let laplace = audit_laplace_count(1.0, 1_000_000, 11).unwrap();
    let domain = OrderedDomain::new(4).unwrap();
    let solver = RecPrefix::new(0.1, 1.0, 0.1).unwrap().allow_undersized(true);
    let budget = PrivacyBudget { epsilon: 1.0, delta: 0.1 };
    let rec = audit_solver(&solver, domain, 200_000, budget, 12).unwrap();
    outcome(
        (0.8..=1.0).contains(&laplace.eps_hat) && rec.eps_hat <= budget.epsilon + 0.2,
        format!(
            "Laplace eps_hat {:.3} (need within [0.8, 1.0]); rec_prefix d=4 eps_hat {:.3} (need <= {:.1})",
            laplace.eps_hat,
            rec.eps_hat,
            budget.epsilon + 0.2
        ),
    )
}

fn depth_oracle(width: u32) -> u32 {
    if BigUint::from(1u32) << width <= BigUint::from(32u32) {
        1
    } else {
        // Common-prefix lengths 0..=width need the bit length of `width`.
        1 + depth_oracle(BigUint::from(width).bits() as u32)
    }
}

fn arithmetic() -> Outcome {
    let hard = HardDistParams::default().size(2).unwrap();
    let hard_oracle = BigUint::from(50u32).pow(2);
    let fpc = FpcParams::new(0.05).unwrap().size(2).unwrap();
    let fpc_oracle = BigUint::from(40u32).pow(1);
    let depths: Vec<(u32, u32, u32)> = [4u32, 16, 64, 1024]
        .iter()
        .map(|&d| (d, OrderedDomain::new(d).unwrap().recursion_depth(), depth_oracle(d)))
        .collect();
    let pass = hard == hard_oracle && hard == BigUint::from(2500u32) && fpc == fpc_oracle && depths.iter().all(|(_, a, b)| a == b);
    outcome(pass, format!("S(2) = {hard} (hard distribution), S(2) = {fpc} (fingerprinting code); depths {depths:?}"))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, name: &str, o: Outcome| {
        all &= o.pass;
        println!("{} criterion {id:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    let (c1, c2) = rec_prefix_trials();
    report(1, "rec_prefix utility", c1);
    report(2, "rec_prefix strong utility", c2);
    report(3, "choosing mechanism", choosing());
    report(4, "permutation claim", permutation_claim());
    report(5, "thresh release", thresh_release());
    report(6, "tree mechanism", tree_mechanism());
    report(7, "pac learner", pac_learning());
    report(8, "subsample amplification", amplification());
    report(9, "fingerprinting code", fingerprinting());
    report(10, "attack demonstration", attack_demo());
    report(11, "empirical audit", audits());
    report(12, "size arithmetic", arithmetic());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
