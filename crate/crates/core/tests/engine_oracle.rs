mod common;

use common::{censoring_at_subjects, dense_psh, random_dataset, rel_err, rng};
use fgscan_core::engine::{naive_denominators, Moment};
use fgscan_core::{
    fit_censoring_km, naive_likelihood_suite, scan_denominators, Cause, CompetingRisksDataset,
    Error, Evaluator, PshProblem, ScanEvaluator,
};
use proptest::prelude::*;

fn problem(times: &[f64], causes: &[Cause], rows: &[Vec<f64>]) -> PshProblem {
    let d = CompetingRisksDataset::from_parts(times, causes, rows).unwrap();
    PshProblem::from_dataset(&d).unwrap()
}

fn scan_report(prob: &PshProblem, beta: &[f64]) -> fgscan_core::LikelihoodReport {
    let mut ev = ScanEvaluator::new(prob);
    ev.set_beta(beta).unwrap();
    ev.report().unwrap()
}

#[test]
fn toy_denominators_at_zero() {
    let prob = problem(
        &[3.0, 2.0, 1.0],
        &[Cause::Cause1, Cause::Cause2, Cause::Cause1],
        &[vec![0.0], vec![0.0], vec![0.0]],
    );
    let den = scan_denominators(&prob, &[0.0; 3], Moment::Zeroth).unwrap();
    let events = prob.event_records();
    let by_record: Vec<(usize, f64)> = events.into_iter().zip(den).collect();
    // the competing failure at t=2 precedes t=3, so it stays in that risk set
    assert!(by_record.contains(&(0, 2.0)));
    assert!(by_record.contains(&(2, 3.0)));
}

#[test]
fn rank_count_loglik() {
    let prob = problem(
        &[1.0, 2.0, 3.0],
        &[Cause::Cause1; 3],
        &[vec![0.3], vec![-1.0], vec![2.0]],
    );
    assert!((prob.loglik(&[0.0]).unwrap() + 6f64.ln()).abs() < 1e-15);
}

#[test]
fn single_event_subject() {
    let prob = problem(&[2.5], &[Cause::Cause1], &[vec![1.7]]);
    for b in [-3.0, 0.0, 0.4, 12.0] {
        assert!(prob.loglik(&[b]).unwrap().abs() < 1e-14);
    }
}

#[test]
fn competing_subject_stays_at_risk() {
    let prob = problem(&[1.0, 2.0], &[Cause::Cause1, Cause::Cause2], &[vec![0.0], vec![0.0]]);
    let den = scan_denominators(&prob, &[0.0, 0.0], Moment::Zeroth).unwrap();
    assert_eq!(den, vec![2.0]);
    let den = scan_denominators(&prob, &[0.0, 1.0], Moment::Zeroth).unwrap();
    assert!((den[0] - (1.0 + 1f64.exp())).abs() < 1e-14);
}

#[test]
fn early_competing_failure_is_weighted() {
    // censoring at 1.5 drops G to 2/3 after it; the competing failure at 1
    // enters the risk set of the event at 3 with weight G(3)/G(1)
    let prob = problem(
        &[1.0, 1.5, 3.0, 4.0],
        &[Cause::Cause2, Cause::Censored, Cause::Cause1, Cause::Cause1],
        &vec![vec![0.0]; 4],
    );
    let den = scan_denominators(&prob, &[0.0; 4], Moment::Zeroth).unwrap();
    let events = prob.event_records();
    let at3 = den[events.iter().position(|&r| r == 2).unwrap()];
    assert!((at3 - (2.0 + 2.0 / 3.0)).abs() < 1e-14);
}

#[test]
fn zero_column_has_zero_derivatives() {
    let mut r = rng(4);
    let d = random_dataset(&mut r, 60, 2, 0.3, None);
    let rows: Vec<Vec<f64>> = d.records().iter().map(|s| vec![s.covariates[0], 0.0]).collect();
    let times: Vec<f64> = d.times().collect();
    let causes: Vec<Cause> = d.causes().collect();
    let prob = problem(&times, &causes, &rows);
    let rep = scan_report(&prob, &[0.0, 0.0]);
    assert_eq!(rep.score[1], 0.0);
    assert_eq!(rep.neg_hess_diag[1], 0.0);
}

#[test]
fn all_censored_has_no_terms() {
    let prob = problem(&[1.0, 2.0], &[Cause::Censored; 2], &[vec![1.0], vec![2.0]]);
    assert_eq!(prob.n_events(), 0);
    let rep = scan_report(&prob, &[0.7]);
    assert_eq!(rep.loglik, 0.0);
    assert_eq!(rep.score, vec![0.0]);
}

#[test]
fn plain_cox_reduction() {
    let mut r = rng(11);
    let d = random_dataset(&mut r, 150, 3, 0.0, Some(1));
    let causes = vec![Cause::Cause1; d.n()];
    let times: Vec<f64> = d.times().collect();
    let rows: Vec<Vec<f64>> = d.records().iter().map(|s| s.covariates.clone()).collect();
    let prob = problem(&times, &causes, &rows);
    let beta = [0.3, -0.5, 0.8];
    let eta: Vec<f64> = rows.iter().map(|z| z.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
    // Breslow partial likelihood with the risk set {t_k >= t_i}
    let mut ll = 0.0;
    let mut score = [0.0; 3];
    for i in 0..times.len() {
        let mut s0 = 0.0;
        let mut s1 = [0.0; 3];
        for k in 0..times.len() {
            if times[k] >= times[i] {
                s0 += eta[k].exp();
                for j in 0..3 {
                    s1[j] += eta[k].exp() * rows[k][j];
                }
            }
        }
        ll += eta[i] - s0.ln();
        for j in 0..3 {
            score[j] += rows[i][j] - s1[j] / s0;
        }
    }
    let rep = scan_report(&prob, &beta);
    assert!(rel_err(rep.loglik, ll) < 1e-12, "{} vs {ll}", rep.loglik);
    for j in 0..3 {
        assert!(rel_err(rep.score[j], score[j]) < 1e-12);
    }
}

#[test]
fn no_censoring_means_unit_weights() {
    let mut r = rng(5);
    let d = random_dataset(&mut r, 80, 1, 0.0, None);
    let g = fit_censoring_km(&d);
    assert!(g.per_subject().iter().all(|&v| v == 1.0));
    assert!(g.jump_times().is_empty());
}

#[test]
fn matches_dense_oracle_with_ties() {
    let mut r = rng(21);
    for seed in 0..8 {
        let d = random_dataset(&mut r, 120, 3, 0.35, Some(1));
        let prob = PshProblem::from_dataset(&d).unwrap();
        let g = censoring_at_subjects(&d);
        let km = fit_censoring_km(&d);
        for (a, b) in km.per_subject().iter().zip(&g) {
            assert!((a - b).abs() < 1e-14, "seed {seed}: G {a} vs {b}");
        }
        let beta = [0.4, -0.2, 0.9];
        let dense = dense_psh(&d, &g, &beta);
        let rep = scan_report(&prob, &beta);
        assert!(rel_err(rep.loglik, dense.loglik) < 1e-10);
        for j in 0..3 {
            assert!(rel_err(rep.score[j], dense.grad[j]) < 1e-10);
            assert!(rel_err(rep.neg_hess_diag[j], dense.info[j * 3 + j]) < 1e-10);
        }
    }
}

#[test]
fn central_differences_match_score() {
    let mut r = rng(8);
    let d = random_dataset(&mut r, 100, 5, 0.3, None);
    let prob = PshProblem::from_dataset(&d).unwrap();
    for trial in 0..10 {
        let beta: Vec<f64> = (0..5).map(|j| ((trial * 5 + j) as f64 * 0.37).sin() * 0.8).collect();
        let rep = scan_report(&prob, &beta);
        for j in 0..5 {
            let h = 1e-5 * (1.0 + beta[j].abs());
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (prob.loglik(&up).unwrap() - prob.loglik(&dn).unwrap()) / (2.0 * h);
            let rel = (fd - rep.score[j]).abs() / rep.score[j].abs().max(1.0);
            assert!(rel < 1e-6, "trial {trial} coord {j}: fd {fd} vs {}", rep.score[j]);
        }
    }
}

#[test]
fn extreme_coefficients() {
    let prob = problem(
        &[1.0, 2.0, 3.0],
        &[Cause::Cause1, Cause::Cause1, Cause::Censored],
        &[vec![1.0], vec![-1.0], vec![0.5]],
    );
    let ll = prob.loglik(&[700.0]).unwrap();
    assert!(ll.is_finite());
    match prob.loglik(&[f64::INFINITY]) {
        Err(Error::Overflow { .. }) => {}
        other => panic!("expected an overflow error, got {other:?}"),
    }
}

fn arb_case() -> impl Strategy<Value = (u64, usize, usize, f64, bool)> {
    (any::<u64>(), 1usize..=500, 1usize..=10, 0.0f64..0.5, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scan_equals_naive((seed, n, p, cens, ties) in arb_case()) {
        let mut r = rng(seed);
        let d = random_dataset(&mut r, n, p, cens, ties.then_some(1));
        let prob = PshProblem::from_dataset(&d).unwrap();
        let beta: Vec<f64> = (0..p).map(|j| ((seed as f64) * 1e-3 + j as f64).cos() * 0.5).collect();
        let fast = scan_report(&prob, &beta);
        let slow = naive_likelihood_suite(&prob, &beta).unwrap();
        prop_assert!(rel_err(fast.loglik, slow.loglik) <= 1e-10);
        for j in 0..p {
            prop_assert!(rel_err(fast.score[j], slow.score[j]) <= 1e-10);
            prop_assert!(rel_err(fast.neg_hess_diag[j], slow.neg_hess_diag[j]) <= 1e-10);
            prop_assert!(fast.neg_hess_diag[j] >= -1e-12);
        }
    }

    #[test]
    fn denominators_match_and_dominate_own_term((seed, n, p, cens, ties) in arb_case()) {
        let mut r = rng(seed);
        let d = random_dataset(&mut r, n.min(200), p, cens, ties.then_some(2));
        let prob = PshProblem::from_dataset(&d).unwrap();
        let beta: Vec<f64> = (0..p).map(|j| 0.3 - 0.1 * j as f64).collect();
        let eta = d.linear_predictor(&beta);
        for m in [Moment::Zeroth, Moment::First(0), Moment::Second(p - 1)] {
            let fast = scan_denominators(&prob, &eta, m).unwrap();
            let slow = naive_denominators(&prob, &eta, m).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
        let den = scan_denominators(&prob, &eta, Moment::Zeroth).unwrap();
        for (&i, dv) in prob.event_records().iter().zip(&den) {
            prop_assert!(eta[i] - dv.ln() <= 1e-12);
        }
    }
}
