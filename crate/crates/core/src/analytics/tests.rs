use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::*;
use crate::arena::{JhyapEvent, RoundRecord};
use crate::engine::EndReason;
use crate::rng::seeded;

/// (rate %, reported low, reported high, decimals) from the published result tables.
pub const TABLE_CIS: [(f64, f64, f64, i32); 12] = [
    (35.06, 32.14, 37.98, 2),
    (19.43, 17.01, 21.85, 2),
    (25.10, 22.44, 27.76, 2),
    (20.41, 17.94, 22.88, 2),
    (47.1, 44.0, 50.2, 1),
    (52.9, 49.8, 56.0, 1),
    (55.4, 52.4, 58.4, 1),
    (44.6, 41.6, 47.6, 1),
    (88.3, 86.3, 90.3, 1),
    (9.0, 7.2, 10.8, 1),
    (1.5, 0.8, 2.2, 1),
    (1.3, 0.6, 2.0, 1),
];

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

#[test]
fn published_intervals_are_reproduced() {
    for (rate, lo, hi, dec) in TABLE_CIS {
        let (l, h) = rate_ci(rate, 1024);
        assert!((round_to(l, dec) - lo).abs() < 0.01 + 1e-9, "{rate}: {l} vs {lo}");
        assert!((round_to(h, dec) - hi).abs() < 0.01 + 1e-9, "{rate}: {h} vs {hi}");
    }
}

#[test]
fn win_rate_ci_edges() {
    assert_eq!(win_rate_ci(0, 10).unwrap(), (0.0, 0.0, 0.0));
    assert_eq!(win_rate_ci(10, 10).unwrap(), (100.0, 100.0, 100.0));
    assert!(win_rate_ci(1, 0).is_err());
    assert!(win_rate_ci(11, 10).is_err());
    let (w, l, h) = win_rate_ci(359, 1024).unwrap();
    assert!(l < w && w < h);
}

fn sample(rng: &mut crate::rng::GameRng, n: usize, shift: f64, scale: f64) -> Vec<f64> {
    (0..n).map(|_| shift + scale * (rng.random::<f64>() - 0.5)).collect()
}

/// Independent Welch computation: two-pass moments and the t CDF of statrs.
fn reference_welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let v = |x: &[f64]| {
        let mu = m(x);
        x.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    };
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let se = (v(a) / n1 + v(b) / n2).sqrt();
    let t = (m(a) - m(b)) / se;
    let df = (v(a) / n1 + v(b) / n2).powi(2) / ((v(a) / n1).powi(2) / (n1 - 1.0) + (v(b) / n2).powi(2) / (n2 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    (t, 2.0 * (1.0 - dist.cdf(t.abs())))
}

#[test]
fn welch_matches_reference_on_random_pairs() {
    let mut rng = seeded(9);
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(2..60), rng.random_range(2..60));
        let (s1, s2) = (1.0 + 3.0 * rng.random::<f64>(), 1.0 + 3.0 * rng.random::<f64>());
        let (m1, m2) = (rng.random::<f64>(), rng.random::<f64>());
        let a = sample(&mut rng, n1, m1, s1);
        let b = sample(&mut rng, n2, m2, s2);
        let w = welch_t(&a, &b).unwrap();
        let (t, p) = reference_welch(&a, &b);
        assert!((w.t - t).abs() < 1e-9, "t {} vs {t}", w.t);
        assert!((w.p - p).abs() < 1e-9, "p {} vs {p}", w.p);
    }
}

#[test]
fn incomplete_beta_matches_reference() {
    let mut rng = seeded(10);
    for _ in 0..200 {
        let a = 0.1 + 50.0 * rng.random::<f64>();
        let b = 0.1 + 50.0 * rng.random::<f64>();
        let x = rng.random::<f64>();
        let want = statrs::function::beta::beta_reg(a, b, x);
        assert!((regularized_beta(x, a, b) - want).abs() < 1e-10, "I_{x}({a}, {b})");
    }
}

#[test]
fn welch_edge_cases() {
    let a = [1.0, 2.0, 3.0, 4.0];
    let w = welch_t(&a, &a).unwrap();
    assert_eq!((w.t, w.p), (0.0, 1.0));
    assert_eq!(welch_t(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap().p, 1.0);
    assert!(welch_t(&[1.0], &a).is_err());
    let zeros = [0.0, 1e-9, -1e-9, 0.0];
    let ones = [1.0, 1.0 + 1e-9, 1.0, 1.0 - 1e-9];
    assert!(welch_t(&zeros, &ones).unwrap().p < 1e-4);
}

#[test]
fn cohens_d_examples() {
    // mean 1 and 0, each with sample deviation exactly 1
    let a: Vec<f64> = (0..10).map(|i| 1.0 + if i % 2 == 0 { 1.0 } else { -1.0 } * (0.9f64).sqrt()).collect();
    let b: Vec<f64> = a.iter().map(|x| x - 1.0).collect();
    assert!((variance(&a) - 1.0).abs() < 1e-12);
    assert!((cohens_d(&a, &b).unwrap().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(cohens_d(&a, &a).unwrap(), Some(0.0));
    assert_eq!(cohens_d(&[1.0, 1.0], &[1.0]).unwrap(), None);
    assert!(cohens_d(&[1.0], &[2.0]).is_err());
}

#[test]
fn cohens_d_matches_direct_formula() {
    let mut rng = seeded(11);
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(2..40), rng.random_range(2..40));
        let a = sample(&mut rng, n1, 0.3, 2.0);
        let b = sample(&mut rng, n2, 0.0, 1.0);
        let (n1, n2) = (a.len() as f64, b.len() as f64);
        let sp = (((n1 - 1.0) * variance(&a) + (n2 - 1.0) * variance(&b)) / (n1 + n2 - 2.0)).sqrt();
        let want = (mean(&a) - mean(&b)) / sp;
        assert!((cohens_d(&a, &b).unwrap().unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn bonferroni_and_power() {
    assert_eq!(bonferroni(0.05, 10).unwrap(), 0.005);
    assert_eq!(bonferroni(0.05, 1).unwrap(), 0.05);
    assert_eq!(bonferroni(0.05, 30).unwrap(), 0.05 / 30.0);
    assert!(bonferroni(0.05, 0).is_err());
    assert_eq!(power_sample_size(10.0, 5.0, 0.05, 0.8).unwrap(), 63);
    assert!(power_sample_size(10.0, 0.0, 0.05, 0.8).is_err());
    assert!(power_sample_size(-1.0, 1.0, 0.05, 0.8).is_err());
}

#[test]
fn power_follows_inverse_square_law() {
    for (sigma, delta) in [(10.0, 5.0), (7.0, 1.5), (30.0, 4.0)] {
        let n = power_sample_size(sigma, delta, 0.05, 0.8).unwrap() as f64;
        let half = power_sample_size(sigma, 2.0 * delta, 0.05, 0.8).unwrap() as f64;
        let quad = power_sample_size(2.0 * sigma, delta, 0.05, 0.8).unwrap() as f64;
        assert!((n / 4.0 - half).abs() <= 1.0);
        assert!((4.0 * n - quad).abs() <= 4.0);
    }
}

#[test]
fn pearson_examples() {
    assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().unwrap() - 1.0).abs() < 1e-12);
    assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
    assert!(pearson(&[1.0], &[1.0]).is_err());
    assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
}

#[test]
fn pearson_matches_covariance_over_deviations() {
    let mut rng = seeded(12);
    for _ in 0..100 {
        let n = rng.random_range(2..50);
        let x = sample(&mut rng, n, 0.0, 10.0);
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 3.0 * (rng.random::<f64>() - 0.5)).collect();
        let cov = x.iter().zip(&y).map(|(a, b)| (a - mean(&x)) * (b - mean(&y))).sum::<f64>() / (n as f64 - 1.0);
        let want = cov / (variance(&x).sqrt() * variance(&y).sqrt());
        assert!((pearson(&x, &y).unwrap().unwrap() - want).abs() < 1e-12);
    }
    let exact = pearson_int(&[(1, 0), (2, 1), (3, 1), (9, 0)]).unwrap();
    let float = pearson(&[1.0, 2.0, 3.0, 9.0], &[0.0, 1.0, 1.0, 0.0]).unwrap().unwrap();
    assert!((exact - float).abs() < 1e-12);
}

proptest! {
    #[test]
    fn swap_antisymmetry(
        a in prop::collection::vec(-100.0f64..100.0, 2..30),
        b in prop::collection::vec(-100.0f64..100.0, 2..30),
    ) {
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
        let (d1, d2) = (cohens_d(&a, &b).unwrap(), cohens_d(&b, &a).unwrap());
        prop_assert_eq!(d1.map(|d| -d), d2);
        if let Some(d) = d1 {
            prop_assert!(d == 0.0 || ab.t == 0.0 || d.signum() == ab.t.signum());
        }
    }
}

fn record(round: u32, winner: Option<usize>, delta: [i64; 3], jhyap: Option<(usize, u32, bool)>) -> RoundRecord {
    RoundRecord {
        round_index: round,
        seating: vec![0, 1, 2],
        winner,
        end_reason: if jhyap.is_some() { EndReason::JhyapShowdown } else { EndReason::TurnLimit },
        jhyap: jhyap.map(|(declarer, hand_value, success)| JhyapEvent { declarer, hand_value, success }),
        turns: 12,
        coin_delta: delta.to_vec(),
        cards_discarded: vec![5, 4, 6],
        turns_taken: vec![4, 4, 4],
        rewards: delta.iter().map(|&d| d as f64 + 8.0).collect(),
        invalid_actions: vec![0, 0, 0],
        final_hand_values: vec![7, 20, 30],
        decisions: vec![10, 10, 10],
        decision_ms: vec![1.0, 2.0, 3.0],
    }
}

fn names() -> Vec<String> {
    ["A", "B", "C"].map(String::from).to_vec()
}

#[test]
fn single_record_summary() {
    let s = summarize(&names(), &[record(0, Some(0), [50, -20, -30], Some((0, 7, true)))]).unwrap();
    let a = s.agent("A").unwrap();
    assert_eq!((a.win_rate, a.jhyap_success, a.jhyap_calls), (100.0, Some(100.0), 1));
    assert_eq!(a.final_coins, 10_050);
    let b = s.agent("B").unwrap();
    assert_eq!((b.win_rate, b.jhyap_success, b.risk_correlation), (0.0, None, None));
    assert_eq!(b.avg_decision_ms, Some(0.2));
    assert!(summarize(&names(), &[]).is_err());
}

#[test]
fn summary_invariants() {
    let recs = vec![
        record(0, Some(0), [50, -20, -30], Some((0, 7, true))),
        record(1, None, [0, 0, 0], None),
        record(2, Some(1), [-57, 57, 0], Some((0, 10, false))),
        record(3, Some(2), [-5, -9, 14], Some((1, 3, false))),
        record(4, Some(0), [30, -10, -20], Some((0, 2, true))),
    ];
    let s = summarize(&names(), &recs).unwrap();
    assert_eq!(s.draws, 1);
    assert_eq!(s.agents.iter().map(|a| a.wins).sum::<u64>() + s.draws, s.rounds);
    assert!(s.agents.iter().map(|a| a.win_rate).sum::<f64>() <= 100.0);
    assert_eq!(s.agents.iter().map(|a| a.economic_performance).sum::<f64>(), 0.0);
    for a in &s.agents {
        assert!(a.ci_low <= a.win_rate && a.win_rate <= a.ci_high);
        assert!(a.jhyap_successes <= a.jhyap_calls);
    }
    let a = s.agent("A").unwrap();
    assert_eq!((a.jhyap_calls, a.jhyap_successes), (3, 2));
    let rho = pearson(&[7.0, 10.0, 2.0], &[1.0, 0.0, 1.0]).unwrap();
    assert!((a.risk_correlation.unwrap() - rho.unwrap()).abs() < 1e-12);

    let mut rev = recs.clone();
    rev.reverse();
    let mut t = summarize(&names(), &rev).unwrap();
    for (x, y) in t.agents.iter_mut().zip(&s.agents) {
        x.avg_decision_ms = y.avg_decision_ms;
    }
    assert_eq!(t, s);
}

#[test]
fn comparison_grid_uses_bonferroni() {
    let mut rng = seeded(3);
    let recs: Vec<RoundRecord> = (0..200)
        .map(|i| {
            let w = if rng.random::<f64>() < 0.7 { 0 } else { rng.random_range(1..3) };
            let v = rng.random_range(0..=10);
            let mut d = [0i64; 3];
            d[w] = 20;
            d[(w + 1) % 3] = -20;
            record(i, Some(w), d, Some((w, v, true)))
        })
        .collect();
    let cmp = compare_all(&names(), &recs);
    assert_eq!(cmp.len(), 3 * 5);
    let win_ab = cmp.iter().find(|c| c.metric == Metric::WinRate && c.agent_b == "B").unwrap();
    assert!(win_ab.t_stat.unwrap() > 0.0 && win_ab.cohens_d.unwrap() > 0.0);
    assert_eq!(win_ab.stars(), "***");
    // every call succeeds: zero variance on both sides
    let j = cmp.iter().find(|c| c.metric == Metric::JhyapSuccess).unwrap();
    assert_eq!((j.cohens_d, j.p_value), (None, Some(1.0)));
    let text = comparisons_csv(&cmp);
    assert!(text.starts_with("metric,agent_a,agent_b,cohens_d,t_stat,p_value,n1,n2,stars\n"));
    assert_eq!(text.lines().count(), 16);
    assert!(!render_summary("t", &summarize(&names(), &recs).unwrap()).contains("Aggressive"));
}
