//! Tournament statistics: win rates with normal-approximation intervals,
//! Welch's t-test, Cohen's d, Bonferroni thresholds, sample-size planning,
//! Pearson correlation and per-agent summaries of round records.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::arena::RoundRecord;
use crate::engine::STARTING_COINS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
}

fn domain<T>(msg: impl Into<String>) -> Result<T, StatsError> {
    Err(StatsError::Domain(msg.into()))
}

const Z95: f64 = 1.96;

/// Win rate in percent with its 95% interval `w ± 1.96·sqrt(w(100−w)/n)`.
pub fn win_rate_ci(wins: u64, rounds: u64) -> Result<(f64, f64, f64), StatsError> {
    if rounds == 0 {
        return domain("rounds must be at least 1");
    }
    if wins > rounds {
        return domain(format!("{wins} wins out of {rounds} rounds"));
    }
    let w = 100.0 * wins as f64 / rounds as f64;
    let (lo, hi) = rate_ci(w, rounds);
    Ok((w, lo, hi))
}

/// Interval around a win rate already expressed in percent.
pub fn rate_ci(rate_pct: f64, rounds: u64) -> (f64, f64) {
    let half = Z95 * (rate_pct * (100.0 - rate_pct) / rounds as f64).sqrt();
    (rate_pct - half, rate_pct + half)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Two-tailed p-value of a Student-t statistic.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub p: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
}

pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return domain("both samples need at least two values");
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return domain("samples must be finite");
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, m2) = (mean(a), mean(b));
    let (q1, q2) = (variance(a) / n1, variance(b) / n2);
    let se2 = q1 + q2;
    if se2 == 0.0 {
        return Ok(if m1 == m2 {
            WelchResult { t: 0.0, p: 1.0, df: n1 + n2 - 2.0 }
        } else {
            WelchResult { t: if m1 > m2 { f64::INFINITY } else { f64::NEG_INFINITY }, p: 0.0, df: n1 + n2 - 2.0 }
        });
    }
    let t = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
    Ok(WelchResult { t, p: student_t_two_tailed(t, df), df })
}

/// Standardized mean difference with the pooled standard deviation.
/// `None` when the pooled deviation is zero.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<Option<f64>, StatsError> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 || n1 + n2 < 3 {
        return domain("cohen's d needs n1 + n2 >= 3 with both samples non-empty");
    }
    let ss = |xs: &[f64]| {
        let m = mean(xs);
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let sp = ((ss(a) + ss(b)) / (n1 + n2 - 2) as f64).sqrt();
    if sp == 0.0 || !sp.is_finite() {
        return Ok(None);
    }
    Ok(Some((mean(a) - mean(b)) / sp))
}

pub fn bonferroni(alpha: f64, k: u32) -> Result<f64, StatsError> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    Ok(alpha / k as f64)
}

/// Rounds per agent needed to detect a mean difference `delta` at the given
/// two-sided `alpha` and `power`: ceil(2(z_{1−α/2} + z_{power})² σ² / δ²).
pub fn power_sample_size(sigma: f64, delta: f64, alpha: f64, power: f64) -> Result<u64, StatsError> {
    if !(sigma > 0.0 && delta > 0.0) {
        return domain("sigma and delta must be positive");
    }
    if !(alpha > 0.0 && alpha < 1.0 && power > 0.0 && power < 1.0) {
        return domain("alpha and power must lie in (0, 1)");
    }
    let normal = Normal::standard();
    let z = normal.inverse_cdf(1.0 - alpha / 2.0) + normal.inverse_cdf(power);
    Ok((2.0 * z * z * sigma * sigma / (delta * delta)).ceil() as u64)
}

/// Product-moment correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    if x.len() != y.len() || x.len() < 2 {
        return domain("pearson needs two equal-length samples of size >= 2");
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Pearson correlation from exact integer moments, independent of sample order.
fn pearson_int(pairs: &[(i64, i64)]) -> Option<f64> {
    let n = pairs.len() as i128;
    if n < 2 {
        return None;
    }
    let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for &(x, y) in pairs {
        let (x, y) = (x as i128, y as i128);
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    let cov = n * sxy - sx * sy;
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return None;
    }
    Some((cov as f64 / ((vx as f64).sqrt() * (vy as f64).sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub name: String,
    pub wins: u64,
    pub win_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean coin change per round.
    pub economic_performance: f64,
    pub final_coins: i64,
    pub jhyap_calls: u64,
    pub jhyap_successes: u64,
    pub jhyap_success: Option<f64>,
    pub cards_per_round: f64,
    pub avg_reward: f64,
    pub avg_turns: f64,
    pub avg_hand_value: f64,
    pub decisions: u64,
    pub avg_decision_ms: Option<f64>,
    /// Correlation between hand value at declaration and declaration success.
    pub risk_correlation: Option<f64>,
    pub invalid_actions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub rounds: u64,
    pub draws: u64,
    pub agents: Vec<AgentMetrics>,
}

impl MetricsSummary {
    pub fn agent(&self, name: &str) -> Option<&AgentMetrics> {
        self.agents.iter().find(|a| a.name == name)
    }
}

fn check_record(r: &RoundRecord, n: usize) -> Result<(), StatsError> {
    let lens = [
        r.seating.len(),
        r.coin_delta.len(),
        r.cards_discarded.len(),
        r.turns_taken.len(),
        r.rewards.len(),
        r.invalid_actions.len(),
        r.final_hand_values.len(),
        r.decisions.len(),
        r.decision_ms.len(),
    ];
    if lens.iter().any(|&l| l != n) {
        return domain(format!("round {} does not cover {n} participants", r.round_index));
    }
    if r.winner.is_some_and(|w| w >= n) || r.jhyap.as_ref().is_some_and(|j| j.declarer >= n) {
        return domain(format!("round {} names an unknown participant", r.round_index));
    }
    Ok(())
}

/// Per-agent primary and secondary metrics over a list of rounds.
pub fn summarize(participants: &[String], records: &[RoundRecord]) -> Result<MetricsSummary, StatsError> {
    if records.is_empty() {
        return domain("no round records");
    }
    let n = participants.len();
    for r in records {
        check_record(r, n)?;
    }
    let rounds = records.len() as u64;
    let draws = records.iter().filter(|r| r.winner.is_none()).count() as u64;
    let rf = rounds as f64;
    let agents = participants
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let wins = records.iter().filter(|r| r.winner == Some(p)).count() as u64;
            let (win_rate, ci_low, ci_high) = win_rate_ci(wins, rounds).expect("wins <= rounds");
            let delta: i64 = records.iter().map(|r| r.coin_delta[p]).sum();
            let calls: Vec<(i64, i64)> = records
                .iter()
                .filter_map(|r| r.jhyap.as_ref().filter(|j| j.declarer == p))
                .map(|j| (j.hand_value as i64, j.success as i64))
                .collect();
            let successes = calls.iter().filter(|c| c.1 == 1).count() as u64;
            let decisions: u64 = records.iter().map(|r| r.decisions[p] as u64).sum();
            let ms: f64 = records.iter().map(|r| r.decision_ms[p]).sum();
            AgentMetrics {
                name: name.clone(),
                wins,
                win_rate,
                ci_low,
                ci_high,
                economic_performance: delta as f64 / rf,
                final_coins: STARTING_COINS + delta,
                jhyap_calls: calls.len() as u64,
                jhyap_successes: successes,
                jhyap_success: (!calls.is_empty()).then(|| 100.0 * successes as f64 / calls.len() as f64),
                cards_per_round: records.iter().map(|r| r.cards_discarded[p] as u64).sum::<u64>() as f64 / rf,
                avg_reward: records.iter().map(|r| r.rewards[p]).sum::<f64>() / rf,
                avg_turns: records.iter().map(|r| r.turns_taken[p] as u64).sum::<u64>() as f64 / rf,
                avg_hand_value: records.iter().map(|r| r.final_hand_values[p] as u64).sum::<u64>() as f64 / rf,
                decisions,
                avg_decision_ms: (decisions > 0).then(|| ms / decisions as f64),
                risk_correlation: pearson_int(&calls),
                invalid_actions: records.iter().map(|r| r.invalid_actions[p] as u64).sum(),
            }
        })
        .collect();
    Ok(MetricsSummary { rounds, draws, agents })
}

/// Per-round samples compared between agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    WinRate,
    Economic,
    JhyapSuccess,
    CardsPerRound,
    Reward,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::WinRate, Metric::Economic, Metric::JhyapSuccess, Metric::CardsPerRound, Metric::Reward];

    pub fn name(self) -> &'static str {
        match self {
            Metric::WinRate => "win_rate",
            Metric::Economic => "economic",
            Metric::JhyapSuccess => "jhyap_success",
            Metric::CardsPerRound => "cards_per_round",
            Metric::Reward => "reward",
        }
    }

    /// Win indicators, coin deltas, cards and rewards per round; Jhyap outcomes per call.
    pub fn samples(self, records: &[RoundRecord], p: usize) -> Vec<f64> {
        match self {
            Metric::WinRate => records.iter().map(|r| (r.winner == Some(p)) as u8 as f64).collect(),
            Metric::Economic => records.iter().map(|r| r.coin_delta[p] as f64).collect(),
            Metric::JhyapSuccess => records
                .iter()
                .filter_map(|r| r.jhyap.as_ref().filter(|j| j.declarer == p))
                .map(|j| j.success as u8 as f64)
                .collect(),
            Metric::CardsPerRound => records.iter().map(|r| r.cards_discarded[p] as f64).collect(),
            Metric::Reward => records.iter().map(|r| r.rewards[p]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub metric: Metric,
    pub agent_a: String,
    pub agent_b: String,
    pub cohens_d: Option<f64>,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
    /// Nominal levels (0.05, 0.01, 0.001) still passed after dividing by the comparison count.
    pub significant_at: Vec<f64>,
    pub n1: usize,
    pub n2: usize,
}

impl ComparisonResult {
    pub fn stars(&self) -> &'static str {
        ["", "*", "**", "***"][self.significant_at.len()]
    }
}

pub const SIGNIFICANCE_LEVELS: [f64; 3] = [0.05, 0.01, 0.001];

/// Every agent pair on every metric, with Bonferroni-corrected significance.
pub fn compare_all(participants: &[String], records: &[RoundRecord]) -> Vec<ComparisonResult> {
    let n = participants.len();
    let k = (n * n.saturating_sub(1) / 2 * Metric::ALL.len()).max(1) as u32;
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for a in 0..n {
            for b in a + 1..n {
                let (x, y) = (metric.samples(records, a), metric.samples(records, b));
                let welch = welch_t(&x, &y).ok();
                let p = welch.map(|w| w.p);
                let significant_at = SIGNIFICANCE_LEVELS
                    .iter()
                    .copied()
                    .filter(|&lvl| p.is_some_and(|p| p < bonferroni(lvl, k).expect("k >= 1")))
                    .collect();
                out.push(ComparisonResult {
                    metric,
                    agent_a: participants[a].clone(),
                    agent_b: participants[b].clone(),
                    cohens_d: cohens_d(&x, &y).ok().flatten(),
                    t_stat: welch.map(|w| w.t),
                    p_value: p,
                    significant_at,
                    n1: x.len(),
                    n2: y.len(),
                });
            }
        }
    }
    out
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.prec$}"))
}

/// Plain-text table of the per-agent summary.
pub fn render_summary(title: &str, s: &MetricsSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title} ({} rounds, {} draws)", s.rounds, s.draws);
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>16} {:>9} {:>9} {:>6} {:>8} {:>9} {:>8} {:>9} {:>7}",
        "Agent", "Win (%)", "95% CI", "Econ.", "Jhyap (%)", "Calls", "Cards", "Reward", "Hand V", "Dec. (ms)", "rho"
    );
    for a in &s.agents {
        let _ = writeln!(
            out,
            "{:<14} {:>8.2} {:>16} {:>9.2} {:>9} {:>6} {:>8.2} {:>9.2} {:>8.2} {:>9} {:>7}",
            a.name,
            a.win_rate,
            format!("[{:.2}, {:.2}]", a.ci_low, a.ci_high),
            a.economic_performance,
            opt(a.jhyap_success, 2),
            a.jhyap_calls,
            a.cards_per_round,
            a.avg_reward,
            a.avg_hand_value,
            opt(a.avg_decision_ms, 3),
            opt(a.risk_correlation, 3),
        );
    }
    out
}

/// Comparison matrix as CSV: metric, pair, d, t, p, stars.
pub fn comparisons_csv(results: &[ComparisonResult]) -> String {
    let mut out = String::from("metric,agent_a,agent_b,cohens_d,t_stat,p_value,n1,n2,stars\n");
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.metric.name(),
            c.agent_a,
            c.agent_b,
            num(c.cohens_d),
            num(c.t_stat),
            num(c.p_value),
            c.n1,
            c.n2,
            c.stars()
        );
    }
    out
}

#[cfg(test)]
mod tests;
