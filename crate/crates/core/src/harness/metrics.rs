//! Training-speed metrics over per-episode score sequences. Episode indices
//! are 1-based throughout.

use serde::{Deserialize, Serialize};

/// Index of the episode completing the first run of `k` consecutive scores
/// strictly above `target`.
pub fn win_streak_episode(scores: &[f64], target: f64, k: usize) -> Option<usize> {
    assert!(k >= 1, "win streak length must be at least 1");
    let mut run = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > target {
            run += 1;
            if run == k {
                return Some(i + 1);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// First index `i >= window` whose trailing `window`-episode mean is strictly
/// above `target`.
pub fn moving_average_crossing(scores: &[f64], target: f64, window: usize) -> Option<usize> {
    assert!(window >= 1, "averaging window must be at least 1");
    if scores.len() < window {
        return None;
    }
    (window..=scores.len())
        .find(|&end| scores[end - window..end].iter().sum::<f64>() / window as f64 > target)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

/// Percentage by which the coached arm needed fewer episodes.
pub fn reduction_percent(coached: usize, uncoached: usize) -> f64 {
    100.0 * (uncoached as f64 - coached as f64) / uncoached as f64
}

/// Two-sided exact binomial sign-test p-value for `wins` successes out of
/// `wins + losses` non-tied pairs.
pub fn sign_test_p_value(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let k = wins.min(losses);
    let mut log_choose = 0.0_f64;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (log_choose - n as f64 * std::f64::consts::LN_2).exp();
    }
    (2.0 * tail).min(1.0)
}

/// Paired comparison of one metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Per-seed reductions in percent, for seeds where both arms finished.
    pub reductions: Vec<f64>,
    pub median_reduction_percent: Option<f64>,
    pub finishing_pairs: usize,
    pub coached_better: usize,
    pub uncoached_better: usize,
    pub ties: usize,
    /// Seeds where at least one arm never reached the criterion.
    pub did_not_finish: usize,
    pub sign_test_p: f64,
}

impl MetricSummary {
    /// Fraction of finishing pairs in which the coached arm was faster.
    pub fn coached_win_fraction(&self) -> Option<f64> {
        (self.finishing_pairs > 0).then(|| self.coached_better as f64 / self.finishing_pairs as f64)
    }
}

/// Summarizes `(coached, uncoached)` crossing episodes, one pair per seed.
pub fn summarize_metric(pairs: &[(Option<usize>, Option<usize>)]) -> MetricSummary {
    let mut reductions = Vec::new();
    let (mut better, mut worse, mut ties, mut dnf) = (0, 0, 0, 0);
    for pair in pairs {
        match *pair {
            (Some(c), Some(u)) => {
                reductions.push(reduction_percent(c, u));
                match c.cmp(&u) {
                    std::cmp::Ordering::Less => better += 1,
                    std::cmp::Ordering::Greater => worse += 1,
                    std::cmp::Ordering::Equal => ties += 1,
                }
            }
            _ => dnf += 1,
        }
    }
    MetricSummary {
        median_reduction_percent: median(&reductions),
        finishing_pairs: reductions.len(),
        reductions,
        coached_better: better,
        uncoached_better: worse,
        ties,
        did_not_finish: dnf,
        sign_test_p: sign_test_p_value(better, worse),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn win_streak_examples() {
        assert_eq!(win_streak_episode(&[900.0; 5], 800.0, 5), Some(5));
        let s = [900.0, 700.0, 900.0, 900.0, 900.0, 900.0, 900.0];
        assert_eq!(win_streak_episode(&s, 800.0, 5), Some(7));
        assert_eq!(win_streak_episode(&[800.0; 10], 800.0, 1), None);
        assert_eq!(win_streak_episode(&[], 800.0, 1), None);
    }

    #[test]
    fn average_crossing_examples() {
        assert_eq!(moving_average_crossing(&[900.0; 10], 800.0, 10), Some(10));
        let mut s = vec![0.0; 9];
        s.extend(std::iter::repeat_n(1000.0, 20));
        // Window ending at 17 holds eight 1000s: mean exactly 800, not above.
        assert_eq!(moving_average_crossing(&s, 800.0, 10), Some(18));
        assert_eq!(moving_average_crossing(&[100.0, 801.0], 800.0, 1), Some(2));
        assert_eq!(moving_average_crossing(&[900.0; 9], 800.0, 10), None);
        // Exactly at the target is not a crossing.
        assert_eq!(moving_average_crossing(&[800.0; 12], 800.0, 10), None);
    }

    #[test]
    fn reduction_of_paired_crossings() {
        assert_eq!(reduction_percent(100, 160), 37.5);
        let s = summarize_metric(&[(Some(100), Some(160)); 3]);
        assert_eq!(s.median_reduction_percent, Some(37.5));
        assert_eq!(s.coached_better, 3);
    }

    #[test]
    fn identical_arms_are_ties() {
        let s = summarize_metric(&[(Some(50), Some(50)), (Some(70), Some(70))]);
        assert_eq!(s.median_reduction_percent, Some(0.0));
        assert_eq!((s.coached_better, s.uncoached_better, s.ties), (0, 0, 2));
        assert_eq!(s.sign_test_p, 1.0);
    }

    #[test]
    fn unfinished_seed_excluded_from_median() {
        let s = summarize_metric(&[(Some(100), Some(200)), (None, Some(150)), (Some(90), None)]);
        assert_eq!(s.reductions, vec![50.0]);
        assert_eq!(s.did_not_finish, 2);
        assert_eq!(s.finishing_pairs, 1);
    }

    #[test]
    fn sign_test_values() {
        // 10 of 10: 2 * 0.5^10
        assert!((sign_test_p_value(10, 0) - 2.0 / 1024.0).abs() < 1e-15);
        // 8 of 10: 2 * (1 + 10 + 45) / 1024
        assert!((sign_test_p_value(8, 2) - 112.0 / 1024.0).abs() < 1e-14);
        assert_eq!(sign_test_p_value(5, 5), 1.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
