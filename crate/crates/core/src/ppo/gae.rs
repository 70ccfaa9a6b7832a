use crate::error::{Error, Result};

/// Generalized advantage estimates for one episode, computed backward.
///
/// `values` carries one bootstrap entry past the last reward. When
/// `terminal` is set the bootstrap is ignored and treated as zero.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    terminal: bool,
    gamma: f64,
    lam: f64,
) -> Result<Vec<f64>> {
    if values.len() != rewards.len() + 1 {
        return Err(Error::Usage(format!(
            "gae needs len(values) = len(rewards) + 1, got {} and {}",
            values.len(),
            rewards.len()
        )));
    }
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 == n && terminal {
            0.0
        } else {
            values[t + 1]
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lam * running;
        adv[t] = running;
    }
    Ok(adv)
}

/// Shifts and scales in place to zero mean and unit (population) standard
/// deviation. A near-constant batch is only centered.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a -= mean;
        if std >= 1e-8 {
            *a /= std;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescopes_to_return_minus_value() {
        let r = [1.0, 0.5, -2.0, 3.0];
        let v = [0.2, -0.1, 0.7, 1.5, 99.0];
        let adv = gae(&r, &v, true, 1.0, 1.0).unwrap();
        for t in 0..r.len() {
            let ret: f64 = r[t..].iter().sum();
            assert!((adv[t] - (ret - v[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let r = [1.0, 2.0, 3.0];
        let v = [0.5, 0.25, 0.125, 4.0];
        let adv = gae(&r, &v, false, 0.9, 0.0).unwrap();
        for t in 0..3 {
            assert_eq!(adv[t], r[t] + 0.9 * v[t + 1] - v[t]);
        }
    }

    #[test]
    fn length_mismatch_is_usage_error() {
        assert!(matches!(
            gae(&[1.0], &[1.0], false, 0.99, 0.95),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn empty_episode() {
        assert!(gae(&[], &[0.0], true, 0.99, 0.95).unwrap().is_empty());
    }

    #[test]
    fn degenerate_batch_only_centered() {
        let mut a = [2.0; 5];
        normalize_advantages(&mut a);
        assert_eq!(a, [0.0; 5]);
    }
}
