//! Returns, advantages and the actor-critic losses with their derivatives
//! with respect to logits and values.

use crate::net::{StepOutput, ACTIONS};

/// `R_t = r_t + gamma * R_{t+1}`, with `R_T = bootstrap`.
pub fn discounted_returns(rewards: &[f64], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// n-step value targets: `sum_{i<k} gamma^i r_{t+i} + gamma^k V_{t+k}` with
/// `k = min(n, T - t)` and `V_T = bootstrap`. `n = None` uses the full
/// remaining sequence.
pub fn n_step_targets(rewards: &[f64], values: &[f64], gamma: f64, bootstrap: f64, n: Option<usize>) -> Vec<f64> {
    let big_t = rewards.len();
    assert_eq!(values.len(), big_t);
    let v = |t: usize| if t == big_t { bootstrap } else { values[t] };
    let n = n.unwrap_or(big_t).max(1);
    (0..big_t)
        .map(|t| {
            let k = n.min(big_t - t);
            let mut acc = v(t + k);
            for i in (0..k).rev() {
                acc = rewards[t + i] + gamma * acc;
            }
            acc
        })
        .collect()
}

/// `A_t = target_t - V_t`, treated as a constant by the policy loss.
pub fn advantages(rewards: &[f64], values: &[f64], gamma: f64, bootstrap: f64, n: Option<usize>) -> Vec<f64> {
    n_step_targets(rewards, values, gamma, bootstrap, n)
        .into_iter()
        .zip(values)
        .map(|(r, v)| r - v)
        .collect()
}

pub fn entropy(probs: &[f64; ACTIONS]) -> f64 {
    -probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub value: f64,
    pub valid: f64,
    pub entropy: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            value: 0.5,
            valid: 0.5,
            entropy: 0.01,
        }
    }
}

/// What the loss needs from one decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossStep {
    /// Enacted action, `None` when the agent was boxed in and stayed.
    pub action: Option<usize>,
    pub advantage: f64,
    pub target: f64,
    /// Actions that were invalid at this decision.
    pub invalid: [bool; ACTIONS],
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Losses {
    pub value: f64,
    pub policy: f64,
    pub valid: f64,
    pub entropy: f64,
    pub total: f64,
}

impl std::ops::AddAssign for Losses {
    fn add_assign(&mut self, o: Self) {
        self.value += o.value;
        self.policy += o.policy;
        self.valid += o.valid;
        self.entropy += o.entropy;
        self.total += o.total;
    }
}

/// Losses over a trajectory and their derivatives with respect to each
/// step's logits and value:
///
/// - `L_V = sum (V_t - R_t)^2`
/// - `L_pi = -sum log pi(a_t) A_t - sigma_H sum H(pi_t)`: advantage-weighted
///   negative log-likelihood, minus the entropy bonus so that higher
///   entropy lowers the loss.
/// - `L_valid = -sum_t sum_{a invalid} log(1 - pi(a))`
/// - `L = L_pi + w_V L_V + w_valid L_valid`
pub fn trajectory_losses(
    outputs: &[StepOutput],
    steps: &[LossStep],
    w: LossWeights,
) -> (Losses, Vec<[f64; ACTIONS]>, Vec<f64>) {
    assert_eq!(outputs.len(), steps.len());
    let mut l = Losses::default();
    let mut dlogits = vec![[0.0; ACTIONS]; steps.len()];
    let mut dvalue = vec![0.0; steps.len()];
    for (t, (out, s)) in outputs.iter().zip(steps).enumerate() {
        let pi = &out.probs;
        let z = &out.logits;
        let lse = log_sum_exp(z.iter().copied());
        let d = &mut dlogits[t];

        let err = out.value - s.target;
        l.value += err * err;
        dvalue[t] = w.value * 2.0 * err;

        if let Some(a) = s.action {
            l.policy -= (z[a] - lse) * s.advantage;
            for j in 0..ACTIONS {
                d[j] += s.advantage * (pi[j] - if j == a { 1.0 } else { 0.0 });
            }
        }

        let h = entropy(pi);
        l.entropy += h;
        l.policy -= w.entropy * h;
        for j in 0..ACTIONS {
            if pi[j] > 0.0 {
                d[j] += w.entropy * pi[j] * (pi[j].ln() + h);
            }
        }

        for a in (0..ACTIONS).filter(|a| s.invalid[*a]) {
            // log(1 - pi_a) = lse_{b != a}(z) - lse(z), stable as pi_a -> 1
            let rest = log_sum_exp((0..ACTIONS).filter(|b| *b != a).map(|b| z[b]));
            l.valid -= rest - lse;
            for j in 0..ACTIONS {
                let q = if j == a { 0.0 } else { (z[j] - rest).exp() };
                d[j] += w.valid * (pi[j] - q);
            }
        }
    }
    l.total = l.policy + w.value * l.value + w.valid * l.valid;
    (l, dlogits, dvalue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::softmax;

    fn out(logits: [f64; ACTIONS], value: f64) -> StepOutput {
        StepOutput {
            logits,
            probs: softmax(&logits),
            value,
        }
    }

    fn step(action: Option<usize>, advantage: f64, target: f64) -> LossStep {
        LossStep {
            action,
            advantage,
            target,
            invalid: [false; ACTIONS],
        }
    }

    #[test]
    fn returns_examples() {
        assert_eq!(discounted_returns(&[10.0], 0.95, 0.0), vec![10.0]);
        let r = discounted_returns(&[-0.05, 10.0], 0.95, 0.0);
        assert!((r[0] - 9.45).abs() < 1e-12 && r[1] == 10.0);
        assert_eq!(discounted_returns(&[0.0; 4], 0.95, 0.0), vec![0.0; 4]);
        assert!((discounted_returns(&[1.0], 0.5, 4.0)[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn advantage_examples() {
        assert_eq!(advantages(&[10.0], &[0.0], 0.95, 0.0, None), vec![10.0]);
        assert_eq!(advantages(&[10.0], &[10.0], 0.95, 0.0, None), vec![0.0]);
        let a = advantages(&[0.0, 0.0], &[1.0, 1.0], 0.95, 0.0, Some(1));
        assert!((a[0] + 0.05).abs() < 1e-12);
        assert!((a[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_horizon_targets_are_discounted_returns() {
        let r = [0.3, -0.05, 10.0, -0.05, 2.0];
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let targets = n_step_targets(&r, &v, 0.9, 7.0, None);
        let returns = discounted_returns(&r, 0.9, 7.0);
        for (a, b) in targets.iter().zip(&returns) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn value_loss_example() {
        let (l, _, dv) = trajectory_losses(&[out([0.0; ACTIONS], 0.5)], &[step(None, 0.0, 1.0)], LossWeights::default());
        assert_eq!(l.value, 0.25);
        // d L_V / dV = 2 (V - R), scaled by the value weight in the total
        assert_eq!(dv[0], 0.5 * 2.0 * (0.5 - 1.0));
    }

    #[test]
    fn uniform_entropy_is_ln5() {
        let p = softmax(&[0.0; ACTIONS]);
        assert!((entropy(&p) - 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn no_invalid_actions_means_no_valid_loss() {
        let (l, _, _) = trajectory_losses(&[out([0.3, -1.0, 2.0, 0.0, 0.1], 0.0)], &[step(Some(2), 1.0, 0.0)], LossWeights::default());
        assert_eq!(l.valid, 0.0);
    }

    #[test]
    fn zero_advantage_and_entropy_weight_give_zero_policy_gradient() {
        let w = LossWeights {
            entropy: 0.0,
            ..LossWeights::default()
        };
        let (_, d, _) = trajectory_losses(&[out([0.3, -1.0, 2.0, 0.0, 0.1], 0.0)], &[step(Some(1), 0.0, 0.0)], w);
        assert_eq!(d[0], [0.0; ACTIONS]);
    }

    #[test]
    fn valid_loss_is_stable_for_saturated_policies() {
        let mut s = step(None, 0.0, 0.0);
        s.invalid[0] = true;
        let (l, d, _) = trajectory_losses(&[out([800.0, 0.0, 0.0, 0.0, 0.0], 0.0)], &[s], LossWeights::default());
        assert!(l.valid.is_finite() && (l.valid - (800.0 - 4f64.ln())).abs() < 1e-9);
        assert!(d[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn logit_gradients_match_finite_differences() {
        let w = LossWeights::default();
        let mut s = step(Some(3), 1.7, 0.4);
        s.invalid = [true, false, true, false, false];
        let z0 = [0.2, -0.7, 1.1, 0.3, -0.2];
        let (_, d, _) = trajectory_losses(&[out(z0, 0.9)], &[s], w);
        for j in 0..ACTIONS {
            let eps = 1e-6;
            let mut zp = z0;
            zp[j] += eps;
            let mut zm = z0;
            zm[j] -= eps;
            let lp = trajectory_losses(&[out(zp, 0.9)], &[s], w).0.total;
            let lm = trajectory_losses(&[out(zm, 0.9)], &[s], w).0.total;
            assert!(((lp - lm) / (2.0 * eps) - d[0][j]).abs() < 1e-7, "logit {j}");
        }
    }
}
