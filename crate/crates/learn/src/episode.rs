//! Rolling out the shared policy in one world and turning the result into
//! a gradient.

use forage_core::{extract_observation, Action, AgentId, Decisions, FovConfig, GridWorld};
use rand::Rng;

use crate::error::LearnError;
use crate::filter::{euclidean_action_filter, sample_action, SampleMode};
use crate::loss::{advantages, n_step_targets, trajectory_losses, LossStep, LossWeights, Losses};
use crate::net::{Network, ACTIONS};
use crate::reward::assign_reward;

/// One agent's decisions over an episode. Rewards earned while the agent
/// is queued (and so not deciding) are added to its latest decision.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Option<usize>>,
    pub rewards: Vec<f64>,
    /// Actions ruled out by the world or the training filter.
    pub invalid: Vec<[bool; ACTIONS]>,
    pub values: Vec<f64>,
    /// Whether the action drawn from the policy was allowed.
    pub drawn_valid: Vec<bool>,
    /// Value estimate used past the last decision.
    pub bootstrap: f64,
    /// Rewards earned before the first decision (never, for agents that start free).
    pub unassigned_reward: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() + self.unassigned_reward
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeData {
    /// Agents `0..learning`.
    pub learning: Vec<Trajectory>,
    /// The remaining agents; recorded for inspection only.
    pub non_learning: Vec<Trajectory>,
    pub deposited: f64,
}

impl EpisodeData {
    pub fn mean_reward(&self) -> f64 {
        if self.learning.is_empty() {
            return 0.0;
        }
        self.learning.iter().map(Trajectory::total_reward).sum::<f64>() / self.learning.len() as f64
    }

    /// Summed gradient of the learning agents' losses. Non-learning
    /// trajectories never enter it.
    pub fn learning_gradient(
        &self,
        net: &Network,
        gamma: f64,
        n_step: Option<usize>,
        weights: LossWeights,
    ) -> Result<(Vec<f64>, Losses), LearnError> {
        episode_gradient(net, &self.learning, gamma, n_step, weights)
    }

    /// Fraction of learning-agent draws that were allowed.
    pub fn valid_rate(&self) -> f64 {
        let (ok, n) = self.learning.iter().fold((0, 0), |(ok, n), t| {
            (ok + t.drawn_valid.iter().filter(|v| **v).count(), n + t.len())
        });
        if n == 0 {
            1.0
        } else {
            ok as f64 / n as f64
        }
    }
}

/// Runs `steps` world steps with every agent driven by `net` in training
/// mode. Agents with id below `learning` are the learning agents.
pub fn run_episode(
    net: &Network,
    world: &mut GridWorld,
    learning: usize,
    steps: u64,
    rng: &mut impl Rng,
) -> Result<EpisodeData, LearnError> {
    let fov = FovConfig { fov: net.spec().fov };
    let n = world.agents().len();
    let mut states: Vec<_> = (0..n).map(|_| net.initial_state()).collect();
    let mut trajs = vec![Trajectory::default(); n];
    let deposited_before = world.deposited_food();
    for _ in 0..steps {
        let mut decisions = Decisions::new();
        for i in 0..n {
            let id = AgentId(i as u32);
            if !world.agent(id).status.is_free() {
                continue;
            }
            let obs = extract_observation(world, id, fov).into_data();
            let out = net.step(&obs, &mut states[i])?;
            let mask = euclidean_action_filter(world, id, world.valid_actions(id));
            let s = sample_action(&out.probs, mask, SampleMode::Train, rng);
            if let Some(a) = s.enacted {
                decisions.insert(id, a);
            }
            let t = &mut trajs[i];
            t.observations.push(obs);
            t.actions.push(s.enacted.map(Action::index));
            t.rewards.push(0.0);
            t.invalid.push(std::array::from_fn(|a| !mask.0[a]));
            t.values.push(out.value);
            t.drawn_valid.push(s.drawn_valid);
        }
        let outcome = world.step(&decisions)?;
        for (id, event) in &outcome.events {
            let t = &mut trajs[id.index()];
            let r = assign_reward(event);
            match t.rewards.last_mut() {
                Some(last) => *last += r,
                None => t.unassigned_reward += r,
            }
        }
    }
    // bootstrap from the state after the last step
    for (i, t) in trajs.iter_mut().enumerate() {
        let id = AgentId(i as u32);
        t.bootstrap = if world.agent(id).status.is_free() {
            let obs = extract_observation(world, id, fov).into_data();
            net.step(&obs, &mut states[i])?.value
        } else {
            t.values.last().copied().unwrap_or(0.0)
        };
    }
    let non_learning = trajs.split_off(learning.min(n));
    Ok(EpisodeData {
        learning: trajs,
        non_learning,
        deposited: world.deposited_food() - deposited_before,
    })
}

/// Summed loss gradient over `trajectories`, plus the summed losses.
/// Observations are replayed through `net` from the zero state, so the
/// result depends only on what is passed in.
pub fn episode_gradient(
    net: &Network,
    trajectories: &[Trajectory],
    gamma: f64,
    n_step: Option<usize>,
    weights: LossWeights,
) -> Result<(Vec<f64>, Losses), LearnError> {
    let mut grad = net.zero_grad();
    let mut total = Losses::default();
    for t in trajectories.iter().filter(|t| !t.is_empty()) {
        let tape = net.forward_sequence(&t.observations)?;
        let values: Vec<f64> = tape.outputs.iter().map(|o| o.value).collect();
        let adv = advantages(&t.rewards, &values, gamma, t.bootstrap, n_step);
        let targets = n_step_targets(&t.rewards, &values, gamma, t.bootstrap, n_step);
        let steps: Vec<LossStep> = (0..t.len())
            .map(|k| LossStep {
                action: t.actions[k],
                advantage: adv[k],
                target: targets[k],
                invalid: t.invalid[k],
            })
            .collect();
        let (losses, dlogits, dvalue) = trajectory_losses(&tape.outputs, &steps, weights);
        net.backward_sequence(&tape, &dlogits, &dvalue, &mut grad);
        total += losses;
    }
    Ok((grad, total))
}
