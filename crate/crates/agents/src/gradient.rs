//! Sanity baseline that climbs pheromone trails out and walks home on odometry.

use forage_core::{
    extract_observation, Action, ActionMask, Channel, Controller, Decisions, FovConfig, GridWorld, ObservationTensor,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::common::{controller_rng, home_step, home_vector, random_move};

/// Empty agents move to the valid neighbour with the strongest sensed
/// pheromone (seeded tie-break), or wander when nothing is sensed. Carriers
/// follow the home vector. A compatible queue is always joined.
pub fn gradient_follower_step(
    obs: &ObservationTensor,
    mask: ActionMask,
    carrying: bool,
    home: (i32, i32),
    rng: &mut impl Rng,
) -> Option<Action> {
    if mask.allows(Action::JoinQueue) {
        return Some(Action::JoinQueue);
    }
    if carrying {
        return home_step(home, mask, rng);
    }
    let mut best = 0.0;
    let mut choices = Vec::new();
    for action in Action::MOVES.into_iter().filter(|a| mask.allows(*a)) {
        let (dr, dc) = action.delta().expect("move");
        let v = obs.at(Channel::Pheromones, dr, dc);
        if v > best {
            best = v;
            choices.clear();
        }
        if v == best && v > 0.0 {
            choices.push(action);
        }
    }
    match choices.choose(rng) {
        Some(a) => Some(*a),
        None => random_move(mask, rng),
    }
}

pub struct GradientFollower {
    seed: u64,
    rng: ChaCha8Rng,
}

impl GradientFollower {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: controller_rng(seed, 11),
        }
    }
}

impl Controller for GradientFollower {
    fn name(&self) -> &str {
        "gradient"
    }

    fn reset(&mut self, _world: &GridWorld) {
        self.rng = controller_rng(self.seed, 11);
    }

    fn decide(&mut self, world: &GridWorld) -> Decisions {
        // only the four neighbours are read
        let fov = FovConfig { fov: 3 };
        let mut out = Decisions::new();
        for id in world.upcoming_order() {
            let agent = world.agent(id);
            if !agent.status.is_free() {
                continue;
            }
            let obs = extract_observation(world, id, fov);
            let action = gradient_follower_step(
                &obs,
                world.valid_actions(id),
                agent.carries_food(),
                home_vector(world, id),
                &mut self.rng,
            );
            if let Some(a) = action {
                out.insert(id, a);
            }
        }
        out
    }
}
