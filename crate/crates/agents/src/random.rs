//! Lower-bound control: random walk that always takes a valid queue.

use forage_core::{Action, ActionMask, Controller, Decisions, GridWorld};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::common::{controller_rng, random_move};

/// `JoinQueue` whenever valid, otherwise a uniform valid move, otherwise stay.
pub fn random_walk_step(mask: ActionMask, rng: &mut impl Rng) -> Option<Action> {
    if mask.allows(Action::JoinQueue) {
        return Some(Action::JoinQueue);
    }
    random_move(mask, rng)
}

pub struct RandomWalk {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomWalk {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: controller_rng(seed, 10),
        }
    }
}

impl Controller for RandomWalk {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, _world: &GridWorld) {
        self.rng = controller_rng(self.seed, 10);
    }

    fn decide(&mut self, world: &GridWorld) -> Decisions {
        let mut out = Decisions::new();
        for id in world.upcoming_order() {
            if !world.agent(id).status.is_free() {
                continue;
            }
            if let Some(a) = random_walk_step(world.valid_actions(id), &mut self.rng) {
                out.insert(id, a);
            }
        }
        out
    }
}
