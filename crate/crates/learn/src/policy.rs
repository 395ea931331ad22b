//! Decentralised controller running a trained network.

use forage_core::{extract_observation, Controller, Decisions, FovConfig, GridWorld};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::filter::{sample_action, SampleMode};
use crate::net::{Network, Recurrent};

/// Every agent samples from the shared policy with its own recurrent
/// state. Invalid draws are sent to the world, which absorbs them.
pub struct PolicyController {
    net: Network,
    seed: u64,
    rng: ChaCha8Rng,
    states: Vec<Recurrent>,
    pub mode: SampleMode,
}

fn policy_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(15);
    rng
}

impl PolicyController {
    pub fn new(net: Network, seed: u64) -> Self {
        Self {
            net,
            seed,
            rng: policy_rng(seed),
            states: Vec::new(),
            mode: SampleMode::Test,
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }
}

impl Controller for PolicyController {
    fn name(&self) -> &str {
        "learned"
    }

    fn reset(&mut self, world: &GridWorld) {
        self.rng = policy_rng(self.seed);
        self.states = (0..world.agents().len()).map(|_| self.net.initial_state()).collect();
    }

    fn decide(&mut self, world: &GridWorld) -> Decisions {
        if self.states.len() != world.agents().len() {
            self.reset(world);
        }
        let fov = FovConfig { fov: self.net.spec().fov };
        let mut out = Decisions::new();
        for id in world.agent_ids() {
            if !world.agent(id).status.is_free() {
                continue;
            }
            let obs = extract_observation(world, id, fov);
            let step = self
                .net
                .step(obs.data(), &mut self.states[id.index()])
                .expect("observation matches the network's fov");
            let mask = world.valid_actions(id);
            if let Some(a) = sample_action(&step.probs, mask, self.mode, &mut self.rng).enacted {
                out.insert(id, a);
            }
        }
        out
    }
}
