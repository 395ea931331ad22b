//! Beacon-relay navigation, after the Cardinality family.
//!
//! An empty agent that sees fewer than two beacons becomes one and never
//! moves again. Beacons relay hop counts to the nest and to food, one hop per
//! step. Walkers head for visible targets, else for the visible beacon with
//! the smallest relevant hop count, else wander.

use std::collections::BTreeSet;

use forage_core::{
    extract_observation, Action, ActionMask, AgentId, Cell, Channel, Controller, Decisions, FovConfig, GridWorld,
    ObservationTensor, Pos, StepOutcome, Target,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::common::{controller_rng, fov_step_toward, random_move};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BeaconState {
    pub is_beacon: bool,
    pub nest_hops: Option<u32>,
    pub food_hops: Option<u32>,
}

/// A beacon seen by a walker, at an offset from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VisibleBeacon {
    pub offset: (i32, i32),
    pub state: BeaconState,
}

/// Decision for a walker (non-beacon agent).
pub fn cardinality_mr_step(
    obs: &ObservationTensor,
    mask: ActionMask,
    carrying: bool,
    beacons: &[VisibleBeacon],
    exhausted: &dyn Fn(i32, i32) -> bool,
    rng: &mut impl Rng,
) -> Option<Action> {
    if mask.allows(Action::JoinQueue) {
        return Some(Action::JoinQueue);
    }
    let (channel, hops): (Channel, fn(&BeaconState) -> Option<u32>) = if carrying {
        (Channel::CacheEntries, |b| b.nest_hops)
    } else {
        (Channel::ResourceEntries, |b| b.food_hops)
    };
    let target = |r: i32, c: i32| obs.at(channel, r, c) == 1.0 && (carrying || !exhausted(r, c));
    let goal = |dr: i32, dc: i32| target(dr, dc) || Pos::new(dr, dc).neighbors4().iter().any(|p| target(p.row, p.col));
    if let Some(a) = fov_step_toward(obs, goal).filter(|a| mask.allows(*a)) {
        return Some(a);
    }
    let best = beacons
        .iter()
        .filter_map(|b| hops(&b.state).map(|h| (h, b.offset.0.abs().max(b.offset.1.abs()), b.offset)))
        .min();
    if let Some((_, dist, (br, bc))) = best {
        if dist > 1 {
            let beside = |dr: i32, dc: i32| (dr - br).abs().max((dc - bc).abs()) <= 1;
            if let Some(a) = fov_step_toward(obs, beside).filter(|a| mask.allows(*a)) {
                return Some(a);
            }
        }
    }
    random_move(mask, rng)
}

/// Hop count a beacon at `pos` derives from what it sees, given the previous
/// counts of the beacons in view.
fn relay(direct: bool, neighbours: impl Iterator<Item = Option<u32>>) -> Option<u32> {
    if direct {
        Some(0)
    } else {
        neighbours.flatten().min().map(|h| h + 1)
    }
}

pub struct CardinalityLike {
    seed: u64,
    rng: ChaCha8Rng,
    fov: FovConfig,
    states: Vec<BeaconState>,
    exhausted: Vec<BTreeSet<Pos>>,
}

impl CardinalityLike {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: controller_rng(seed, 13),
            fov: FovConfig::default(),
            states: Vec::new(),
            exhausted: Vec::new(),
        }
    }

    pub fn states(&self) -> &[BeaconState] {
        &self.states
    }

    pub fn beacon_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_beacon).count()
    }

    fn in_view(&self, a: Pos, b: Pos) -> bool {
        a.chebyshev(b) as i32 <= self.fov.radius()
    }

    fn beacons_near(&self, world: &GridWorld, pos: Pos, except: AgentId) -> Vec<VisibleBeacon> {
        world
            .agents()
            .iter()
            .filter(|a| a.id != except && self.states[a.id.index()].is_beacon && self.in_view(pos, a.pos))
            .map(|a| VisibleBeacon {
                offset: (a.pos.row - pos.row, a.pos.col - pos.col),
                state: self.states[a.id.index()],
            })
            .collect()
    }
}

impl Controller for CardinalityLike {
    fn name(&self) -> &str {
        "cardinality"
    }

    fn reset(&mut self, world: &GridWorld) {
        self.rng = controller_rng(self.seed, 13);
        self.states = vec![BeaconState::default(); world.agents().len()];
        self.exhausted = vec![BTreeSet::new(); world.agents().len()];
    }

    fn decide(&mut self, world: &GridWorld) -> Decisions {
        if self.states.len() != world.agents().len() {
            self.reset(world);
        }
        let mut out = Decisions::new();
        // claims are sequential in processing order, so each agent sees the
        // beacons claimed before it this step
        for id in world.upcoming_order() {
            let agent = world.agent(id);
            if !agent.status.is_free() || self.states[id.index()].is_beacon {
                continue;
            }
            let on_entry = matches!(world.cell(agent.pos), Some(Cell::QueueEntry(_)));
            let beacons = self.beacons_near(world, agent.pos, id);
            if beacons.len() < 2 && !on_entry && !agent.carries_food() {
                self.states[id.index()].is_beacon = true;
                continue;
            }
            let mask = world.valid_actions(id);
            if !agent.carries_food() && !mask.allows(Action::JoinQueue) {
                for t in world.entries_near(agent.pos) {
                    if let Some(node) = match t {
                        Target::Resource(r) => world.resource(r),
                        Target::Cache(_) => None,
                    } {
                        self.exhausted[id.index()].insert(node.entry);
                    }
                }
            }
            let obs = extract_observation(world, id, self.fov);
            let pos = agent.pos;
            let known = &self.exhausted[id.index()];
            let exhausted = |dr: i32, dc: i32| known.contains(&pos.offset(dr, dc));
            let action = cardinality_mr_step(&obs, mask, agent.carries_food(), &beacons, &exhausted, &mut self.rng);
            if let Some(a) = action {
                out.insert(id, a);
            }
        }
        out
    }

    /// Relays hop counts one hop per step from the previous step's values.
    fn observe(&mut self, world: &GridWorld, _outcome: &StepOutcome) {
        let previous = self.states.clone();
        let r = self.fov.radius();
        for a in world.agents() {
            if !previous[a.id.index()].is_beacon {
                continue;
            }
            let (mut sees_nest, mut sees_food) = (false, false);
            for dr in -r..=r {
                for dc in -r..=r {
                    match world.cell(a.pos.offset(dr, dc)) {
                        Some(Cell::NestBody | Cell::QueueEntry(Target::Cache(_))) => sees_nest = true,
                        Some(Cell::QueueEntry(Target::Resource(res))) => {
                            sees_food |= world.resource(res).is_some_and(|n| !n.is_depleted());
                        }
                        _ => {}
                    }
                }
            }
            let others: Vec<BeaconState> = world
                .agents()
                .iter()
                .filter(|b| b.id != a.id && previous[b.id.index()].is_beacon && self.in_view(a.pos, b.pos))
                .map(|b| previous[b.id.index()])
                .collect();
            let state = &mut self.states[a.id.index()];
            state.nest_hops = relay(sees_nest, others.iter().map(|b| b.nest_hops));
            state.food_hops = relay(sees_food, others.iter().map(|b| b.food_hops));
        }
    }
}
