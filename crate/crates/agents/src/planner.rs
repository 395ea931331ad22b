//! Centralised upper bound: greedy agent-to-target allocation with full
//! knowledge of the world, and per-agent shortest-path following.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use forage_core::{
    interaction_steps, Action, AgentEvent, AgentId, CacheId, Controller, Decisions, GridWorld, Pos, ResourceNode,
    StepOutcome, Target, LOAD_SCALE,
};
use rand_chacha::ChaCha8Rng;

use crate::common::{controller_rng, random_move};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unreachable;

/// A* on the 4-connected grid with unit costs and a Manhattan heuristic.
/// Agents are ignored. Ties are expanded in (f, row, col) order. The path
/// includes both ends, so `from == to` gives a one-cell path.
pub fn shortest_path(world: &GridWorld, from: Pos, to: Pos) -> Result<Vec<Pos>, Unreachable> {
    if !world.is_walkable(from) || !world.is_walkable(to) {
        return Err(Unreachable);
    }
    let w = world.width();
    let idx = |p: Pos| p.row as usize * w + p.col as usize;
    let mut g = vec![u32::MAX; w * world.height()];
    let mut parent: Vec<Option<Pos>> = vec![None; w * world.height()];
    let mut open = BinaryHeap::new();
    g[idx(from)] = 0;
    open.push(Reverse((from.manhattan(to), from.row, from.col)));
    while let Some(Reverse((f, row, col))) = open.pop() {
        let p = Pos::new(row, col);
        let gp = g[idx(p)];
        if f > gp + p.manhattan(to) {
            continue; // stale entry
        }
        if p == to {
            let mut path = vec![to];
            let mut cur = to;
            while let Some(prev) = parent[idx(cur)] {
                path.push(prev);
                cur = prev;
            }
            path.reverse();
            return Ok(path);
        }
        for q in p.neighbors4() {
            if world.is_walkable(q) && gp + 1 < g[idx(q)] {
                g[idx(q)] = gp + 1;
                parent[idx(q)] = Some(p);
                open.push(Reverse((gp + 1 + q.manhattan(to), q.row, q.col)));
            }
        }
    }
    Err(Unreachable)
}

/// Whole units a finite resource can still hand out, counting food already
/// moved into the loads of agents in its queue. `None` when unbounded.
pub fn claimable_units(world: &GridWorld, node: &ResourceNode) -> Option<u64> {
    let in_hand: u64 = node.queue.iter().map(|a| world.agent(*a).load).sum();
    node.remaining.map(|left| (left + in_hand).div_ceil(LOAD_SCALE))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Objective {
    /// Path length plus the expected wait behind queued and already assigned agents.
    #[default]
    ArrivalTime,
    /// Path length only.
    Distance,
}

/// Cached BFS distance fields from each target's entry.
#[derive(Clone, Debug, Default)]
pub struct DistanceCache {
    fields: BTreeMap<Target, Vec<Option<u32>>>,
}

impl DistanceCache {
    pub fn clear(&mut self) {
        self.fields.clear();
    }

    pub fn distance(&mut self, world: &GridWorld, target: Target, from: Pos) -> Option<u32> {
        let entry = world.entry_of(target)?;
        let field = self
            .fields
            .entry(target)
            .or_insert_with(|| world.distance_field(entry));
        world.distance_at(field, from)
    }
}

/// Greedy allocation. Repeatedly commits the (agent, target) pair with the
/// smallest `(cost, agent, target)` among agents in `pool`, where empty
/// agents are eligible for live resources with spare stock and carriers for
/// caches. `committed` holds assignments made earlier that still stand.
pub fn greedy_allocate(
    world: &GridWorld,
    pool: &[AgentId],
    committed: &BTreeMap<AgentId, Target>,
    objective: Objective,
    distances: &mut DistanceCache,
) -> BTreeMap<AgentId, Target> {
    let mut assigned: BTreeMap<Target, u64> = BTreeMap::new();
    for t in committed.values() {
        *assigned.entry(*t).or_default() += 1;
    }
    // spare stock: whole units not yet claimed by a queued or committed agent
    let mut slots: BTreeMap<Target, Option<u64>> = BTreeMap::new();
    let mut targets: Vec<Target> = Vec::new();
    for r in world.resources().filter(|r| !r.is_depleted()) {
        let t = Target::Resource(r.id);
        let claimed = r.queue.len() as u64 + assigned.get(&t).copied().unwrap_or(0);
        let spare = claimable_units(world, r).map(|u| u.saturating_sub(claimed));
        slots.insert(t, spare);
        targets.push(t);
    }
    targets.extend((0..4).map(|c| Target::Cache(CacheId(c))));

    let gather = interaction_steps(world.config().gather_rate);
    let dropoff = interaction_steps(world.config().dropoff_rate);
    let mut pairs: Vec<(AgentId, Target, u64)> = Vec::new();
    for &a in pool {
        let agent = world.agent(a);
        for &t in &targets {
            let eligible = match t {
                Target::Resource(_) => agent.load == 0,
                Target::Cache(_) => agent.load > 0,
            };
            if !eligible {
                continue;
            }
            if let Some(d) = distances.distance(world, t, agent.pos) {
                pairs.push((a, t, d as u64));
            }
        }
    }

    let mut out = BTreeMap::new();
    loop {
        let mut best: Option<(u64, AgentId, Target)> = None;
        for &(a, t, d) in &pairs {
            if out.contains_key(&a) || slots.get(&t).copied().flatten() == Some(0) {
                continue;
            }
            let cost = match objective {
                Objective::Distance => d,
                Objective::ArrivalTime => {
                    let ahead = world.queue_of(t).map_or(0, |q| q.len() as u64) + assigned.get(&t).copied().unwrap_or(0);
                    let duration = if matches!(t, Target::Resource(_)) { gather } else { dropoff };
                    d + ahead * duration
                }
            };
            let key = (cost, a, t);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let Some((_, a, t)) = best else { break };
        out.insert(a, t);
        *assigned.entry(t).or_default() += 1;
        if let Some(Some(s)) = slots.get_mut(&t) {
            *s -= 1;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub target: Target,
    pub path: Vec<Pos>,
}

/// Consecutive blocked moves after which an agent sidesteps.
const SIDESTEP_AFTER: u32 = 2;

pub struct PlannerController {
    seed: u64,
    rng: ChaCha8Rng,
    pub objective: Objective,
    assignments: BTreeMap<AgentId, Assignment>,
    blocked: BTreeMap<AgentId, u32>,
    distances: DistanceCache,
}

impl PlannerController {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: controller_rng(seed, 14),
            objective: Objective::ArrivalTime,
            assignments: BTreeMap::new(),
            blocked: BTreeMap::new(),
            distances: DistanceCache::default(),
        }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn assignments(&self) -> &BTreeMap<AgentId, Assignment> {
        &self.assignments
    }

    /// Drops assignments that no longer make sense: the agent queued, its
    /// load no longer matches the target, or the resource is gone.
    fn prune(&mut self, world: &GridWorld) {
        self.assignments.retain(|id, asg| {
            let agent = world.agent(*id);
            agent.status.is_free() && world.accepts(asg.target, agent.load)
        });
    }

    /// Whether one more agent can be sent to `target` without claiming more
    /// whole units than remain.
    fn has_spare(&self, world: &GridWorld, target: Target) -> bool {
        let Target::Resource(r) = target else { return true };
        let Some(node) = world.resource(r) else { return false };
        let Some(units) = claimable_units(world, node) else { return true };
        let assigned = self.assignments.values().filter(|a| a.target == target).count() as u64;
        units > node.queue.len() as u64 + assigned
    }

    fn allocate(&mut self, world: &GridWorld) {
        let pool: Vec<AgentId> = world
            .agents()
            .iter()
            .filter(|a| a.status.is_free() && !self.assignments.contains_key(&a.id))
            .map(|a| a.id)
            .collect();
        if pool.is_empty() {
            return;
        }
        let committed: BTreeMap<AgentId, Target> = self.assignments.iter().map(|(a, s)| (*a, s.target)).collect();
        let fresh = greedy_allocate(world, &pool, &committed, self.objective, &mut self.distances);
        for (a, target) in fresh {
            let from = world.agent(a).pos;
            let entry = world.entry_of(target).expect("allocated target exists");
            if let Ok(path) = shortest_path(world, from, entry) {
                self.assignments.insert(a, Assignment { target, path });
            }
        }
    }
}

impl Controller for PlannerController {
    fn name(&self) -> &str {
        "planner"
    }

    fn is_decentralized(&self) -> bool {
        false
    }

    fn reset(&mut self, _world: &GridWorld) {
        self.rng = controller_rng(self.seed, 14);
        self.assignments.clear();
        self.blocked.clear();
        self.distances.clear();
    }

    fn decide(&mut self, world: &GridWorld) -> Decisions {
        self.prune(world);
        self.allocate(world);
        let mut out = Decisions::new();
        let ids: Vec<AgentId> = self.assignments.keys().copied().collect();
        for id in ids {
            let pos = world.agent(id).pos;
            let mask = world.valid_actions(id);
            let target = self.assignments[&id].target;
            if mask.allows(Action::JoinQueue) {
                // the world sends a joiner to the shortest adjacent queue, which
                // may not be ours; take it only if that keeps the schedule sound
                match world.join_choice(pos, world.agent(id).load) {
                    Some(t) if t == target => {
                        out.insert(id, Action::JoinQueue);
                        continue;
                    }
                    Some(t) if world.entries_near(pos).any(|e| e == target) && self.has_spare(world, t) => {
                        self.assignments.get_mut(&id).expect("present").target = t;
                        out.insert(id, Action::JoinQueue);
                        continue;
                    }
                    _ => {}
                }
            }
            if self.blocked.get(&id).copied().unwrap_or(0) >= SIDESTEP_AFTER {
                self.blocked.remove(&id);
                if let Some(a) = random_move(mask, &mut self.rng) {
                    out.insert(id, a);
                }
                continue;
            }
            let on_path = self.assignments[&id].path.iter().position(|p| *p == pos);
            let next = match on_path {
                Some(i) => self.assignments[&id].path.get(i + 1).copied(),
                None => {
                    let entry = world.entry_of(target).expect("pruned");
                    match shortest_path(world, pos, entry) {
                        Ok(path) => {
                            let next = path.get(1).copied();
                            self.assignments.get_mut(&id).expect("present").path = path;
                            next
                        }
                        Err(Unreachable) => {
                            self.assignments.remove(&id);
                            None
                        }
                    }
                }
            };
            if let Some(n) = next {
                if let Some(a) = Action::from_delta(n.row - pos.row, n.col - pos.col) {
                    out.insert(id, a);
                }
            }
        }
        out
    }

    fn observe(&mut self, _world: &GridWorld, outcome: &StepOutcome) {
        if !outcome.respawned.is_empty() {
            self.distances.clear();
        }
        for (id, event) in &outcome.events {
            match event {
                AgentEvent::Blocked => *self.blocked.entry(*id).or_default() += 1,
                AgentEvent::Moved { .. } => {
                    self.blocked.remove(id);
                }
                _ => {}
            }
        }
    }
}
