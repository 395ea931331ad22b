//! Grid world: terrain, nest, resources, agents, queues and the step loop.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{rate_units, Capacity, WorldConfig, LOAD_SCALE};
use crate::error::WorldError;
use crate::geom::{Action, ActionMask, Pos};
use crate::pheromone::{PheromoneField, PheromoneParams};

const MAX_PLACEMENT_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheId(pub u8);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent#{}", self.0)
    }
}

/// Something an agent can queue at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Resource(ResourceId),
    Cache(CacheId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Obstacle,
    ResourceBody(ResourceId),
    NestBody,
    /// Walkable cell from which agents join the queue of `Target`.
    QueueEntry(Target),
}

impl Cell {
    pub fn is_walkable(self) -> bool {
        matches!(self, Cell::Empty | Cell::QueueEntry(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResourceNode {
    pub id: ResourceId,
    pub body: Pos,
    pub entry: Pos,
    /// Remaining food in `LOAD_SCALE` units; `None` for infinite resources.
    pub remaining: Option<u64>,
    pub capacity: Capacity,
    pub queue: VecDeque<AgentId>,
}

impl ResourceNode {
    pub fn is_depleted(&self) -> bool {
        self.remaining == Some(0)
    }

    /// Remaining food in units (infinite resources report `f64::INFINITY`).
    pub fn remaining_units(&self) -> f64 {
        self.remaining
            .map_or(f64::INFINITY, |r| r as f64 / LOAD_SCALE as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheNode {
    pub id: CacheId,
    pub entry: Pos,
    pub queue: VecDeque<AgentId>,
}

/// The 2x2 central nest with one cache entry beside each side.
#[derive(Clone, Debug, PartialEq)]
pub struct NestNode {
    pub origin: Pos,
    pub caches: [CacheNode; 4],
    /// Completed deposits; never decreases.
    pub total_deposited: u64,
}

impl NestNode {
    fn new(origin: Pos) -> Self {
        let entries = nest_cache_entries(origin);
        let caches = std::array::from_fn(|i| CacheNode {
            id: CacheId(i as u8),
            entry: entries[i],
            queue: VecDeque::new(),
        });
        Self {
            origin,
            caches,
            total_deposited: 0,
        }
    }

    pub fn body_cells(&self) -> [Pos; 4] {
        nest_body_cells(self.origin)
    }

    pub fn cache_entries(&self) -> [Pos; 4] {
        nest_cache_entries(self.origin)
    }

    /// Geometric centre of the 2x2 block, in (row, col) cell coordinates.
    pub fn center(&self) -> (f64, f64) {
        (self.origin.row as f64 + 0.5, self.origin.col as f64 + 0.5)
    }
}

pub fn nest_body_cells(origin: Pos) -> [Pos; 4] {
    [
        origin,
        origin.offset(0, 1),
        origin.offset(1, 0),
        origin.offset(1, 1),
    ]
}

/// Cache entries in N, E, S, W order, each beside one side of the block.
pub fn nest_cache_entries(origin: Pos) -> [Pos; 4] {
    [
        origin.offset(-1, 0),
        origin.offset(0, 2),
        origin.offset(2, 1),
        origin.offset(1, -1),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentStatus {
    Free,
    Queued(Target),
    Interacting { target: Target, steps_remaining: u64 },
}

impl AgentStatus {
    pub fn is_free(self) -> bool {
        self == AgentStatus::Free
    }

    pub fn target(self) -> Option<Target> {
        match self {
            AgentStatus::Free => None,
            AgentStatus::Queued(t) | AgentStatus::Interacting { target: t, .. } => Some(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    /// Current cell; for queued agents, the cell they joined from.
    pub pos: Pos,
    /// Carried food in `LOAD_SCALE` units.
    pub load: u64,
    pub status: AgentStatus,
    /// Step of the last completed harvest; cleared by a completed deposit.
    pub harvest_step: Option<u64>,
    /// Index of the controller this agent is bound to.
    pub controller: u16,
    joined_at: Option<u64>,
}

impl AgentState {
    pub fn load_fraction(&self) -> f64 {
        self.load as f64 / LOAD_SCALE as f64
    }

    pub fn is_empty(&self) -> bool {
        self.load == 0
    }

    pub fn is_full(&self) -> bool {
        self.load == LOAD_SCALE
    }

    /// Partial loads route like full ones.
    pub fn carries_food(&self) -> bool {
        self.load > 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JoinRejection {
    /// Only entries for the other kind of target are within reach.
    WrongType,
    /// No queue entry is within reach.
    NoQueue,
    /// The only compatible resource is exhausted.
    Depleted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentEvent {
    Moved { from: Pos, to: Pos },
    Blocked,
    /// Free agent with no action this step.
    Idle,
    Joined(Target),
    RejectedJoin(JoinRejection),
    /// Waiting in line or mid-interaction.
    QueuedWait,
    HarvestComplete(ResourceId),
    /// The resource ran out before the load was full; released with a partial load.
    HarvestInterrupted(ResourceId),
    DepositComplete(CacheId),
    /// Dropped from the queue of a depleted resource.
    Released(Target),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct StepOutcome {
    /// Clock value during this step.
    pub step: u64,
    /// Permutation in which agents were processed.
    pub order: Vec<AgentId>,
    pub events: Vec<(AgentId, AgentEvent)>,
    /// `(depleted, replacement)` pairs.
    pub respawned: Vec<(ResourceId, ResourceId)>,
    pub depleted: Vec<ResourceId>,
}

impl StepOutcome {
    pub fn events_for(&self, agent: AgentId) -> impl Iterator<Item = AgentEvent> + '_ {
        self.events
            .iter()
            .filter(move |(a, _)| *a == agent)
            .map(|(_, e)| *e)
    }

    pub fn deposits(&self) -> usize {
        self.events
            .iter()
            .filter(|(_, e)| matches!(e, AgentEvent::DepositComplete(_)))
            .count()
    }
}

/// Cumulative food accounting in `LOAD_SCALE` units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FoodLedger {
    pub harvested_units: u64,
    pub deposited_units: u64,
    pub harvest_completions: u64,
    pub deposit_completions: u64,
}

/// Serializable initial state of a world.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldLayout {
    pub width: usize,
    pub height: usize,
    pub nest_origin: Pos,
    pub obstacles: Vec<Pos>,
    pub resources: Vec<ResourceSpec>,
    pub agents: Vec<Pos>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResourceSpec {
    pub id: ResourceId,
    pub body: Pos,
    pub entry: Pos,
    pub capacity: Capacity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridWorld {
    config: WorldConfig,
    cells: Vec<Cell>,
    nest: NestNode,
    resources: BTreeMap<ResourceId, ResourceNode>,
    next_resource_id: u32,
    agents: Vec<AgentState>,
    occupancy: Vec<Option<AgentId>>,
    clock: u64,
    rng: ChaCha8Rng,
    field: PheromoneField,
    pheromone: PheromoneParams,
    ledger: FoodLedger,
}

impl GridWorld {
    /// Random world: central nest, resources, obstacles and a team spawned
    /// around the nest, all drawn from `config.rng_seed`.
    pub fn generate(config: &WorldConfig) -> Result<GridWorld, WorldError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut last_err = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            match try_generate_layout(config, &mut rng) {
                Ok(layout) => return GridWorld::from_layout(config, &layout),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| {
            WorldError::PlacementInfeasible("no placement attempts made".into())
        }))
    }

    /// Builds a world from an explicit layout. Dynamics randomness (agent
    /// order, respawns, pheromone noise) is seeded from `config.rng_seed`.
    pub fn from_layout(config: &WorldConfig, layout: &WorldLayout) -> Result<GridWorld, WorldError> {
        let bad = |msg: String| Err(WorldError::InvalidLayout(msg));
        let config = WorldConfig {
            width: layout.width,
            height: layout.height,
            ..config.clone()
        };
        config.validate()?;
        let (w, h) = (layout.width, layout.height);
        let mut cells = vec![Cell::Empty; w * h];
        let in_bounds =
            |p: Pos| p.row >= 0 && p.col >= 0 && (p.row as usize) < h && (p.col as usize) < w;
        let idx = |p: Pos| p.row as usize * w + p.col as usize;

        let claim = |cells: &mut Vec<Cell>, p: Pos, cell: Cell, what: &str| {
            if !in_bounds(p) {
                return Err(WorldError::InvalidLayout(format!("{what} at {p} is out of bounds")));
            }
            if cells[idx(p)] != Cell::Empty {
                return Err(WorldError::InvalidLayout(format!("{what} at {p} overlaps another entity")));
            }
            cells[idx(p)] = cell;
            Ok(())
        };

        let nest = NestNode::new(layout.nest_origin);
        for p in nest.body_cells() {
            claim(&mut cells, p, Cell::NestBody, "nest")?;
        }
        for cache in &nest.caches {
            claim(&mut cells, cache.entry, Cell::QueueEntry(Target::Cache(cache.id)), "cache entry")?;
        }

        let mut resources = BTreeMap::new();
        let mut next_resource_id = 0;
        for spec in &layout.resources {
            if resources.contains_key(&spec.id) {
                return bad(format!("duplicate resource id {}", spec.id.0));
            }
            if !spec.body.is_orthogonally_adjacent(spec.entry) {
                return bad(format!("resource {} entry is not beside its body", spec.id.0));
            }
            claim(&mut cells, spec.body, Cell::ResourceBody(spec.id), "resource")?;
            claim(
                &mut cells,
                spec.entry,
                Cell::QueueEntry(Target::Resource(spec.id)),
                "resource entry",
            )?;
            resources.insert(
                spec.id,
                ResourceNode {
                    id: spec.id,
                    body: spec.body,
                    entry: spec.entry,
                    remaining: spec.capacity.scaled(),
                    capacity: spec.capacity,
                    queue: VecDeque::new(),
                },
            );
            next_resource_id = next_resource_id.max(spec.id.0 + 1);
        }
        for &p in &layout.obstacles {
            claim(&mut cells, p, Cell::Obstacle, "obstacle")?;
        }

        let mut occupancy = vec![None; w * h];
        let mut agents = Vec::with_capacity(layout.agents.len());
        for (i, &p) in layout.agents.iter().enumerate() {
            if !in_bounds(p) || !cells[idx(p)].is_walkable() {
                return bad(format!("agent {i} at {p} is not on a walkable cell"));
            }
            if occupancy[idx(p)].is_some() {
                return bad(format!("agent {i} at {p} shares a cell"));
            }
            let id = AgentId(i as u32);
            occupancy[idx(p)] = Some(id);
            agents.push(AgentState {
                id,
                pos: p,
                load: 0,
                status: AgentStatus::Free,
                harvest_step: None,
                controller: 0,
                joined_at: None,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(1);
        Ok(GridWorld {
            field: PheromoneField::new(w, h, config.rng_seed),
            config,
            cells,
            nest,
            resources,
            next_resource_id,
            agents,
            occupancy,
            clock: 0,
            rng,
            pheromone: PheromoneParams::default(),
            ledger: FoodLedger::default(),
        })
    }

    pub fn layout(&self) -> WorldLayout {
        let mut obstacles = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if *c == Cell::Obstacle {
                obstacles.push(self.pos_of(i));
            }
        }
        WorldLayout {
            width: self.width(),
            height: self.height(),
            nest_origin: self.nest.origin,
            obstacles,
            resources: self
                .resources
                .values()
                .map(|r| ResourceSpec {
                    id: r.id,
                    body: r.body,
                    entry: r.entry,
                    capacity: r.capacity,
                })
                .collect(),
            agents: self.agents.iter().map(|a| a.pos).collect(),
        }
    }

    // ----- accessors -------------------------------------------------------

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.config.width
    }

    pub fn height(&self) -> usize {
        self.config.height
    }

    /// Number of completed steps; also the index of the next step.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.row >= 0 && p.col >= 0 && (p.row as usize) < self.height() && (p.col as usize) < self.width()
    }

    fn idx(&self, p: Pos) -> usize {
        p.row as usize * self.width() + p.col as usize
    }

    fn pos_of(&self, i: usize) -> Pos {
        Pos::new((i / self.width()) as i32, (i % self.width()) as i32)
    }

    pub fn cell(&self, p: Pos) -> Option<Cell> {
        self.in_bounds(p).then(|| self.cells[self.idx(p)])
    }

    pub fn is_walkable(&self, p: Pos) -> bool {
        self.cell(p).is_some_and(Cell::is_walkable)
    }

    /// Free agent standing on `p`, if any. Queued agents occupy no cell.
    pub fn occupant(&self, p: Pos) -> Option<AgentId> {
        if self.in_bounds(p) {
            self.occupancy[self.idx(p)]
        } else {
            None
        }
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &AgentState {
        &self.agents[id.index()]
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents.iter().map(|a| a.id)
    }

    pub fn set_controller(&mut self, id: AgentId, controller: u16) {
        self.agents[id.index()].controller = controller;
    }

    pub fn resources(&self) -> impl Iterator<Item = &ResourceNode> {
        self.resources.values()
    }

    pub fn resource(&self, id: ResourceId) -> Option<&ResourceNode> {
        self.resources.get(&id)
    }

    pub fn nest(&self) -> &NestNode {
        &self.nest
    }

    pub fn cache(&self, id: CacheId) -> &CacheNode {
        &self.nest.caches[id.0 as usize]
    }

    pub fn entry_of(&self, target: Target) -> Option<Pos> {
        match target {
            Target::Resource(r) => self.resources.get(&r).map(|r| r.entry),
            Target::Cache(c) => Some(self.cache(c).entry),
        }
    }

    pub fn queue_of(&self, target: Target) -> Option<&VecDeque<AgentId>> {
        match target {
            Target::Resource(r) => self.resources.get(&r).map(|r| &r.queue),
            Target::Cache(c) => Some(&self.cache(c).queue),
        }
    }

    pub fn field(&self) -> &PheromoneField {
        &self.field
    }

    pub fn field_mut(&mut self) -> &mut PheromoneField {
        &mut self.field
    }

    pub fn pheromone_params(&self) -> &PheromoneParams {
        &self.pheromone
    }

    pub fn set_pheromone_params(&mut self, params: PheromoneParams) {
        assert!(params.is_valid(), "pheromone parameters out of range");
        self.pheromone = params;
    }

    pub fn ledger(&self) -> FoodLedger {
        self.ledger
    }

    /// Food delivered to the nest, in units.
    pub fn deposited_food(&self) -> f64 {
        self.ledger.deposited_units as f64 / LOAD_SCALE as f64
    }

    /// Exact food balance: everything harvested is either at the nest or
    /// carried by an agent.
    pub fn food_is_conserved(&self) -> bool {
        let carried: u64 = self.agents.iter().map(|a| a.load).sum();
        self.ledger.harvested_units == self.ledger.deposited_units + carried
            && self.ledger.deposit_completions == self.nest.total_deposited
    }

    /// Whether `target` currently accepts an agent with the given load.
    pub fn accepts(&self, target: Target, load: u64) -> bool {
        match target {
            Target::Resource(r) => load == 0 && self.resources.get(&r).is_some_and(|r| !r.is_depleted()),
            Target::Cache(_) => load > 0,
        }
    }

    /// Queue entries on or orthogonally beside `p`, scanning self, N, S, E, W.
    pub fn entries_near(&self, p: Pos) -> impl Iterator<Item = Target> + '_ {
        std::iter::once(p)
            .chain(p.neighbors4())
            .filter_map(|q| match self.cell(q) {
                Some(Cell::QueueEntry(t)) => Some(t),
                _ => None,
            })
    }

    /// Queue a `JoinQueue` from `p` with `load` would enter: the shortest
    /// accepting queue, first in scan order on ties.
    pub fn join_choice(&self, p: Pos, load: u64) -> Option<Target> {
        let mut best: Option<(usize, Target)> = None;
        for target in self.entries_near(p).filter(|t| self.accepts(*t, load)) {
            let len = self.queue_of(target).map_or(0, VecDeque::len);
            if best.is_none_or(|(l, _)| len < l) {
                best = Some((len, target));
            }
        }
        best.map(|(_, t)| t)
    }

    fn can_enter(&self, p: Pos) -> bool {
        self.is_walkable(p) && self.occupant(p).is_none()
    }

    /// Validity of each action for a free agent. Non-free agents get an
    /// all-false mask.
    pub fn valid_actions(&self, id: AgentId) -> ActionMask {
        let agent = self.agent(id);
        let mut mask = ActionMask::NONE_VALID;
        if !agent.status.is_free() {
            return mask;
        }
        for action in Action::MOVES {
            let (dr, dc) = action.delta().expect("move");
            mask.set(action, self.can_enter(agent.pos.offset(dr, dc)));
        }
        let join = self.entries_near(agent.pos).any(|t| self.accepts(t, agent.load));
        mask.set(Action::JoinQueue, join);
        mask
    }

    /// The permutation the next [`GridWorld::step`] will process agents in.
    pub fn upcoming_order(&self) -> Vec<AgentId> {
        let mut rng = self.rng.clone();
        let mut order: Vec<AgentId> = self.agent_ids().collect();
        order.shuffle(&mut rng);
        order
    }

    // ----- dynamics --------------------------------------------------------

    /// Advances the world by one step. Free agents missing from `actions`
    /// idle; actions for queued agents are ignored.
    ///
    /// The only error is a failed respawn on a saturated world.
    pub fn step(&mut self, actions: &BTreeMap<AgentId, Action>) -> Result<StepOutcome, WorldError> {
        let now = self.clock;
        let mut order: Vec<AgentId> = self.agent_ids().collect();
        order.shuffle(&mut self.rng);

        let mut events = Vec::with_capacity(self.agents.len());
        let mut joined = BTreeSet::new();
        for &id in &order {
            if !self.agent(id).status.is_free() {
                continue;
            }
            let event = match actions.get(&id) {
                None => AgentEvent::Idle,
                Some(&action) => self.apply_action(id, action, now),
            };
            if matches!(event, AgentEvent::Joined(_)) {
                joined.insert(id);
            }
            events.push((id, event));
        }

        let mut depleted = Vec::new();
        self.advance_queues(now, &joined, &mut events, &mut depleted);

        let mut respawned = Vec::new();
        if self.config.respawn_on_depletion {
            let exhausted: Vec<ResourceId> = self
                .resources
                .values()
                .filter(|r| r.is_depleted() && r.queue.is_empty())
                .map(|r| r.id)
                .collect();
            for old in exhausted {
                let new = self.respawn_resource(old)?;
                respawned.push((old, new));
            }
        }

        for i in 0..self.agents.len() {
            let a = &self.agents[i];
            if a.status.is_free() && a.is_full() {
                if let Some(h) = a.harvest_step {
                    self.field.deposit(a.pos, now, h, &self.pheromone);
                }
            }
        }
        self.field.decay_step(&self.pheromone);
        self.field.tick_wipeout();
        self.clock += 1;

        Ok(StepOutcome {
            step: now,
            order,
            events,
            respawned,
            depleted,
        })
    }

    fn apply_action(&mut self, id: AgentId, action: Action, now: u64) -> AgentEvent {
        let pos = self.agent(id).pos;
        if let Some((dr, dc)) = action.delta() {
            let to = pos.offset(dr, dc);
            if !self.can_enter(to) {
                return AgentEvent::Blocked;
            }
            let (from_i, to_i) = (self.idx(pos), self.idx(to));
            self.occupancy[from_i] = None;
            self.occupancy[to_i] = Some(id);
            self.agents[id.index()].pos = to;
            return AgentEvent::Moved { from: pos, to };
        }

        let load = self.agent(id).load;
        let Some(target) = self.join_choice(pos, load) else {
            let near: Vec<Target> = self.entries_near(pos).collect();
            let reason = if load == 0 && near.iter().any(|t| matches!(t, Target::Resource(_))) {
                JoinRejection::Depleted
            } else if !near.is_empty() {
                JoinRejection::WrongType
            } else {
                JoinRejection::NoQueue
            };
            return AgentEvent::RejectedJoin(reason);
        };
        let i = self.idx(pos);
        self.occupancy[i] = None;
        let agent = &mut self.agents[id.index()];
        agent.status = AgentStatus::Queued(target);
        agent.joined_at = Some(now);
        self.queue_mut(target).push_back(id);
        AgentEvent::Joined(target)
    }

    fn queue_mut(&mut self, target: Target) -> &mut VecDeque<AgentId> {
        match target {
            Target::Resource(r) => &mut self.resources.get_mut(&r).expect("live resource").queue,
            Target::Cache(c) => &mut self.nest.caches[c.0 as usize].queue,
        }
    }

    /// Serves the head of every queue once. Agents that joined during this
    /// step wait until the next one.
    fn advance_queues(
        &mut self,
        now: u64,
        joined: &BTreeSet<AgentId>,
        events: &mut Vec<(AgentId, AgentEvent)>,
        depleted: &mut Vec<ResourceId>,
    ) {
        let mut targets: Vec<Target> = self.resources.keys().map(|&r| Target::Resource(r)).collect();
        targets.extend((0..4).map(|c| Target::Cache(CacheId(c))));

        for target in targets {
            let queue: Vec<AgentId> = self.queue_of(target).map(|q| q.iter().copied().collect()).unwrap_or_default();
            let Some(&head) = queue.first() else { continue };
            let waiting = |events: &mut Vec<(AgentId, AgentEvent)>, agents: &[AgentId]| {
                for &a in agents {
                    if !joined.contains(&a) {
                        events.push((a, AgentEvent::QueuedWait));
                    }
                }
            };
            if joined.contains(&head) {
                waiting(events, &queue[1..]);
                continue;
            }
            match target {
                Target::Resource(r) => {
                    let finished = self.serve_gather(head, r, now);
                    match finished {
                        GatherResult::Continuing => {
                            events.push((head, AgentEvent::QueuedWait));
                        }
                        GatherResult::Full => {
                            events.push((head, AgentEvent::HarvestComplete(r)));
                            self.queue_mut(target).pop_front();
                            self.release(head, target);
                        }
                        GatherResult::Interrupted => {
                            events.push((head, AgentEvent::HarvestInterrupted(r)));
                            self.queue_mut(target).pop_front();
                            self.release(head, target);
                        }
                    }
                    if self.resources[&r].is_depleted() {
                        depleted.push(r);
                        let rest: Vec<AgentId> = self.queue_mut(target).drain(..).collect();
                        for a in rest {
                            events.push((a, AgentEvent::Released(target)));
                            self.release(a, target);
                        }
                    } else {
                        waiting(events, &queue[1..]);
                    }
                }
                Target::Cache(c) => {
                    if self.serve_deposit(head, c) {
                        events.push((head, AgentEvent::DepositComplete(c)));
                        self.queue_mut(target).pop_front();
                        self.release(head, target);
                    } else {
                        events.push((head, AgentEvent::QueuedWait));
                    }
                    waiting(events, &queue[1..]);
                }
            }
        }
    }

    fn serve_gather(&mut self, id: AgentId, r: ResourceId, now: u64) -> GatherResult {
        let inc = rate_units(self.config.gather_rate);
        let resource = self.resources.get_mut(&r).expect("live resource");
        let agent = &mut self.agents[id.index()];
        let mut amount = inc.min(LOAD_SCALE - agent.load);
        if let Some(rem) = resource.remaining {
            amount = amount.min(rem);
            resource.remaining = Some(rem - amount);
        }
        agent.load += amount;
        self.ledger.harvested_units += amount;
        let target = Target::Resource(r);
        if agent.load == LOAD_SCALE {
            agent.harvest_step = Some(now);
            self.ledger.harvest_completions += 1;
            GatherResult::Full
        } else if resource.is_depleted() {
            GatherResult::Interrupted
        } else {
            agent.status = AgentStatus::Interacting {
                target,
                steps_remaining: (LOAD_SCALE - agent.load).div_ceil(inc),
            };
            GatherResult::Continuing
        }
    }

    fn serve_deposit(&mut self, id: AgentId, c: CacheId) -> bool {
        let inc = rate_units(self.config.dropoff_rate);
        let agent = &mut self.agents[id.index()];
        let amount = inc.min(agent.load);
        agent.load -= amount;
        self.ledger.deposited_units += amount;
        if agent.load == 0 {
            agent.harvest_step = None;
            self.nest.total_deposited += 1;
            self.ledger.deposit_completions += 1;
            true
        } else {
            agent.status = AgentStatus::Interacting {
                target: Target::Cache(c),
                steps_remaining: agent.load.div_ceil(inc),
            };
            false
        }
    }

    /// Puts a queued agent back on the grid at the target's entry, or the
    /// nearest free cell found by scanning rings of growing radius row-major.
    fn release(&mut self, id: AgentId, target: Target) {
        let entry = match target {
            Target::Resource(r) => self.resources[&r].entry,
            Target::Cache(c) => self.cache(c).entry,
        };
        let spot = self
            .nearest_free_cell(entry)
            .expect("world has more walkable cells than agents");
        let i = self.idx(spot);
        self.occupancy[i] = Some(id);
        let agent = &mut self.agents[id.index()];
        agent.pos = spot;
        agent.status = AgentStatus::Free;
        agent.joined_at = None;
    }

    fn nearest_free_cell(&self, center: Pos) -> Option<Pos> {
        let max_r = self.width().max(self.height()) as i32;
        for r in 0..=max_r {
            for row in center.row - r..=center.row + r {
                for col in center.col - r..=center.col + r {
                    let p = Pos::new(row, col);
                    if p.chebyshev(center) == r as u32 && self.can_enter(p) {
                        return Some(p);
                    }
                }
            }
        }
        None
    }

    /// Replaces an exhausted resource with a fresh one at a random free
    /// location reachable from the nest. Returns the new resource's id.
    pub fn respawn_resource(&mut self, depleted: ResourceId) -> Result<ResourceId, WorldError> {
        let node = self
            .resources
            .get(&depleted)
            .ok_or(WorldError::RespawnPrecondition(depleted.0, "unknown resource"))?;
        if !self.config.respawn_on_depletion {
            return Err(WorldError::RespawnPrecondition(depleted.0, "respawn disabled"));
        }
        if !node.is_depleted() || !node.queue.is_empty() {
            return Err(WorldError::RespawnPrecondition(depleted.0, "resource still active"));
        }
        let (body, entry) = (node.body, node.entry);
        self.resources.remove(&depleted);
        let (bi, ei) = (self.idx(body), self.idx(entry));
        self.cells[bi] = Cell::Empty;
        self.cells[ei] = Cell::Empty;

        let id = ResourceId(self.next_resource_id);
        let mut candidates: Vec<(Pos, Pos)> = Vec::new();
        let forbidden = nest_ring(self.nest.origin);
        for i in 0..self.cells.len() {
            let b = self.pos_of(i);
            if self.cells[i] != Cell::Empty || self.occupancy[i].is_some() || forbidden.contains(&b) {
                continue;
            }
            for e in b.neighbors4() {
                if self.cell(e) == Some(Cell::Empty)
                    && self.occupant(e).is_none()
                    && !forbidden.contains(&e)
                {
                    candidates.push((b, e));
                }
            }
        }
        candidates.shuffle(&mut self.rng);
        for (b, e) in candidates {
            let (bi, ei) = (self.idx(b), self.idx(e));
            self.cells[bi] = Cell::ResourceBody(id);
            self.cells[ei] = Cell::QueueEntry(Target::Resource(id));
            if self.entries_connected() {
                self.next_resource_id += 1;
                let capacity = self.config.resource_capacity;
                self.resources.insert(
                    id,
                    ResourceNode {
                        id,
                        body: b,
                        entry: e,
                        remaining: capacity.scaled(),
                        capacity,
                        queue: VecDeque::new(),
                    },
                );
                return Ok(id);
            }
            self.cells[bi] = Cell::Empty;
            self.cells[ei] = Cell::Empty;
        }
        Err(WorldError::NoFreeCell(depleted.0))
    }

    /// Every queue entry and every free agent lies in one walkable component.
    fn entries_connected(&self) -> bool {
        let reach = reachable_from(&self.cells, self.width(), self.height(), self.nest.caches[0].entry);
        let entries_ok = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, Cell::QueueEntry(_)))
            .all(|(i, _)| reach[i]);
        entries_ok
            && self
                .agents
                .iter()
                .filter(|a| a.status.is_free())
                .all(|a| reach[self.idx(a.pos)])
    }

    /// Walkable-cell BFS distances (in moves) from `from`, ignoring agents.
    pub fn distance_field(&self, from: Pos) -> Vec<Option<u32>> {
        let (w, h) = (self.width(), self.height());
        let mut dist = vec![None; w * h];
        if !self.is_walkable(from) {
            return dist;
        }
        let mut queue = VecDeque::from([from]);
        dist[self.idx(from)] = Some(0);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.idx(p)].expect("visited");
            for q in p.neighbors4() {
                if self.is_walkable(q) && dist[self.idx(q)].is_none() {
                    dist[self.idx(q)] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    pub fn distance_at(&self, field: &[Option<u32>], p: Pos) -> Option<u32> {
        if self.in_bounds(p) {
            field[self.idx(p)]
        } else {
            None
        }
    }
}

enum GatherResult {
    Continuing,
    Full,
    Interrupted,
}

/// Cells within one step (Chebyshev) of the nest block; kept clear so every
/// cache stays reachable.
fn nest_ring(origin: Pos) -> BTreeSet<Pos> {
    let mut ring = BTreeSet::new();
    for dr in -1..=2 {
        for dc in -1..=2 {
            ring.insert(origin.offset(dr, dc));
        }
    }
    ring
}

fn reachable_from(cells: &[Cell], w: usize, h: usize, start: Pos) -> Vec<bool> {
    let mut seen = vec![false; w * h];
    let inb = |p: Pos| p.row >= 0 && p.col >= 0 && (p.row as usize) < h && (p.col as usize) < w;
    let idx = |p: Pos| p.row as usize * w + p.col as usize;
    if !inb(start) || !cells[idx(start)].is_walkable() {
        return seen;
    }
    seen[idx(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for q in p.neighbors4() {
            if inb(q) && !seen[idx(q)] && cells[idx(q)].is_walkable() {
                seen[idx(q)] = true;
                queue.push_back(q);
            }
        }
    }
    seen
}

fn try_generate_layout(config: &WorldConfig, rng: &mut ChaCha8Rng) -> Result<WorldLayout, WorldError> {
    let (w, h) = (config.width, config.height);
    let idx = |p: Pos| p.row as usize * w + p.col as usize;
    let inb = |p: Pos| p.row >= 0 && p.col >= 0 && (p.row as usize) < h && (p.col as usize) < w;
    let mut cells = vec![Cell::Empty; w * h];
    let origin = Pos::new(h as i32 / 2 - 1, w as i32 / 2 - 1);
    for p in nest_body_cells(origin) {
        cells[idx(p)] = Cell::NestBody;
    }
    for (i, p) in nest_cache_entries(origin).into_iter().enumerate() {
        cells[idx(p)] = Cell::QueueEntry(Target::Cache(CacheId(i as u8)));
    }
    let ring = nest_ring(origin);

    // resources: a body with one orthogonal entry, both outside the nest ring
    let mut resources = Vec::with_capacity(config.num_resources);
    let mut bodies: Vec<Pos> = (0..w * h)
        .map(|i| Pos::new((i / w) as i32, (i % w) as i32))
        .filter(|p| !ring.contains(p))
        .collect();
    bodies.shuffle(rng);
    let mut next = bodies.into_iter();
    while resources.len() < config.num_resources {
        let Some(body) = next.next() else {
            return Err(WorldError::PlacementInfeasible(format!(
                "cannot fit {} resources in a {w}x{h} world",
                config.num_resources
            )));
        };
        if cells[idx(body)] != Cell::Empty {
            continue;
        }
        let mut sides = body.neighbors4();
        sides.shuffle(rng);
        let Some(entry) = sides
            .into_iter()
            .find(|e| inb(*e) && cells[idx(*e)] == Cell::Empty && !ring.contains(e))
        else {
            continue;
        };
        let id = ResourceId(resources.len() as u32);
        cells[idx(body)] = Cell::ResourceBody(id);
        cells[idx(entry)] = Cell::QueueEntry(Target::Resource(id));
        resources.push(ResourceSpec {
            id,
            body,
            entry,
            capacity: config.resource_capacity,
        });
    }

    // obstacles: floor(density * free cells), never in the nest ring
    let free = cells.iter().filter(|c| **c == Cell::Empty).count();
    let count = (config.obstacle_density * free as f64).floor() as usize;
    let mut spots: Vec<usize> = (0..w * h)
        .filter(|&i| cells[i] == Cell::Empty && !ring.contains(&Pos::new((i / w) as i32, (i % w) as i32)))
        .collect();
    if spots.len() < count {
        return Err(WorldError::PlacementInfeasible("not enough room for obstacles".into()));
    }
    spots.shuffle(rng);
    let mut obstacles: Vec<Pos> = spots[..count]
        .iter()
        .map(|&i| Pos::new((i / w) as i32, (i % w) as i32))
        .collect();
    for p in &obstacles {
        cells[idx(*p)] = Cell::Obstacle;
    }
    obstacles.sort();

    let reach = reachable_from(&cells, w, h, nest_cache_entries(origin)[0]);
    let all_entries_reachable = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Cell::QueueEntry(_)))
        .all(|(i, _)| reach[i]);
    if !all_entries_reachable {
        return Err(WorldError::PlacementInfeasible(
            "obstacles cut a queue entry off from the nest".into(),
        ));
    }

    // agents: nearest reachable empty cells around the nest, ties shuffled
    let (cr, cc) = (origin.row as f64 + 0.5, origin.col as f64 + 0.5);
    let mut spawn: Vec<(u64, u64, Pos)> = (0..w * h)
        .filter(|&i| reach[i] && cells[i] == Cell::Empty)
        .map(|i| {
            let p = Pos::new((i / w) as i32, (i % w) as i32);
            let d = (p.row as f64 - cr).abs().max((p.col as f64 - cc).abs());
            (d.ceil() as u64, rng.gen::<u64>(), p)
        })
        .collect();
    if spawn.len() < config.team_size {
        return Err(WorldError::PlacementInfeasible(format!(
            "only {} spawn cells for {} agents",
            spawn.len(),
            config.team_size
        )));
    }
    spawn.sort_unstable();
    let agents = spawn[..config.team_size].iter().map(|&(_, _, p)| p).collect();

    Ok(WorldLayout {
        width: w,
        height: h,
        nest_origin: origin,
        obstacles,
        resources,
        agents,
    })
}

#[cfg(test)]
mod tests;
