//! Coverage-driven search with odometry return, after the C-SAF family.
//!
//! Searching agents head for any resource entry in view; otherwise they step
//! toward the half of their view with the fewest cells already visited by
//! the team. Carriers head for a visible cache entry or descend their home
//! vector.

use std::collections::BTreeSet;

use forage_core::{
    extract_observation, Action, ActionMask, Channel, Controller, Decisions, FovConfig, GridWorld, ObservationTensor,
    Pos, StepOutcome, Target,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::common::{controller_rng, fov_step_toward, home_step, random_move};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsafMode {
    Search,
    Return,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsafState {
    pub mode: CsafMode,
    /// Displacement to the nearest cache entry.
    pub home: (i32, i32),
    /// Resource entries this agent found exhausted.
    pub exhausted: BTreeSet<Pos>,
}

/// Team-shared set of visited cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageMap {
    width: usize,
    height: usize,
    visited: Vec<bool>,
}

impl CoverageMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            visited: vec![false; width * height],
        }
    }

    fn index(&self, p: Pos) -> Option<usize> {
        (p.row >= 0 && p.col >= 0 && (p.row as usize) < self.height && (p.col as usize) < self.width)
            .then(|| p.row as usize * self.width + p.col as usize)
    }

    pub fn mark(&mut self, p: Pos) {
        if let Some(i) = self.index(p) {
            self.visited[i] = true;
        }
    }

    pub fn is_marked(&self, p: Pos) -> bool {
        self.index(p).is_some_and(|i| self.visited[i])
    }

    pub fn count(&self) -> usize {
        self.visited.iter().filter(|v| **v).count()
    }

    pub fn clear(&mut self) {
        self.visited.fill(false);
    }
}

/// What one agent perceives when deciding.
pub struct CsafView<'a> {
    pub obs: &'a ObservationTensor,
    pub mask: ActionMask,
    /// Visited mark at an offset from the agent.
    pub covered: &'a dyn Fn(i32, i32) -> bool,
    /// Resource entry at an offset known to be exhausted.
    pub exhausted: &'a dyn Fn(i32, i32) -> bool,
}

pub fn csaf11_step(view: &CsafView<'_>, state: &CsafState, rng: &mut impl Rng) -> Option<Action> {
    let obs = view.obs;
    if view.mask.allows(Action::JoinQueue) {
        return Some(Action::JoinQueue);
    }
    match state.mode {
        CsafMode::Search => {
            let live_entry = |r: i32, c: i32| obs.at(Channel::ResourceEntries, r, c) == 1.0 && !(view.exhausted)(r, c);
            let goal = |dr: i32, dc: i32| {
                live_entry(dr, dc) || Pos::new(dr, dc).neighbors4().iter().any(|p| live_entry(p.row, p.col))
            };
            if let Some(a) = fov_step_toward(obs, goal).filter(|a| view.mask.allows(*a)) {
                return Some(a);
            }
            least_covered_move(view, rng)
        }
        CsafMode::Return => {
            let goal = |dr: i32, dc: i32| {
                std::iter::once(Pos::new(dr, dc))
                    .chain(Pos::new(dr, dc).neighbors4())
                    .any(|p| obs.at(Channel::CacheEntries, p.row, p.col) == 1.0)
            };
            if let Some(a) = fov_step_toward(obs, goal).filter(|a| view.mask.allows(*a)) {
                return Some(a);
            }
            home_step(state.home, view.mask, rng)
        }
    }
}

/// Valid move into the half of the view with the fewest visited or blocked
/// cells; ties broken uniformly.
fn least_covered_move(view: &CsafView<'_>, rng: &mut impl Rng) -> Option<Action> {
    let r = (view.obs.fov() / 2) as i32;
    let mut best = usize::MAX;
    let mut choices = Vec::new();
    for action in Action::MOVES.into_iter().filter(|a| view.mask.allows(*a)) {
        let (sr, sc) = action.delta().expect("move");
        let mut score = 0;
        for dr in -r..=r {
            for dc in -r..=r {
                if dr * sr + dc * sc > 0
                    && ((view.covered)(dr, dc) || view.obs.at(Channel::Obstacles, dr, dc) == 1.0)
                {
                    score += 1;
                }
            }
        }
        if score < best {
            best = score;
            choices.clear();
        }
        if score == best {
            choices.push(action);
        }
    }
    choices.choose(rng).copied().or_else(|| random_move(view.mask, rng))
}

pub struct CsafLike {
    seed: u64,
    rng: ChaCha8Rng,
    fov: FovConfig,
    states: Vec<CsafState>,
    coverage: CoverageMap,
    /// Clear the coverage map when a wipeout starts.
    pub wipeout_clears_coverage: bool,
    last_wipeout: u64,
}

impl CsafLike {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: controller_rng(seed, 12),
            fov: FovConfig::default(),
            states: Vec::new(),
            coverage: CoverageMap::default(),
            wipeout_clears_coverage: true,
            last_wipeout: 0,
        }
    }

    pub fn coverage(&self) -> &CoverageMap {
        &self.coverage
    }

    pub fn states(&self) -> &[CsafState] {
        &self.states
    }
}

impl Controller for CsafLike {
    fn name(&self) -> &str {
        "csaf"
    }

    fn reset(&mut self, world: &GridWorld) {
        self.rng = controller_rng(self.seed, 12);
        self.coverage = CoverageMap::new(world.width(), world.height());
        for a in world.agents() {
            self.coverage.mark(a.pos);
        }
        self.states = world
            .agent_ids()
            .map(|id| CsafState {
                mode: CsafMode::Search,
                home: crate::common::home_vector(world, id),
                exhausted: BTreeSet::new(),
            })
            .collect();
        self.last_wipeout = world.field().wipeout_remaining();
    }

    fn decide(&mut self, world: &GridWorld) -> Decisions {
        if self.states.len() != world.agents().len() {
            self.reset(world);
        }
        let wipe = world.field().wipeout_remaining();
        if wipe > self.last_wipeout && self.wipeout_clears_coverage {
            self.coverage.clear();
        }
        self.last_wipeout = wipe;

        let mut out = Decisions::new();
        for id in world.upcoming_order() {
            let agent = world.agent(id);
            if !agent.status.is_free() {
                continue;
            }
            let mask = world.valid_actions(id);
            let state = &mut self.states[id.index()];
            state.mode = if agent.carries_food() { CsafMode::Return } else { CsafMode::Search };
            state.home = crate::common::home_vector(world, id);
            if state.mode == CsafMode::Search && !mask.allows(Action::JoinQueue) {
                for t in world.entries_near(agent.pos) {
                    if let Target::Resource(r) = t {
                        if let Some(node) = world.resource(r) {
                            state.exhausted.insert(node.entry);
                        }
                    }
                }
            }
            let obs = extract_observation(world, id, self.fov);
            let pos = agent.pos;
            let coverage = &self.coverage;
            let covered = |dr: i32, dc: i32| coverage.is_marked(pos.offset(dr, dc));
            let exhausted = |dr: i32, dc: i32| state.exhausted.contains(&pos.offset(dr, dc));
            let view = CsafView {
                obs: &obs,
                mask,
                covered: &covered,
                exhausted: &exhausted,
            };
            if let Some(a) = csaf11_step(&view, state, &mut self.rng) {
                out.insert(id, a);
            }
        }
        out
    }

    fn observe(&mut self, world: &GridWorld, _outcome: &StepOutcome) {
        for a in world.agents().iter().filter(|a| a.status.is_free()) {
            self.coverage.mark(a.pos);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put(obs: &mut ObservationTensor, ch: Channel, dr: i32, dc: i32) {
        let r = (obs.fov() / 2) as i32;
        obs.set(ch, (dr + r) as usize, (dc + r) as usize, 1.0);
    }

    fn state(mode: CsafMode, home: (i32, i32)) -> CsafState {
        CsafState {
            mode,
            home,
            exhausted: BTreeSet::new(),
        }
    }

    const MOVES_ONLY: ActionMask = ActionMask([true, true, true, true, false]);

    #[test]
    fn searcher_heads_for_visible_entry() {
        let mut obs = ObservationTensor::zeros(11);
        put(&mut obs, Channel::ResourceEntries, -2, 0);
        let none = |_: i32, _: i32| false;
        let view = CsafView {
            obs: &obs,
            mask: MOVES_ONLY,
            covered: &none,
            exhausted: &none,
        };
        let mut rng = controller_rng(0, 12);
        assert_eq!(csaf11_step(&view, &state(CsafMode::Search, (5, 5)), &mut rng), Some(Action::MoveNorth));
    }

    #[test]
    fn exhausted_entries_are_ignored() {
        let mut obs = ObservationTensor::zeros(11);
        put(&mut obs, Channel::ResourceEntries, -2, 0);
        // everything north and west already covered
        let covered = |dr: i32, dc: i32| dr < 0 || dc < 0;
        let all = |_: i32, _: i32| true;
        let view = CsafView {
            obs: &obs,
            mask: MOVES_ONLY,
            covered: &covered,
            exhausted: &all,
        };
        let mut rng = controller_rng(0, 12);
        for _ in 0..20 {
            let a = csaf11_step(&view, &state(CsafMode::Search, (5, 5)), &mut rng).unwrap();
            assert!(matches!(a, Action::MoveSouth | Action::MoveEast), "{a:?}");
        }
    }

    #[test]
    fn returner_descends_dominant_component() {
        let obs = ObservationTensor::zeros(11);
        let none = |_: i32, _: i32| false;
        let view = CsafView {
            obs: &obs,
            mask: MOVES_ONLY,
            covered: &none,
            exhausted: &none,
        };
        let mut rng = controller_rng(0, 12);
        assert_eq!(csaf11_step(&view, &state(CsafMode::Return, (-4, 1)), &mut rng), Some(Action::MoveNorth));
    }

    #[test]
    fn equal_coverage_is_a_uniform_choice() {
        let obs = ObservationTensor::zeros(11);
        let none = |_: i32, _: i32| false;
        let view = CsafView {
            obs: &obs,
            mask: MOVES_ONLY,
            covered: &none,
            exhausted: &none,
        };
        let mut rng = controller_rng(4, 12);
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            counts[csaf11_step(&view, &state(CsafMode::Search, (0, 0)), &mut rng).unwrap().index()] += 1;
        }
        assert!(counts.iter().all(|c| (900..1100).contains(c)), "{counts:?}");
    }
}
