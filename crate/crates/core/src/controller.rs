//! Common interface for anything that picks actions for a team.

use std::collections::BTreeMap;

use crate::geom::Action;
use crate::world::{AgentId, GridWorld, StepOutcome};

pub type Decisions = BTreeMap<AgentId, Action>;

/// A team controller. Decentralised controllers only look at per-agent
/// observations and their own private/team state; the world reference is
/// what they extract observations from.
pub trait Controller {
    fn name(&self) -> &str;

    /// Whether per-step runtime should also be reported per agent.
    fn is_decentralized(&self) -> bool {
        true
    }

    /// Called once before the first step of an episode.
    fn reset(&mut self, _world: &GridWorld) {}

    /// Actions for free agents. Agents left out stay in place.
    fn decide(&mut self, world: &GridWorld) -> Decisions;

    /// Called after every world step with its outcome.
    fn observe(&mut self, _world: &GridWorld, _outcome: &StepOutcome) {}
}
