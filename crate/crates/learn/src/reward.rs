//! Per-event rewards.

use forage_core::AgentEvent;

pub const STEP_COST: f64 = -0.05;
pub const SUCCESS: f64 = 10.0;
pub const BAD_JOIN: f64 = -1.0;

/// Reward for one agent event. Every step an agent spends moving, blocked,
/// idle or waiting costs `STEP_COST`; a finished harvest or deposit earns
/// `SUCCESS`; a rejected join costs `BAD_JOIN`; an accepted join is free.
pub fn assign_reward(event: &AgentEvent) -> f64 {
    match event {
        AgentEvent::Moved { .. }
        | AgentEvent::Blocked
        | AgentEvent::Idle
        | AgentEvent::QueuedWait
        | AgentEvent::Released(_)
        | AgentEvent::HarvestInterrupted(_) => STEP_COST,
        AgentEvent::HarvestComplete(_) | AgentEvent::DepositComplete(_) => SUCCESS,
        AgentEvent::Joined(_) => 0.0,
        AgentEvent::RejectedJoin(_) => BAD_JOIN,
    }
}
