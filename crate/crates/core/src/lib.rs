//! Multi-agent foraging grid world.
//!
//! A [`GridWorld`] holds terrain, a central nest with four cache queues,
//! resources with their own queues, and a team of agents. Food-carrying
//! agents leave decaying pheromone trails in a [`PheromoneField`] that other
//! agents perceive through an egocentric [`ObservationTensor`].

pub mod config;
pub mod controller;
pub mod error;
pub mod geom;
pub mod observation;
pub mod pheromone;
pub mod scenario;
pub mod world;

pub use config::{interaction_steps, rate_units, Capacity, WorldConfig, LOAD_SCALE};
pub use controller::{Controller, Decisions};
pub use error::WorldError;
pub use geom::{Action, ActionMask, Pos};
pub use observation::{
    extract_observation, pheromone_ablation_view, Channel, FovConfig, ObservationTensor,
    PheromoneView, CHANNELS, CHANNEL_LAYOUT,
};
pub use pheromone::{
    build_highways, curriculum_weights, CurriculumSchedule, NoiseMode, PheromoneField,
    PheromoneParams,
};
pub use scenario::{Scenario, ScenarioError, ScenarioKind, WipeoutWindow};
pub use world::{
    AgentEvent, AgentId, AgentState, AgentStatus, CacheId, Cell, FoodLedger, GridWorld,
    JoinRejection, ResourceId, ResourceNode, ResourceSpec, StepOutcome, Target, WorldLayout,
};
