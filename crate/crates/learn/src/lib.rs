//! Recurrent actor-critic learner for the foraging world.
//!
//! A [`Network`] maps an observation tensor and a recurrent state to a
//! policy over the five actions and a value estimate. Training runs several
//! environments whose learning agents' gradients are summed per episode and
//! applied to shared parameters with [`Nadam`].

pub mod checkpoint;
pub mod episode;
pub mod error;
pub mod filter;
pub mod loss;
pub mod net;
pub mod optim;
pub mod policy;
pub mod reward;
pub mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use episode::{episode_gradient, run_episode, EpisodeData, Trajectory};
pub use error::LearnError;
pub use filter::{euclidean_action_filter, filter_away_moves, sample_action, SampleMode, Sampled};
pub use loss::{advantages, discounted_returns, entropy, n_step_targets, trajectory_losses, LossStep, LossWeights, Losses};
pub use net::{softmax, Layer, Network, NetworkSpec, Recurrent, SequenceTape, StepOutput, ACTIONS};
pub use optim::{Nadam, NadamConfig};
pub use policy::PolicyController;
pub use reward::assign_reward;
pub use train::{evaluate_frozen, run_training, EpisodeLog, GlobalStore, TrainConfig, TrainOutcome, TrainWorlds, Workers};
