//! TOML front end for training runs.

use forage_core::NoiseMode;
use forage_learn::{NetworkSpec, TrainConfig, TrainWorlds, Workers};
use serde::Deserialize;

use crate::error::HarnessError;

/// Every key is optional; unset keys keep the values of `preset`
/// (`default` or `smoke`).
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub preset: Option<String>,
    pub episodes: Option<u64>,
    pub episode_length: Option<u64>,
    pub learning_rate: Option<f64>,
    pub gamma: Option<f64>,
    /// Advantage horizon; omit for full-episode returns.
    pub n_step: Option<usize>,
    pub learning_agents: Option<usize>,
    /// Non-learning agents per environment; one environment per entry.
    pub non_learning: Option<Vec<usize>>,
    pub fov: Option<usize>,
    /// Layers after the input, e.g. `"conv:32 pool conv:32 dense:128 lstm:128"`.
    pub body: Option<String>,
    pub workers: Option<String>,
    pub curriculum_start: Option<u64>,
    pub curriculum_end: Option<u64>,
    pub noise_mode: Option<String>,
    pub world_sizes: Option<Vec<usize>>,
    pub max_density: Option<f64>,
    pub resources: Option<(usize, usize)>,
}

impl TrainFile {
    pub fn parse(text: &str) -> Result<TrainFile, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Matrix(format!("training config: {e}")))
    }

    pub fn to_config(&self, seed: u64) -> Result<TrainConfig, HarnessError> {
        let bad = |m: String| HarnessError::Matrix(format!("training config: {m}"));
        let mut c = match self.preset.as_deref().unwrap_or("default") {
            "default" => TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            "smoke" => TrainConfig::smoke(seed),
            other => return Err(bad(format!("unknown preset `{other}`"))),
        };
        if let Some(v) = self.episodes {
            c.episodes = v;
        }
        if let Some(v) = self.episode_length {
            c.episode_length = v;
        }
        if let Some(v) = self.learning_rate {
            c.optimizer.learning_rate = v;
        }
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if self.n_step.is_some() {
            c.n_step = self.n_step;
        }
        if let Some(v) = self.learning_agents {
            c.learning_agents = v;
        }
        if let Some(v) = &self.non_learning {
            c.non_learning = v.clone();
        }
        if self.fov.is_some() || self.body.is_some() {
            let fov = self.fov.unwrap_or(c.network.fov);
            c.network = match &self.body {
                Some(body) => NetworkSpec::parse_body(fov, body).map_err(|e| bad(e.to_string()))?,
                None => NetworkSpec {
                    fov,
                    layers: c.network.layers.clone(),
                },
            };
        }
        if let Some(w) = &self.workers {
            c.workers = match w.as_str() {
                "parallel" => Workers::Parallel,
                "deterministic" => Workers::Deterministic,
                other => return Err(bad(format!("unknown workers `{other}`"))),
            };
        }
        if let Some(v) = self.curriculum_start {
            c.curriculum.start = v;
        }
        if let Some(v) = self.curriculum_end {
            c.curriculum.end = v;
        }
        if let Some(m) = &self.noise_mode {
            c.pheromone.noise_mode = NoiseMode::parse(m).ok_or_else(|| bad(format!("unknown noise mode `{m}`")))?;
        }
        if self.world_sizes.is_some() || self.max_density.is_some() || self.resources.is_some() {
            match &mut c.worlds {
                TrainWorlds::Sampled {
                    sizes,
                    max_density,
                    resources,
                    ..
                } => {
                    if let Some(v) = &self.world_sizes {
                        *sizes = v.clone();
                    }
                    if let Some(v) = self.max_density {
                        *max_density = v;
                    }
                    if let Some(v) = self.resources {
                        *resources = v;
                    }
                }
                TrainWorlds::Fixed { .. } => {
                    return Err(bad("world keys do not apply to the fixed smoke layout".into()));
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}
