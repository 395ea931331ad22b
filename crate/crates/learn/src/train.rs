//! Several environment workers feeding summed gradients into one shared
//! parameter store.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use forage_core::{
    build_highways, Capacity, CurriculumSchedule, GridWorld, PheromoneParams, Pos, ResourceId, ResourceSpec, WorldConfig,
    WorldLayout,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::episode::run_episode;
use crate::error::LearnError;
use crate::loss::{LossWeights, Losses};
use crate::net::{Network, NetworkSpec};
use crate::optim::{Nadam, NadamConfig};

/// Where training worlds come from.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainWorlds {
    /// A fresh world per episode: side drawn from `sizes`, obstacle density
    /// uniform in `[0, max_density]`, resource count uniform in `resources`.
    Sampled {
        sizes: Vec<usize>,
        max_density: f64,
        resources: (usize, usize),
        gather_rate: f64,
        dropoff_rate: f64,
    },
    /// The same layout every episode; only the dynamics seed changes.
    Fixed { config: WorldConfig, layout: WorldLayout },
}

impl Default for TrainWorlds {
    fn default() -> Self {
        TrainWorlds::Sampled {
            sizes: vec![24, 32, 48, 64],
            max_density: 0.05,
            resources: (2, 8),
            gather_rate: 0.5,
            dropoff_rate: 0.5,
        }
    }
}

impl TrainWorlds {
    fn build(&self, team: usize, seed: u64, rng: &mut impl Rng) -> Result<GridWorld, LearnError> {
        match self {
            TrainWorlds::Sampled {
                sizes,
                max_density,
                resources,
                gather_rate,
                dropoff_rate,
            } => {
                let side = sizes[rng.gen_range(0..sizes.len())];
                let config = WorldConfig {
                    width: side,
                    height: side,
                    obstacle_density: if *max_density > 0.0 { rng.gen_range(0.0..=*max_density) } else { 0.0 },
                    num_resources: rng.gen_range(resources.0..=resources.1),
                    resource_capacity: Capacity::Infinite,
                    gather_rate: *gather_rate,
                    dropoff_rate: *dropoff_rate,
                    respawn_on_depletion: false,
                    team_size: team,
                    rng_seed: seed,
                };
                Ok(GridWorld::generate(&config)?)
            }
            TrainWorlds::Fixed { config, layout } => {
                let config = WorldConfig {
                    rng_seed: seed,
                    team_size: layout.agents.len(),
                    ..config.clone()
                };
                Ok(GridWorld::from_layout(&config, layout)?)
            }
        }
    }

    fn fixed_team(&self) -> Option<usize> {
        match self {
            TrainWorlds::Fixed { layout, .. } => Some(layout.agents.len()),
            TrainWorlds::Sampled { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Workers {
    /// One thread; environments take turns in a fixed order. Reproducible.
    Deterministic,
    /// One thread per environment, updates applied as they arrive.
    Parallel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub optimizer: NadamConfig,
    pub weights: LossWeights,
    /// Advantage horizon; `None` uses the rest of the episode.
    pub n_step: Option<usize>,
    pub learning_agents: usize,
    /// Non-learning teammates per environment; its length is the number of
    /// environments.
    pub non_learning: Vec<usize>,
    /// Total episodes across all environments.
    pub episodes: u64,
    pub episode_length: u64,
    pub curriculum: CurriculumSchedule,
    pub network: NetworkSpec,
    pub worlds: TrainWorlds,
    pub pheromone: PheromoneParams,
    pub seed: u64,
    pub workers: Workers,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            optimizer: NadamConfig::default(),
            weights: LossWeights::default(),
            n_step: None,
            learning_agents: 8,
            non_learning: vec![8, 16, 24, 40],
            episodes: 100,
            episode_length: 512,
            curriculum: CurriculumSchedule::default(),
            network: NetworkSpec::standard(11),
            worlds: TrainWorlds::default(),
            pheromone: PheromoneParams::default(),
            seed: 0,
            workers: Workers::Parallel,
        }
    }
}

impl TrainConfig {
    /// Quick single-environment setup: a 12x12 world with one resource
    /// beside the nest, two learning agents, a micro network and short
    /// episodes.
    pub fn smoke(seed: u64) -> Self {
        let nest = Pos::new(5, 5);
        let layout = WorldLayout {
            width: 12,
            height: 12,
            nest_origin: nest,
            obstacles: Vec::new(),
            resources: vec![ResourceSpec {
                id: ResourceId(0),
                body: Pos::new(2, 5),
                entry: Pos::new(3, 5),
                capacity: Capacity::Infinite,
            }],
            agents: vec![Pos::new(9, 2), Pos::new(9, 9)],
        };
        let config = WorldConfig {
            num_resources: 1,
            team_size: 2,
            ..WorldConfig::default()
        };
        Self {
            optimizer: NadamConfig {
                learning_rate: 3e-3,
                ..NadamConfig::default()
            },
            learning_agents: 2,
            non_learning: vec![0],
            episodes: 200,
            episode_length: 256,
            network: NetworkSpec::micro(5),
            worlds: TrainWorlds::Fixed { config, layout },
            seed,
            workers: Workers::Deterministic,
            ..Self::default()
        }
    }

    pub fn team_sizes(&self) -> Vec<usize> {
        self.non_learning.iter().map(|m| self.learning_agents + m).collect()
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let fail = |m: &str| Err(LearnError::Config(m.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail("gamma must lie in (0, 1)");
        }
        let w = self.weights;
        if w.value < 0.0 || w.valid < 0.0 || w.entropy < 0.0 || self.optimizer.learning_rate <= 0.0 {
            return fail("loss weights must be non-negative and the learning rate positive");
        }
        if self.learning_agents == 0 || self.non_learning.is_empty() {
            return fail("need at least one learning agent and one environment");
        }
        if self.curriculum.start >= self.curriculum.end {
            return fail("curriculum start must precede its end");
        }
        if let Some(team) = self.worlds.fixed_team() {
            if self.team_sizes().iter().any(|t| *t != team) {
                return fail("fixed layout agent count must equal learning + non-learning agents");
            }
        }
        if let TrainWorlds::Sampled { sizes, resources, .. } = &self.worlds {
            if sizes.is_empty() || resources.0 == 0 || resources.0 > resources.1 {
                return fail("world sizes and resource range must be non-empty");
            }
        }
        if self.n_step == Some(0) {
            return fail("n-step horizon must be positive");
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub episode: u64,
    pub env: usize,
    pub team: usize,
    pub mean_reward: f64,
    pub deposited: f64,
    pub losses: Losses,
    pub valid_rate: f64,
    pub highway_weight: f64,
    pub agent_weight: f64,
}

impl EpisodeLog {
    pub const CSV_HEADER: &'static str =
        "episode,env,team,mean_reward,deposited,loss_value,loss_policy,loss_valid,entropy,loss_total,valid_rate,w_h,w_a";

    pub fn csv_row(&self) -> String {
        let l = &self.losses;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.env,
            self.team,
            self.mean_reward,
            self.deposited,
            l.value,
            l.policy,
            l.valid,
            l.entropy,
            l.total,
            self.valid_rate,
            self.highway_weight,
            self.agent_weight
        )
    }
}

struct Store {
    params: Vec<f64>,
    optimizer: Nadam,
}

/// Shared parameters. Workers read a snapshot, and apply updates one at a time.
pub struct GlobalStore {
    inner: Mutex<Store>,
    next_episode: AtomicU64,
}

impl GlobalStore {
    pub fn new(net: &Network, optimizer: NadamConfig) -> Self {
        Self {
            inner: Mutex::new(Store {
                params: net.params.clone(),
                optimizer: Nadam::new(optimizer, net.param_count()),
            }),
            next_episode: AtomicU64::new(0),
        }
    }

    pub fn snapshot(&self) -> Vec<f64> {
        self.inner.lock().expect("store lock").params.clone()
    }

    pub fn apply(&self, grad: &[f64]) {
        let mut s = self.inner.lock().expect("store lock");
        let Store { params, optimizer } = &mut *s;
        optimizer.apply(params, grad);
    }

    fn claim_episode(&self, limit: u64) -> Option<u64> {
        let e = self.next_episode.fetch_add(1, Ordering::SeqCst);
        (e < limit).then_some(e)
    }
}

/// Episode world with highways and the curriculum weights for `episode`.
fn prepare_world(config: &TrainConfig, episode: u64, team: usize, rng: &mut ChaCha8Rng) -> Result<GridWorld, LearnError> {
    let world_seed = rng.gen();
    let mut world = config.worlds.build(team, world_seed, rng)?;
    world.set_pheromone_params(config.pheromone);
    let highways = build_highways(&world, &config.pheromone);
    world.field_mut().set_highways(highways);
    let (w_h, w_a) = config.curriculum.weights(episode);
    world.field_mut().set_weights(w_h, w_a);
    Ok(world)
}

/// Runs one environment episode from the current global parameters and
/// applies its update.
fn train_episode(
    config: &TrainConfig,
    store: &GlobalStore,
    episode: u64,
    env: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeLog, LearnError> {
    let net = Network::from_params(config.network.clone(), store.snapshot())?;
    let team = config.team_sizes()[env];
    let mut world = prepare_world(config, episode, team, rng)?;
    let (w_h, w_a) = world.field().weights();
    let data = run_episode(&net, &mut world, config.learning_agents, config.episode_length, rng)?;
    let (grad, losses) = data.learning_gradient(&net, config.gamma, config.n_step, config.weights)?;
    if !losses.total.is_finite() {
        return Err(LearnError::NonFinite {
            what: format!("loss {losses:?}"),
            episode,
        });
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(LearnError::NonFinite {
            what: format!("gradient at parameter {i}"),
            episode,
        });
    }
    store.apply(&grad);
    Ok(EpisodeLog {
        episode,
        env,
        team,
        mean_reward: data.mean_reward(),
        deposited: data.deposited,
        losses,
        valid_rate: data.valid_rate(),
        highway_weight: w_h,
        agent_weight: w_a,
    })
}

fn env_rng(seed: u64, env: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(100 + env as u64);
    rng
}

pub struct TrainOutcome {
    pub network: Network,
    /// Sorted by episode.
    pub log: Vec<EpisodeLog>,
}

/// Trains from `initial` (or a fresh network seeded from `config.seed`).
/// `on_episode` sees every log row as it is produced.
pub fn run_training(
    config: &TrainConfig,
    initial: Option<Network>,
    mut on_episode: impl FnMut(&EpisodeLog) + Send,
) -> Result<TrainOutcome, LearnError> {
    config.validate()?;
    let net = match initial {
        Some(n) if *n.spec() == config.network => n,
        Some(_) => return Err(LearnError::Config("initial network does not match the configured network".into())),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Network::init(config.network.clone(), &mut rng)?
        }
    };
    let store = GlobalStore::new(&net, config.optimizer);
    let envs = config.non_learning.len();
    let mut log = Vec::with_capacity(config.episodes as usize);

    match config.workers {
        Workers::Deterministic => {
            let mut rngs: Vec<ChaCha8Rng> = (0..envs).map(|e| env_rng(config.seed, e)).collect();
            for episode in 0..config.episodes {
                let env = (episode % envs as u64) as usize;
                let row = train_episode(config, &store, episode, env, &mut rngs[env])?;
                on_episode(&row);
                log.push(row);
            }
        }
        Workers::Parallel => {
            let sink = Mutex::new((&mut log, &mut on_episode));
            let failure: Mutex<Option<LearnError>> = Mutex::new(None);
            std::thread::scope(|scope| {
                for env in 0..envs {
                    let (store, sink, failure) = (&store, &sink, &failure);
                    scope.spawn(move || {
                        let mut rng = env_rng(config.seed, env);
                        while let Some(episode) = store.claim_episode(config.episodes) {
                            if failure.lock().expect("failure lock").is_some() {
                                return;
                            }
                            match train_episode(config, store, episode, env, &mut rng) {
                                Ok(row) => {
                                    let mut s = sink.lock().expect("log lock");
                                    (s.1)(&row);
                                    s.0.push(row);
                                }
                                Err(e) => {
                                    failure.lock().expect("failure lock").get_or_insert(e);
                                    return;
                                }
                            }
                        }
                    });
                }
            });
            if let Some(e) = failure.into_inner().expect("failure lock") {
                return Err(e);
            }
        }
    }
    log.sort_by_key(|r| r.episode);
    let network = Network::from_params(config.network.clone(), store.snapshot())?;
    Ok(TrainOutcome { network, log })
}

/// Mean per-episode reward of a fixed network over the same episodes a
/// deterministic training run with `config` would see, without updates.
pub fn evaluate_frozen(config: &TrainConfig, net: &Network) -> Result<Vec<f64>, LearnError> {
    config.validate()?;
    let envs = config.non_learning.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..envs).map(|e| env_rng(config.seed, e)).collect();
    let mut out = Vec::with_capacity(config.episodes as usize);
    for episode in 0..config.episodes {
        let env = (episode % envs as u64) as usize;
        let rng = &mut rngs[env];
        let mut world = prepare_world(config, episode, config.team_sizes()[env], rng)?;
        let data = run_episode(net, &mut world, config.learning_agents, config.episode_length, rng)?;
        out.push(data.mean_reward());
    }
    Ok(out)
}
