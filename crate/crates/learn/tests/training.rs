use forage_core::{Controller, GridWorld, WorldConfig};
use forage_learn::{
    read_checkpoint, run_episode, run_training, write_checkpoint, LossWeights, Network, NetworkSpec, PolicyController,
    Recurrent, TrainConfig, TrainWorlds, Workers,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_sampled(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_agents: 2,
        non_learning: vec![0, 2],
        episodes: 6,
        episode_length: 48,
        network: NetworkSpec::micro(5),
        worlds: TrainWorlds::Sampled {
            sizes: vec![12, 16],
            max_density: 0.05,
            resources: (1, 3),
            gather_rate: 0.5,
            dropoff_rate: 0.5,
        },
        workers: Workers::Deterministic,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn deterministic_training_replays_exactly() {
    let a = run_training(&tiny_sampled(3), None, |_| {}).unwrap();
    let b = run_training(&tiny_sampled(3), None, |_| {}).unwrap();
    assert_eq!(a.network.params, b.network.params);
    assert_eq!(a.log, b.log);
    let c = run_training(&tiny_sampled(4), None, |_| {}).unwrap();
    assert_ne!(a.network.params, c.network.params);
}

#[test]
fn parallel_training_logs_every_episode_once() {
    let config = TrainConfig {
        workers: Workers::Parallel,
        episodes: 9,
        ..tiny_sampled(1)
    };
    let mut seen = 0;
    let out = run_training(&config, None, |_| seen += 1).unwrap();
    assert_eq!(seen, 9);
    let episodes: Vec<u64> = out.log.iter().map(|r| r.episode).collect();
    assert_eq!(episodes, (0..9).collect::<Vec<_>>());
    assert!(out.network.params.iter().all(|p| p.is_finite()));
}

#[test]
fn team_sizes_add_the_learning_agents() {
    let config = TrainConfig::default();
    assert_eq!(config.team_sizes(), vec![16, 24, 32, 48]);
    config.validate().unwrap();
}

#[test]
fn zero_non_learning_agents_is_a_valid_environment() {
    let config = TrainConfig {
        non_learning: vec![0],
        episodes: 2,
        ..tiny_sampled(0)
    };
    let out = run_training(&config, None, |_| {}).unwrap();
    assert!(out.log.iter().all(|r| r.team == 2));
}

#[test]
fn non_learning_trajectories_never_reach_the_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = Network::init(NetworkSpec::micro(5), &mut rng).unwrap();
    let config = WorldConfig {
        width: 16,
        height: 16,
        team_size: 6,
        num_resources: 2,
        rng_seed: 2,
        ..WorldConfig::default()
    };
    let mut world = GridWorld::generate(&config).unwrap();
    let data = run_episode(&net, &mut world, 2, 80, &mut rng).unwrap();
    assert_eq!((data.learning.len(), data.non_learning.len()), (2, 4));
    assert!(data.non_learning.iter().all(|t| !t.is_empty()));
    let w = LossWeights::default();
    let (g0, l0) = data.learning_gradient(&net, 0.95, None, w).unwrap();

    let mut perturbed = data.clone();
    for t in &mut perturbed.non_learning {
        for r in &mut t.rewards {
            *r = rng.gen_range(-50.0..50.0);
        }
        for a in &mut t.actions {
            *a = Some(rng.gen_range(0..5));
        }
        for o in t.observations.iter_mut().flatten() {
            *o = rng.gen();
        }
        t.bootstrap = 1e6;
    }
    let (g1, l1) = perturbed.learning_gradient(&net, 0.95, None, w).unwrap();
    assert_eq!(g0, g1);
    assert_eq!(l0, l1);
    assert!(g0.iter().any(|g| *g != 0.0));
}

#[test]
fn policies_stay_on_the_simplex_after_updates() {
    let out = run_training(&tiny_sampled(5), None, |_| {}).unwrap();
    let net = out.network;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut state: Recurrent = net.initial_state();
    for _ in 0..200 {
        let obs: Vec<f64> = (0..net.spec().input_len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let o = net.step(&obs, &mut state).unwrap();
        let sum: f64 = o.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "{:?}", o.probs);
        assert!(o.probs.iter().all(|p| *p >= 0.0 && *p <= 1.0));
        assert!(o.value.is_finite());
    }
}

#[test]
fn checkpoint_file_round_trip_drives_a_controller() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = Network::init(NetworkSpec::micro(5), &mut rng).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.ckpt");
    std::fs::write(&path, write_checkpoint(&net)).unwrap();
    let back = read_checkpoint(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.params, net.params);
    assert_eq!(back.spec(), net.spec());

    let config = WorldConfig {
        team_size: 3,
        rng_seed: 1,
        ..WorldConfig::default()
    };
    let run = |net: Network| {
        let mut world = GridWorld::generate(&config).unwrap();
        let mut ctl = PolicyController::new(net, 4);
        ctl.reset(&world);
        let mut trace = Vec::new();
        for _ in 0..60 {
            let d = ctl.decide(&world);
            let out = world.step(&d).unwrap();
            ctl.observe(&world, &out);
            trace.push(world.agents().iter().map(|a| a.pos).collect::<Vec<_>>());
        }
        trace
    };
    assert_eq!(run(net), run(back));
}

#[test]
fn smoke_run_beats_its_frozen_start() {
    let config = TrainConfig::smoke(0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = Network::init(config.network.clone(), &mut rng).unwrap();
    let frozen = forage_learn::evaluate_frozen(&config, &initial).unwrap();
    let out = run_training(&config, Some(initial), |_| {}).unwrap();
    let tail = |v: &[f64]| v[v.len() - 50..].iter().sum::<f64>() / 50.0;
    let trained: Vec<f64> = out.log.iter().map(|r| r.mean_reward).collect();
    assert!(tail(&trained) > tail(&frozen), "{} vs {}", tail(&trained), tail(&frozen));
}
