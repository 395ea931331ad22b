//! Egocentric observation properties over random worlds.

use std::collections::BTreeMap;

use forage_core::{
    extract_observation, Action, AgentId, Capacity, Cell, Channel, FovConfig, GridWorld, ObservationTensor, Pos,
    ResourceId, ResourceSpec, WorldConfig, WorldLayout,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_actions(world: &GridWorld, rng: &mut ChaCha8Rng) -> BTreeMap<AgentId, Action> {
    world
        .agents()
        .iter()
        .filter(|a| a.status.is_free())
        .map(|a| {
            let mask = world.valid_actions(a.id);
            let action = if mask.allows(Action::JoinQueue) {
                Action::JoinQueue
            } else {
                Action::ALL[rng.gen_range(0..4)]
            };
            (a.id, action)
        })
        .collect()
}

fn check_tensor(world: &GridWorld, id: AgentId, obs: &ObservationTensor) -> Result<(), TestCaseError> {
    let fov = obs.fov();
    let r = (fov / 2) as i32;
    let me = world.agent(id);
    for binary in [
        Channel::Obstacles,
        Channel::Resources,
        Channel::ResourceEntries,
        Channel::Nest,
        Channel::CacheEntries,
        Channel::Agents,
    ] {
        prop_assert!(obs.channel(binary).iter().all(|v| *v == 0.0 || *v == 1.0), "{:?}", binary);
    }
    for ranged in [Channel::Loads, Channel::Pheromones] {
        prop_assert!(obs.channel(ranged).iter().all(|v| (0.0..=1.0).contains(v)));
    }
    prop_assert_eq!(obs.at(Channel::Agents, 0, 0), 0.0);
    prop_assert_eq!(obs.at(Channel::Loads, 0, 0), me.load_fraction());
    for dr in -r..=r {
        for dc in -r..=r {
            let p = me.pos.offset(dr, dc);
            let marks: Vec<Channel> = [Channel::Resources, Channel::ResourceEntries, Channel::Nest, Channel::CacheEntries]
                .into_iter()
                .filter(|c| obs.at(*c, dr, dc) == 1.0)
                .collect();
            prop_assert!(marks.len() <= 1, "cell {} marked by {:?}", p, marks);
            match world.cell(p) {
                None => {
                    prop_assert_eq!(obs.at(Channel::Obstacles, dr, dc), 1.0);
                    for ch in &Channel::ALL[1..] {
                        prop_assert_eq!(obs.at(*ch, dr, dc), 0.0);
                    }
                }
                Some(cell) => {
                    prop_assert_eq!(obs.at(Channel::Obstacles, dr, dc) == 1.0, !cell.is_walkable());
                    prop_assert_eq!(obs.at(Channel::Resources, dr, dc) == 1.0, matches!(cell, Cell::ResourceBody(_)));
                    prop_assert_eq!(obs.at(Channel::Nest, dr, dc) == 1.0, cell == Cell::NestBody);
                    prop_assert_eq!(obs.at(Channel::Pheromones, dr, dc), world.field().sense(p));
                    let other = world.occupant(p).filter(|o| *o != id);
                    prop_assert_eq!(obs.at(Channel::Agents, dr, dc) == 1.0, other.is_some());
                    if let Some(o) = other {
                        prop_assert_eq!(obs.at(Channel::Loads, dr, dc), world.agent(o).load_fraction());
                    }
                }
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn observations_are_well_formed(
        seed in any::<u64>(),
        side in 12usize..30,
        density in 0.0f64..0.2,
        fov in prop::sample::select(vec![3usize, 5, 11, 21]),
        steps in 0usize..80,
    ) {
        let config = WorldConfig {
            width: side,
            height: side,
            obstacle_density: density,
            num_resources: 3,
            gather_rate: 0.5,
            team_size: 10,
            rng_seed: seed,
            ..WorldConfig::default()
        };
        let mut world = GridWorld::generate(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..steps {
            let actions = random_actions(&world, &mut rng);
            world.step(&actions).unwrap();
        }
        let cfg = FovConfig::new(fov).unwrap();
        // queued agents are off the grid and do not act
        for a in world.agents().iter().filter(|a| a.status.is_free()) {
            let obs = extract_observation(&world, a.id, cfg);
            check_tensor(&world, a.id, &obs)?;
        }
    }

    #[test]
    fn observations_are_translation_invariant(
        seed in any::<u64>(),
        dr in -4i32..=4,
        dc in -4i32..=4,
        steps in 0usize..6,
    ) {
        // entities well inside a 40x40 world so shifts never reach the border
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = Pos::new(14, 14);
        let mut used = std::collections::BTreeSet::new();
        let nest = base.offset(5, 5);
        for dr in -1..=2 {
            for dc in -1..=2 {
                used.insert(nest.offset(dr, dc));
            }
        }
        let pick = |rng: &mut ChaCha8Rng, used: &mut std::collections::BTreeSet<Pos>| loop {
            let p = base.offset(rng.gen_range(0..12), rng.gen_range(0..12));
            if used.insert(p) {
                return p;
            }
        };
        let mut resources = Vec::new();
        for id in 0..2 {
            let body = pick(&mut rng, &mut used);
            let entry = body.offset(0, 1);
            if !used.insert(entry) {
                continue;
            }
            resources.push(ResourceSpec { id: ResourceId(id), body, entry, capacity: Capacity::Infinite });
        }
        let obstacles: Vec<Pos> = (0..6).map(|_| pick(&mut rng, &mut used)).collect();
        let agents: Vec<Pos> = (0..4).map(|_| pick(&mut rng, &mut used)).collect();
        let layout = WorldLayout { width: 40, height: 40, nest_origin: nest, obstacles, resources, agents };
        let shift = |p: Pos| p.offset(dr, dc);
        let moved = WorldLayout {
            nest_origin: shift(layout.nest_origin),
            obstacles: layout.obstacles.iter().copied().map(shift).collect(),
            resources: layout
                .resources
                .iter()
                .map(|r| ResourceSpec { body: shift(r.body), entry: shift(r.entry), ..r.clone() })
                .collect(),
            agents: layout.agents.iter().copied().map(shift).collect(),
            ..layout.clone()
        };
        let config = WorldConfig { width: 40, height: 40, gather_rate: 1.0, rng_seed: seed, ..WorldConfig::default() };
        let mut a = GridWorld::from_layout(&config, &layout).unwrap();
        let mut b = GridWorld::from_layout(&config, &moved).unwrap();
        let mut act_rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..steps {
            let actions = random_actions(&a, &mut act_rng);
            a.step(&actions).unwrap();
            b.step(&actions).unwrap();
        }
        for id in a.agent_ids() {
            prop_assert_eq!(
                extract_observation(&a, id, FovConfig::default()),
                extract_observation(&b, id, FovConfig::default())
            );
        }
    }
}

#[test]
fn full_agent_sees_its_load_at_center() {
    let config = WorldConfig { gather_rate: 1.0, ..WorldConfig::default() };
    let layout = WorldLayout {
        width: 16,
        height: 16,
        nest_origin: Pos::new(7, 7),
        obstacles: vec![],
        resources: vec![ResourceSpec {
            id: ResourceId(0),
            body: Pos::new(2, 2),
            entry: Pos::new(2, 3),
            capacity: Capacity::Infinite,
        }],
        agents: vec![Pos::new(2, 3)],
    };
    let mut world = GridWorld::from_layout(&config, &layout).unwrap();
    let me = AgentId(0);
    world.step(&BTreeMap::from([(me, Action::JoinQueue)])).unwrap();
    world.step(&BTreeMap::new()).unwrap();
    assert!(world.agent(me).is_full());
    let obs = extract_observation(&world, me, FovConfig::default());
    assert_eq!(obs.at(Channel::Loads, 0, 0), 1.0);
    assert_eq!(obs.at(Channel::ResourceEntries, 0, 0), 1.0);
    assert_eq!(obs.at(Channel::Pheromones, 0, 0), world.field().sense(Pos::new(2, 3)));
    assert!(obs.at(Channel::Pheromones, 0, 0) > 0.0);
}
