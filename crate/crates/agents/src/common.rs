//! Helpers shared by the scripted controllers.

use std::collections::VecDeque;

use forage_core::{Action, ActionMask, AgentId, Channel, GridWorld, ObservationTensor, Pos};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent stream per controller kind so two controllers built from the
/// same seed never share draws.
pub fn controller_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Displacement from the agent to the nearest cache entry. Scripted agents
/// are granted perfect odometry, so this equals the integrated displacement
/// since the agent left the nest.
pub fn home_vector(world: &GridWorld, id: AgentId) -> (i32, i32) {
    let pos = world.agent(id).pos;
    let target = world
        .nest()
        .cache_entries()
        .into_iter()
        .min_by_key(|c| (pos.manhattan(*c), *c))
        .expect("nest has caches");
    (target.row - pos.row, target.col - pos.col)
}

/// Descends the home vector: the dominant component first (vertical on
/// ties), then the other one, then any valid move.
pub fn home_step(home: (i32, i32), mask: ActionMask, rng: &mut impl Rng) -> Option<Action> {
    let vertical = (home.0 != 0).then(|| Action::from_delta(home.0.signum(), 0)).flatten();
    let horizontal = (home.1 != 0).then(|| Action::from_delta(0, home.1.signum())).flatten();
    let order = if home.0.abs() >= home.1.abs() {
        [vertical, horizontal]
    } else {
        [horizontal, vertical]
    };
    order
        .into_iter()
        .flatten()
        .find(|a| mask.allows(*a))
        .or_else(|| random_move(mask, rng))
}

/// Uniform choice among the valid moves; `None` when boxed in.
pub fn random_move(mask: ActionMask, rng: &mut impl Rng) -> Option<Action> {
    let moves: Vec<Action> = Action::MOVES.into_iter().filter(|a| mask.allows(*a)).collect();
    moves.choose(rng).copied()
}

/// First move of a shortest path inside the observation window to the
/// nearest cell satisfying `goal`. Obstacles and other agents block; cells
/// are expanded N, S, E, W. Returns `None` if the agent already stands on a
/// goal or none is reachable.
pub fn fov_step_toward(obs: &ObservationTensor, goal: impl Fn(i32, i32) -> bool) -> Option<Action> {
    if goal(0, 0) {
        return None;
    }
    let r = (obs.fov() / 2) as i32;
    let side = obs.fov();
    let idx = |dr: i32, dc: i32| (dr + r) as usize * side + (dc + r) as usize;
    let mut first: Vec<Option<Action>> = vec![None; side * side];
    let mut seen = vec![false; side * side];
    seen[idx(0, 0)] = true;
    let mut queue = VecDeque::from([(0i32, 0i32)]);
    while let Some((dr, dc)) = queue.pop_front() {
        for action in Action::MOVES {
            let (sr, sc) = action.delta().expect("move");
            let (nr, nc) = (dr + sr, dc + sc);
            if nr.abs() > r || nc.abs() > r || seen[idx(nr, nc)] {
                continue;
            }
            seen[idx(nr, nc)] = true;
            if obs.at(Channel::Obstacles, nr, nc) == 1.0 || obs.at(Channel::Agents, nr, nc) == 1.0 {
                continue;
            }
            let step = if (dr, dc) == (0, 0) { Some(action) } else { first[idx(dr, dc)] };
            if goal(nr, nc) {
                return step;
            }
            first[idx(nr, nc)] = step;
            queue.push_back((nr, nc));
        }
    }
    None
}

/// Whether `(dr, dc)` is an entry marked in `channel`, or orthogonally
/// beside one: the cells from which that queue can be joined.
pub fn near_entry(obs: &ObservationTensor, channel: Channel, dr: i32, dc: i32) -> bool {
    std::iter::once((dr, dc))
        .chain(Pos::new(dr, dc).neighbors4().map(|p| (p.row, p.col)))
        .any(|(r, c)| obs.at(channel, r, c) == 1.0)
}

/// Entry cells of `channel` visible in the window, as offsets.
pub fn visible_entries(obs: &ObservationTensor, channel: Channel) -> Vec<(i32, i32)> {
    let r = (obs.fov() / 2) as i32;
    let mut out = Vec::new();
    for dr in -r..=r {
        for dc in -r..=r {
            if obs.at(channel, dr, dc) == 1.0 {
                out.push((dr, dc));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use forage_core::FovConfig;

    fn blank(fov: usize) -> ObservationTensor {
        ObservationTensor::zeros(fov)
    }

    fn put(obs: &mut ObservationTensor, ch: Channel, dr: i32, dc: i32) {
        let r = (obs.fov() / 2) as i32;
        obs.set(ch, (dr + r) as usize, (dc + r) as usize, 1.0);
    }

    #[test]
    fn home_step_prefers_dominant_component() {
        let mut rng = controller_rng(0, 0);
        let mask = ActionMask::ALL_VALID;
        assert_eq!(home_step((-4, 1), mask, &mut rng), Some(Action::MoveNorth));
        assert_eq!(home_step((2, -5), mask, &mut rng), Some(Action::MoveWest));
        assert_eq!(home_step((3, 3), mask, &mut rng), Some(Action::MoveSouth));
        let mut no_north = mask;
        no_north.set(Action::MoveNorth, false);
        assert_eq!(home_step((-4, 1), no_north, &mut rng), Some(Action::MoveEast));
    }

    #[test]
    fn random_move_is_uniform_over_valid_moves() {
        let mut rng = controller_rng(1, 0);
        let mask = ActionMask([true, false, true, false, false]);
        let mut counts = [0usize; 5];
        for _ in 0..4000 {
            counts[random_move(mask, &mut rng).unwrap().index()] += 1;
        }
        assert_eq!(counts[1] + counts[3] + counts[4], 0);
        assert!((counts[0] as i64 - 2000).abs() < 150, "{counts:?}");
        assert_eq!(random_move(ActionMask::NONE_VALID, &mut rng), None);
    }

    #[test]
    fn fov_path_walks_around_walls() {
        let mut obs = blank(FovConfig::default().fov);
        // wall east of the agent from row -2 to 2
        for dr in -2..=2 {
            put(&mut obs, Channel::Obstacles, dr, 1);
        }
        put(&mut obs, Channel::ResourceEntries, 0, 3);
        let step = fov_step_toward(&obs, |dr, dc| near_entry(&obs, Channel::ResourceEntries, dr, dc));
        assert!(matches!(step, Some(Action::MoveNorth) | Some(Action::MoveSouth)));
    }

    #[test]
    fn fov_path_goes_straight_when_clear() {
        let mut obs = blank(11);
        put(&mut obs, Channel::ResourceEntries, -2, 0);
        let step = fov_step_toward(&obs, |dr, dc| near_entry(&obs, Channel::ResourceEntries, dr, dc));
        assert_eq!(step, Some(Action::MoveNorth));
        let mut at = blank(11);
        put(&mut at, Channel::ResourceEntries, -1, 0);
        assert_eq!(fov_step_toward(&at, |dr, dc| near_entry(&at, Channel::ResourceEntries, dr, dc)), None);
    }
}
