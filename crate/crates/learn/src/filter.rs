//! Training-time action filtering and sampling.

use forage_core::{Action, ActionMask, AgentId, GridWorld};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::net::ACTIONS;

/// Drops moves whose displacement has a negative dot product with `toward`.
/// Perpendicular moves and `JoinQueue` are kept. If nothing valid would
/// remain, the mask is returned unchanged.
pub fn filter_away_moves(mask: ActionMask, toward: (f64, f64)) -> ActionMask {
    let mut out = mask;
    for a in Action::MOVES {
        let (dr, dc) = a.delta().expect("move");
        if dr as f64 * toward.0 + dc as f64 * toward.1 < 0.0 {
            out.set(a, false);
        }
    }
    if out.any() {
        out
    } else {
        mask
    }
}

/// For a full agent, removes moves that take it further from the nest
/// center. Other agents get `mask` back unchanged.
pub fn euclidean_action_filter(world: &GridWorld, agent: AgentId, mask: ActionMask) -> ActionMask {
    let a = world.agent(agent);
    if !a.is_full() {
        return mask;
    }
    let (cr, cc) = world.nest().center();
    filter_away_moves(mask, (cr - a.pos.row as f64, cc - a.pos.col as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// Invalid draws are replaced by a uniform valid action.
    Train,
    /// Draws are enacted as sampled; the world absorbs invalid ones.
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampled {
    /// Drawn from the policy.
    pub drawn: Action,
    pub drawn_valid: bool,
    /// Sent to the world; `None` means stay in place.
    pub enacted: Option<Action>,
}

pub fn sample_categorical(probs: &[f64; ACTIONS], rng: &mut impl Rng) -> Action {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Action::from_index(i).expect("index < 5");
        }
    }
    // rounding left u above the total mass
    let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(ACTIONS - 1);
    Action::from_index(last).expect("index < 5")
}

pub fn sample_action(probs: &[f64; ACTIONS], mask: ActionMask, mode: SampleMode, rng: &mut impl Rng) -> Sampled {
    let drawn = sample_categorical(probs, rng);
    let drawn_valid = mask.allows(drawn);
    let enacted = match mode {
        SampleMode::Test => Some(drawn),
        SampleMode::Train if drawn_valid => Some(drawn),
        SampleMode::Train => {
            let valid: Vec<Action> = mask.valid_actions().collect();
            valid.choose(rng).copied()
        }
    };
    Sampled {
        drawn,
        drawn_valid,
        enacted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dot_product_example() {
        // agent at (10,10), nest center (8,10)
        let m = filter_away_moves(ActionMask::ALL_VALID, (-2.0, 0.0));
        assert!(m.allows(Action::MoveNorth));
        assert!(!m.allows(Action::MoveSouth));
        assert!(m.allows(Action::MoveEast) && m.allows(Action::MoveWest));
        assert!(m.allows(Action::JoinQueue));
    }

    #[test]
    fn filter_is_lifted_when_only_away_moves_exist() {
        let only_south = ActionMask([false, true, false, false, false]);
        assert_eq!(filter_away_moves(only_south, (-2.0, 0.0)), only_south);
    }

    #[test]
    fn concentrated_invalid_draw_resamples_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let probs = [1.0, 0.0, 0.0, 0.0, 0.0];
        let mask = ActionMask([false, true, true, false, true]);
        let mut counts = [0usize; ACTIONS];
        for _ in 0..3000 {
            let s = sample_action(&probs, mask, SampleMode::Train, &mut rng);
            assert_eq!(s.drawn, Action::MoveNorth);
            assert!(!s.drawn_valid);
            counts[s.enacted.unwrap().index()] += 1;
        }
        assert_eq!(counts[0] + counts[3], 0);
        for i in [1, 2, 4] {
            assert!((900..1100).contains(&counts[i]), "{counts:?}");
        }
    }

    #[test]
    fn boxed_in_agent_stays() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_action(&[0.2; ACTIONS], ActionMask::NONE_VALID, SampleMode::Train, &mut rng);
        assert_eq!(s.enacted, None);
    }

    #[test]
    fn test_mode_enacts_invalid_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_action(&[1.0, 0.0, 0.0, 0.0, 0.0], ActionMask::NONE_VALID, SampleMode::Test, &mut rng);
        assert_eq!(s.enacted, Some(Action::MoveNorth));
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let probs = [0.1, 0.2, 0.3, 0.4, 0.0];
        let mut counts = [0usize; ACTIONS];
        for _ in 0..20000 {
            counts[sample_categorical(&probs, &mut rng).index()] += 1;
        }
        assert_eq!(counts[4], 0);
        for i in 0..4 {
            let f = counts[i] as f64 / 20000.0;
            assert!((f - probs[i]).abs() < 0.015, "{counts:?}");
        }
    }
}
