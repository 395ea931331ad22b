//! Scripted team controllers for the foraging world.

pub mod cardinality;
pub mod common;
pub mod csaf;
pub mod gradient;
pub mod planner;
pub mod random;

use std::fmt;
use std::str::FromStr;

use forage_core::Controller;

pub use cardinality::{cardinality_mr_step, BeaconState, CardinalityLike, VisibleBeacon};
pub use csaf::{csaf11_step, CoverageMap, CsafLike, CsafMode, CsafState, CsafView};
pub use gradient::{gradient_follower_step, GradientFollower};
pub use planner::{greedy_allocate, shortest_path, Assignment, DistanceCache, Objective, PlannerController, Unreachable};
pub use random::{random_walk_step, RandomWalk};

/// The scripted controllers, selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Baseline {
    Csaf,
    Cardinality,
    Gradient,
    Random,
    Planner,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::Csaf,
        Baseline::Cardinality,
        Baseline::Gradient,
        Baseline::Random,
        Baseline::Planner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Csaf => "csaf",
            Baseline::Cardinality => "cardinality",
            Baseline::Gradient => "gradient",
            Baseline::Random => "random",
            Baseline::Planner => "planner",
        }
    }

    pub fn build(self, seed: u64) -> Box<dyn Controller + Send> {
        match self {
            Baseline::Csaf => Box::new(CsafLike::new(seed)),
            Baseline::Cardinality => Box::new(CardinalityLike::new(seed)),
            Baseline::Gradient => Box::new(GradientFollower::new(seed)),
            Baseline::Random => Box::new(RandomWalk::new(seed)),
            Baseline::Planner => Box::new(PlannerController::new(seed)),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownBaseline(pub String);

impl fmt::Display for UnknownBaseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown controller {:?}", self.0)
    }
}

impl std::error::Error for UnknownBaseline {}

impl FromStr for Baseline {
    type Err = UnknownBaseline;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| UnknownBaseline(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for b in Baseline::ALL {
            assert_eq!(b.name().parse::<Baseline>(), Ok(b));
            assert_eq!(b.build(0).name(), b.name());
        }
        assert!("nope".parse::<Baseline>().is_err());
    }

    #[test]
    fn only_the_planner_is_centralised() {
        for b in Baseline::ALL {
            assert_eq!(b.build(0).is_decentralized(), b != Baseline::Planner);
        }
    }
}
