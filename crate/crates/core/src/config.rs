use crate::error::WorldError;

/// Fixed-point denominator for agent loads and resource units.
///
/// 720720 is divisible by every integer in 1..=16, so the common rates
/// (1, 1/2, 1/3, 1/4, 1/5, 1/10, ...) are represented exactly and food is
/// conserved with integer arithmetic.
pub const LOAD_SCALE: u64 = 720_720;

/// Load transferred per interaction step for a rate in (0, 1].
pub fn rate_units(rate: f64) -> u64 {
    ((rate * LOAD_SCALE as f64).round() as u64).clamp(1, LOAD_SCALE)
}

/// Number of interaction steps needed to fill (or empty) a one-unit load.
pub fn interaction_steps(rate: f64) -> u64 {
    LOAD_SCALE.div_ceil(rate_units(rate))
}

pub fn units_to_scaled(units: f64) -> u64 {
    (units * LOAD_SCALE as f64).round() as u64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Capacity {
    Infinite,
    /// Food units; fractional capacities are allowed and leave the last
    /// harvester with a partial load.
    Finite(f64),
}

impl Capacity {
    pub(crate) fn scaled(self) -> Option<u64> {
        match self {
            Capacity::Infinite => None,
            Capacity::Finite(units) => Some(units_to_scaled(units)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub width: usize,
    pub height: usize,
    pub obstacle_density: f64,
    pub num_resources: usize,
    pub resource_capacity: Capacity,
    pub gather_rate: f64,
    pub dropoff_rate: f64,
    pub respawn_on_depletion: bool,
    pub team_size: usize,
    pub rng_seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            obstacle_density: 0.0,
            num_resources: 3,
            resource_capacity: Capacity::Infinite,
            gather_rate: 0.5,
            dropoff_rate: 0.5,
            respawn_on_depletion: false,
            team_size: 4,
            rng_seed: 0,
        }
    }
}

impl WorldConfig {
    pub const MIN_SIDE: usize = 12;

    pub fn validate(&self) -> Result<(), WorldError> {
        let fail = |msg: String| Err(WorldError::InvalidConfig(msg));
        if self.width < Self::MIN_SIDE || self.height < Self::MIN_SIDE {
            return fail(format!(
                "world must be at least {0}x{0}, got {1}x{2}",
                Self::MIN_SIDE,
                self.width,
                self.height
            ));
        }
        if self.width > i32::MAX as usize / 2 || self.height > i32::MAX as usize / 2 {
            return fail("world dimensions too large".into());
        }
        if !(0.0..=0.5).contains(&self.obstacle_density) {
            return fail(format!(
                "obstacle density {} outside [0, 0.5]",
                self.obstacle_density
            ));
        }
        for (name, rate) in [("gather", self.gather_rate), ("dropoff", self.dropoff_rate)] {
            if !(rate > 0.0 && rate <= 1.0) {
                return fail(format!("{name} rate {rate} outside (0, 1]"));
            }
        }
        if self.num_resources == 0 {
            return fail("at least one resource is required".into());
        }
        if let Capacity::Finite(units) = self.resource_capacity {
            if !(units > 0.0 && units.is_finite()) {
                return fail(format!("resource capacity {units} must be positive"));
            }
        }
        Ok(())
    }
}
