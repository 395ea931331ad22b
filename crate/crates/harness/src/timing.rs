//! Runtime per world step.

use std::time::Duration;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingRecord {
    pub steps: usize,
    pub team: usize,
    /// Mean controller time per world step, in seconds.
    pub per_step: f64,
    /// `per_step / team` for decentralised controllers.
    pub per_agent_step: Option<f64>,
    /// Mean time per step including the world update, in seconds.
    pub per_world_step: f64,
}

impl TimingRecord {
    pub fn new(steps: usize, controller_total: f64, world_total: f64, team: usize, decentralized: bool) -> Self {
        let n = steps.max(1) as f64;
        let per_step = controller_total / n;
        Self {
            steps,
            team,
            per_step,
            per_agent_step: (decentralized && team > 0).then(|| per_step / team as f64),
            per_world_step: world_total / n,
        }
    }

    pub fn from_steps(controller: &[Duration], step: &[Duration], team: usize, decentralized: bool) -> Self {
        let total = |d: &[Duration]| d.iter().map(Duration::as_secs_f64).sum::<f64>();
        Self::new(controller.len(), total(controller), total(step), team, decentralized)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decentralised_time_is_divided_by_team() {
        let r = TimingRecord::new(10, 0.04, 0.05, 16, true);
        assert!((r.per_step - 0.004).abs() < 1e-15);
        assert!((r.per_agent_step.unwrap() - 0.00025).abs() < 1e-15);
        assert!((r.per_world_step - 0.005).abs() < 1e-15);
    }

    #[test]
    fn centralised_time_is_not_divided() {
        assert_eq!(TimingRecord::new(10, 0.04, 0.05, 16, false).per_agent_step, None);
    }

    #[test]
    fn from_durations() {
        let c = [Duration::from_millis(2), Duration::from_millis(6)];
        let r = TimingRecord::from_steps(&c, &c, 4, true);
        assert_eq!(r.steps, 2);
        assert!((r.per_step - 0.004).abs() < 1e-12);
        assert!((r.per_agent_step.unwrap() - 0.001).abs() < 1e-12);
    }
}
