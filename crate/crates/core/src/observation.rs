//! Egocentric, channelled field-of-view tensor.

use std::fmt::Write as _;

use crate::geom::Pos;
use crate::world::{AgentId, Cell, GridWorld, Target};

pub const CHANNELS: usize = 8;

/// Identifier of the channel layout below. Checkpoints record it so a policy
/// is never fed a tensor with a different meaning.
pub const CHANNEL_LAYOUT: &str = "ego8-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Obstacles, nest/resource bodies and out-of-bounds cells.
    Obstacles = 0,
    Resources = 1,
    ResourceEntries = 2,
    Nest = 3,
    CacheEntries = 4,
    /// Other free agents (self excluded).
    Agents = 5,
    /// Load carried by each free agent, self included.
    Loads = 6,
    Pheromones = 7,
}

impl Channel {
    pub const ALL: [Channel; CHANNELS] = [
        Channel::Obstacles,
        Channel::Resources,
        Channel::ResourceEntries,
        Channel::Nest,
        Channel::CacheEntries,
        Channel::Agents,
        Channel::Loads,
        Channel::Pheromones,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FovConfig {
    pub fov: usize,
}

impl Default for FovConfig {
    fn default() -> Self {
        Self { fov: 11 }
    }
}

impl FovConfig {
    pub fn new(fov: usize) -> Option<Self> {
        (fov >= 3 && fov % 2 == 1).then_some(Self { fov })
    }

    pub fn radius(&self) -> i32 {
        (self.fov / 2) as i32
    }
}

/// `fov x fov x 8` values stored channel-major (`[channel][row][col]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationTensor {
    fov: usize,
    data: Vec<f64>,
}

impl ObservationTensor {
    pub fn zeros(fov: usize) -> Self {
        Self {
            fov,
            data: vec![0.0; CHANNELS * fov * fov],
        }
    }

    pub fn fov(&self) -> usize {
        self.fov
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn from_data(fov: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == CHANNELS * fov * fov).then_some(Self { fov, data })
    }

    fn offset(&self, channel: Channel, row: usize, col: usize) -> usize {
        (channel as usize * self.fov + row) * self.fov + col
    }

    /// Value at window coordinates (`row`, `col` in `0..fov`).
    pub fn get(&self, channel: Channel, row: usize, col: usize) -> f64 {
        self.data[self.offset(channel, row, col)]
    }

    pub fn set(&mut self, channel: Channel, row: usize, col: usize, value: f64) {
        let i = self.offset(channel, row, col);
        self.data[i] = value;
    }

    /// Value at an offset relative to the observing agent.
    pub fn at(&self, channel: Channel, drow: i32, dcol: i32) -> f64 {
        let r = self.fov as i32 / 2;
        if drow.abs() > r || dcol.abs() > r {
            return 0.0;
        }
        self.get(channel, (drow + r) as usize, (dcol + r) as usize)
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        let n = self.fov * self.fov;
        &self.data[channel as usize * n..(channel as usize + 1) * n]
    }

    pub fn channel_sum(&self, channel: Channel) -> f64 {
        self.channel(channel).iter().sum()
    }

    /// Channel-major flat text, six decimals, one channel per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("fov {}\n", self.fov);
        for ch in Channel::ALL {
            let line: Vec<String> = self.channel(ch).iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let fov: usize = lines.next()?.strip_prefix("fov ")?.trim().parse().ok()?;
        let mut data = Vec::with_capacity(CHANNELS * fov * fov);
        for line in lines.take(CHANNELS) {
            for v in line.split_whitespace() {
                data.push(v.parse().ok()?);
            }
        }
        Self::from_data(fov, data)
    }
}

/// Builds the observation of `agent`, centred on its position.
pub fn extract_observation(world: &GridWorld, agent: AgentId, cfg: FovConfig) -> ObservationTensor {
    let me = world.agent(agent);
    let center = me.pos;
    let r = cfg.radius();
    let mut obs = ObservationTensor::zeros(cfg.fov);
    for wr in 0..cfg.fov {
        for wc in 0..cfg.fov {
            let p = Pos::new(center.row + wr as i32 - r, center.col + wc as i32 - r);
            let Some(cell) = world.cell(p) else {
                obs.set(Channel::Obstacles, wr, wc, 1.0);
                continue;
            };
            match cell {
                Cell::Empty => {}
                Cell::Obstacle => obs.set(Channel::Obstacles, wr, wc, 1.0),
                Cell::ResourceBody(_) => {
                    obs.set(Channel::Obstacles, wr, wc, 1.0);
                    obs.set(Channel::Resources, wr, wc, 1.0);
                }
                Cell::NestBody => {
                    obs.set(Channel::Obstacles, wr, wc, 1.0);
                    obs.set(Channel::Nest, wr, wc, 1.0);
                }
                Cell::QueueEntry(Target::Resource(_)) => obs.set(Channel::ResourceEntries, wr, wc, 1.0),
                Cell::QueueEntry(Target::Cache(_)) => obs.set(Channel::CacheEntries, wr, wc, 1.0),
            }
            if let Some(other) = world.occupant(p) {
                if other != agent {
                    obs.set(Channel::Agents, wr, wc, 1.0);
                    obs.set(Channel::Loads, wr, wc, world.agent(other).load_fraction());
                }
            }
            obs.set(Channel::Pheromones, wr, wc, world.field().sense(p));
        }
    }
    obs.set(Channel::Loads, r as usize, r as usize, me.load_fraction());
    obs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PheromoneView {
    #[default]
    Passthrough,
    /// Zeroes the pheromone channel.
    EmptyChannel,
}

pub fn pheromone_ablation_view(mut obs: ObservationTensor, mode: PheromoneView) -> ObservationTensor {
    if mode == PheromoneView::EmptyChannel {
        let n = obs.fov * obs.fov;
        let start = Channel::Pheromones as usize * n;
        obs.data[start..start + n].fill(0.0);
    }
    obs
}
