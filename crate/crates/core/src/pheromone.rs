//! Scalar pheromone concentration grid.
//!
//! Full agents stamp `alpha^(t - h)` onto the cell they stand on, where `h`
//! is the step at which they finished harvesting. Concurrent trails merge by
//! taking the maximum, and the whole grid decays by `beta` once per step.
//! Because `max(beta*a, beta*b) == beta*max(a, b)` holds exactly in floating
//! point for `beta >= 0`, one merged grid is equivalent to keeping a layer per
//! agent and taking the maximum at read time.
//!
//! A static highway grid can be overlaid for curriculum training; sensing
//! returns `max(w_a * P, w_h * H)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Pos;
use crate::world::GridWorld;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    /// `alpha^(t - h)`.
    Normal,
    /// Every deposit has concentration 1 (trail without a gradient).
    NoGradient,
    /// `alpha^(t - h)` plus uniform noise in `[-local_noise, local_noise]`, clipped to [0, 1].
    LocalNoise,
    /// Uniform in [0.2, 1], independent of the trail age.
    GradientDestroying,
}

impl NoiseMode {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Normal => "normal",
            NoiseMode::NoGradient => "no-gradient",
            NoiseMode::LocalNoise => "local-noise",
            NoiseMode::GradientDestroying => "gradient-destroying",
        }
    }

    pub fn parse(name: &str) -> Option<NoiseMode> {
        [
            NoiseMode::Normal,
            NoiseMode::NoGradient,
            NoiseMode::LocalNoise,
            NoiseMode::GradientDestroying,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PheromoneParams {
    /// Per-step decay of a carrier's trail strength since its last harvest.
    pub alpha: f64,
    /// Per-step decay of every deposited concentration.
    pub beta: f64,
    pub noise_mode: NoiseMode,
    /// Half-width of the uniform perturbation in [`NoiseMode::LocalNoise`].
    pub local_noise: f64,
}

impl Default for PheromoneParams {
    fn default() -> Self {
        Self {
            alpha: 0.97,
            beta: 0.99,
            noise_mode: NoiseMode::Normal,
            local_noise: 0.1,
        }
    }
}

impl PheromoneParams {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.alpha)
            && (0.0..=1.0).contains(&self.beta)
            && self.local_noise >= 0.0
    }

    /// Strength a carrier stamps `steps_since_harvest` steps after harvesting.
    pub fn trail_strength(&self, steps_since_harvest: u64) -> f64 {
        self.alpha.powf(steps_since_harvest as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PheromoneField {
    width: usize,
    height: usize,
    grid: Vec<f64>,
    highway: Vec<f64>,
    highway_weight: f64,
    agent_weight: f64,
    wipeout_remaining: u64,
    noise_rng: ChaCha8Rng,
}

impl PheromoneField {
    pub fn new(width: usize, height: usize, noise_seed: u64) -> Self {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(noise_seed);
        noise_rng.set_stream(2);
        Self {
            width,
            height,
            grid: vec![0.0; width * height],
            highway: vec![0.0; width * height],
            highway_weight: 0.0,
            agent_weight: 1.0,
            wipeout_remaining: 0,
            noise_rng,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn index(&self, pos: Pos) -> Option<usize> {
        (pos.row >= 0
            && pos.col >= 0
            && (pos.row as usize) < self.height
            && (pos.col as usize) < self.width)
            .then(|| pos.row as usize * self.width + pos.col as usize)
    }

    /// Raw agent-deposited concentration (ignores weights and wipeouts).
    pub fn concentration(&self, pos: Pos) -> f64 {
        self.index(pos).map_or(0.0, |i| self.grid[i])
    }

    pub fn highway_at(&self, pos: Pos) -> f64 {
        self.index(pos).map_or(0.0, |i| self.highway[i])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn total(&self) -> f64 {
        self.grid.iter().sum()
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.highway_weight, self.agent_weight)
    }

    pub fn wipeout_remaining(&self) -> u64 {
        self.wipeout_remaining
    }

    pub fn wipeout_active(&self) -> bool {
        self.wipeout_remaining > 0
    }

    pub fn set_weights(&mut self, highway_weight: f64, agent_weight: f64) {
        self.highway_weight = highway_weight.clamp(0.0, 1.0);
        self.agent_weight = agent_weight.clamp(0.0, 1.0);
    }

    /// Replaces the static highway grid. Values are clipped to [0, 1].
    pub fn set_highways(&mut self, highway: Vec<f64>) {
        assert_eq!(highway.len(), self.width * self.height, "highway grid size");
        self.highway = highway.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    }

    /// Stamps a carrier's trail onto `pos` at step `t`, `h` being the step at
    /// which the carrier finished harvesting. Suppressed during a wipeout.
    pub fn deposit(&mut self, pos: Pos, t: u64, h: u64, params: &PheromoneParams) {
        if self.wipeout_active() {
            return;
        }
        let Some(i) = self.index(pos) else { return };
        let age = t.saturating_sub(h);
        let strength = match params.noise_mode {
            NoiseMode::Normal => params.trail_strength(age),
            NoiseMode::NoGradient => 1.0,
            NoiseMode::LocalNoise => {
                let u = if params.local_noise > 0.0 {
                    self.noise_rng.gen_range(-params.local_noise..=params.local_noise)
                } else {
                    0.0
                };
                (params.trail_strength(age) + u).clamp(0.0, 1.0)
            }
            NoiseMode::GradientDestroying => self.noise_rng.gen_range(0.2..=1.0),
        };
        if strength > self.grid[i] {
            self.grid[i] = strength;
        }
    }

    /// One step of exponential decay. Highways never decay.
    pub fn decay_step(&mut self, params: &PheromoneParams) {
        for v in &mut self.grid {
            *v *= params.beta;
        }
    }

    /// Concentration an agent perceives at `pos`.
    pub fn sense(&self, pos: Pos) -> f64 {
        if self.wipeout_active() {
            return 0.0;
        }
        self.index(pos).map_or(0.0, |i| {
            (self.agent_weight * self.grid[i]).max(self.highway_weight * self.highway[i])
        })
    }

    /// Removes every agent pheromone and suppresses deposits and sensing for
    /// `duration` world steps.
    pub fn trigger_wipeout(&mut self, duration: u64) {
        assert!(duration > 0, "wipeout duration must be positive");
        self.grid.fill(0.0);
        self.wipeout_remaining = duration;
    }

    /// Advances the wipeout countdown by one world step.
    pub fn tick_wipeout(&mut self) {
        self.wipeout_remaining = self.wipeout_remaining.saturating_sub(1);
    }

    /// Dense row-major dump, one grid row per line, six decimals.
    pub fn dump(&self) -> String {
        dump_grid(&self.grid, self.width)
    }

    pub fn dump_highways(&self) -> String {
        dump_grid(&self.highway, self.width)
    }
}

fn dump_grid(values: &[f64], width: usize) -> String {
    let mut out = String::with_capacity(values.len() * 9);
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a [`PheromoneField::dump`] back into rows of values.
pub fn parse_dump(text: &str) -> Result<Vec<Vec<f64>>, std::num::ParseFloatError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::parse).collect())
        .collect()
}

/// Rasterised straight line from `from` to `to`, both ends included.
pub fn bresenham(from: Pos, to: Pos) -> Vec<Pos> {
    let (mut r, mut c) = (from.row, from.col);
    let dr = (to.row - r).abs();
    let dc = (to.col - c).abs();
    let sr = if to.row >= r { 1 } else { -1 };
    let sc = if to.col >= c { 1 } else { -1 };
    let mut err = dc - dr;
    let mut cells = Vec::with_capacity((dr.max(dc) + 1) as usize);
    loop {
        cells.push(Pos::new(r, c));
        if r == to.row && c == to.col {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dr {
            err -= dr;
            c += sc;
        }
        if e2 < dc {
            err += dc;
            r += sr;
        }
    }
    cells
}

/// Static curriculum trails from every live resource entry to its nearest
/// nest cache entry. The cell `k` steps from the resource holds `alpha^k`,
/// the value a carrier leaving the resource would stamp there.
pub fn build_highways(world: &GridWorld, params: &PheromoneParams) -> Vec<f64> {
    let (w, h) = (world.width(), world.height());
    let mut grid = vec![0.0; w * h];
    let caches = world.nest().cache_entries();
    for resource in world.resources() {
        let entry = resource.entry;
        let target = caches
            .iter()
            .copied()
            .min_by_key(|c| (entry.manhattan(*c), *c))
            .expect("nest has four caches");
        for (k, cell) in bresenham(entry, target).into_iter().enumerate() {
            if world.in_bounds(cell) {
                let i = cell.row as usize * w + cell.col as usize;
                let v = params.trail_strength(k as u64);
                if v > grid[i] {
                    grid[i] = v;
                }
            }
        }
    }
    grid
}

/// Linear crossfade from highways to agent trails between two episode marks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurriculumSchedule {
    pub start: u64,
    pub end: u64,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        Self {
            start: 5_000,
            end: 10_000,
        }
    }
}

impl CurriculumSchedule {
    /// `(highway_weight, agent_weight)` at `episode`.
    pub fn weights(&self, episode: u64) -> (f64, f64) {
        assert!(self.start < self.end, "curriculum start must precede end");
        if episode <= self.start {
            (1.0, 0.0)
        } else if episode >= self.end {
            (0.0, 1.0)
        } else {
            let w_h = (self.end - episode) as f64 / (self.end - self.start) as f64;
            (w_h, 1.0 - w_h)
        }
    }
}

/// Curriculum weights under the default 5k..10k schedule.
pub fn curriculum_weights(episode: u64) -> (f64, f64) {
    CurriculumSchedule::default().weights(episode)
}
