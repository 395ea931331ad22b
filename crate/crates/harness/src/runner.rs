//! Episode execution, per-step metrics and resumable experiment runs.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use forage_agents::Baseline;
use forage_core::{Controller, NoiseMode, PheromoneParams, Scenario};
use forage_learn::{read_checkpoint, Network, PolicyController};
use rayon::prelude::*;

use crate::error::{HarnessError, IoContext};
use crate::matrix::{read_scenarios, ScenarioFile};
use crate::timing::TimingRecord;

/// A controller that can be instantiated once per episode.
#[derive(Clone, Debug)]
pub enum Algo {
    Baseline(Baseline),
    Learned(Network),
}

impl Algo {
    /// Accepts the baseline names plus `csaf11` and `cardinality-mr`
    /// aliases, and `learned` (which needs `checkpoint`).
    pub fn resolve(name: &str, checkpoint: Option<&Path>) -> Result<Algo, HarnessError> {
        let canonical = match name {
            "csaf11" => "csaf",
            "cardinality-mr" => "cardinality",
            other => other,
        };
        if canonical == "learned" {
            let path = checkpoint.ok_or(HarnessError::MissingCheckpoint)?;
            let text = std::fs::read_to_string(path).at(path)?;
            let net = read_checkpoint(&text).map_err(|source| HarnessError::Checkpoint {
                path: path.to_path_buf(),
                source,
            })?;
            return Ok(Algo::Learned(net));
        }
        canonical
            .parse()
            .map(Algo::Baseline)
            .map_err(|_| HarnessError::UnknownController(name.to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algo::Baseline(b) => b.name(),
            Algo::Learned(_) => "learned",
        }
    }

    pub fn build(&self, seed: u64) -> Box<dyn Controller + Send> {
        match self {
            Algo::Baseline(b) => b.build(seed),
            Algo::Learned(net) => Box::new(PolicyController::new(net.clone(), seed)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Nothing can sense pheromones (sensing weights set to zero).
    pub ablate_pheromones: bool,
    pub noise_mode: NoiseMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            ablate_pheromones: false,
            noise_mode: NoiseMode::Normal,
        }
    }
}

impl RunOptions {
    /// Controller seed for one scenario.
    pub fn controller_seed(&self, scenario: &Scenario) -> u64 {
        self.seed ^ scenario.config.rng_seed.rotate_left(17)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMetrics {
    pub team: usize,
    pub decentralized: bool,
    /// Food deposited at the nest after each step.
    pub cumulative: Vec<f64>,
    /// Time spent in the controller's decide and observe calls.
    pub controller_time: Vec<Duration>,
    /// Controller time plus the world update.
    pub step_time: Vec<Duration>,
}

impl EpisodeMetrics {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `step,cumulative` rows; the timing-free part of the record.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("step,cumulative\n");
        for (i, c) in self.cumulative.iter().enumerate() {
            out.push_str(&format!("{},{c}\n", i + 1));
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("step,controller_ns,step_ns\n");
        for (i, (c, s)) in self.controller_time.iter().zip(&self.step_time).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, c.as_nanos(), s.as_nanos()));
        }
        out
    }

    pub fn timing(&self) -> TimingRecord {
        TimingRecord::from_steps(&self.controller_time, &self.step_time, self.team, self.decentralized)
    }
}

/// Runs `scenario` to its episode length, applying its wipeouts and the
/// run options.
pub fn run_scenario(
    scenario: &Scenario,
    controller: &mut dyn Controller,
    options: &RunOptions,
) -> Result<EpisodeMetrics, HarnessError> {
    let mut world = scenario.build_world()?;
    world.set_pheromone_params(PheromoneParams {
        noise_mode: options.noise_mode,
        ..PheromoneParams::default()
    });
    if options.ablate_pheromones {
        world.field_mut().set_weights(0.0, 0.0);
    }
    let len = scenario.episode_length as usize;
    let mut metrics = EpisodeMetrics {
        team: scenario.team_size(),
        decentralized: controller.is_decentralized(),
        cumulative: Vec::with_capacity(len),
        controller_time: Vec::with_capacity(len),
        step_time: Vec::with_capacity(len),
    };
    controller.reset(&world);
    for step in 0..scenario.episode_length {
        if let Some(w) = scenario.wipeouts.iter().find(|w| w.start == step) {
            world.field_mut().trigger_wipeout(w.duration);
        }
        let t0 = Instant::now();
        let decisions = controller.decide(&world);
        let t1 = Instant::now();
        let outcome = world.step(&decisions)?;
        let t2 = Instant::now();
        controller.observe(&world, &outcome);
        let t3 = Instant::now();
        metrics.controller_time.push((t1 - t0) + (t3 - t2));
        metrics.step_time.push(t3 - t0);
        metrics.cumulative.push(world.deposited_food());
    }
    Ok(metrics)
}

/// Output paths for one scenario: `<out>/<algo>/<kind>/<stem>.csv` and the
/// matching `.timing.csv`.
pub fn result_paths(out: &Path, algo: &str, file: &ScenarioFile) -> (PathBuf, PathBuf) {
    let dir = out.join(algo).join(file.scenario.kind.name());
    let stem = file.key.stem();
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.timing.csv")))
}

fn write_atomically(path: &Path, text: &str) -> Result<(), HarnessError> {
    let tmp = path.with_extension("part");
    std::fs::write(&tmp, text).at(&tmp)?;
    std::fs::rename(&tmp, path).at(path)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub completed: usize,
    /// Scenarios whose metrics file already existed.
    pub skipped: usize,
}

/// Runs `algo` on every scenario under `scenarios`, writing one metrics and
/// one timing file per scenario. Scenarios with an existing metrics file
/// are skipped, so an interrupted run can be resumed.
pub fn run_experiment(
    scenarios: &Path,
    algo: &Algo,
    out: &Path,
    options: &RunOptions,
) -> Result<RunSummary, HarnessError> {
    let files = read_scenarios(scenarios)?;
    if files.is_empty() {
        return Err(HarnessError::NoRecords(scenarios.to_path_buf()));
    }
    let results: Vec<Result<bool, HarnessError>> = files
        .par_iter()
        .map(|(path, file)| {
            let (metrics_path, timing_path) = result_paths(out, algo.name(), file);
            if metrics_path.exists() {
                return Ok(false);
            }
            let dir = metrics_path.parent().expect("result path has a parent");
            std::fs::create_dir_all(dir).at(dir)?;
            let mut controller = algo.build(options.controller_seed(&file.scenario));
            let metrics = run_scenario(&file.scenario, controller.as_mut(), options)?;
            write_atomically(&timing_path, &metrics.timing_csv())?;
            write_atomically(&metrics_path, &metrics.metrics_csv())?;
            log::info!("{} {}: {} food", algo.name(), path.display(), metrics.total());
            Ok(true)
        })
        .collect();
    let mut summary = RunSummary::default();
    for r in results {
        if r? {
            summary.completed += 1;
        } else {
            summary.skipped += 1;
        }
    }
    Ok(summary)
}

/// Runs every scenario without writing files and returns the timing of
/// each, in scenario order.
pub fn bench(
    scenarios: &Path,
    algo: &Algo,
    options: &RunOptions,
    limit: Option<usize>,
) -> Result<Vec<(ScenarioFile, TimingRecord)>, HarnessError> {
    let mut files = read_scenarios(scenarios)?;
    if let Some(n) = limit {
        files.truncate(n);
    }
    // sequential so runs do not compete for cores
    files
        .into_iter()
        .map(|(_, file)| {
            let mut controller = algo.build(options.controller_seed(&file.scenario));
            let metrics = run_scenario(&file.scenario, controller.as_mut(), options)?;
            Ok((file, metrics.timing()))
        })
        .collect()
}
