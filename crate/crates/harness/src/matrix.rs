//! Scenario matrices: every (team size, obstacle density, replicate) cell
//! for each scenario kind.

use std::path::{Path, PathBuf};

use forage_core::{Capacity, GridWorld, Scenario, ScenarioKind, WipeoutWindow, WorldConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{HarnessError, IoContext};

pub const SCENARIO_EXT: &str = "scn";

/// Matrix description, read from TOML. Missing keys take the defaults of
/// [`MatrixConfig::default`].
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub width: usize,
    pub height: usize,
    pub episode_length: u64,
    pub teams: Vec<usize>,
    pub densities: Vec<f64>,
    pub replicates: usize,
    /// Inclusive range for the per-replicate resource count.
    pub resources: (usize, usize),
    pub kinds: Vec<String>,
    pub gather_rate: f64,
    pub dropoff_rate: f64,
    /// Food units per resource in depleting scenarios.
    pub depleting_capacity: f64,
    pub wipeouts: usize,
    pub wipeout_duration: u64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            episode_length: 1024,
            teams: vec![16, 32, 64, 128],
            densities: vec![0.0, 0.05],
            replicates: 50,
            resources: (8, 32),
            kinds: ScenarioKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            gather_rate: 0.5,
            dropoff_rate: 0.5,
            depleting_capacity: 10.0,
            wipeouts: 3,
            wipeout_duration: 100,
        }
    }
}

impl MatrixConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let m: MatrixConfig = toml::from_str(text).map_err(|e| HarnessError::Matrix(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn scenario_kinds(&self) -> Result<Vec<ScenarioKind>, HarnessError> {
        self.kinds
            .iter()
            .map(|k| ScenarioKind::parse(k).ok_or_else(|| HarnessError::Matrix(format!("unknown scenario kind `{k}`"))))
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Matrix(m));
        self.scenario_kinds()?;
        if self.teams.is_empty() || self.densities.is_empty() || self.replicates == 0 || self.kinds.is_empty() {
            return fail("teams, densities, kinds and replicates must be non-empty".into());
        }
        if self.resources.0 == 0 || self.resources.0 > self.resources.1 {
            return fail(format!("bad resource range {:?}", self.resources));
        }
        if let Some(d) = self.densities.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return fail(format!("obstacle density {d} outside [0, 1)"));
        }
        if self.depleting_capacity <= 0.0 {
            return fail("depleting capacity must be positive".into());
        }
        let needed = self.wipeouts as u64 * self.wipeout_duration;
        if self.wipeout_duration == 0 || needed > self.episode_length {
            return fail(format!(
                "{} wipeouts of {} steps do not fit in {} steps",
                self.wipeouts, self.wipeout_duration, self.episode_length
            ));
        }
        Ok(())
    }

    /// Files per scenario kind.
    pub fn cells_per_kind(&self) -> usize {
        self.teams.len() * self.densities.len() * self.replicates
    }
}

/// Position of a scenario in the matrix; also encoded in its file stem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub team: usize,
    /// Obstacle density in thousandths.
    pub density_permille: u32,
    pub replicate: usize,
}

impl CellKey {
    pub fn stem(&self) -> String {
        format!("t{:03}_d{:03}_r{:02}", self.team, self.density_permille, self.replicate)
    }

    pub fn parse_stem(stem: &str) -> Option<CellKey> {
        let mut parts = stem.split('_');
        let team = parts.next()?.strip_prefix('t')?.parse().ok()?;
        let density_permille = parts.next()?.strip_prefix('d')?.parse().ok()?;
        let replicate = parts.next()?.strip_prefix('r')?.parse().ok()?;
        parts.next().is_none().then_some(CellKey {
            team,
            density_permille,
            replicate,
        })
    }

    /// The cell without its replicate index, e.g. `t016_d050`.
    pub fn group(&self) -> String {
        format!("t{:03}_d{:03}", self.team, self.density_permille)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFile {
    pub key: CellKey,
    pub scenario: Scenario,
}

impl ScenarioFile {
    /// Path relative to the scenario directory: `<kind>/<stem>.scn`.
    pub fn relative_path(&self) -> PathBuf {
        Path::new(self.scenario.kind.name()).join(format!("{}.{SCENARIO_EXT}", self.key.stem()))
    }
}

/// Draws `count` non-overlapping windows of `duration` steps inside
/// `[0, episode_length]` by rejection, sorted by start.
pub fn draw_wipeouts(rng: &mut impl Rng, episode_length: u64, count: usize, duration: u64) -> Vec<WipeoutWindow> {
    assert!(duration > 0 && count as u64 * duration <= episode_length);
    loop {
        let mut windows: Vec<WipeoutWindow> = (0..count)
            .map(|_| WipeoutWindow {
                start: rng.gen_range(0..=episode_length - duration),
                duration,
            })
            .collect();
        windows.sort();
        if windows.windows(2).all(|p| !p[0].overlaps(&p[1])) {
            return windows;
        }
    }
}

/// Generates every scenario of the matrix. A replicate shares its world
/// layout across scenario kinds, so kinds can be compared pairwise. Each
/// file's randomness comes from its own stream of `seed`.
pub fn generate(matrix: &MatrixConfig, seed: u64) -> Result<Vec<ScenarioFile>, HarnessError> {
    matrix.validate()?;
    let kinds = matrix.scenario_kinds()?;
    let mut out = Vec::with_capacity(kinds.len() * matrix.cells_per_kind());
    let mut cell = 0u64;
    for &team in &matrix.teams {
        for &density in &matrix.densities {
            for replicate in 0..matrix.replicates {
                let key = CellKey {
                    team,
                    density_permille: (density * 1000.0).round() as u32,
                    replicate,
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(cell);
                let config = WorldConfig {
                    width: matrix.width,
                    height: matrix.height,
                    obstacle_density: density,
                    num_resources: rng.gen_range(matrix.resources.0..=matrix.resources.1),
                    resource_capacity: Capacity::Infinite,
                    gather_rate: matrix.gather_rate,
                    dropoff_rate: matrix.dropoff_rate,
                    respawn_on_depletion: false,
                    team_size: team,
                    rng_seed: rng.gen(),
                };
                let layout = GridWorld::generate(&config)?.layout();
                let windows = draw_wipeouts(&mut rng, matrix.episode_length, matrix.wipeouts, matrix.wipeout_duration);
                for &kind in &kinds {
                    let mut scenario = Scenario {
                        config: config.clone(),
                        layout: layout.clone(),
                        episode_length: matrix.episode_length,
                        kind,
                        wipeouts: Vec::new(),
                    };
                    match kind {
                        ScenarioKind::Infinite => {}
                        ScenarioKind::Depleting => {
                            let cap = Capacity::Finite(matrix.depleting_capacity);
                            scenario.config.resource_capacity = cap;
                            scenario.config.respawn_on_depletion = true;
                            for r in &mut scenario.layout.resources {
                                r.capacity = cap;
                            }
                        }
                        ScenarioKind::Wipeout => scenario.wipeouts = windows.clone(),
                    }
                    out.push(ScenarioFile { key, scenario });
                }
                cell += 1;
            }
        }
    }
    Ok(out)
}

/// Writes each scenario under `dir` and returns the written paths.
pub fn write_scenarios(dir: &Path, files: &[ScenarioFile]) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::with_capacity(files.len());
    for f in files {
        let path = dir.join(f.relative_path());
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).at(parent)?;
        }
        std::fs::write(&path, f.scenario.emit()).at(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Reads every `<kind>/<stem>.scn` under `dir`, sorted by path.
pub fn read_scenarios(dir: &Path) -> Result<Vec<(PathBuf, ScenarioFile)>, HarnessError> {
    let mut out = Vec::new();
    for kind in ScenarioKind::ALL {
        let sub = dir.join(kind.name());
        if !sub.is_dir() {
            continue;
        }
        for entry in std::fs::read_dir(&sub).at(&sub)? {
            let path = entry.at(&sub)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(SCENARIO_EXT) {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let key = CellKey::parse_stem(stem).ok_or_else(|| HarnessError::Records {
                path: path.clone(),
                msg: "file stem is not `tNNN_dNNN_rNN`".into(),
            })?;
            let text = std::fs::read_to_string(&path).at(&path)?;
            let scenario = Scenario::parse(&text)
                .and_then(|s| s.validate().map(|_| s))
                .map_err(|source| HarnessError::Scenario {
                    path: path.clone(),
                    source,
                })?;
            out.push((path, ScenarioFile { key, scenario }));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
