//! Line-oriented scenario format.
//!
//! ```text
//! forage-scenario 1
//! width 16
//! height 16
//! seed 7
//! gather_rate 0.5
//! dropoff_rate 0.5
//! capacity infinite            # or a number of food units, e.g. `capacity 10`
//! respawn false
//! obstacle_density 0
//! resources 1
//! team 1
//! episode_length 1024
//! kind infinite                # infinite | depleting | wipeout
//! entities 8
//! nest 7 7 - -                 # kind row col id capacity
//! cache 6 7 0 -
//! cache 7 9 1 -
//! cache 9 8 2 -
//! cache 8 6 3 -
//! resource 3 4 0 inf
//! entry 3 5 0 -
//! agent 10 10 0 -
//! events 1
//! wipeout 100 100              # start duration
//! ```
//!
//! Entities are emitted as: nest, caches (N, E, S, W), each resource followed
//! by its entry, obstacles in row-major order, agents by id. Numbers use the
//! shortest representation that parses back to the same value, so
//! `emit(parse(text)) == text` for any emitted text. Blank lines and text
//! after `#` are ignored when parsing.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{Capacity, WorldConfig};
use crate::error::WorldError;
use crate::geom::Pos;
use crate::world::{nest_cache_entries, GridWorld, ResourceId, ResourceSpec, WorldLayout};

pub const FORMAT_HEADER: &str = "forage-scenario";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Infinite,
    Depleting,
    Wipeout,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Infinite, ScenarioKind::Depleting, ScenarioKind::Wipeout];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Infinite => "infinite",
            ScenarioKind::Depleting => "depleting",
            ScenarioKind::Wipeout => "wipeout",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WipeoutWindow {
    pub start: u64,
    pub duration: u64,
}

impl WipeoutWindow {
    pub fn end(&self) -> u64 {
        self.start + self.duration
    }

    pub fn overlaps(&self, other: &WipeoutWindow) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

/// A world layout plus everything needed to replay an episode on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub config: WorldConfig,
    pub layout: WorldLayout,
    pub episode_length: u64,
    pub kind: ScenarioKind,
    pub wipeouts: Vec<WipeoutWindow>,
}

impl Scenario {
    pub fn build_world(&self) -> Result<GridWorld, WorldError> {
        GridWorld::from_layout(&self.config, &self.layout)
    }

    pub fn team_size(&self) -> usize {
        self.layout.agents.len()
    }

    /// Windows must lie inside the episode and never overlap.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut windows = self.wipeouts.clone();
        windows.sort();
        for w in &windows {
            if w.duration == 0 || w.end() > self.episode_length {
                return Err(ScenarioError::Invalid(format!(
                    "wipeout {}+{} outside episode of {} steps",
                    w.start, w.duration, self.episode_length
                )));
            }
        }
        if windows.windows(2).any(|p| p[0].overlaps(&p[1])) {
            return Err(ScenarioError::Invalid("overlapping wipeout windows".into()));
        }
        if self.layout.resources.len() != self.config.num_resources {
            return Err(ScenarioError::Invalid(format!(
                "header declares {} resources but {} are listed",
                self.config.num_resources,
                self.layout.resources.len()
            )));
        }
        Ok(())
    }

    pub fn emit(&self) -> String {
        let c = &self.config;
        let l = &self.layout;
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER} {FORMAT_VERSION}");
        let _ = writeln!(out, "width {}", l.width);
        let _ = writeln!(out, "height {}", l.height);
        let _ = writeln!(out, "seed {}", c.rng_seed);
        let _ = writeln!(out, "gather_rate {}", c.gather_rate);
        let _ = writeln!(out, "dropoff_rate {}", c.dropoff_rate);
        let _ = writeln!(out, "capacity {}", capacity_text(c.resource_capacity, "infinite"));
        let _ = writeln!(out, "respawn {}", c.respawn_on_depletion);
        let _ = writeln!(out, "obstacle_density {}", c.obstacle_density);
        let _ = writeln!(out, "resources {}", c.num_resources);
        let _ = writeln!(out, "team {}", l.agents.len());
        let _ = writeln!(out, "episode_length {}", self.episode_length);
        let _ = writeln!(out, "kind {}", self.kind.name());

        let entity_count = 1 + 4 + 2 * l.resources.len() + l.obstacles.len() + l.agents.len();
        let _ = writeln!(out, "entities {entity_count}");
        let _ = writeln!(out, "nest {} {} - -", l.nest_origin.row, l.nest_origin.col);
        for (i, p) in nest_cache_entries(l.nest_origin).iter().enumerate() {
            let _ = writeln!(out, "cache {} {} {i} -", p.row, p.col);
        }
        for r in &l.resources {
            let _ = writeln!(
                out,
                "resource {} {} {} {}",
                r.body.row,
                r.body.col,
                r.id.0,
                capacity_text(r.capacity, "inf")
            );
            let _ = writeln!(out, "entry {} {} {} -", r.entry.row, r.entry.col, r.id.0);
        }
        let mut obstacles = l.obstacles.clone();
        obstacles.sort();
        for p in obstacles {
            let _ = writeln!(out, "obstacle {} {} - -", p.row, p.col);
        }
        for (i, p) in l.agents.iter().enumerate() {
            let _ = writeln!(out, "agent {} {} {i} -", p.row, p.col);
        }
        let _ = writeln!(out, "events {}", self.wipeouts.len());
        for w in &self.wipeouts {
            let _ = writeln!(out, "wipeout {} {}", w.start, w.duration);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut reader = Reader { lines: &mut lines };

        let (n, header) = reader.next_line("format header")?;
        let version = match header.split_whitespace().collect::<Vec<_>>()[..] {
            [FORMAT_HEADER, v] => parse_num::<u32>(n, v)?,
            _ => return Err(syntax(n, format!("expected `{FORMAT_HEADER} <version>`"))),
        };
        if version != FORMAT_VERSION {
            return Err(ScenarioError::Version(version));
        }

        let width: usize = reader.field("width")?;
        let height: usize = reader.field("height")?;
        let rng_seed: u64 = reader.field("seed")?;
        let gather_rate: f64 = reader.field("gather_rate")?;
        let dropoff_rate: f64 = reader.field("dropoff_rate")?;
        let (n, cap) = reader.keyed("capacity")?;
        let resource_capacity = parse_capacity(n, cap, "infinite")?;
        let respawn_on_depletion: bool = reader.field("respawn")?;
        let obstacle_density: f64 = reader.field("obstacle_density")?;
        let num_resources: usize = reader.field("resources")?;
        let team_size: usize = reader.field("team")?;
        let episode_length: u64 = reader.field("episode_length")?;
        let (n, kind) = reader.keyed("kind")?;
        let kind = ScenarioKind::parse(kind).ok_or_else(|| syntax(n, format!("unknown scenario kind `{kind}`")))?;

        let entity_count: usize = reader.field("entities")?;
        let mut nest_origin = None;
        let mut caches = Vec::new();
        let mut resources: Vec<ResourceSpec> = Vec::new();
        let mut entries: Vec<(u32, Pos, usize)> = Vec::new();
        let mut obstacles = Vec::new();
        let mut agents: Vec<(usize, Pos)> = Vec::new();
        for _ in 0..entity_count {
            let (n, line) = reader.next_line("entity")?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [kind, row, col, id, cap] = parts[..] else {
                return Err(syntax(n, "entity lines are `kind row col id capacity`".into()));
            };
            let pos = Pos::new(parse_num(n, row)?, parse_num(n, col)?);
            match kind {
                "nest" => {
                    if nest_origin.replace(pos).is_some() {
                        return Err(syntax(n, "more than one nest".into()));
                    }
                }
                "cache" => caches.push((parse_num::<usize>(n, id)?, pos, n)),
                "resource" => resources.push(ResourceSpec {
                    id: ResourceId(parse_num(n, id)?),
                    body: pos,
                    entry: pos,
                    capacity: parse_capacity(n, cap, "inf")?,
                }),
                "entry" => entries.push((parse_num(n, id)?, pos, n)),
                "obstacle" => obstacles.push(pos),
                "agent" => agents.push((parse_num(n, id)?, pos)),
                other => return Err(syntax(n, format!("unknown entity kind `{other}`"))),
            }
        }
        let nest_origin = nest_origin.ok_or_else(|| ScenarioError::Invalid("no nest".into()))?;
        let expected = nest_cache_entries(nest_origin);
        for (id, pos, n) in caches {
            if expected.get(id) != Some(&pos) {
                return Err(syntax(n, format!("cache {id} at {pos} does not match the nest geometry")));
            }
        }
        for (id, pos, n) in entries {
            let Some(r) = resources.iter_mut().find(|r| r.id.0 == id) else {
                return Err(syntax(n, format!("entry for unknown resource {id}")));
            };
            r.entry = pos;
        }
        if let Some(r) = resources.iter().find(|r| r.entry == r.body) {
            return Err(ScenarioError::Invalid(format!("resource {} has no entry", r.id.0)));
        }
        agents.sort_by_key(|(i, _)| *i);
        if agents.iter().enumerate().any(|(k, (i, _))| k != *i) {
            return Err(ScenarioError::Invalid("agent ids must be 0..team".into()));
        }
        if agents.len() != team_size {
            return Err(ScenarioError::Invalid(format!(
                "header declares team {team_size} but {} agents are listed",
                agents.len()
            )));
        }

        let event_count: usize = reader.field("events")?;
        let mut wipeouts = Vec::with_capacity(event_count);
        for _ in 0..event_count {
            let (n, line) = reader.next_line("event")?;
            match line.split_whitespace().collect::<Vec<_>>()[..] {
                ["wipeout", start, duration] => wipeouts.push(WipeoutWindow {
                    start: parse_num(n, start)?,
                    duration: parse_num(n, duration)?,
                }),
                _ => return Err(syntax(n, "expected `wipeout <start> <duration>`".into())),
            }
        }
        if let Some((n, _)) = reader.lines.next() {
            return Err(syntax(n, "trailing content".into()));
        }

        let config = WorldConfig {
            width,
            height,
            obstacle_density,
            num_resources,
            resource_capacity,
            gather_rate,
            dropoff_rate,
            respawn_on_depletion,
            team_size,
            rng_seed,
        };
        let scenario = Scenario {
            config,
            layout: WorldLayout {
                width,
                height,
                nest_origin,
                obstacles,
                resources,
                agents: agents.into_iter().map(|(_, p)| p).collect(),
            },
            episode_length,
            kind,
            wipeouts,
        };
        scenario.validate()?;
        // catches overlapping entities and out-of-range values
        scenario.build_world()?;
        Ok(scenario)
    }
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: &'a mut I,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str), ScenarioError> {
        self.lines
            .next()
            .ok_or_else(|| ScenarioError::Invalid(format!("unexpected end of file, expected {what}")))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), ScenarioError> {
        let (n, line) = self.next_line(key)?;
        match line.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok((n, v.trim())),
            _ => Err(syntax(n, format!("expected `{key} <value>`"))),
        }
    }

    fn field<T: FromStr>(&mut self, key: &str) -> Result<T, ScenarioError> {
        let (n, v) = self.keyed(key)?;
        parse_num(n, v)
    }
}

fn syntax(line: usize, msg: String) -> ScenarioError {
    ScenarioError::Syntax { line, msg }
}

fn parse_num<T: FromStr>(line: usize, s: &str) -> Result<T, ScenarioError> {
    s.parse().map_err(|_| syntax(line, format!("cannot parse `{s}`")))
}

fn parse_capacity(line: usize, s: &str, infinite: &str) -> Result<Capacity, ScenarioError> {
    if s == infinite {
        Ok(Capacity::Infinite)
    } else {
        parse_num(line, s).map(Capacity::Finite)
    }
}

fn capacity_text(c: Capacity, infinite: &str) -> String {
    match c {
        Capacity::Infinite => infinite.to_string(),
        Capacity::Finite(u) => format!("{u}"),
    }
}
