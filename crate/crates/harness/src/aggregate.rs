//! Replicate aggregation into per-cell CSVs, plus SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use forage_core::ScenarioKind;

use crate::error::{HarnessError, IoContext};
use crate::matrix::CellKey;

/// Mean and population standard deviation per step over replicates.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: usize,
}

impl SeriesStats {
    pub fn from_replicates(series: &[Vec<f64>]) -> Result<SeriesStats, String> {
        let Some(first) = series.first() else {
            return Err("no replicates".into());
        };
        let len = first.len();
        if series.iter().any(|s| s.len() != len) {
            return Err("replicates have different lengths".into());
        }
        let n = series.len() as f64;
        let mut mean = vec![0.0; len];
        let mut std = vec![0.0; len];
        for t in 0..len {
            let m = series.iter().map(|s| s[t]).sum::<f64>() / n;
            let var = series.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / n;
            mean[t] = m;
            std[t] = var.sqrt();
        }
        Ok(SeriesStats { mean, std, n: series.len() })
    }

    /// `step,mean,std,n` with one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,mean,std,n\n");
        for (t, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            let _ = writeln!(out, "{},{m},{s},{}", t + 1, self.n);
        }
        out
    }
}

/// Aggregation key: controller, scenario kind, and matrix cell without the
/// replicate index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub algo: String,
    pub kind: ScenarioKind,
    pub cell: String,
}

pub fn read_cumulative(path: &Path) -> Result<Vec<f64>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let value = record.get(1).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| HarnessError::Records {
            path: path.to_path_buf(),
            msg: format!("row {} has no numeric cumulative column", i + 1),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Collects `<in>/<algo>/<kind>/<stem>.csv` result files by group.
pub fn collect(input: &Path) -> Result<BTreeMap<GroupKey, Vec<Vec<f64>>>, HarnessError> {
    let mut groups: BTreeMap<GroupKey, Vec<(CellKey, Vec<f64>)>> = BTreeMap::new();
    let mut algos: Vec<PathBuf> = std::fs::read_dir(input)
        .at(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    algos.sort();
    for algo_dir in algos {
        let algo = algo_dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        for kind in ScenarioKind::ALL {
            let dir = algo_dir.join(kind.name());
            if !dir.is_dir() {
                continue;
            }
            for entry in std::fs::read_dir(&dir).at(&dir)? {
                let path = entry.at(&dir)?.path();
                let Some(name) = path.file_name().and_then(|s| s.to_str()) else {
                    continue;
                };
                let Some(stem) = name.strip_suffix(".csv").filter(|s| !s.ends_with(".timing")) else {
                    continue;
                };
                let Some(key) = CellKey::parse_stem(stem) else {
                    continue;
                };
                let series = read_cumulative(&path)?;
                let group = GroupKey {
                    algo: algo.clone(),
                    kind,
                    cell: key.group(),
                };
                groups.entry(group).or_default().push((key, series));
            }
        }
    }
    if groups.is_empty() {
        return Err(HarnessError::NoRecords(input.to_path_buf()));
    }
    // replicate order must not depend on directory listing order
    Ok(groups
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(key, _)| *key);
            (k, v.into_iter().map(|(_, s)| s).collect())
        })
        .collect())
}

/// Writes `<out>/<cell>_<kind>_<algo>.csv` per group and one SVG per cell
/// and resource kind, and returns the written paths.
pub fn emit_outputs(input: &Path, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let groups = collect(input)?;
    std::fs::create_dir_all(out).at(out)?;
    let mut written = Vec::new();
    let mut stats = BTreeMap::new();
    for (key, series) in &groups {
        let s = SeriesStats::from_replicates(series).map_err(|msg| HarnessError::Records {
            path: input.join(&key.algo).join(key.kind.name()),
            msg: format!("{}: {msg}", key.cell),
        })?;
        let path = out.join(format!("{}_{}_{}.csv", key.cell, key.kind.name(), key.algo));
        std::fs::write(&path, s.to_csv()).at(&path)?;
        written.push(path);
        stats.insert(key.clone(), s);
    }
    let cells: std::collections::BTreeSet<&String> = stats.keys().map(|k| &k.cell).collect();
    for cell in cells {
        // wipeout runs share the infinite-resource plot as dashed curves
        for (panel, kinds) in [
            ("infinite", &[ScenarioKind::Infinite, ScenarioKind::Wipeout][..]),
            ("depleting", &[ScenarioKind::Depleting][..]),
        ] {
            let curves: Vec<Curve> = stats
                .iter()
                .filter(|(k, _)| &k.cell == cell && kinds.contains(&k.kind))
                .map(|(k, s)| Curve {
                    label: if k.kind == ScenarioKind::Wipeout {
                        format!("{} (wipeout)", k.algo)
                    } else {
                        k.algo.clone()
                    },
                    color_key: k.algo.clone(),
                    dashed: k.kind == ScenarioKind::Wipeout,
                    mean: &s.mean,
                })
                .collect();
            if curves.is_empty() {
                continue;
            }
            let path = out.join(format!("{cell}_{panel}.svg"));
            std::fs::write(&path, render_svg(&format!("{cell} {panel}"), &curves)).at(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub struct Curve<'a> {
    pub label: String,
    pub color_key: String,
    pub dashed: bool,
    pub mean: &'a [f64],
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn color_for(key: &str) -> &'static str {
    let i = ["learned", "planner", "csaf", "cardinality", "gradient", "random"]
        .iter()
        .position(|k| *k == key)
        .unwrap_or_else(|| key.bytes().map(usize::from).sum::<usize>());
    PALETTE[i % PALETTE.len()]
}

/// Cumulative throughput against step, one polyline per curve.
pub fn render_svg(title: &str, curves: &[Curve]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 190.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let steps = curves.iter().map(|c| c.mean.len()).max().unwrap_or(1).max(1);
    let y_max = curves
        .iter()
        .flat_map(|c| c.mean.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let x = |t: usize| left + pw * t as f64 / steps as f64;
    let y = |v: f64| top + ph * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, xml_escape(title));
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.0}</text>"#, left - 6.0, yy + 4.0);
        let t = steps * i / 4;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#, x(t), top + ph + 18.0);
    }
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">step</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">food deposited (mean)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = color_for(&c.color_key);
        let dash = if c.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let mut points = format!("{:.1},{:.1}", x(0), y(0.0));
        for (t, v) in c.mean.iter().enumerate() {
            let _ = write!(points, " {:.1},{:.1}", x(t + 1), y(*v));
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{points}"/>"#);
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 26.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 32.0, ly + 4.0, xml_escape(&c.label));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
