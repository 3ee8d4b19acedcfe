//! Batch execution, parameter sweeps and aggregation.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, PRESET_SWEEPS};
use crate::error::{EncapError, Result};
use crate::signal::LineResponse;
use crate::sim::{RunSummary, Simulator};
use crate::theory::{bounds_table, validate_scenario, BoundsTable};

/// Overrides the worker count used by batch runs.
pub const PARALLELISM_ENV: &str = "ENCAP_THREADS";
pub const DEFAULT_SEEDS: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    #[default]
    Simulate,
    Bounds,
    CompareBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetEntry {
    pub path: String,
    pub value: toml::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub base: String,
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed_start: u64,
    /// Falls back to the base configuration's `sim.t_max`.
    #[serde(default)]
    pub t_max: Option<u64>,
    #[serde(default)]
    pub set: Vec<SetEntry>,
    #[serde(default)]
    pub axes: Vec<Axis>,
}

fn default_seeds() -> u64 {
    DEFAULT_SEEDS
}

/// One cell of the sweep grid: a value per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub coords: Vec<(String, toml::Value)>,
}

impl GridPoint {
    pub fn label(&self) -> String {
        self.coords.iter().map(|(p, v)| format!("{}={}", short_path(p), value_text(v))).collect::<Vec<_>>().join(" ")
    }
}

fn short_path(path: &str) -> &str {
    path.rsplit('.').next().unwrap_or(path)
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Table(t) => {
            if let Some(toml::Value::String(m)) = t.get("model") {
                m.clone()
            } else {
                toml::to_string(t).unwrap_or_default().replace('\n', " ").trim().to_string()
            }
        }
        other => other.to_string(),
    }
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| EncapError::Config(e.to_string()))
    }

    /// Accepts `preset:<name>`, a bare preset name, or a file path.
    pub fn load(reference: &str) -> Result<Self> {
        let name = reference.strip_prefix("preset:").unwrap_or(reference);
        if let Some((_, text)) = PRESET_SWEEPS.iter().find(|(n, _)| *n == name) {
            return Self::from_toml_str(text);
        }
        if reference.starts_with("preset:") {
            return Err(EncapError::Config(format!("unknown sweep preset {name}")));
        }
        let text = std::fs::read_to_string(Path::new(reference)).map_err(|e| EncapError::Config(format!("{reference}: {e}")))?;
        Self::from_toml_str(&text)
    }

    pub fn t_max(&self, base: &Config) -> u64 {
        self.t_max.unwrap_or(base.sim.t_max)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (self.seed_start..self.seed_start + self.seeds).collect()
    }

    /// The base configuration with every `set` override applied.
    pub fn base_config(&self) -> Result<Config> {
        let mut config = Config::load(&self.base)?;
        for s in &self.set {
            config = config.with_override(&s.path, &s.value)?;
        }
        Ok(config)
    }

    /// Cartesian product of the axes, last axis varying fastest.
    /// No axes yields a single point at the base configuration.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = vec![GridPoint { coords: Vec::new() }];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for p in &points {
                for v in &axis.values {
                    let mut coords = p.coords.clone();
                    coords.push((axis.path.clone(), v.clone()));
                    next.push(GridPoint { coords });
                }
            }
            points = next;
        }
        points
    }

    pub fn point_config(&self, base: &Config, point: &GridPoint) -> Result<Config> {
        let mut config = base.clone();
        for (path, value) in &point.coords {
            config = config.with_override(path, value)?;
        }
        Ok(config)
    }
}

/// Seed range syntax `A..B` (exclusive) or `A..=B` (inclusive), or a single seed.
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>> {
    let bad = || EncapError::Config(format!("invalid seed range {s:?}"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b) = (num(a)?, num(b)?);
        if b < a {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if b < a {
            return Err(bad());
        }
        Ok((a..b).collect())
    } else {
        Ok(vec![num(s)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub message: String,
}

/// Summaries in seed order, plus runs that errored or panicked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub config_hash: String,
    pub t_max: u64,
    pub summaries: Vec<RunSummary>,
    pub failures: Vec<RunFailure>,
}

impl BatchReport {
    pub fn violations(&self) -> u64 {
        self.summaries.iter().map(|s| s.violations).sum()
    }
}

/// Worker count from [`PARALLELISM_ENV`], if set to a positive integer.
pub fn parallelism_override() -> Option<usize> {
    std::env::var(PARALLELISM_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match parallelism_override() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "run panicked".to_string()
    }
}

pub fn run_batch_with(sim: &Simulator, seeds: &[u64], t_max: u64) -> BatchReport {
    let results: Vec<(u64, std::result::Result<RunSummary, String>)> = with_pool(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let out = catch_unwind(AssertUnwindSafe(|| sim.run_with(seed, t_max, |_| {})));
                let out = match out {
                    Ok(Ok(s)) => Ok(s),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(p) => Err(panic_message(p)),
                };
                (seed, out)
            })
            .collect()
    });
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(message) => failures.push(RunFailure { seed, message }),
        }
    }
    BatchReport { config_hash: sim.config_hash().to_string(), t_max, summaries, failures }
}

pub fn run_batch(config: &Config, seeds: &[u64], t_max: u64) -> Result<BatchReport> {
    let sim = Simulator::new(config)?;
    Ok(run_batch_with(&sim, seeds, t_max))
}

/// Box-plot statistics of encapsulation time.
///
/// Timed-out runs enter the percentiles censored at `t_max`. Percentiles use
/// the nearest-rank rule: the q-th value is element `ceil(q·n)` of the sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub runs: usize,
    pub successes: usize,
    pub success_probability: f64,
    pub median: Option<u64>,
    pub p25: Option<u64>,
    pub p75: Option<u64>,
    pub min: Option<u64>,
    pub max: Option<u64>,
    pub violations: u64,
    pub failures: usize,
    pub config_hash: String,
    pub seed_lo: Option<u64>,
    pub seed_hi: Option<u64>,
}

pub fn nearest_rank(sorted: &[u64], q: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

pub fn aggregate(summaries: &[RunSummary], failures: usize, config_hash: &str) -> AggregateStats {
    let mut times: Vec<u64> = summaries.iter().map(|s| s.encapsulation_time.filter(|_| s.all_captured).unwrap_or(s.t_max)).collect();
    times.sort_unstable();
    let successes = summaries.iter().filter(|s| s.all_captured).count();
    let runs = summaries.len();
    AggregateStats {
        runs,
        successes,
        success_probability: if runs == 0 { 0.0 } else { successes as f64 / runs as f64 },
        median: nearest_rank(&times, 0.5),
        p25: nearest_rank(&times, 0.25),
        p75: nearest_rank(&times, 0.75),
        min: times.first().copied(),
        max: times.last().copied(),
        violations: summaries.iter().map(|s| s.violations).sum(),
        failures,
        config_hash: config_hash.to_string(),
        seed_lo: summaries.iter().map(|s| s.seed).min(),
        seed_hi: summaries.iter().map(|s| s.seed).max(),
    }
}

impl BatchReport {
    pub fn stats(&self) -> AggregateStats {
        aggregate(&self.summaries, self.failures.len(), &self.config_hash)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub orbiting: AggregateStats,
    pub baseline: AggregateStats,
}

fn require_static(config: &Config) -> Result<()> {
    let sc = config.resolve()?;
    if let Some((j, t)) = sc.targets.iter().enumerate().find(|(_, t)| t.max_step > 0.0) {
        return Err(EncapError::Config(format!("baseline comparison needs static targets; target {j} has max_step {}", t.max_step)));
    }
    Ok(())
}

/// Runs the same seeds with orbiting enabled and disabled.
pub fn compare_baseline(config: &Config, seeds: &[u64], t_max: u64) -> Result<BaselineComparison> {
    require_static(config)?;
    let mut on = config.clone();
    on.robots.baseline_mode = false;
    let mut off = config.clone();
    off.robots.baseline_mode = true;
    let sim_on = Simulator::new(&on)?;
    let sim_off = Simulator::new(&off)?.with_boundary_response(sim_on.boundary_response());
    Ok(BaselineComparison {
        orbiting: run_batch_with(&sim_on, seeds, t_max).stats(),
        baseline: run_batch_with(&sim_off, seeds, t_max).stats(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Skipped(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub status: RowStatus,
    pub stats: Option<AggregateStats>,
    pub baseline: Option<AggregateStats>,
    pub bounds: Option<BoundsTable>,
    pub feasible: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub name: String,
    pub mode: SweepMode,
    pub axes: Vec<String>,
    pub t_max: u64,
    pub rows: Vec<SweepRow>,
}

fn row(point: GridPoint, status: RowStatus) -> SweepRow {
    SweepRow { point, status, stats: None, baseline: None, bounds: None, feasible: None }
}

/// Runs every grid point. Points failing strict validation are skipped.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    let base = spec.base_config()?;
    let t_max = spec.t_max(&base);
    let seeds = spec.seed_list();
    let mut responses: Vec<Arc<LineResponse<f64>>> = Vec::new();
    let mut rows = Vec::new();
    for point in spec.grid() {
        let config = match spec.point_config(&base, &point) {
            Ok(c) => c,
            Err(e) => {
                rows.push(row(point, RowStatus::Failed(e.to_string())));
                continue;
            }
        };
        let scenario = match config.resolve() {
            Ok(s) => s,
            Err(e) => {
                rows.push(row(point, RowStatus::Skipped(e.to_string())));
                continue;
            }
        };
        let report = validate_scenario(&scenario);
        if spec.mode == SweepMode::Bounds {
            let mut r = row(point, RowStatus::Ok);
            r.bounds = Some(bounds_table(&scenario));
            r.feasible = Some(report.pass);
            rows.push(r);
            continue;
        }
        if !report.pass {
            let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
            rows.push(row(point, RowStatus::Skipped(format!("infeasible: {}", names.join(", ")))));
            continue;
        }
        let mut r = row(point, RowStatus::Ok);
        r.feasible = Some(true);
        match spec.mode {
            SweepMode::Simulate => {
                let sim = match Simulator::new(&config) {
                    Ok(s) => s,
                    Err(e) => {
                        r.status = RowStatus::Failed(e.to_string());
                        rows.push(r);
                        continue;
                    }
                };
                let sim = match responses.iter().find(|a| *a.profile() == scenario.boundary_profile) {
                    Some(a) => sim.with_boundary_response(a.clone()),
                    None => {
                        responses.push(sim.boundary_response());
                        sim
                    }
                };
                r.stats = Some(run_batch_with(&sim, &seeds, t_max).stats());
            }
            SweepMode::CompareBaseline => match compare_baseline(&config, &seeds, t_max) {
                Ok(c) => {
                    r.stats = Some(c.orbiting);
                    r.baseline = Some(c.baseline);
                }
                Err(e) => r.status = RowStatus::Failed(e.to_string()),
            },
            SweepMode::Bounds => unreachable!(),
        }
        rows.push(r);
    }
    Ok(SweepTable { name: spec.name.clone(), mode: spec.mode, axes: spec.axes.iter().map(|a| a.path.clone()).collect(), t_max, rows })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const STATS_HEADER: &str = "runs,successes,success_probability,median,p25,p75,min,max,violations,failures,config_hash,seed_lo,seed_hi";

fn stats_fields(s: &AggregateStats) -> String {
    format!(
        "{},{},{:.4},{},{},{},{},{},{},{},{},{},{}",
        s.runs,
        s.successes,
        s.success_probability,
        opt(s.median),
        opt(s.p25),
        opt(s.p75),
        opt(s.min),
        opt(s.max),
        s.violations,
        s.failures,
        s.config_hash,
        opt(s.seed_lo),
        opt(s.seed_hi)
    )
}

fn status_fields(s: &RowStatus) -> String {
    match s {
        RowStatus::Ok => "ok,".to_string(),
        RowStatus::Skipped(r) => format!("skipped,{}", csv_field(r)),
        RowStatus::Failed(r) => format!("failed,{}", csv_field(r)),
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let axes: Vec<String> = self.axes.iter().map(|a| csv_field(a)).collect();
        let mut head = axes.join(",");
        if !head.is_empty() {
            head.push(',');
        }
        match self.mode {
            SweepMode::Bounds => {
                let _ = writeln!(
                    out,
                    "{head}status,reason,feasible,sensors,half_angle,robot_step_bound,beta_r_lo,beta_r_hi,min_encap_radius,ring_capacity,lambda_random,target,escape_radius,alpha,lambda_escape,lambda_cruise"
                );
            }
            _ => {
                let _ = writeln!(out, "{head}variant,status,reason,{STATS_HEADER}");
            }
        }
        for r in &self.rows {
            let mut prefix: String = r.point.coords.iter().map(|(_, v)| csv_field(&value_text(v)) + ",").collect();
            if self.mode == SweepMode::Bounds {
                prefix.push_str(&status_fields(&r.status));
                prefix.push(',');
                prefix.push_str(&opt(r.feasible));
                match &r.bounds {
                    Some(b) => {
                        let common = format!(
                            "{},{},{:.6},{:.6},{},{},{:.6},{},{}",
                            prefix,
                            b.sensors,
                            b.half_angle,
                            b.robot_step_bound,
                            opt(b.beta_r_interval.map(|i| format!("{:.6}", i.0))),
                            opt(b.beta_r_interval.map(|i| format!("{:.6}", i.1))),
                            b.min_encap_radius,
                            opt(b.ring_capacity.map(|c| c.floor)),
                            opt(b.lambda_random.map(|l| format!("{l:.6}")))
                        );
                        if b.targets.is_empty() {
                            let _ = writeln!(out, "{common},,,,,");
                        }
                        for (j, t) in b.targets.iter().enumerate() {
                            let _ = writeln!(
                                out,
                                "{common},{j},{:.6},{},{},{}",
                                t.escape_radius,
                                opt(t.alpha.map(|a| format!("{a:.6}"))),
                                opt(t.lambda_escape.as_ref().map(|l| format!("{:.6}", l.lambda))),
                                opt(t.lambda_pattern.map(|l| format!("{:.6}", l.cruise)))
                            );
                        }
                    }
                    None => {
                        let _ = writeln!(out, "{prefix},,,,,,,,,,,,,");
                    }
                }
                continue;
            }
            let variants: Vec<(&str, Option<&AggregateStats>)> = match self.mode {
                SweepMode::CompareBaseline => vec![("orbiting", r.stats.as_ref()), ("baseline", r.baseline.as_ref())],
                _ => vec![("default", r.stats.as_ref())],
            };
            for (name, stats) in variants {
                let fields = stats.map(stats_fields).unwrap_or_else(|| ",".repeat(STATS_HEADER.matches(',').count()));
                let _ = writeln!(out, "{prefix}{name},{},{fields}", status_fields(&r.status));
            }
        }
        out
    }

    /// Box plot of encapsulation time per grid point; `None` for bound tables.
    pub fn to_svg(&self) -> Option<String> {
        if self.mode == SweepMode::Bounds {
            return None;
        }
        let mut boxes: Vec<(String, &AggregateStats)> = Vec::new();
        for r in &self.rows {
            let label = r.point.label();
            if let Some(s) = &r.stats {
                let tag = if self.mode == SweepMode::CompareBaseline { " orbit" } else { "" };
                boxes.push((format!("{label}{tag}"), s));
            }
            if let Some(s) = &r.baseline {
                boxes.push((format!("{label} base"), s));
            }
        }
        Some(box_plot_svg(&self.name, &boxes, self.t_max))
    }
}

/// Minimal standalone SVG: whiskers at min/max, box at p25..p75, bar at the median.
pub fn box_plot_svg(title: &str, boxes: &[(String, &AggregateStats)], t_max: u64) -> String {
    let slot = 48.0;
    let (left, top, height) = (60.0, 30.0, 300.0);
    let width = left + slot * boxes.len().max(1) as f64 + 20.0;
    let ymax = boxes.iter().filter_map(|(_, s)| s.max).max().unwrap_or(t_max).max(1) as f64;
    let y = |v: u64| top + height * (1.0 - v as f64 / ymax);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" font-family="sans-serif" font-size="10">"#,
        width,
        top + height + 90.0
    );
    let _ = writeln!(out, r#"<text x="{left}" y="18" font-size="13">{}</text>"#, xml_escape(title));
    let _ = writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="black"/>"#, top + height);
    for k in 0..=4 {
        let v = (ymax * k as f64 / 4.0).round() as u64;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#, left - 4.0, y(v) + 3.0);
    }
    for (i, (label, s)) in boxes.iter().enumerate() {
        let cx = left + slot * (i as f64 + 0.5);
        if let (Some(lo), Some(q1), Some(m), Some(q3), Some(hi)) = (s.min, s.p25, s.median, s.p75, s.max) {
            let _ = writeln!(out, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(hi), y(lo));
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="28" height="{:.1}" fill="#9ecae1" stroke="black"/>"##,
                cx - 14.0,
                y(q3),
                (y(q1) - y(q3)).max(0.5)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="red" stroke-width="2"/>"#,
                cx - 14.0,
                y(m),
                cx + 14.0,
                y(m)
            );
        }
        let ly = top + height + 12.0;
        let _ = writeln!(out, r#"<text x="{cx:.1}" y="{ly:.1}" transform="rotate(45 {cx:.1} {ly:.1})">{}</text>"#, xml_escape(label));
        let _ =
            writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{:.0}%</text>"#, top - 4.0, s.success_probability * 100.0);
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let mean = (xs.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}
