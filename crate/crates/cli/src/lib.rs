//! Pieces of the `itspack` command that are worth testing without a
//! process boundary: argument parsing helpers, instance loading and the
//! benchmark harness.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use itspack_core::driver::{default_dimension, solve_and_finish, Mode, SolverParams};
use itspack_core::io::parse_instance_parts;
use itspack_core::model::{ContainerSpec, Instance};
use itspack_core::trace::{Event, NoTrace, TraceSink};

/// Parses `90`, `90s`, `1.5m` or `30h`.
pub fn parse_time_limit(text: &str) -> Result<Duration> {
    let t = text.trim();
    let (number, unit) = match t.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => (&t[..i], c),
        _ => (t, 's'),
    };
    let scale = match unit {
        's' => 1.0,
        'm' => 60.0,
        'h' => 3600.0,
        other => bail!("unknown time unit `{other}` in `{text}` (use s, m or h)"),
    };
    let value: f64 = number
        .trim()
        .parse()
        .with_context(|| format!("invalid time limit `{text}`"))?;
    if !(value.is_finite() && value > 0.0) {
        bail!("time limit `{text}` must be positive");
    }
    Ok(Duration::from_secs_f64(value * scale))
}

/// Which container to use instead of the one in the instance file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerKind {
    Strip,
    Disc,
}

impl std::str::FromStr for ContainerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "strip" => Ok(ContainerKind::Strip),
            "disc" => Ok(ContainerKind::Disc),
            other => Err(format!("unknown container `{other}` (expected strip or disc)")),
        }
    }
}

/// Reads an instance file and applies the command-line overrides.
pub fn load_instance(path: &Path, kind: Option<ContainerKind>, width: Option<f64>) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (radii, from_file) =
        parse_instance_parts(&text).with_context(|| format!("{}", path.display()))?;
    let container = match (kind, from_file) {
        (Some(ContainerKind::Disc), _) | (None, ContainerSpec::Disc) => ContainerSpec::Disc,
        (_, ContainerSpec::Strip { width: w }) => ContainerSpec::strip(width.unwrap_or(w)),
        (Some(ContainerKind::Strip), ContainerSpec::Disc) => match width {
            Some(w) => ContainerSpec::strip(w),
            None => bail!("a strip container needs --width when the file describes a disc"),
        },
    };
    Instance::new(&radii, container).with_context(|| format!("{}", path.display()))
}

/// Writes every event as one JSON object per line.
pub struct JsonTrace<W: Write> {
    out: W,
    started: Instant,
}

impl<W: Write> JsonTrace<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            started: Instant::now(),
        }
    }
}

impl<W: Write> TraceSink for JsonTrace<W> {
    fn record(&mut self, e: &Event) {
        let record = serde_json::json!({
            "phase": e.phase.as_str(),
            "iteration": e.iteration,
            "energy": e.energy,
            "best_energy": e.best_energy,
            "dimension": e.dimension,
            "swap": e.swap.map(|(i, j)| [i, j]),
            "elapsed": self.started.elapsed().as_secs_f64(),
        });
        // a broken trace file must not abort the run
        let _ = writeln!(self.out, "{record}");
    }
}

/// Column order of the benchmark CSV. Stable: new columns go at the end.
pub const CSV_HEADER: [&str; 13] = [
    "instance",
    "n",
    "width",
    "mode",
    "seed",
    "target",
    "dimension",
    "feasible",
    "ts_launches",
    "perturbations",
    "restarts",
    "elapsed_s",
    "status",
];

/// One benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    /// Strip width, or `None` for a disc.
    pub width: Option<f64>,
    pub mode: Mode,
    pub seed: u64,
    pub target: f64,
    /// Reported dimension, absent when the run failed.
    pub dimension: Option<f64>,
    pub feasible: bool,
    pub ts_launches: u64,
    pub perturbations: u64,
    pub restarts: u64,
    pub elapsed: Duration,
    pub status: String,
}

impl BenchRow {
    fn fields(&self) -> [String; 13] {
        [
            self.instance.clone(),
            self.n.to_string(),
            self.width.map_or("disc".to_string(), |w| w.to_string()),
            self.mode.as_str().to_string(),
            self.seed.to_string(),
            format!("{:.4}", self.target),
            self.dimension.map_or(String::new(), |d| format!("{d:.4}")),
            u8::from(self.feasible).to_string(),
            self.ts_launches.to_string(),
            self.perturbations.to_string(),
            self.restarts.to_string(),
            format!("{:.3}", self.elapsed.as_secs_f64()),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    pub time_budget: Duration,
    /// Per-instance target dimensions, keyed by file name or stem.
    pub targets: Vec<(String, f64)>,
}

/// `name target` per line; `#` comments and blank lines are ignored.
pub fn parse_targets(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let words: Vec<&str> = body.split_whitespace().collect();
        if words.len() != 2 {
            bail!("targets line {}: expected `name target`", i + 1);
        }
        let v: f64 = words[1]
            .parse()
            .with_context(|| format!("targets line {}: invalid number `{}`", i + 1, words[1]))?;
        out.push((words[0].to_string(), v));
    }
    Ok(out)
}

/// Instance files of a corpus directory, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read corpus directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

fn lookup_target(targets: &[(String, f64)], path: &Path) -> Option<f64> {
    let name = path.file_name()?.to_string_lossy();
    let stem = path.file_stem()?.to_string_lossy();
    targets
        .iter()
        .find(|(k, _)| *k == name || *k == stem)
        .map(|&(_, v)| v)
}

/// Runs every (file, mode, seed) combination. A file that fails to load or
/// solve gets a row with an error status; the harness carries on.
pub fn run_bench(files: &[PathBuf], opts: &BenchOptions) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for path in files {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let inst = match load_instance(path, None, None) {
            Ok(inst) => inst,
            Err(e) => {
                for &mode in &opts.modes {
                    for &seed in &opts.seeds {
                        rows.push(BenchRow {
                            instance: name.clone(),
                            n: 0,
                            width: None,
                            mode,
                            seed,
                            target: f64::NAN,
                            dimension: None,
                            feasible: false,
                            ts_launches: 0,
                            perturbations: 0,
                            restarts: 0,
                            elapsed: Duration::ZERO,
                            status: format!("error: {e:#}"),
                        });
                    }
                }
                continue;
            }
        };
        let target = lookup_target(&opts.targets, path).unwrap_or_else(|| default_dimension(&inst));
        let width = match inst.container() {
            ContainerSpec::Strip { width } => Some(width),
            ContainerSpec::Disc => None,
        };
        for &mode in &opts.modes {
            for &seed in &opts.seeds {
                let params = SolverParams {
                    target_dimension: Some(target),
                    time_budget: opts.time_budget,
                    seed,
                    mode,
                    ..Default::default()
                };
                let started = Instant::now();
                let mut row = BenchRow {
                    instance: name.clone(),
                    n: inst.len(),
                    width,
                    mode,
                    seed,
                    target,
                    dimension: None,
                    feasible: false,
                    ts_launches: 0,
                    perturbations: 0,
                    restarts: 0,
                    elapsed: Duration::ZERO,
                    status: "ok".into(),
                };
                match solve_and_finish(&inst, &params, &mut NoTrace) {
                    Ok((run, finished)) => {
                        row.dimension = Some(finished.dimension);
                        row.feasible = true;
                        row.ts_launches = run.ts_launch_count;
                        row.perturbations = run.perturbation_count;
                        row.restarts = run.restart_count;
                    }
                    Err(e) => row.status = format!("error: {e}"),
                }
                row.elapsed = started.elapsed();
                rows.push(row);
            }
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table for terminals.
pub fn format_table(rows: &[BenchRow]) -> String {
    let header: Vec<String> = CSV_HEADER.iter().map(|s| s.to_string()).collect();
    let body: Vec<[String; 13]> = rows.iter().map(BenchRow::fields).collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for r in &body {
        for (w, f) in widths.iter_mut().zip(r) {
            *w = (*w).max(f.len());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    for r in &body {
        out.push_str(&line(r));
    }
    out
}
