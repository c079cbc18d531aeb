//! Subcommand implementations.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kmexp_core::bootstrap::run_bootstrap_many;
use kmexp_core::power::{render_table, round_half_away, run_grid_with, PowerTable};
use kmexp_core::statistics::StatisticKind;
use kmexp_core::{BootstrapConfig, ExperimentGrid, PowerCell, StatisticId};

use crate::data::{km_rows, read_sample, write_km_csv};
use crate::report::{TestEntry, TestReport};
use crate::{CliError, CliResult};

fn default_tuning(kind: StatisticKind) -> &'static [f64] {
    match kind {
        StatisticKind::L | StatisticKind::B => &[0.25, 0.5],
        StatisticKind::H => &[0.5, 1.0],
        _ => &[],
    }
}

/// Resolves `--stats` and `--a` into statistic configurations.
///
/// `stats` entries are names (`ks`, `l`, ...) or full labels (`L_0.25`).
/// A bare tuned name expands to every value in `a`, or to its default pair
/// when `a` is absent. With no `stats`, all seven statistics are used.
pub fn select_statistics(stats: Option<&[String]>, a: Option<&[f64]>) -> CliResult<Vec<StatisticId>> {
    if stats.is_none() && a.is_none() {
        return Ok(StatisticId::standard_set());
    }
    let names: Vec<String> = match stats {
        Some(s) => s.to_vec(),
        None => StatisticKind::ALL.iter().map(|k| k.name().to_string()).collect(),
    };
    let mut out: Vec<StatisticId> = Vec::new();
    for name in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let expanded = match name.parse::<StatisticKind>() {
            Ok(kind) if kind.needs_tuning() => a
                .unwrap_or(default_tuning(kind))
                .iter()
                .map(|&v| StatisticId::new(kind, Some(v)))
                .collect::<Result<Vec<_>, _>>(),
            _ => name.parse::<StatisticId>().map(|id| vec![id]),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        for id in expanded {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no statistics selected".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TestArgs {
    pub input: PathBuf,
    pub statistics: Vec<StatisticId>,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Bootstrap tests of every selected statistic on one data file. All
/// statistics share the same bootstrap samples.
pub fn run_test(args: &TestArgs) -> CliResult<TestReport> {
    let (sample, dataset) = read_sample(&args.input)?;
    let cfgs = args
        .statistics
        .iter()
        .map(|&id| BootstrapConfig::new(args.replications, args.alpha, args.seed, id))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcomes = run_bootstrap_many(&sample, &cfgs)?;
    Ok(TestReport {
        dataset,
        n: sample.len(),
        events: sample.event_count(),
        rate_estimate: sample.estimate_rate()?,
        alpha: args.alpha,
        replications: args.replications,
        seed: args.seed,
        results: outcomes.iter().map(TestEntry::from).collect(),
    })
}

/// Writes the product-limit table of `input` to `out`.
pub fn run_km(input: &Path, out: impl Write) -> CliResult<()> {
    let (sample, _) = read_sample(input)?;
    // a lifetime estimate needs at least one event
    sample.estimate_rate()?;
    write_km_csv(&km_rows(&sample.km_weights()), out)
}

pub fn load_grid(config: &Path) -> CliResult<ExperimentGrid> {
    let text = fs::read_to_string(config)
        .map_err(|e| CliError::io(format!("reading {}", config.display()), e))?;
    // the path names the offending field, e.g. `alternatives[2].shape`
    let de = &mut serde_json::Deserializer::from_str(&text);
    let grid: ExperimentGrid = serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Usage(format!("{}: field `{}`: {}", config.display(), e.path(), e.inner()))
    })?;
    grid.validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    Ok(grid)
}

/// Files written by a power run, and cells that could not be filled.
#[derive(Debug, Clone, Default)]
pub struct PowerSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub computed_cells: usize,
    pub cached_cells: usize,
}

pub const CELL_CACHE: &str = "cells.jsonl";
pub const LONG_TABLE: &str = "power_long.csv";

/// Runs the grid in `config`, resuming from `out/cells.jsonl` when present,
/// and writes one table per (n, fraction) slice plus a long-format CSV.
pub fn run_power(config: &Path, out: &Path) -> CliResult<PowerSummary> {
    let grid = load_grid(config)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    let cache_path = out.join(CELL_CACHE);
    let cached = read_cache(&cache_path)?;

    let mut cache_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&cache_path)
        .map_err(|e| CliError::io(format!("opening {}", cache_path.display()), e))?;
    let mut computed = 0;
    let mut write_err = None;
    let cells = run_grid_with(&grid, &cached, |fresh| {
        computed += fresh.len();
        for cell in fresh {
            let line = serde_json::to_string(cell).expect("cells are serializable");
            if let Err(e) = writeln!(cache_file, "{line}") {
                write_err.get_or_insert(e);
            }
        }
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(e) = write_err {
        return Err(CliError::io(format!("writing {}", cache_path.display()), e));
    }

    let mut summary = PowerSummary {
        computed_cells: computed,
        cached_cells: cells.len() - computed,
        ..Default::default()
    };
    for &n in &grid.sample_sizes {
        for &fraction in &grid.censoring_fractions {
            let table = render_table(&grid, &cells, n, fraction);
            let stem = format!("table_n{n}_c{}", round_half_away(100.0 * fraction));
            let csv_path = out.join(format!("{stem}.csv"));
            write_slice_csv(&table, &csv_path)?;
            let txt_path = out.join(format!("{stem}.txt"));
            fs::write(&txt_path, table.to_text())
                .map_err(|e| CliError::io(format!("writing {}", txt_path.display()), e))?;
            summary.warnings.extend(table.warnings.iter().cloned());
            summary.files.extend([csv_path, txt_path]);
        }
    }
    let long = out.join(LONG_TABLE);
    write_long_csv(&cells, &long)?;
    summary.files.push(long);
    Ok(summary)
}

/// Cached cells by key. Unreadable lines, e.g. from an interrupted write,
/// are skipped and recomputed.
fn read_cache(path: &Path) -> CliResult<HashMap<String, PowerCell>> {
    let Ok(file) = File::open(path) else {
        return Ok(HashMap::new());
    };
    let mut cells = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        if let Ok(cell) = serde_json::from_str::<PowerCell>(&line) {
            cells.insert(cell.cache_key(), cell);
        }
    }
    Ok(cells)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(format!("writing {}", path.display()), std::io::Error::other(e))
}

/// Wide table: one row per (alternative, censoring family), a column per
/// statistic, and a `best` column naming the line maxima.
fn write_slice_csv(table: &PowerTable, path: &Path) -> CliResult<()> {
    let fail = csv_fail(path);
    let mut w = csv_writer(path)?;
    let mut header = vec!["alternative".to_string(), "censoring".to_string()];
    header.extend(table.statistics.iter().map(|s| s.to_string()));
    header.push("best".into());
    w.write_record(&header).map_err(&fail)?;
    for line in &table.lines {
        let mut rec = vec![line.alternative.to_string(), line.censoring_family.to_string()];
        rec.extend(line.values.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
        let best: Vec<String> = table
            .statistics
            .iter()
            .zip(&line.best)
            .filter(|(_, &b)| b)
            .map(|(s, _)| s.to_string())
            .collect();
        rec.push(best.join(";"));
        w.write_record(&rec).map_err(&fail)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_long_csv(cells: &[PowerCell], path: &Path) -> CliResult<()> {
    let fail = csv_fail(path);
    let mut w = csv_writer(path)?;
    w.write_record([
        "n",
        "censoring_fraction",
        "censoring_family",
        "censoring_parameter",
        "alternative",
        "statistic",
        "power",
        "standard_error",
        "mc_reps",
        "alpha",
        "seed",
        "error",
    ])
    .map_err(&fail)?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for c in cells {
        let k = &c.coordinates;
        w.write_record([
            k.n.to_string(),
            k.censoring_fraction.to_string(),
            k.censoring_family.to_string(),
            opt(c.censoring_parameter),
            k.alternative.to_string(),
            k.statistic.to_string(),
            opt(c.power),
            opt(c.standard_error),
            c.mc_reps.to_string(),
            c.alpha.to_string(),
            c.seed.to_string(),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(&fail)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
