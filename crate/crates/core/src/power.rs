//! Monte Carlo power study over a grid of lifetime laws, censoring laws,
//! censoring fractions and sample sizes.
//!
//! Each scenario (alternative, censoring family, fraction, n) is simulated
//! once and every statistic is evaluated on the same draws, using the
//! warp-speed method from [`crate::bootstrap`]. The random stream of a
//! scenario is derived from the grid seed and the scenario's coordinates,
//! so a cell's value does not depend on which other cells are in the grid.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{warp_rejection_percentage, warp_speed_draws, Scenario};
use crate::distributions::{
    standard_alternatives, AlternativeSpec, Calibrator, CensoringFamily, CensoringSpec,
};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::statistics::StatisticId;

/// Declarative description of a power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub sample_sizes: Vec<usize>,
    pub censoring_fractions: Vec<f64>,
    pub censoring_families: Vec<CensoringFamily>,
    pub alternatives: Vec<AlternativeSpec>,
    pub statistics: Vec<StatisticId>,
    pub mc_reps: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl ExperimentGrid {
    /// The standard comparison design at the default of 5000 Monte Carlo samples
    /// per cell.
    pub fn standard() -> Self {
        Self {
            sample_sizes: vec![50, 100],
            censoring_fractions: vec![0.1, 0.2, 0.3],
            censoring_families: CensoringFamily::STUDY.to_vec(),
            alternatives: standard_alternatives(),
            statistics: StatisticId::standard_set(),
            mc_reps: 5000,
            alpha: 0.05,
            seed: 20_240_601,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &'static str, len: usize| {
            if len == 0 {
                Err(Error::param(name, "must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty("sample_sizes", self.sample_sizes.len())?;
        nonempty("censoring_fractions", self.censoring_fractions.len())?;
        nonempty("censoring_families", self.censoring_families.len())?;
        nonempty("alternatives", self.alternatives.len())?;
        nonempty("statistics", self.statistics.len())?;
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::param("sample_sizes", format!("each size must be at least 2, got {n}")));
        }
        if let Some(f) = self.censoring_fractions.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::param("censoring_fractions", format!("each fraction must lie in (0, 1), got {f}")));
        }
        if self.censoring_families.contains(&CensoringFamily::None) {
            return Err(Error::param(
                "censoring_families",
                "\"none\" cannot be calibrated to a positive censoring fraction",
            ));
        }
        for a in &self.alternatives {
            a.validate()?;
        }
        if self.mc_reps < 100 {
            return Err(Error::param("mc_reps", format!("must be at least 100, got {}", self.mc_reps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.sample_sizes.len()
            * self.censoring_fractions.len()
            * self.censoring_families.len()
            * self.alternatives.len()
            * self.statistics.len()
    }
}

/// Grid position of one power estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCoordinates {
    pub alternative: AlternativeSpec,
    pub censoring_family: CensoringFamily,
    pub censoring_fraction: f64,
    pub n: usize,
    pub statistic: StatisticId,
}

impl CellCoordinates {
    fn scenario_key(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.alternative, self.censoring_family, self.censoring_fraction, self.n
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub coordinates: CellCoordinates,
    /// Calibrated censoring parameter, when calibration succeeded.
    pub censoring_parameter: Option<f64>,
    /// Rejection percentage in `[0, 100]`.
    pub power: Option<f64>,
    /// `100·√(p(1-p)/mc_reps)` with `p = power/100`.
    pub standard_error: Option<f64>,
    pub mc_reps: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PowerCell {
    /// Identity of the cell result, including everything that changes its value.
    pub fn cache_key(&self) -> String {
        cache_key(&self.coordinates, self.seed, self.mc_reps, self.alpha)
    }
}

fn cache_key(c: &CellCoordinates, seed: u64, mc_reps: usize, alpha: f64) -> String {
    format!(
        "{}|{}|seed={seed}|reps={mc_reps}|alpha={alpha}",
        c.scenario_key(),
        c.statistic
    )
}

pub fn standard_error(power: f64, mc_reps: usize) -> f64 {
    let p = power / 100.0;
    100.0 * (p * (1.0 - p) / mc_reps as f64).sqrt()
}

/// Runs every cell of the grid.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<PowerCell>> {
    run_grid_with(grid, &HashMap::new(), |_| {})
}

/// Runs the grid, taking cells already present in `cached` (by
/// [`PowerCell::cache_key`]) as done. `on_scenario` receives the freshly
/// computed cells of each scenario as soon as they are available.
///
/// Failures of calibration or simulation are recorded in the affected cells
/// and the grid continues.
pub fn run_grid_with(
    grid: &ExperimentGrid,
    cached: &HashMap<String, PowerCell>,
    mut on_scenario: impl FnMut(&[PowerCell]),
) -> Result<Vec<PowerCell>> {
    grid.validate()?;
    let mut cells = Vec::with_capacity(grid.cell_count());
    let mut calibrations: HashMap<(usize, usize, usize), Result<CensoringSpec>> = HashMap::new();

    for (ai, alternative) in grid.alternatives.iter().enumerate() {
        let mut calibrator: Option<Result<Calibrator>> = None;
        for &n in &grid.sample_sizes {
            for (fi, &fraction) in grid.censoring_fractions.iter().enumerate() {
                for (ci, &family) in grid.censoring_families.iter().enumerate() {
                    let coords: Vec<CellCoordinates> = grid
                        .statistics
                        .iter()
                        .map(|&statistic| CellCoordinates {
                            alternative: *alternative,
                            censoring_family: family,
                            censoring_fraction: fraction,
                            n,
                            statistic,
                        })
                        .collect();
                    let hits: Vec<Option<&PowerCell>> = coords
                        .iter()
                        .map(|c| cached.get(&cache_key(c, grid.seed, grid.mc_reps, grid.alpha)))
                        .collect();
                    if hits.iter().all(Option::is_some) {
                        cells.extend(hits.into_iter().flatten().cloned());
                        continue;
                    }

                    let censoring = calibrations
                        .entry((ai, fi, ci))
                        .or_insert_with(|| {
                            let cal = calibrator.get_or_insert_with(|| Calibrator::new(*alternative));
                            match cal {
                                Ok(cal) => cal.calibrate(family, fraction),
                                Err(e) => Err(Error::Calibration(e.to_string())),
                            }
                        })
                        .as_ref()
                        .map(|c| *c)
                        .map_err(|e| e.to_string());

                    let fresh = simulate_scenario(grid, &coords, censoring);
                    on_scenario(&fresh);
                    cells.extend(fresh);
                }
            }
        }
    }
    Ok(cells)
}

fn simulate_scenario(
    grid: &ExperimentGrid,
    coords: &[CellCoordinates],
    censoring: std::result::Result<CensoringSpec, String>,
) -> Vec<PowerCell> {
    let blank = |c: &CellCoordinates, parameter: Option<f64>, error: String| PowerCell {
        coordinates: *c,
        censoring_parameter: parameter,
        power: None,
        standard_error: None,
        mc_reps: grid.mc_reps,
        alpha: grid.alpha,
        seed: grid.seed,
        error: Some(error),
    };
    let censoring = match censoring {
        Ok(c) => c,
        Err(e) => return coords.iter().map(|c| blank(c, None, e.clone())).collect(),
    };
    let first = coords[0];
    let scenario = Scenario {
        alternative: first.alternative,
        censoring,
        n: first.n,
    };
    let seed = derive_seed(grid.seed, &first.scenario_key());
    let ids: Vec<StatisticId> = coords.iter().map(|c| c.statistic).collect();
    match warp_speed_draws(&scenario, &ids, grid.mc_reps, seed) {
        Ok(draws) => coords
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let power = warp_rejection_percentage(
                    c.statistic.rejection_side(),
                    &draws.observed[k],
                    &draws.replicates[k],
                    grid.alpha,
                );
                PowerCell {
                    coordinates: *c,
                    censoring_parameter: Some(censoring.parameter),
                    power: Some(power),
                    standard_error: Some(standard_error(power, grid.mc_reps)),
                    mc_reps: grid.mc_reps,
                    alpha: grid.alpha,
                    seed: grid.seed,
                    error: None,
                }
            })
            .collect(),
        Err(e) => coords
            .iter()
            .map(|c| blank(c, Some(censoring.parameter), e.to_string()))
            .collect(),
    }
}

/// One line of a power table: one alternative under one censoring family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableLine {
    pub alternative: AlternativeSpec,
    pub censoring_family: CensoringFamily,
    /// Rounded powers in column order; `None` where the cell is missing or failed.
    pub values: Vec<Option<i64>>,
    /// Marks the largest rounded power of the line (all ties marked); never
    /// set on exponential lines.
    pub best: Vec<bool>,
}

/// Power table for one (n, censoring fraction) slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTable {
    pub n: usize,
    pub censoring_fraction: f64,
    pub statistics: Vec<StatisticId>,
    pub lines: Vec<TableLine>,
    /// One message per missing or failed cell.
    pub warnings: Vec<String>,
}

/// Lays out a slice with alternatives as row groups, censoring families as
/// the lines of each group, and statistics as columns, all in grid order.
pub fn render_table(grid: &ExperimentGrid, cells: &[PowerCell], n: usize, fraction: f64) -> PowerTable {
    let lookup: HashMap<String, &PowerCell> = cells
        .iter()
        .filter(|c| c.coordinates.n == n && c.coordinates.censoring_fraction == fraction)
        .map(|c| (line_key(&c.coordinates.alternative, c.coordinates.censoring_family, c.coordinates.statistic), c))
        .collect();
    let mut warnings = Vec::new();
    let mut lines = Vec::new();
    for alternative in &grid.alternatives {
        for &family in &grid.censoring_families {
            let values: Vec<Option<i64>> = grid
                .statistics
                .iter()
                .map(|&s| match lookup.get(&line_key(alternative, family, s)) {
                    Some(PowerCell { power: Some(p), .. }) => Some(round_half_away(*p)),
                    Some(PowerCell { error, .. }) => {
                        warnings.push(format!(
                            "{alternative} / {family} / {s}: {}",
                            error.as_deref().unwrap_or("no value")
                        ));
                        None
                    }
                    None => {
                        warnings.push(format!("{alternative} / {family} / {s}: missing"));
                        None
                    }
                })
                .collect();
            // the null model has no power to compare
            let top = if alternative.is_exponential() {
                None
            } else {
                values.iter().flatten().max().copied()
            };
            let best = values.iter().map(|v| v.is_some() && *v == top).collect();
            lines.push(TableLine {
                alternative: *alternative,
                censoring_family: family,
                values,
                best,
            });
        }
    }
    PowerTable {
        n,
        censoring_fraction: fraction,
        statistics: grid.statistics.clone(),
        lines,
        warnings,
    }
}

fn line_key(a: &AlternativeSpec, f: CensoringFamily, s: StatisticId) -> String {
    format!("{a}|{f}|{s}")
}

/// Nearest integer, halves away from zero.
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}

impl PowerTable {
    /// Fixed-width text; the largest power of each line is starred.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n = {}, censoring = {}%",
            self.n,
            round_half_away(100.0 * self.censoring_fraction)
        );
        let _ = write!(out, "{:<14}{:<13}", "alternative", "censoring");
        for s in &self.statistics {
            let _ = write!(out, "{:>8}", s.to_string());
        }
        out.push('\n');
        let mut previous: Option<AlternativeSpec> = None;
        for line in &self.lines {
            let label = if previous == Some(line.alternative) {
                String::new()
            } else {
                line.alternative.to_string()
            };
            previous = Some(line.alternative);
            let _ = write!(out, "{label:<14}{:<13}", line.censoring_family.name());
            for (v, &b) in line.values.iter().zip(&line.best) {
                let cell = match v {
                    Some(v) if b => format!("{v}*"),
                    Some(v) => format!("{v} "),
                    None => "- ".to_string(),
                };
                let _ = write!(out, "{cell:>8}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> ExperimentGrid {
        ExperimentGrid {
            sample_sizes: vec![20],
            censoring_fractions: vec![0.2],
            censoring_families: vec![CensoringFamily::Exponential, CensoringFamily::Uniform],
            alternatives: vec![AlternativeSpec::exponential(1.0).unwrap()],
            statistics: vec![StatisticId::KS, StatisticId::CO],
            mc_reps: 200,
            alpha: 0.05,
            seed: 3,
        }
    }

    #[test]
    fn standard_grid_is_valid_and_complete() {
        let g = ExperimentGrid::standard();
        g.validate().unwrap();
        assert_eq!(g.cell_count(), 2 * 3 * 3 * 14 * 10);
    }

    #[test]
    fn validation_names_the_field() {
        let mut g = tiny_grid();
        g.censoring_fractions = vec![1.5];
        let msg = g.validate().unwrap_err().to_string();
        assert!(msg.contains("censoring_fractions"), "{msg}");
        let mut g = tiny_grid();
        g.mc_reps = 10;
        assert!(g.validate().unwrap_err().to_string().contains("mc_reps"));
    }

    #[test]
    fn cells_do_not_depend_on_grid_neighbours() {
        let g = tiny_grid();
        let all = run_grid(&g).unwrap();
        let mut single = g.clone();
        single.censoring_families = vec![CensoringFamily::Uniform];
        single.statistics = vec![StatisticId::CO];
        let one = run_grid(&single).unwrap();
        let same = all
            .iter()
            .find(|c| c.cache_key() == one[0].cache_key())
            .unwrap();
        assert_eq!(same, &one[0]);
    }

    #[test]
    fn cached_cells_are_reused() {
        let g = tiny_grid();
        let first = run_grid(&g).unwrap();
        let cache: HashMap<String, PowerCell> =
            first.iter().map(|c| (c.cache_key(), c.clone())).collect();
        let mut computed = 0;
        let again = run_grid_with(&g, &cache, |c| computed += c.len()).unwrap();
        assert_eq!(computed, 0);
        assert_eq!(again, first);
    }

    #[test]
    fn table_flags_line_maxima_and_reports_gaps() {
        let g = tiny_grid();
        let mut cells = run_grid(&g).unwrap();
        cells.pop();
        let t = render_table(&g, &cells, 20, 0.2);
        assert_eq!(t.lines.len(), 2);
        assert_eq!(t.warnings.len(), 1);
        assert_eq!(t.lines[1].values[1], None);
        assert!(t.lines.iter().all(|l| l.best.iter().all(|b| !b)));

        let mut g = g;
        g.alternatives = vec![AlternativeSpec::new(crate::AlternativeFamily::Weibull, 2.0).unwrap()];
        let cells = run_grid(&g).unwrap();
        let t = render_table(&g, &cells, 20, 0.2);
        for line in &t.lines {
            assert!(line.best.iter().any(|&b| b));
            let top = line.values.iter().flatten().max();
            for (v, b) in line.values.iter().zip(&line.best) {
                assert_eq!(*b, v.is_some() && v.as_ref() == top);
            }
        }
        assert!(t.to_text().contains("W(2)"));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_half_away(2.5), 3);
        assert_eq!(round_half_away(3.5), 4);
        assert_eq!(round_half_away(96.49), 96);
    }
}
