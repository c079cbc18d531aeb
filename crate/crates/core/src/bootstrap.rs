//! Parametric bootstrap under the fitted exponential model.
//!
//! A replicate draws lifetimes from `Exp(λ̂)` and censoring times from the
//! reverse Kaplan-Meier estimate of the observed data, censors, rescales by
//! its own rate estimate and evaluates the statistic. Replicate `b` always
//! uses random stream `b` of the root seed, so results are bit-identical
//! regardless of the number of worker threads.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_alternative, sample_censoring, AlternativeSpec, CensoringSpec};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sample::{CensoredSample, KmWeights};
use crate::statistics::{evaluate, RejectionSide, StatisticId, StatisticValue};

/// Consecutive event-free draws tolerated before giving up.
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub statistic: StatisticId,
}

impl BootstrapConfig {
    pub fn new(replications: usize, alpha: f64, seed: u64, statistic: StatisticId) -> Result<Self> {
        let cfg = Self {
            replications,
            alpha,
            seed,
            statistic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replications == 0 || floor_rank(self.replications, 1.0 - self.alpha) == 0 {
            return Err(Error::param(
                "replications",
                format!(
                    "floor(B(1 - alpha)) must be at least 1 (B = {}, alpha = {})",
                    self.replications, self.alpha
                ),
            ));
        }
        Ok(())
    }
}

/// `⌊m·q⌋`, robust to `q` carrying representation error (0.95 is stored as
/// 0.94999...).
pub fn floor_rank(m: usize, q: f64) -> usize {
    ((m as f64) * q + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    pub statistic: StatisticId,
    pub observed: f64,
    /// Order statistic of rank `⌊B(1-α)⌋` of the compared replicate values.
    /// For the two-sided rule the rank is `⌊B(1-α/2)⌋`.
    pub critical_value: f64,
    /// Lower cut of the two-sided rule, the order statistic of rank
    /// `B - ⌊B(1-α/2)⌋ + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_critical_value: Option<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    /// Replicate values in increasing order, on the scale the rejection rule
    /// compares: absolute values for the `AbsUpper` side, raw otherwise.
    #[serde(skip)]
    pub replicate_values: Vec<f64>,
}

impl BootstrapOutcome {
    /// Rejection decision at the configured level: `p ≤ α`.
    pub fn rejects(&self) -> bool {
        self.p_value <= self.alpha
    }

    pub fn rejection_side(&self) -> RejectionSide {
        self.statistic.rejection_side()
    }
}

/// Inverse-CDF table over the positive-mass points of a product-limit
/// estimate.
///
/// Mass sitting on a flagged point is drawn as that point. When the largest
/// observation is not flagged (for the censoring estimate: the longest
/// follow-up ended in an event), its residual mass stands for "beyond the
/// end of follow-up" and is drawn as `+∞`.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    points: Vec<f64>,
    cumulative: Vec<f64>,
    beyond: f64,
}

impl DiscreteSampler {
    pub fn from_weights(w: &KmWeights) -> Self {
        let flags = w.ordered_indicators();
        let last = w.len() - 1;
        let mut points = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (i, t, m) in w.support() {
            if m > 0.0 && flags[i] {
                acc += m;
                points.push(t);
                cumulative.push(acc);
            }
        }
        let beyond = if flags[last] {
            w.ordered_times()[last]
        } else {
            f64::INFINITY
        };
        Self {
            points,
            cumulative,
            beyond,
        }
    }

    /// Smallest support point whose cumulative mass reaches `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < u);
        self.points.get(k).copied().unwrap_or(self.beyond)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Censoring law used to generate bootstrap samples.
#[derive(Debug, Clone)]
pub enum NullCensoring {
    /// Every bootstrap lifetime is observed.
    None,
    Discrete(DiscreteSampler),
}

impl NullCensoring {
    pub fn from_weights(w: Option<&KmWeights>) -> Self {
        match w {
            Some(w) => NullCensoring::Discrete(DiscreteSampler::from_weights(w)),
            None => NullCensoring::None,
        }
    }

    /// Reverse Kaplan-Meier of `sample`, or no censoring if nothing was censored.
    pub fn estimate(sample: &CensoredSample) -> Self {
        match sample.censoring_km_weights() {
            Ok(w) => Self::from_weights(Some(&w)),
            Err(_) => NullCensoring::None,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NullCensoring::None => f64::INFINITY,
            NullCensoring::Discrete(s) => s.sample(rng),
        }
    }
}

/// One censored sample of size `n` under `Exp(rate)` lifetimes.
///
/// Draws with no observed event are discarded and redrawn.
pub fn draw_null_sample<R: Rng + ?Sized>(
    rate: f64,
    censoring: &NullCensoring,
    n: usize,
    rng: &mut R,
) -> Result<CensoredSample> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::param("rate", format!("must be positive, got {rate}")));
    }
    let exp = Exp::new(rate).map_err(|e| Error::param("rate", e.to_string()))?;
    for _ in 0..MAX_REDRAWS {
        let mut times = Vec::with_capacity(n);
        let mut events = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = exp.sample(rng);
            let c = censoring.draw(rng);
            times.push(x.min(c));
            events.push(x <= c);
        }
        if events.iter().any(|&d| d) {
            return CensoredSample::new(times, events);
        }
    }
    Err(Error::Degenerate(format!(
        "{MAX_REDRAWS} consecutive bootstrap samples without an observed event"
    )))
}

fn evaluate_sample(ids: &[StatisticId], sample: &CensoredSample) -> Result<Vec<f64>> {
    let scaled = sample.scale()?;
    let w = scaled.km_weights();
    ids.iter()
        .map(|&id| evaluate(id, &scaled, &w).map(|v| v.value))
        .collect()
}

/// One bootstrap value of `statistic`.
pub fn bootstrap_replicate<R: Rng + ?Sized>(
    rate: f64,
    censoring: Option<&KmWeights>,
    n: usize,
    statistic: StatisticId,
    rng: &mut R,
) -> Result<StatisticValue> {
    let sample = draw_null_sample(rate, &NullCensoring::from_weights(censoring), n, rng)?;
    let v = evaluate_sample(&[statistic], &sample)?[0];
    Ok(StatisticValue::new(statistic, v))
}

/// Upper-tail Monte Carlo p-value `(1 + #{S* ≥ s})/(B + 1)` against sorted
/// replicates.
fn upper_p(sorted: &[f64], s: f64) -> f64 {
    let at_least = sorted.len() - sorted.partition_point(|&x| x < s);
    (1 + at_least) as f64 / (sorted.len() + 1) as f64
}

fn lower_p(sorted: &[f64], s: f64) -> f64 {
    let at_most = sorted.partition_point(|&x| x <= s);
    (1 + at_most) as f64 / (sorted.len() + 1) as f64
}

/// p-value of `observed` against unsorted replicate values.
pub fn p_value(side: RejectionSide, observed: f64, replicates: &[f64]) -> f64 {
    let mut r: Vec<f64> = match side {
        RejectionSide::AbsUpper => replicates.iter().map(|x| x.abs()).collect(),
        _ => replicates.to_vec(),
    };
    r.sort_by(f64::total_cmp);
    sorted_p_value(side, observed, &r)
}

fn sorted_p_value(side: RejectionSide, observed: f64, sorted: &[f64]) -> f64 {
    match side {
        RejectionSide::Upper => upper_p(sorted, observed),
        RejectionSide::AbsUpper => upper_p(sorted, observed.abs()),
        RejectionSide::TwoSided => {
            (2.0 * upper_p(sorted, observed).min(lower_p(sorted, observed))).min(1.0)
        }
    }
}

fn summarize(cfg: &BootstrapConfig, observed: f64, mut values: Vec<f64>) -> BootstrapOutcome {
    let side = cfg.statistic.rejection_side();
    if side == RejectionSide::AbsUpper {
        values.iter_mut().for_each(|v| *v = v.abs());
    }
    values.sort_by(f64::total_cmp);
    let b = values.len();
    let (critical_value, lower_critical_value) = match side {
        RejectionSide::TwoSided => {
            let k = floor_rank(b, 1.0 - cfg.alpha / 2.0).max(1);
            (values[k - 1], Some(values[b - k]))
        }
        _ => (values[floor_rank(b, 1.0 - cfg.alpha) - 1], None),
    };
    BootstrapOutcome {
        statistic: cfg.statistic,
        observed,
        critical_value,
        lower_critical_value,
        p_value: sorted_p_value(side, observed, &values),
        alpha: cfg.alpha,
        replications: b,
        seed: cfg.seed,
        replicate_values: values,
    }
}

/// Full bootstrap test of one statistic.
pub fn run_bootstrap(sample: &CensoredSample, cfg: &BootstrapConfig) -> Result<BootstrapOutcome> {
    Ok(run_bootstrap_many(sample, std::slice::from_ref(cfg))?.remove(0))
}

/// Bootstrap tests of several statistics from one shared set of replicates.
///
/// All configurations must agree on `replications` and `seed`; they may use
/// different levels.
pub fn run_bootstrap_many(
    sample: &CensoredSample,
    cfgs: &[BootstrapConfig],
) -> Result<Vec<BootstrapOutcome>> {
    let Some(first) = cfgs.first() else {
        return Ok(Vec::new());
    };
    for cfg in cfgs {
        cfg.validate()?;
        if cfg.replications != first.replications || cfg.seed != first.seed {
            return Err(Error::param(
                "replications",
                "shared replicates need a common replication count and seed",
            ));
        }
    }
    let ids: Vec<StatisticId> = cfgs.iter().map(|c| c.statistic).collect();
    let observed = evaluate_sample(&ids, sample)?;
    let rate = sample.estimate_rate()?;
    let censoring = NullCensoring::estimate(sample);
    let n = sample.len();

    let rows: Vec<Vec<f64>> = (0..first.replications as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(first.seed, b);
            let s = draw_null_sample(rate, &censoring, n, &mut rng)?;
            evaluate_sample(&ids, &s)
        })
        .collect::<Result<_>>()?;

    Ok(cfgs
        .iter()
        .enumerate()
        .map(|(k, cfg)| {
            let column = rows.iter().map(|r| r[k]).collect();
            summarize(cfg, observed[k], column)
        })
        .collect())
}

/// Lifetime law, censoring law and sample size of one Monte Carlo scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub alternative: AlternativeSpec,
    pub censoring: CensoringSpec,
    pub n: usize,
}

impl Scenario {
    /// One censored sample from the scenario, redrawn while it has no events.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CensoredSample> {
        for _ in 0..MAX_REDRAWS {
            let x = sample_alternative(&self.alternative, self.n, rng)?;
            let c = sample_censoring(&self.censoring, self.n, rng)?;
            let events: Vec<bool> = x.iter().zip(&c).map(|(x, c)| x <= c).collect();
            if events.iter().any(|&d| d) {
                let times = x.iter().zip(&c).map(|(x, c)| x.min(*c)).collect();
                return CensoredSample::new(times, events);
            }
        }
        Err(Error::Degenerate(format!(
            "{MAX_REDRAWS} consecutive Monte Carlo samples without an observed event"
        )))
    }
}

/// Observed statistics and one bootstrap replicate per Monte Carlo sample.
#[derive(Debug, Clone)]
pub struct WarpDraws {
    pub statistics: Vec<StatisticId>,
    /// `observed[k][i]`: statistic `k` on Monte Carlo sample `i`.
    pub observed: Vec<Vec<f64>>,
    /// `replicates[k][i]`: statistic `k` on the bootstrap replicate of sample `i`.
    pub replicates: Vec<Vec<f64>>,
}

/// Monte Carlo samples for the warp-speed method. Sample `i` and its single
/// bootstrap replicate come from stream `i` of `seed`; every statistic is
/// evaluated on the same draws.
pub fn warp_speed_draws(
    scenario: &Scenario,
    statistics: &[StatisticId],
    mc_reps: usize,
    seed: u64,
) -> Result<WarpDraws> {
    if mc_reps < 100 {
        return Err(Error::param("mc_reps", format!("must be at least 100, got {mc_reps}")));
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..mc_reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let sample = scenario.draw(&mut rng)?;
            let obs = evaluate_sample(statistics, &sample)?;
            let rate = sample.estimate_rate()?;
            let censoring = NullCensoring::estimate(&sample);
            let boot = draw_null_sample(rate, &censoring, sample.len(), &mut rng)?;
            Ok((obs, evaluate_sample(statistics, &boot)?))
        })
        .collect::<Result<_>>()?;
    let (obs, boot): (Vec<Vec<f64>>, Vec<Vec<f64>>) = pairs.into_iter().unzip();
    let columns = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..statistics.len())
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect()
    };
    Ok(WarpDraws {
        statistics: statistics.to_vec(),
        observed: columns(&obs),
        replicates: columns(&boot),
    })
}

/// Percentage of `observed` values rejected against the pooled replicates.
///
/// One-sided rules reject above the order statistic of rank `⌊M(1-α)⌋`
/// (on absolute values for `AbsUpper`). The two-sided rule rejects above
/// rank `k = ⌊M(1-α/2)⌋` or below rank `M - k + 1`.
pub fn warp_rejection_percentage(
    side: RejectionSide,
    observed: &[f64],
    replicates: &[f64],
    alpha: f64,
) -> f64 {
    let abs = side == RejectionSide::AbsUpper;
    let mut pool: Vec<f64> = replicates
        .iter()
        .map(|&x| if abs { x.abs() } else { x })
        .collect();
    pool.sort_by(f64::total_cmp);
    let m = pool.len();
    let rejected = match side {
        RejectionSide::TwoSided => {
            let k = floor_rank(m, 1.0 - alpha / 2.0).max(1);
            let (lo, hi) = (pool[m - k], pool[k - 1]);
            observed.iter().filter(|&&s| s > hi || s < lo).count()
        }
        _ => {
            let c = pool[floor_rank(m, 1.0 - alpha).max(1) - 1];
            observed
                .iter()
                .filter(|&&s| if abs { s.abs() > c } else { s > c })
                .count()
        }
    };
    100.0 * rejected as f64 / observed.len() as f64
}

/// Warp-speed rejection percentage of each statistic under `scenario`.
pub fn warp_speed_power(
    scenario: &Scenario,
    statistics: &[StatisticId],
    mc_reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let draws = warp_speed_draws(scenario, statistics, mc_reps, seed)?;
    Ok(statistics
        .iter()
        .enumerate()
        .map(|(k, id)| {
            warp_rejection_percentage(
                id.rejection_side(),
                &draws.observed[k],
                &draws.replicates[k],
                alpha,
            )
        })
        .collect())
}
