//! Censored samples, the rate estimate, and Kaplan-Meier jump weights.
//!
//! A [`CensoredSample`] holds observed pairs `(T_j, δ_j)` where `T_j` is the
//! minimum of the lifetime and the censoring time and `δ_j` is `true` when the
//! lifetime was observed. Every test statistic works on the rate-scaled values
//! `Y_j = T_j · λ̂` ([`ScaledSample`]) and the product-limit jump masses
//! `Δ_j` ([`KmWeights`]).
//!
//! Ties are ordered with events before censorings at equal times, then by
//! original position. The largest observation always receives the residual
//! product-limit mass, even when it is censored, so the jumps sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed times paired with event indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    times: Vec<f64>,
    indicators: Vec<bool>,
}

impl CensoredSample {
    /// Builds a sample after checking lengths, `n >= 2`, and that every time
    /// is positive and finite.
    ///
    /// A sample with no events is structurally valid; [`estimate_rate`]
    /// reports it as degenerate.
    pub fn new(times: Vec<f64>, indicators: Vec<bool>) -> Result<Self> {
        if times.len() != indicators.len() {
            return Err(Error::InvalidSample(format!(
                "{} times but {} indicators",
                times.len(),
                indicators.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidSample(format!(
                "need at least 2 observations, got {}",
                times.len()
            )));
        }
        if let Some((i, t)) = times
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t > 0.0))
        {
            return Err(Error::InvalidSample(format!(
                "time #{} is {t}; times must be positive and finite",
                i + 1
            )));
        }
        Ok(Self { times, indicators })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, bool)>,
    {
        let (times, indicators) = pairs.into_iter().unzip();
        Self::new(times, indicators)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of uncensored observations, `ñ`.
    pub fn event_count(&self) -> usize {
        self.indicators.iter().filter(|&&d| d).count()
    }

    pub fn censored_count(&self) -> usize {
        self.len() - self.event_count()
    }

    pub fn estimate_rate(&self) -> Result<f64> {
        estimate_rate(self)
    }

    pub fn scale(&self) -> Result<ScaledSample> {
        scale(self)
    }

    /// Product-limit weights of the lifetime distribution on the original time scale.
    pub fn km_weights(&self) -> KmWeights {
        km_weights(&self.times, &self.indicators)
    }

    pub fn censoring_km_weights(&self) -> Result<KmWeights> {
        censoring_km_weights(self)
    }
}

/// Maximum likelihood estimate of the exponential rate, `Σδ_j / ΣT_j`.
///
/// The time total is accumulated in sorted order so the estimate does not
/// depend on the order of the input pairs.
pub fn estimate_rate(sample: &CensoredSample) -> Result<f64> {
    let events = sample.event_count();
    if events == 0 {
        return Err(Error::Degenerate("no observed events".into()));
    }
    let mut sorted = sample.times.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    Ok(events as f64 / total)
}

/// Rescales every observed time by the estimated rate.
pub fn scale(sample: &CensoredSample) -> Result<ScaledSample> {
    let rate = estimate_rate(sample)?;
    Ok(ScaledSample {
        scaled_times: sample.times.iter().map(|t| t * rate).collect(),
        indicators: sample.indicators.clone(),
        rate_estimate: rate,
    })
}

/// Rate-scaled values `Y_j = T_j · λ̂` in the original pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSample {
    scaled_times: Vec<f64>,
    indicators: Vec<bool>,
    rate_estimate: f64,
}

impl ScaledSample {
    /// Wraps values that are already on the rate-one scale, e.g. bootstrap
    /// output or hand-built fixtures. Only lengths and the rate are checked.
    pub fn from_scaled_values(
        scaled_times: Vec<f64>,
        indicators: Vec<bool>,
        rate_estimate: f64,
    ) -> Result<Self> {
        if scaled_times.len() != indicators.len() || scaled_times.is_empty() {
            return Err(Error::InvalidSample(
                "scaled values and indicators must be nonempty and of equal length".into(),
            ));
        }
        if !(rate_estimate.is_finite() && rate_estimate > 0.0) {
            return Err(Error::param("rate_estimate", "must be positive and finite"));
        }
        Ok(Self {
            scaled_times,
            indicators,
            rate_estimate,
        })
    }

    pub fn scaled_times(&self) -> &[f64] {
        &self.scaled_times
    }

    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }

    pub fn rate_estimate(&self) -> f64 {
        self.rate_estimate
    }

    pub fn len(&self) -> usize {
        self.scaled_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled_times.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.indicators.iter().filter(|&&d| d).count()
    }

    /// Product-limit weights on the scaled values.
    pub fn km_weights(&self) -> KmWeights {
        km_weights(&self.scaled_times, &self.indicators)
    }
}

/// Ordered observations with their product-limit jump masses `Δ_j` and the
/// survival values `S_k` after each ordered observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmWeights {
    ordered_times: Vec<f64>,
    ordered_indicators: Vec<bool>,
    jumps: Vec<f64>,
    survival_steps: Vec<f64>,
}

/// Indices sorting `(times, indicators)`: by time, events first on ties,
/// then by original position.
pub fn tie_order(times: &[f64], indicators: &[bool]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| {
        times[a]
            .total_cmp(&times[b])
            .then_with(|| indicators[b].cmp(&indicators[a]))
    });
    order
}

/// Product-limit jump weights for arbitrary (unsorted) data.
///
/// With `n - k` observations still at risk after step `k`, the survival
/// product factors as `S_k = ((n-k)/n)·C_k`, where `C_k` collects the factors
/// `(n-j+1)/(n-j)` of the censored steps `j ≤ k`. `C` is accumulated as a sum
/// of logarithms and exponentiated. An event at `j < n` then has jump
/// `S_{j-1}/(n-j+1) = C_{j-1}/n`, which is exactly `1/n` while no censoring
/// has occurred, and the last ordered observation takes all remaining mass
/// `S_{n-1}`.
pub fn km_weights(times: &[f64], indicators: &[bool]) -> KmWeights {
    assert_eq!(times.len(), indicators.len(), "length mismatch");
    let order = tie_order(times, indicators);
    let ordered_times: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let ordered_indicators: Vec<bool> = order.iter().map(|&i| indicators[i]).collect();
    km_weights_sorted(ordered_times, ordered_indicators)
}

/// Same as [`km_weights`] for data already in tie order.
pub fn km_weights_sorted(ordered_times: Vec<f64>, ordered_indicators: Vec<bool>) -> KmWeights {
    let n = ordered_times.len();
    let nf = n as f64;
    let mut survival_steps = Vec::with_capacity(n);
    let mut jumps = Vec::with_capacity(n);
    let mut log_censored = 0.0_f64;
    let mut prev = 1.0_f64;
    for (j, &event) in ordered_indicators.iter().enumerate() {
        // 0-based j: n - j at risk before this step, n - j - 1 after it.
        let remaining = (n - j - 1) as f64;
        let c = log_censored.exp();
        if j + 1 == n {
            jumps.push(prev);
        } else if event {
            jumps.push(c / nf);
        } else {
            jumps.push(0.0);
        }
        let s = if event {
            remaining / nf * c
        } else {
            log_censored += ((remaining + 1.0) / remaining).ln();
            prev
        };
        survival_steps.push(s);
        prev = s;
    }
    KmWeights {
        ordered_times,
        ordered_indicators,
        jumps,
        survival_steps,
    }
}

/// Product-limit weights of the censoring distribution: the same estimator
/// with the indicators flipped.
pub fn censoring_km_weights(sample: &CensoredSample) -> Result<KmWeights> {
    if sample.censored_count() == 0 {
        return Err(Error::NoCensoring);
    }
    let flipped: Vec<bool> = sample.indicators.iter().map(|d| !d).collect();
    Ok(km_weights(&sample.times, &flipped))
}

impl KmWeights {
    /// Reassembles weights from stored columns, e.g. a previously exported
    /// step table. Times must be nondecreasing and the jumps a probability
    /// vector.
    pub fn from_parts(
        ordered_times: Vec<f64>,
        ordered_indicators: Vec<bool>,
        jumps: Vec<f64>,
        survival_steps: Vec<f64>,
    ) -> Result<Self> {
        let n = ordered_times.len();
        if ordered_indicators.len() != n || jumps.len() != n || survival_steps.len() != n {
            return Err(Error::InvalidSample("column lengths differ".into()));
        }
        if n == 0 {
            return Err(Error::InvalidSample("empty weight table".into()));
        }
        if ordered_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSample("times are not sorted".into()));
        }
        if jumps.iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
            return Err(Error::InvalidSample("negative or non-finite jump".into()));
        }
        if survival_steps.iter().any(|s| !(0.0..=1.0).contains(s))
            || survival_steps.windows(2).any(|w| w[1] > w[0])
        {
            return Err(Error::InvalidSample(
                "survival column must be nonincreasing in [0, 1]".into(),
            ));
        }
        let mass: f64 = jumps.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSample(format!("jumps sum to {mass}, not 1")));
        }
        Ok(Self {
            ordered_times,
            ordered_indicators,
            jumps,
            survival_steps,
        })
    }

    pub fn len(&self) -> usize {
        self.ordered_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_times.is_empty()
    }

    pub fn ordered_times(&self) -> &[f64] {
        &self.ordered_times
    }

    pub fn ordered_indicators(&self) -> &[bool] {
        &self.ordered_indicators
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn survival_steps(&self) -> &[f64] {
        &self.survival_steps
    }

    /// `1 - F̃(t)` following the product-limit display: 1 up to and including
    /// the first time, `S_{k-1}` on `(T_(k-1), T_(k)]`, and `S_n` beyond the
    /// largest time.
    pub fn survival_at(&self, t: f64) -> f64 {
        let before = self.ordered_times.partition_point(|&x| x < t);
        if before == 0 {
            1.0
        } else {
            self.survival_steps[before - 1]
        }
    }

    /// Cumulative jump mass at or below `y` (right-continuous, residual tail
    /// mass included at the largest time).
    pub fn cdf_at(&self, y: f64) -> f64 {
        let upto = self.ordered_times.partition_point(|&x| x <= y);
        self.jumps[..upto].iter().sum()
    }

    /// Index/time/mass triples with positive mass: the events plus the
    /// residual mass at the largest observation.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let last = self.len().saturating_sub(1);
        self.ordered_times
            .iter()
            .zip(&self.jumps)
            .zip(&self.ordered_indicators)
            .enumerate()
            .filter(move |(j, (_, &event))| event || *j == last)
            .map(|(j, ((&t, &w), _))| (j, t, w))
    }

    /// Multiplies every time by `factor`; the jumps are scale free.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            ordered_times: self.ordered_times.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }
}

/// Free-function form of [`KmWeights::survival_at`].
pub fn km_survival_at(weights: &KmWeights, t: f64) -> f64 {
    weights.survival_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(times: &[f64], events: &[u8]) -> CensoredSample {
        CensoredSample::new(times.to_vec(), events.iter().map(|&d| d == 1).collect()).unwrap()
    }

    #[test]
    fn rate_of_mean_one_complete_sample() {
        let s = sample(&[1.0, 1.0, 1.0, 1.0], &[1, 1, 1, 1]);
        assert_eq!(s.estimate_rate().unwrap(), 1.0);
    }

    #[test]
    fn rate_with_one_censored() {
        let s = sample(&[2.0, 2.0], &[1, 0]);
        assert_eq!(s.estimate_rate().unwrap(), 0.25);
    }

    #[test]
    fn all_censored_is_degenerate() {
        let s = sample(&[1.0, 2.0], &[0, 0]);
        assert_eq!(
            s.estimate_rate().unwrap_err().to_string(),
            "degenerate: no observed events"
        );
        assert!(s.scale().is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CensoredSample::new(vec![1.0], vec![true]).is_err());
        assert!(CensoredSample::new(vec![1.0, 2.0], vec![true]).is_err());
        assert!(CensoredSample::new(vec![1.0, 0.0], vec![true, true]).is_err());
        assert!(CensoredSample::new(vec![1.0, -3.0], vec![true, true]).is_err());
        assert!(CensoredSample::new(vec![1.0, f64::NAN], vec![true, true]).is_err());
        assert!(CensoredSample::new(vec![1.0, f64::INFINITY], vec![true, true]).is_err());
    }

    #[test]
    fn scale_example() {
        let s = sample(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let y = s.scale().unwrap();
        assert_eq!(y.rate_estimate(), 0.5);
        assert_eq!(y.scaled_times(), &[0.5, 1.0, 1.5]);
        for c in [1e-3, 7.0, 1e4] {
            let z = sample(&[c, 2.0 * c, 3.0 * c], &[1, 1, 1]).scale().unwrap();
            for (a, b) in z.scaled_times().iter().zip(y.scaled_times()) {
                assert_relative_eq!(a, b, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn jumps_complete_pair() {
        let w = km_weights(&[1.0, 2.0], &[true, true]);
        assert_eq!(w.jumps(), &[0.5, 0.5]);
        assert_eq!(w.survival_steps(), &[0.5, 0.0]);
    }

    #[test]
    fn jumps_middle_censored() {
        let w = km_weights(&[1.0, 2.0, 3.0], &[true, false, true]);
        assert_relative_eq!(w.jumps()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(w.jumps()[1], 0.0);
        assert_relative_eq!(w.jumps()[2], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn jumps_tail_mass_when_last_censored() {
        let w = km_weights(&[1.0, 2.0, 3.0], &[false, true, false]);
        assert_eq!(w.jumps()[0], 0.0);
        assert_relative_eq!(w.jumps()[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(w.jumps()[2], 0.5, epsilon = 1e-15);
        // The display keeps S_n = S_{n-1} when the last point is censored.
        assert_relative_eq!(w.survival_at(10.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn survival_display_cases() {
        let w = km_weights(&[1.0, 2.0], &[true, true]);
        assert_eq!(w.survival_at(0.5), 1.0);
        assert_eq!(w.survival_at(1.0), 1.0);
        assert_eq!(w.survival_at(1.5), 0.5);
        assert_eq!(w.survival_at(2.0), 0.5);
        assert_eq!(w.survival_at(2.5), 0.0);

        // δ = (1,0,1): beyond the last time S_3 = (2/3)·1·(0/1) = 0.
        let w = km_weights(&[1.0, 2.0, 3.0], &[true, false, true]);
        assert_eq!(w.survival_at(4.0), 0.0);
        assert_relative_eq!(w.survival_at(2.5), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ties_put_events_first() {
        let w = km_weights(&[2.0, 1.0, 2.0, 3.0], &[false, true, true, true]);
        assert_eq!(w.ordered_times(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(w.ordered_indicators(), &[true, true, false, true]);
        // S = 3/4, 2/4, 2/4, 0
        assert_relative_eq!(w.jumps()[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(w.jumps()[1], 0.25, epsilon = 1e-15);
        assert_eq!(w.jumps()[2], 0.0);
        assert_relative_eq!(w.jumps()[3], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn censoring_weights() {
        let s = sample(&[1.0, 2.0], &[0, 0]);
        assert_eq!(s.censoring_km_weights().unwrap().jumps(), &[0.5, 0.5]);
        let s = sample(&[1.0, 2.0, 5.0], &[1, 1, 1]);
        assert_eq!(s.censoring_km_weights().unwrap_err(), Error::NoCensoring);
    }

    #[test]
    fn support_includes_tail() {
        let w = km_weights(&[1.0, 2.0, 3.0], &[false, true, false]);
        let pts: Vec<_> = w.support().map(|(j, _, _)| j).collect();
        assert_eq!(pts, vec![1, 2]);
    }

    #[test]
    fn cdf_is_cumulative_mass() {
        let w = km_weights(&[1.0, 2.0, 3.0], &[true, false, true]);
        assert_eq!(w.cdf_at(0.5), 0.0);
        assert_relative_eq!(w.cdf_at(1.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(w.cdf_at(2.5), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(w.cdf_at(3.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn from_parts_validates() {
        let w = km_weights(&[1.0, 2.0, 3.0], &[true, false, true]);
        let back = KmWeights::from_parts(
            w.ordered_times().to_vec(),
            w.ordered_indicators().to_vec(),
            w.jumps().to_vec(),
            w.survival_steps().to_vec(),
        )
        .unwrap();
        assert_eq!(back, w);
        assert!(KmWeights::from_parts(vec![2.0, 1.0], vec![true; 2], vec![0.5; 2], vec![0.5, 0.0])
            .is_err());
        assert!(KmWeights::from_parts(vec![1.0, 2.0], vec![true; 2], vec![0.5; 2], vec![0.5, 0.6])
            .is_err());
        assert!(KmWeights::from_parts(vec![1.0, 2.0], vec![true; 2], vec![0.4; 2], vec![0.5, 0.0])
            .is_err());
    }
}
