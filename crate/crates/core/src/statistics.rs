//! Test statistics for exponentiality from Kaplan-Meier weighted data.
//!
//! Each statistic is evaluated in closed form from the scaled values `Y_j`
//! and the product-limit jumps `Δ_j`. Double sums run only over indices with
//! positive mass (events plus the tail point), in sorted order, so results
//! are bitwise invariant under permutations of the input pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{tie_order, CensoredSample, KmWeights, ScaledSample};

/// Family of test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatisticKind {
    /// Kolmogorov-Smirnov distance to the unit exponential CDF.
    KS,
    /// Cramér-von Mises distance on the probability scale.
    CM,
    /// Cox-Oakes score statistic.
    CO,
    /// Epps-Pulley characteristic function statistic.
    EP,
    /// Weighted L2 distance between Laplace transforms.
    L,
    /// Baringhaus-Henze Laplace transform differential equation statistic.
    B,
    /// Henze-Meintanis characteristic function characterisation statistic.
    H,
}

impl StatisticKind {
    pub fn needs_tuning(self) -> bool {
        matches!(self, StatisticKind::L | StatisticKind::B | StatisticKind::H)
    }

    pub fn rejection_side(self) -> RejectionSide {
        match self {
            StatisticKind::EP => RejectionSide::AbsUpper,
            StatisticKind::CO => RejectionSide::TwoSided,
            _ => RejectionSide::Upper,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::KS => "KS",
            StatisticKind::CM => "CM",
            StatisticKind::CO => "CO",
            StatisticKind::EP => "EP",
            StatisticKind::L => "L",
            StatisticKind::B => "B",
            StatisticKind::H => "H",
        }
    }

    pub const ALL: [StatisticKind; 7] = [
        StatisticKind::KS,
        StatisticKind::CM,
        StatisticKind::CO,
        StatisticKind::EP,
        StatisticKind::L,
        StatisticKind::B,
        StatisticKind::H,
    ];
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatisticKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param("statistic", format!("unknown statistic `{s}`")))
    }
}

/// Which tail of the null distribution leads to rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionSide {
    Upper,
    TwoSided,
    AbsUpper,
}

/// A statistic together with its tuning parameter `a` when it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StatisticId {
    kind: StatisticKind,
    tuning: Option<f64>,
}

impl StatisticId {
    pub fn new(kind: StatisticKind, tuning: Option<f64>) -> Result<Self> {
        match (kind.needs_tuning(), tuning) {
            (true, Some(a)) if a.is_finite() && a > 0.0 => Ok(Self { kind, tuning }),
            (true, Some(a)) => Err(Error::param("a", format!("must be positive, got {a}"))),
            (true, None) => Err(Error::param(
                "a",
                format!("{} requires a tuning parameter", kind.name()),
            )),
            (false, None) => Ok(Self { kind, tuning }),
            (false, Some(_)) => Err(Error::param(
                "a",
                format!("{} takes no tuning parameter", kind.name()),
            )),
        }
    }

    pub const KS: StatisticId = StatisticId {
        kind: StatisticKind::KS,
        tuning: None,
    };
    pub const CM: StatisticId = StatisticId {
        kind: StatisticKind::CM,
        tuning: None,
    };
    pub const CO: StatisticId = StatisticId {
        kind: StatisticKind::CO,
        tuning: None,
    };
    pub const EP: StatisticId = StatisticId {
        kind: StatisticKind::EP,
        tuning: None,
    };

    pub fn l(a: f64) -> Result<Self> {
        Self::new(StatisticKind::L, Some(a))
    }

    pub fn b(a: f64) -> Result<Self> {
        Self::new(StatisticKind::B, Some(a))
    }

    pub fn h(a: f64) -> Result<Self> {
        Self::new(StatisticKind::H, Some(a))
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn tuning(&self) -> Option<f64> {
        self.tuning
    }

    pub fn rejection_side(&self) -> RejectionSide {
        self.kind.rejection_side()
    }

    /// The ten configurations of the standard comparison, in column order:
    /// KS, CM, CO, EP, L(.25), L(.5), B(.25), B(.5), H(.5), H(1).
    pub fn standard_set() -> Vec<StatisticId> {
        let t = |kind, a| StatisticId {
            kind,
            tuning: Some(a),
        };
        vec![
            Self::KS,
            Self::CM,
            Self::CO,
            Self::EP,
            t(StatisticKind::L, 0.25),
            t(StatisticKind::L, 0.5),
            t(StatisticKind::B, 0.25),
            t(StatisticKind::B, 0.5),
            t(StatisticKind::H, 0.5),
            t(StatisticKind::H, 1.0),
        ]
    }
}

impl fmt::Display for StatisticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tuning {
            Some(a) => write!(f, "{}_{}", self.kind.name(), a),
            None => f.write_str(self.kind.name()),
        }
    }
}

impl FromStr for StatisticId {
    type Err = Error;

    /// Accepts `KS`, `EP`, `L_0.25`, `L0.25` and `L.25` style labels.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .find(|c: char| c == '_' || c == '.' || c.is_ascii_digit())
            .unwrap_or(s.len());
        let kind: StatisticKind = s[..split].parse()?;
        let rest = s[split..].trim_start_matches('_');
        if rest.is_empty() {
            return Self::new(kind, None);
        }
        let a: f64 = rest
            .parse()
            .map_err(|_| Error::param("a", format!("cannot parse tuning value in `{s}`")))?;
        Self::new(kind, Some(a))
    }
}

impl TryFrom<String> for StatisticId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StatisticId> for String {
    fn from(id: StatisticId) -> String {
        id.to_string()
    }
}

/// An evaluated statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub id: StatisticId,
    pub value: f64,
    pub rejection_side: RejectionSide,
}

impl StatisticValue {
    pub fn new(id: StatisticId, value: f64) -> Self {
        Self {
            id,
            value,
            rejection_side: id.rejection_side(),
        }
    }
}

/// Positive-mass support as parallel vectors of scaled times and masses.
fn support(w: &KmWeights) -> (Vec<f64>, Vec<f64>) {
    w.support().map(|(_, y, m)| (y, m)).unzip()
}

/// `Σ_j Σ_k w_j w_k K(y_j, y_k)` for a symmetric kernel.
fn symmetric_double_sum(ys: &[f64], ws: &[f64], kernel: impl Fn(f64, f64) -> f64) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for j in 0..ys.len() {
        let (yj, wj) = (ys[j], ws[j]);
        diag += wj * wj * kernel(yj, yj);
        let mut row = 0.0;
        for k in (j + 1)..ys.len() {
            row += ws[k] * kernel(yj, ys[k]);
        }
        off += wj * row;
    }
    diag + 2.0 * off
}

pub fn ep_statistic(scaled: &ScaledSample, w: &KmWeights) -> StatisticValue {
    let n = scaled.len() as f64;
    let transform: f64 = w.support().map(|(_, y, m)| m * (-y).exp()).sum();
    StatisticValue::new(StatisticId::EP, (48.0 * n).sqrt() * (transform - 0.5))
}

pub fn laplace_l_statistic(scaled: &ScaledSample, w: &KmWeights, a: f64) -> Result<StatisticValue> {
    let id = StatisticId::l(a)?;
    let n = scaled.len() as f64;
    let (ys, ws) = support(w);
    let quad = symmetric_double_sum(&ys, &ws, |yj, yk| {
        let s = yj + yk + a;
        (1.0 + (s + 1.0) * (s + 1.0)) / (s * s * s)
    });
    let cross: f64 = ys
        .iter()
        .zip(&ws)
        .map(|(&y, &m)| {
            let u = y + a;
            m * (1.0 + u) / (u * u)
        })
        .sum();
    Ok(StatisticValue::new(id, n * quad - 2.0 * n * cross + n / a))
}

pub fn laplace_b_statistic(scaled: &ScaledSample, w: &KmWeights, a: f64) -> Result<StatisticValue> {
    let id = StatisticId::b(a)?;
    let n = scaled.len() as f64;
    let (ys, ws) = support(w);
    let quad = symmetric_double_sum(&ys, &ws, |yj, yk| {
        let s = yj + yk + a;
        let s2 = s * s;
        let prod = 2.0 * yj * yk;
        (1.0 - yj) * (1.0 - yk) / s - (yj + yk) / s2 + prod / s2 + prod / (s2 * s)
    });
    Ok(StatisticValue::new(id, n * quad))
}

pub fn cf_h_statistic(scaled: &ScaledSample, w: &KmWeights, a: f64) -> Result<StatisticValue> {
    let id = StatisticId::h(a)?;
    let n = scaled.len() as f64;
    let a2 = a * a;
    let (ys, ws) = support(w);
    let quad = symmetric_double_sum(&ys, &ws, |yj, yk| {
        let d2 = (yj - yk) * (yj - yk);
        let p = yj + yk;
        let p2 = p * p;
        let dm = a2 + d2;
        let pm = a2 + p2;
        1.0 / dm - 1.0 / pm - 4.0 * p / (pm * pm)
            + (2.0 * a2 - 6.0 * d2) / (dm * dm * dm)
            + (2.0 * a2 - 6.0 * p2) / (pm * pm * pm)
    });
    Ok(StatisticValue::new(id, 0.5 * a * n * quad))
}

/// Supremum distance between the product-limit CDF and `1 - e^{-y}`,
/// checked on both sides of every ordered time.
pub fn ks_statistic(_scaled: &ScaledSample, w: &KmWeights) -> StatisticValue {
    let ys = w.ordered_times();
    let jumps = w.jumps();
    let mut sup = 0.0_f64;
    let mut below = 0.0; // F̃ just left of the current tie group
    let mut j = 0;
    while j < ys.len() {
        let y = ys[j];
        let mut at = below;
        let mut k = j;
        while k < ys.len() && ys[k] == y {
            at += jumps[k];
            k += 1;
        }
        let null_cdf = -(-y).exp_m1();
        sup = sup.max(at - null_cdf).max(null_cdf - below);
        below = at;
        j = k;
    }
    StatisticValue::new(StatisticId::KS, sup)
}

/// `n ∫_0^1 (u - F̃(-ln(1-u)))^2 du`, summed exactly over the segments where
/// the transformed product-limit CDF is constant.
pub fn cm_statistic(scaled: &ScaledSample, w: &KmWeights) -> StatisticValue {
    let n = scaled.len() as f64;
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut level = 0.0;
    for (_, y, m) in w.support() {
        let u = -(-y).exp_m1();
        acc += level * (u - prev) * (level - (u + prev));
        prev = u;
        level += m;
    }
    acc += level * (1.0 - prev) * (level - (1.0 + prev));
    StatisticValue::new(StatisticId::CM, n / 3.0 + n * acc)
}

pub fn co_statistic(scaled: &ScaledSample) -> Result<StatisticValue> {
    let ys = scaled.scaled_times();
    let events = scaled.indicators();
    if ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::Degenerate("nonpositive scaled time".into()));
    }
    let mut log_events = 0.0;
    let mut ylogy = 0.0;
    let mut total = 0.0;
    let mut n_events = 0usize;
    for i in tie_order(ys, events) {
        let (y, d) = (ys[i], events[i]);
        let ly = y.ln();
        if d {
            log_events += ly;
            n_events += 1;
        }
        ylogy += y * ly;
        total += y;
    }
    let ne = n_events as f64;
    Ok(StatisticValue::new(
        StatisticId::CO,
        ne + log_events - ne * ylogy / total,
    ))
}

/// Evaluates any statistic from precomputed scaled data and weights.
pub fn evaluate(id: StatisticId, scaled: &ScaledSample, w: &KmWeights) -> Result<StatisticValue> {
    match (id.kind(), id.tuning()) {
        (StatisticKind::KS, _) => Ok(ks_statistic(scaled, w)),
        (StatisticKind::CM, _) => Ok(cm_statistic(scaled, w)),
        (StatisticKind::CO, _) => co_statistic(scaled),
        (StatisticKind::EP, _) => Ok(ep_statistic(scaled, w)),
        (StatisticKind::L, Some(a)) => laplace_l_statistic(scaled, w, a),
        (StatisticKind::B, Some(a)) => laplace_b_statistic(scaled, w, a),
        (StatisticKind::H, Some(a)) => cf_h_statistic(scaled, w, a),
        (kind, None) => Err(Error::param(
            "a",
            format!("{} requires a tuning parameter", kind.name()),
        )),
    }
}

/// Scales the sample once and evaluates every requested statistic.
pub fn evaluate_all(ids: &[StatisticId], sample: &CensoredSample) -> Result<Vec<StatisticValue>> {
    let scaled = sample.scale()?;
    let w = scaled.km_weights();
    ids.iter().map(|&id| evaluate(id, &scaled, &w)).collect()
}
