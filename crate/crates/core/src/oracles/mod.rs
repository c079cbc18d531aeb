//! Brute-force reference values for the closed-form statistics.
//!
//! Every function here evaluates the *defining* integral (or supremum) of a
//! statistic numerically, directly from the jump masses, and never calls into
//! [`crate::statistics`]. These exist to check the closed forms and are not
//! used on any production path.
//!
//! The characteristic function of the unit exponential is taken as
//! `φ(t) = 1/(1 - it)`. Its product with `φ(-t)` is `1/(1 + t²)`.

pub mod quadrature;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sample::{KmWeights, ScaledSample};

use quadrature::GaussLegendre;

/// Truncation and refinement settings for the half-line integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// `∫_0^∞` is replaced by `∫_0^upper_cutoff`.
    pub upper_cutoff: f64,
    pub panel_count: usize,
    /// Local acceptance tolerance of the adaptive refinement.
    pub relative_tolerance: f64,
}

impl QuadratureSpec {
    /// Cutoff chosen so the `e^{-a t}` weight is below `1e-26` at the cutoff,
    /// far below `relative_tolerance / 10` for any usable tolerance.
    pub fn for_decay(a: f64) -> Self {
        Self {
            upper_cutoff: 60.0 / a,
            panel_count: 96,
            relative_tolerance: 1e-13,
        }
    }

    pub fn with_panels(self, panel_count: usize) -> Self {
        Self {
            panel_count,
            ..self
        }
    }

    /// Tail negligibility: `e^{-a·cutoff} < relative_tolerance / 10`.
    pub fn validate(&self, a: f64) -> Result<()> {
        if self.panel_count == 0 {
            return Err(Error::param("panel_count", "must be positive"));
        }
        if (-a * self.upper_cutoff).exp() >= self.relative_tolerance / 10.0 {
            return Err(Error::param(
                "upper_cutoff",
                format!(
                    "e^(-{a}·{}) is not negligible at tolerance {}",
                    self.upper_cutoff, self.relative_tolerance
                ),
            ));
        }
        Ok(())
    }
}

fn rule() -> GaussLegendre {
    GaussLegendre::new(20)
}

/// Laplace transform of the weighted empirical law, `Σ Δ_j e^{-t Y_j}`.
fn laplace(w: &KmWeights, t: f64) -> f64 {
    w.ordered_times()
        .iter()
        .zip(w.jumps())
        .map(|(y, m)| m * (-t * y).exp())
        .sum()
}

fn laplace_derivative(w: &KmWeights, t: f64) -> f64 {
    -w.ordered_times()
        .iter()
        .zip(w.jumps())
        .map(|(y, m)| m * y * (-t * y).exp())
        .sum::<f64>()
}

fn half_line(spec: QuadratureSpec, a: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    spec.validate(a)?;
    rule().composite(
        &f,
        0.0,
        spec.upper_cutoff,
        spec.panel_count,
        1e-15,
        spec.relative_tolerance,
    )
}

/// `n ∫_0^∞ [ψ̃(t) - 1/(1+t)]² (1+t)² e^{-at} dt`.
pub fn quad_l(scaled: &ScaledSample, w: &KmWeights, a: f64, spec: QuadratureSpec) -> Result<f64> {
    let n = scaled.len() as f64;
    let v = half_line(spec, a, |t| {
        let d = (1.0 + t) * laplace(w, t) - 1.0;
        d * d * (-a * t).exp()
    })?;
    Ok(n * v)
}

/// `n ∫_0^∞ [(1+t) ψ̃'(t) + ψ̃(t)]² e^{-at} dt`.
pub fn quad_b(scaled: &ScaledSample, w: &KmWeights, a: f64, spec: QuadratureSpec) -> Result<f64> {
    let n = scaled.len() as f64;
    let v = half_line(spec, a, |t| {
        let d = (1.0 + t) * laplace_derivative(w, t) + laplace(w, t);
        d * d * (-a * t).exp()
    })?;
    Ok(n * v)
}

/// `n ∫_0^∞ [S(t) - t C(t)]² e^{-at} dt` with `S`, `C` the Δ-weighted sine
/// and cosine sums.
pub fn quad_h(scaled: &ScaledSample, w: &KmWeights, a: f64, spec: QuadratureSpec) -> Result<f64> {
    let n = scaled.len() as f64;
    let v = half_line(spec, a, |t| {
        let (mut s, mut c) = (0.0, 0.0);
        for (y, m) in w.ordered_times().iter().zip(w.jumps()) {
            let (sin, cos) = (t * y).sin_cos();
            s += m * sin;
            c += m * cos;
        }
        let d = s - t * c;
        d * d * (-a * t).exp()
    })?;
    Ok(n * v)
}

/// Result of the characteristic-function integral behind EP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpOracle {
    /// `√(48n)` times the real part of the integral.
    pub value: f64,
    /// Imaginary part of `(1/2π) ∫ [φ̃ - φ] φ(-t) dt` over a symmetric
    /// truncated range; zero in exact arithmetic.
    pub imaginary: f64,
}

/// `√(48n) · (1/2π) ∫_ℝ [φ̃(t) - φ(t)] φ(-t) dt`.
///
/// The `e^{itY}/(1+it)` terms decay only like `1/t`, so the real part of
/// each term is integrated over consecutive half-periods `π/Y` and the
/// alternating partial sums are accelerated by repeated averaging. The
/// `1/(1+t²)` term is integrated after mapping `[0, ∞)` onto `[0, 1)`.
pub fn quad_ep(scaled: &ScaledSample, w: &KmWeights) -> Result<EpOracle> {
    let n = scaled.len() as f64;
    let gl = rule();

    let mut weighted = 0.0;
    for (&y, &m) in w.ordered_times().iter().zip(w.jumps()) {
        if m == 0.0 {
            continue;
        }
        weighted += m * oscillatory_half_line(&gl, y);
    }
    // ∫_0^∞ dt/(1+t²) under t = s/(1-s).
    let base = gl.composite(
        &|s: f64| 1.0 / ((1.0 - s) * (1.0 - s) + s * s),
        0.0,
        1.0,
        16,
        1e-16,
        1e-14,
    )?;
    // Real integrand is even: (1/2π)·2·(...)
    let real = (weighted - base) / PI;

    let reach = 50.0;
    let imaginary = gl.composite(
        &|t: f64| {
            let mut acc = 0.0;
            for (y, m) in w.ordered_times().iter().zip(w.jumps()) {
                let (s, c) = (t * y).sin_cos();
                acc += m * (s - t * c);
            }
            // the φ·φ(-t) term is real
            acc / (1.0 + t * t)
        },
        -reach,
        reach,
        200,
        1e-15,
        1e-13,
    )? / (2.0 * PI);

    Ok(EpOracle {
        value: (48.0 * n).sqrt() * real,
        imaginary,
    })
}

/// `∫_0^∞ (cos(tY) + t sin(tY)) / (1+t²) dt`.
fn oscillatory_half_line(gl: &GaussLegendre, y: f64) -> f64 {
    const PIECES: usize = 64;
    const SKIP: usize = 16;
    let f = |t: f64| {
        let (s, c) = (t * y).sin_cos();
        (c + t * s) / (1.0 + t * t)
    };
    let h = PI / y;
    let mut partial = Vec::with_capacity(PIECES);
    let mut acc = 0.0;
    for k in 0..PIECES {
        let lo = h * k as f64;
        let hi = lo + h;
        // Quarter points plus the dyadic points 1, 2, 4, ... that fall inside,
        // so the O(1)-wide bump near t = 0 is resolved when π/Y is long.
        let mut cuts: Vec<f64> = (0..=4).map(|j| lo + 0.25 * h * j as f64).collect();
        let mut p = 0.125;
        while p < hi {
            if p > lo {
                cuts.push(p);
            }
            p *= 2.0;
        }
        cuts.sort_by(f64::total_cmp);
        acc += cuts
            .windows(2)
            .map(|c| gl.integrate(&f, c[0], c[1]))
            .sum::<f64>();
        partial.push(acc);
    }
    // Repeated averaging of the alternating partial sums.
    let mut seq = partial.split_off(SKIP);
    while seq.len() > 1 {
        seq = seq.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    }
    seq[0]
}

/// Product-limit CDF by direct summation of the masses at or below `y`.
fn brute_cdf(w: &KmWeights, y: f64) -> f64 {
    w.ordered_times()
        .iter()
        .zip(w.jumps())
        .filter(|(t, _)| **t <= y)
        .map(|(_, m)| m)
        .sum()
}

fn brute_cdf_left(w: &KmWeights, y: f64) -> f64 {
    w.ordered_times()
        .iter()
        .zip(w.jumps())
        .filter(|(t, _)| **t < y)
        .map(|(_, m)| m)
        .sum()
}

/// `n ∫_0^1 (u - F̃(-ln(1-u)))² du`, integrated piecewise between the
/// transformed observation times with the CDF evaluated by brute force.
pub fn quad_cm(scaled: &ScaledSample, w: &KmWeights) -> Result<f64> {
    let n = scaled.len() as f64;
    let gl = rule();
    let mut cuts: Vec<f64> = w
        .ordered_times()
        .iter()
        .map(|y| -(-y).exp_m1())
        .collect();
    cuts.insert(0, 0.0);
    cuts.push(1.0);
    cuts.dedup();
    let mut total = 0.0;
    for piece in cuts.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let level = brute_cdf(w, -(-mid).ln_1p());
        total += gl.adaptive(&|u: f64| (u - level) * (u - level), lo, hi, 1e-17, 1e-14)?;
    }
    Ok(n * total)
}

/// Number of grid points used by [`grid_ks`].
pub const KS_GRID_POINTS: usize = 1_000_000;

/// `sup_y |F̃(y) - (1 - e^{-y})|` over a dense grid on `[0, Y_(n) + 10]`,
/// plus both one-sided limits at every observation.
pub fn grid_ks(_scaled: &ScaledSample, w: &KmWeights) -> f64 {
    grid_ks_with(w, KS_GRID_POINTS)
}

pub fn grid_ks_with(w: &KmWeights, points: usize) -> f64 {
    let ys = w.ordered_times();
    let jumps = w.jumps();
    let top = ys.last().copied().unwrap_or(0.0) + 10.0;
    let null = |y: f64| -(-y).exp_m1();

    let mut sup = 0.0_f64;
    let mut next = 0;
    let mut level = 0.0;
    for i in 0..=points {
        let y = top * i as f64 / points as f64;
        while next < ys.len() && ys[next] <= y {
            level += jumps[next];
            next += 1;
        }
        sup = sup.max((level - null(y)).abs());
    }
    for &y in ys {
        sup = sup
            .max((brute_cdf(w, y) - null(y)).abs())
            .max((null(y) - brute_cdf_left(w, y)).abs());
    }
    sup
}
