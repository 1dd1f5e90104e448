//! The partial sums `𝒮_Y` and `𝒜_Y` over a parabolic subgroup and the
//! two-sided comparisons between them.

use serde::Serialize;

use super::SeriesEstimate;
use crate::error::Result;
use crate::space::Space;

/// `𝒮_Y(z, w, R) = Σ_{h ∈ G_Y, d(z, h w) >= R} exp(-s d(z, h w))`, over
/// stabilizer elements with `d(z, h w) <= cutoff`.
pub fn s_series<S: Space>(
    space: &S,
    y: &S::Horoball,
    z: &S::Point,
    w: &S::Point,
    big_r: f64,
    s: f64,
    cutoff: f64,
) -> Result<SeriesEstimate> {
    let shift = space.distance(z, w)?;
    let mut items = Vec::new();
    for (h, _) in space.stabilizer_orbit(y, w, cutoff + shift)? {
        let d = space.distance(z, &space.apply(&h, w))?;
        if d >= big_r && d <= cutoff {
            items.push((d, (-s * d).exp()));
        }
    }
    Ok(SeriesEstimate::from_terms(s, cutoff, items))
}

/// `𝒜_Y(z, R, Δ) = Σ_{n >= R} #A_Y(z, n, Δ) exp(-s n)` over integer steps
/// `n = R, R + 1, ...` up to the cutoff.
pub fn a_series<S: Space>(
    space: &S,
    y: &S::Horoball,
    z: &S::Point,
    big_r: f64,
    width: f64,
    s: f64,
    cutoff: f64,
) -> Result<SeriesEstimate> {
    let dists: Vec<f64> = space.stabilizer_orbit(y, z, cutoff)?.into_iter().map(|(_, d)| d).collect();
    let mut items = Vec::new();
    let mut n = big_r.max(0.0);
    while n <= cutoff + 1e-12 {
        let count = dists.iter().filter(|&&d| d >= n - width && d < n + width).count();
        if count > 0 {
            items.push((n, count as f64 * (-s * n).exp()));
        }
        n += 1.0;
    }
    Ok(SeriesEstimate::from_terms(s, cutoff, items))
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub big_r: f64,
    pub s_value: f64,
    pub a_value: f64,
    /// `None` when either side is an empty tail.
    pub ratio: Option<f64>,
}

/// Shifted-window comparison across a conjugate pair `U = g V`:
/// `𝒜_V(y, R + K, Δ) ≺ 𝒜_U(x, R, Δ) ≺ 𝒜_V(y, R - K, Δ)`.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugateCheck {
    pub k: f64,
    pub rows: Vec<(f64, f64, f64, f64)>,
    /// Smallest constants making both inequalities hold on the grid.
    pub lower_constant: f64,
    pub upper_constant: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConversionReport {
    pub width: f64,
    pub s: f64,
    pub rows: Vec<RatioRow>,
    /// `max(ratio, 1 / ratio)` over rows with both sides nonzero.
    pub two_sided: f64,
    pub ceiling: f64,
    pub within: bool,
    pub conjugate: Option<ConjugateCheck>,
}

/// Conjugate-pair data for the shifted-window comparison.
pub struct ConjugatePair<'a, S: Space> {
    pub u: &'a S::Horoball,
    pub x: &'a S::Point,
    pub v: &'a S::Horoball,
    pub y: &'a S::Point,
    pub k: f64,
}

/// Compares `𝒮_Y(o, o, R - Δ)` with `𝒜_Y(o, R, Δ)` over the grid, `o` on
/// the horosphere of `Y`, and optionally the conjugate-pair comparison.
#[allow(clippy::too_many_arguments)]
pub fn conversion_check<S: Space>(
    space: &S,
    y: &S::Horoball,
    o: &S::Point,
    grid: &[f64],
    width: f64,
    s: f64,
    cutoff: f64,
    ceiling: f64,
    pair: Option<ConjugatePair<'_, S>>,
) -> Result<ConversionReport> {
    let mut rows = Vec::new();
    let mut two_sided = 1.0f64;
    for &r in grid {
        let s_value = s_series(space, y, o, o, r - width, s, cutoff)?.total;
        let a_value = a_series(space, y, o, r, width, s, cutoff)?.total;
        let ratio = (s_value > 0.0 && a_value > 0.0).then(|| s_value / a_value);
        if let Some(q) = ratio {
            two_sided = two_sided.max(q).max(1.0 / q);
        }
        rows.push(RatioRow { big_r: r, s_value, a_value, ratio });
    }
    let conjugate = match pair {
        None => None,
        Some(p) => {
            let mut crow = Vec::new();
            let (mut lower, mut upper) = (0.0f64, 0.0f64);
            for &r in grid {
                let outer = a_series(space, p.v, p.y, r + p.k, width, s, cutoff)?.total;
                let mid = a_series(space, p.u, p.x, r, width, s, cutoff)?.total;
                let inner = a_series(space, p.v, p.y, (r - p.k).max(0.0), width, s, cutoff)?.total;
                if mid > 0.0 {
                    lower = lower.max(outer / mid);
                }
                if inner > 0.0 {
                    upper = upper.max(mid / inner);
                }
                crow.push((r, outer, mid, inner));
            }
            Some(ConjugateCheck {
                k: p.k,
                rows: crow,
                lower_constant: lower,
                upper_constant: upper,
                holds: lower.is_finite() && upper.is_finite() && lower <= ceiling && upper <= ceiling,
            })
        }
    };
    Ok(ConversionReport { width, s, rows, two_sided, ceiling, within: two_sided <= ceiling, conjugate })
}
