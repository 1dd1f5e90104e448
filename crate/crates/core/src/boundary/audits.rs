//! Ratio audits of the shadow lemmas, quasi-conformality, transition
//! stability and conical shadowing.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{cone_indices, partial_cone_indices, shadow_contains, transition_points, MeasureApproximant, TransitionParams};
use crate::error::{Error, Result};
use crate::space::{triangle_defect, Space};

/// Up to `count` ball elements with `lo <= d(o, g o) <= hi`, chosen by seed
/// and returned in canonical order.
pub fn sample_band<S: Space>(space: &S, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Vec<S::Element>> {
    let ball = space.orbit_ball()?;
    let range = ball.window(lo, f64::from_bits(hi.to_bits() + 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, range.len(), count.min(range.len()));
    let mut out: Vec<S::Element> = picks.into_iter().map(|i| ball.entries[range.start + i].element.clone()).collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowRow {
    pub element: String,
    pub dist: f64,
    /// `μ(Π_r(g o)) exp(s d(o, g o))`.
    pub plain_rho: f64,
    /// The same for the partial shadow.
    pub partial_rho: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowAudit {
    pub s: f64,
    pub cutoff_t: f64,
    pub slack: f64,
    pub rows: Vec<ShadowRow>,
    /// `max ρ / min ρ` over rows with positive weight.
    pub plain_spread: f64,
    pub partial_spread: f64,
    pub partial_le_plain: bool,
    /// Elements whose shadow carried no weight.
    pub flagged: Vec<String>,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values.filter(|v| *v > 0.0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo.is_finite() {
        hi / lo
    } else {
        f64::NAN
    }
}

/// Shadows of orbit points are measured through their cones: the approximant
/// charges orbit points, and `h o` lies under `Π_r(g o)` when `[o, h o]`
/// meets `B(g o, r)`.
pub fn shadow_lemma_audit<S: Space>(
    space: &S,
    sample: &[S::Element],
    params: &TransitionParams,
    measure: &MeasureApproximant,
) -> Result<ShadowAudit> {
    let ball = space.orbit_ball()?;
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for g in sample {
        let dist = space.distance(space.basepoint(), &space.orbit_point(g))?;
        let cone = cone_indices(space, g, params.shadow_r)?;
        let partial = partial_cone_indices(space, g, &cone, params)?;
        let scale = (measure.s * dist).exp();
        let plain_rho = measure.weight(ball, cone.iter().cloned()) * scale;
        let partial_rho = measure.weight(ball, partial.iter().cloned()) * scale;
        if plain_rho == 0.0 {
            flagged.push(g.to_string());
        }
        rows.push(ShadowRow { element: g.to_string(), dist, plain_rho, partial_rho });
    }
    Ok(ShadowAudit {
        s: measure.s,
        cutoff_t: measure.cutoff_t,
        slack: space.shadow_slack(),
        plain_spread: spread(rows.iter().map(|r| r.plain_rho)),
        partial_spread: spread(rows.iter().map(|r| r.partial_rho)),
        partial_le_plain: rows.iter().all(|r| r.partial_rho <= r.plain_rho),
        rows,
        flagged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QcRow {
    pub g: String,
    pub region: String,
    /// `μ(g A) / μ(A)`.
    pub measured: f64,
    /// `exp(-s B_ξ(g⁻¹ o, o))` at the direction `ξ` of the region.
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QcAudit {
    pub rows: Vec<QcRow>,
    pub spread: f64,
    pub flagged: Vec<String>,
}

/// For each `(g, h)`, `A` is the shadow region `Π_r(h o)`. A point `k o` of
/// `A` contributes to `g A` as `g k o`; only enumerated translates count.
pub fn quasiconformality_audit<S: Space>(
    space: &S,
    pairs: &[(S::Element, S::Element)],
    r: f64,
    measure: &MeasureApproximant,
) -> Result<QcAudit> {
    let ball = space.orbit_ball()?;
    let o = space.basepoint();
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for (g, h) in pairs {
        let cone = cone_indices(space, h, r)?;
        let base = measure.weight(ball, cone.iter().cloned());
        let mut moved = 0.0;
        for &i in &cone {
            let d = space.distance(o, &space.orbit_point(&space.compose(g, &ball.entries[i].element)))?;
            if d <= space.truncation() {
                moved += measure.weight_of_dist(d);
            }
        }
        let xi = space.boundary_through(&space.orbit_point(h))?;
        let b = space.busemann(&xi, &space.orbit_point(&space.inverse(g)), o)?;
        let predicted = (-measure.s * b).exp();
        if base == 0.0 || moved == 0.0 {
            flagged.push(format!("{g} on {h}"));
            continue;
        }
        let measured = moved / base;
        rows.push(QcRow { g: g.to_string(), region: h.to_string(), measured, predicted, ratio: measured / predicted });
    }
    let spread = spread(rows.iter().map(|r| r.ratio));
    Ok(QcAudit { rows, spread, flagged })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityAudit {
    pub pairs_used: usize,
    pub skipped: usize,
    /// Max over pairs of the largest distance from a transition point of `α`
    /// to the nearest transition point of `γ`.
    pub d_hat: f64,
    pub per_pair: Vec<f64>,
    /// Max thin-triangle defect of the triangles `(o, α₊, γ₊)`.
    pub defect: f64,
}

/// Geodesics `α = [o, a]`, `γ = [o, c]` for each pair `(a, c)`. Transition
/// points of `α` farther than `ell` from `a` are matched to `γ`. With
/// `ignore_horoballs` every point counts as a transition point.
pub fn transition_stability_audit<S: Space>(
    space: &S,
    pairs: &[(S::Point, S::Point)],
    params: &TransitionParams,
    ell: f64,
    ignore_horoballs: bool,
) -> Result<StabilityAudit> {
    let o = space.basepoint();
    let step = space.default_step();
    let mut per_pair = Vec::new();
    let mut skipped = 0;
    let mut defect = 0.0f64;
    for (a, c) in pairs {
        let alpha = space.geodesic(o, a, step)?;
        let gamma = space.geodesic(o, c, step)?;
        let flags = |path| -> Result<Vec<bool>> {
            if ignore_horoballs {
                Ok(vec![true; crate::space::PathSample::len(path)])
            } else {
                Ok(transition_points(space, path, params)?.into_iter().map(|(_, t)| t).collect())
            }
        };
        let fa = flags(&alpha)?;
        let fg = flags(&gamma)?;
        let total = alpha.total_length();
        let vs: Vec<&S::Point> = alpha
            .points
            .iter()
            .zip(&alpha.lengths)
            .zip(&fa)
            .filter(|((_, l), t)| **t && total - **l > ell)
            .map(|((p, _), _)| p)
            .collect();
        let ws: Vec<&S::Point> = gamma.points.iter().zip(&fg).filter(|(_, t)| **t).map(|(p, _)| p).collect();
        if vs.is_empty() || ws.is_empty() {
            skipped += 1;
            continue;
        }
        let mut worst = 0.0f64;
        for v in vs {
            let mut best = f64::INFINITY;
            for w in &ws {
                best = best.min(space.distance(v, w)?);
            }
            worst = worst.max(best);
        }
        per_pair.push(worst);
        defect = defect.max(triangle_defect(space, o, a, c)?);
    }
    Ok(StabilityAudit {
        pairs_used: per_pair.len(),
        skipped,
        d_hat: per_pair.iter().cloned().fold(0.0, f64::max),
        per_pair,
        defect,
    })
}

/// Up to `count` pairs `(h o, h t o)` with `h` drawn from the band and `t` a
/// generator with `0 < d(o, t o) < r`.
pub fn sample_pairs<S: Space>(
    space: &S,
    band: (f64, f64),
    count: usize,
    r: f64,
    seed: u64,
) -> Result<Vec<(S::Point, S::Point)>> {
    let o = space.basepoint();
    let mut gens = Vec::new();
    for t in space.generators() {
        let d = space.distance(o, &space.orbit_point(&t))?;
        if d > 0.0 && d < r {
            gens.push(t);
        }
    }
    if gens.is_empty() {
        return Err(Error::Usage(format!("no generator moves the basepoint by less than r = {r}")));
    }
    let hs = sample_band(space, band.0, band.1, count, seed)?;
    Ok(hs
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let t = &gens[i % gens.len()];
            (space.orbit_point(h), space.orbit_point(&space.compose(h, t)))
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConicalCover {
    pub direction: String,
    pub parabolic: bool,
    /// `(horizon, #{g : d(o, g o) <= horizon, ξ ∈ Π_r(g o)})`.
    pub counts: Vec<(f64, usize)>,
    pub strictly_increasing: bool,
}

pub fn conical_cover_check<S: Space>(space: &S, xi: &S::Boundary, r: f64, horizons: &[f64]) -> Result<ConicalCover> {
    let ball = space.orbit_ball()?;
    let mut counts = Vec::new();
    for &h in horizons {
        let mut count = 0;
        for e in ball.within(h) {
            if shadow_contains(space, xi, &e.element, r)? {
                count += 1;
            }
        }
        counts.push((h, count));
    }
    Ok(ConicalCover {
        direction: xi.to_string(),
        parabolic: space.is_parabolic_point(xi),
        strictly_increasing: counts.windows(2).all(|w| w[1].1 > w[0].1),
        counts,
    })
}

/// Measures of the shadows `Π_r(x_t)` of points `x_t` at distance `t` along
/// `[o, ξ)`: a shrinking neighborhood basis of `ξ`. A consistency probe for
/// the absence of atoms at parabolic points, not a proof.
#[derive(Clone, Debug, Serialize)]
pub struct AtomProbe {
    pub direction: String,
    pub weights: Vec<(f64, f64)>,
    pub decreasing: bool,
}

pub fn parabolic_atom_probe<S: Space>(
    space: &S,
    xi: &S::Boundary,
    r: f64,
    steps: &[f64],
    measure: &MeasureApproximant,
) -> Result<AtomProbe> {
    let ball = space.orbit_ball()?;
    let mut weights = Vec::new();
    for &t in steps {
        let p = space.ray_point(xi, t)?;
        let mask = space.cone_mask(ball, &p, r)?;
        let w = measure.weight(ball, mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i));
        weights.push((t, w));
    }
    Ok(AtomProbe {
        direction: xi.to_string(),
        decreasing: weights.windows(2).all(|w| w[1].1 < w[0].1),
        weights,
    })
}
