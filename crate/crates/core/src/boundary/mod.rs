//! Shadows, transition points, cones, Patterson-Sullivan approximants and
//! the audits built on them.

mod audits;

pub use audits::{
    conical_cover_check, parabolic_atom_probe, quasiconformality_audit, sample_band, sample_pairs,
    shadow_lemma_audit, transition_stability_audit, AtomProbe, ConicalCover, QcAudit, QcRow, ShadowAudit, ShadowRow,
    StabilityAudit,
};

use serde::Serialize;

use crate::enumeration::{annulus_range, AnnulusQuery, GrowthKind, GrowthTable, OrbitBall};
use crate::error::{Error, Result};
use crate::space::{PathSample, Space};

/// Parameter of the visual metric `ρ(ξ, ζ) ≈ exp(-a (ξ·ζ)_o)` used in diagnostic printing.
pub const VISUAL_PARAMETER: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionParams {
    pub eps: f64,
    pub big_r: f64,
    /// Shadow and cone radius `r`.
    pub shadow_r: f64,
    /// Annulus width `Δ`.
    pub width: f64,
}

impl Default for TransitionParams {
    fn default() -> Self {
        TransitionParams { eps: 1.0, big_r: 4.0, shadow_r: 3.0, width: 1.0 }
    }
}

impl TransitionParams {
    pub fn validate(&self, step: f64) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("R", self.big_r), ("r", self.shadow_r), ("width", self.width)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Usage(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.big_r <= step {
            return Err(Error::Usage(format!("R = {} must exceed the sampling step {step}", self.big_r)));
        }
        Ok(())
    }
}

/// Is `ξ` in the shadow `Π_r(g o)`? The computed ray is tested against
/// `B(g o, r + slack)`.
pub fn shadow_contains<S: Space>(space: &S, xi: &S::Boundary, g: &S::Element, r: f64) -> Result<bool> {
    let p = space.orbit_point(g);
    Ok(space.ray_distance(xi, &p)? <= r + space.shadow_slack())
}

/// Is `ξ` in the partial shadow: shadowed, with a transition point of
/// `[o, ξ)` in `B(g o, 2R)`?
pub fn partial_shadow_contains<S: Space>(
    space: &S,
    xi: &S::Boundary,
    g: &S::Element,
    params: &TransitionParams,
) -> Result<bool> {
    if !shadow_contains(space, xi, g, params.shadow_r)? {
        return Ok(false);
    }
    let p = space.orbit_point(g);
    space.ray_transition_near(xi, &p, 2.0 * params.big_r, params)
}

/// Flags each sample of `γ`: `v` is deep in `Y` when every sample within arc
/// length `R` of `v` lies in `N_ε(Y)`; a transition point is deep in no `Y`.
/// Without horoballs every point is a transition point.
pub fn transition_points<S: Space>(
    space: &S,
    path: &PathSample<S::Point>,
    params: &TransitionParams,
) -> Result<Vec<(S::Point, bool)>> {
    if space.num_parabolic_classes() == 0 {
        return Ok(path.points.iter().map(|p| (p.clone(), true)).collect());
    }
    let near: Vec<Vec<S::Horoball>> =
        path.points.iter().map(|p| space.horoballs_near(p, params.eps)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(path.len());
    for (i, p) in path.points.iter().enumerate() {
        let li = path.lengths[i];
        let lo = path.lengths.partition_point(|&l| l < li - params.big_r - 1e-12);
        let hi = path.lengths.partition_point(|&l| l <= li + params.big_r + 1e-12);
        let deep = near[i].iter().any(|u| (lo..hi).all(|j| near[j].contains(u)));
        out.push((p.clone(), !deep));
    }
    Ok(out)
}

/// Ball indices of the cone `Ω_r(g o)`.
pub fn cone_indices<S: Space>(space: &S, g: &S::Element, r: f64) -> Result<Vec<usize>> {
    let ball = space.orbit_ball()?;
    let mask = space.cone_mask(ball, &space.orbit_point(g), r)?;
    Ok(mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect())
}

/// Restricts cone indices to the partial cone: `d(o, h o) <= d(o, g o) + 2R`,
/// or a transition point of `[o, h o]` within `2R` of `g o`.
pub fn partial_cone_indices<S: Space>(
    space: &S,
    g: &S::Element,
    cone: &[usize],
    params: &TransitionParams,
) -> Result<Vec<usize>> {
    let ball = space.orbit_ball()?;
    let p = space.orbit_point(g);
    let near_limit = space.distance(space.basepoint(), &p)? + 2.0 * params.big_r;
    let far: Vec<usize> = cone.iter().cloned().filter(|&i| ball.entries[i].dist > near_limit).collect();
    let mask = space.transition_mask(ball, &far, &p, 2.0 * params.big_r, params)?;
    let mut keep: Vec<usize> = cone.iter().cloned().filter(|&i| ball.entries[i].dist <= near_limit).collect();
    keep.extend(far.iter().zip(mask).filter(|(_, m)| *m).map(|(i, _)| *i));
    keep.sort_unstable();
    Ok(keep)
}

/// `Ω_r(g o, n, Δ) = Ω_r(g o) ∩ A(g o, n, Δ)`.
pub fn cone_members<S: Space>(space: &S, g: &S::Element, r: f64, n: f64, width: f64) -> Result<Vec<S::Element>> {
    let range = annulus_range(space, &AnnulusQuery::new(g.clone(), n, width)?)?;
    let ball = space.orbit_ball()?;
    let cone = cone_indices(space, g, r)?;
    Ok(cone.into_iter().filter(|i| range.contains(i)).map(|i| ball.entries[i].element.clone()).collect())
}

/// `Ω_{r,ε,R}(g o, n, Δ)`.
pub fn partial_cone_members<S: Space>(
    space: &S,
    g: &S::Element,
    params: &TransitionParams,
    n: f64,
    width: f64,
) -> Result<Vec<S::Element>> {
    let range = annulus_range(space, &AnnulusQuery::new(g.clone(), n, width)?)?;
    let ball = space.orbit_ball()?;
    let cone: Vec<usize> = cone_indices(space, g, params.shadow_r)?.into_iter().filter(|i| range.contains(i)).collect();
    let partial = partial_cone_indices(space, g, &cone, params)?;
    Ok(partial.into_iter().map(|i| ball.entries[i].element.clone()).collect())
}

/// Counts of `Ω_r(g o, n, Δ)` or `Ω_{r,ε,R}(g o, n, Δ)` over the radii.
pub fn cone_growth<S: Space>(
    space: &S,
    g: &S::Element,
    params: &TransitionParams,
    ns: &[f64],
    delta_hat: f64,
    partial: bool,
) -> Result<GrowthTable> {
    let ranges = ns
        .iter()
        .map(|&n| annulus_range(space, &AnnulusQuery::new(g.clone(), n, params.width)?))
        .collect::<Result<Vec<_>>>()?;
    let lo = ranges.iter().map(|r| r.start).min().unwrap_or(0);
    let hi = ranges.iter().map(|r| r.end).max().unwrap_or(0);
    let mut members: Vec<usize> =
        cone_indices(space, g, params.shadow_r)?.into_iter().filter(|&i| i >= lo && i < hi).collect();
    if partial {
        members = partial_cone_indices(space, g, &members, params)?;
    }
    let counts = ns
        .iter()
        .zip(&ranges)
        .map(|(&n, range)| (n, members.iter().filter(|i| range.contains(i)).count() as u64));
    let kind = if partial { GrowthKind::PartialCone } else { GrowthKind::Cone };
    let mut table = GrowthTable::new(kind, params.width, delta_hat, counts).with_param("r", params.shadow_r);
    if partial {
        table = table.with_param("eps", params.eps).with_param("R", params.big_r);
    }
    Ok(table)
}

/// The approximant `μ^s = Σ_{d(o, g o) >= T} exp(-s d(o, g o)) δ_{g o} / 𝒫_s`
/// over the enumerated ball.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureApproximant {
    pub s: f64,
    pub cutoff_t: f64,
    pub normalization: f64,
}

impl MeasureApproximant {
    /// Rejects `s <= δ̂`.
    pub fn new<S: Space>(space: &S, s: f64, cutoff_t: f64, delta_hat: f64) -> Result<Self> {
        if !(s > delta_hat) {
            return Err(Error::Usage(format!("measure exponent s = {s} must exceed the critical exponent {delta_hat}")));
        }
        if !(cutoff_t >= 0.0) {
            return Err(Error::Usage(format!("cutoff T must be nonnegative, got {cutoff_t}")));
        }
        let ball = space.orbit_ball()?;
        let normalization = ball.entries.iter().map(|e| (-s * e.dist).exp()).sum();
        Ok(MeasureApproximant { s, cutoff_t, normalization })
    }

    pub fn weight_of_dist(&self, d: f64) -> f64 {
        if d >= self.cutoff_t {
            (-self.s * d).exp() / self.normalization
        } else {
            0.0
        }
    }

    /// Total weight of the listed ball indices.
    pub fn weight<E>(&self, ball: &OrbitBall<E>, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices.into_iter().map(|i| self.weight_of_dist(ball.entries[i].dist)).sum()
    }

    /// Weight of the ball entries whose element satisfies `region`.
    pub fn measure<E>(&self, ball: &OrbitBall<E>, region: impl Fn(&E) -> bool) -> f64 {
        ball.entries.iter().filter(|e| region(&e.element)).map(|e| self.weight_of_dist(e.dist)).sum()
    }
}

/// Busemann cocycle `B_ξ(x, y)`; positive when `y` is closer to `ξ`.
pub fn busemann<S: Space>(space: &S, xi: &S::Boundary, x: &S::Point, y: &S::Point) -> Result<f64> {
    space.busemann(xi, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::half_plane::{Ideal, Mat2, IDENTITY, S, T};
    use crate::models::HalfPlaneModel;
    use crate::space::hyperbolic;
    use crate::testing;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn psl() -> &'static HalfPlaneModel {
        static M: OnceLock<HalfPlaneModel> = OnceLock::new();
        M.get_or_init(|| testing::psl(7.0))
    }

    /// Distance from `p` to `[a, b]`, sampling the geodesic as a Euclidean
    /// semicircle or vertical line.
    fn semicircle_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
        let samples = 20_000;
        let point = |t: f64| -> Complex64 {
            if (a.re - b.re).abs() < 1e-12 {
                Complex64::new(a.re, a.im * (b.im / a.im).powf(t))
            } else {
                let c = (b.norm_sqr() - a.norm_sqr()) / (2.0 * (b.re - a.re));
                let rad = (a - c).norm();
                let (ta, tb) = ((a - c).arg(), (b - c).arg());
                Complex64::from_polar(rad, ta + (tb - ta) * t) + c
            }
        };
        (0..=samples).map(|i| hyperbolic::distance(point(i as f64 / samples as f64), p)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cones_match_semicircle_oracle() {
        let m = psl();
        let ball = m.orbit_ball().unwrap();
        let o = *m.basepoint();
        for g in [T, S.mul(&T), T.pow(-2).mul(&S)] {
            let r = 1.0;
            let cone: std::collections::HashSet<usize> = cone_indices(m, &g, r).unwrap().into_iter().collect();
            for (i, e) in ball.entries.iter().enumerate().step_by(7) {
                let d = semicircle_distance(o, e.element.apply(o), g.apply(o));
                if (d - r).abs() > 1e-3 {
                    assert_eq!(cone.contains(&i), d <= r, "{g} / {}", e.element);
                }
            }
        }
    }

    #[test]
    fn tree_cones_are_prefix_sets() {
        let m = testing::free2(6.0);
        let ball = m.orbit_ball().unwrap();
        let g = m.parse_element("a b").unwrap();
        let cone = cone_indices(&m, &g, 0.25).unwrap();
        let prefixed: Vec<usize> = ball
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let spelled = m.alphabet().spell(&e.element.word);
                spelled.len() >= 2 && spelled[..2] == m.alphabet().spell(&g.word)[..]
            })
            .map(|(i, _)| i)
            .collect();
        // the slack widens r by 1/2 + δ̂, which is below one edge on a tree
        assert_eq!(cone, prefixed);
    }

    #[test]
    fn partial_cones_sit_inside_cones() {
        let m = psl();
        let params = TransitionParams::default();
        for g in m.sample_centers() {
            let cone = cone_indices(m, &g, params.shadow_r).unwrap();
            let partial = partial_cone_indices(m, &g, &cone, &params).unwrap();
            assert!(partial.iter().all(|i| cone.binary_search(i).is_ok()));
        }
    }

    #[test]
    fn trees_have_only_transition_points() {
        let m = testing::free2(5.0);
        let path = m.geodesic(m.basepoint(), &m.orbit_point(&m.parse_element("a b a").unwrap()), 1.0).unwrap();
        assert!(transition_points(&m, &path, &TransitionParams::default()).unwrap().iter().all(|(_, t)| *t));
    }

    #[test]
    fn deep_stretch_of_a_vertical_geodesic() {
        let m = psl();
        let params = TransitionParams::default();
        let top = Complex64::new(0.0, 1e6);
        let path = m.geodesic(m.basepoint(), &top, 0.05).unwrap();
        let flags = transition_points(m, &path, &params).unwrap();
        for (i, (_, t)) in flags.iter().enumerate() {
            let l = path.lengths[i];
            // deep in U_∞ once R of the path lies on both sides inside it
            if l > params.big_r + 0.1 && l < path.total_length() - params.big_r - 0.1 {
                assert!(!t, "{l}");
            }
        }
    }

    #[test]
    fn measure_approximant_rules() {
        let m = psl();
        assert!(MeasureApproximant::new(m, 0.9, 2.0, 1.0).is_err());
        let mu = MeasureApproximant::new(m, 1.05, 2.0, 1.0).unwrap();
        let ball = m.orbit_ball().unwrap();
        let total = mu.measure(ball, |_| true);
        assert!(total > 0.0 && total <= 1.0 + 1e-12);
        assert_eq!(mu.weight_of_dist(1.0), 0.0);
        assert_eq!(mu.measure(ball, |g: &Mat2| *g == IDENTITY), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn partial_shadows_sit_inside_shadows(x in -3.0..3.0f64, k in 0usize..3) {
            let m = psl();
            let params = TransitionParams::default();
            let g = m.sample_centers()[k];
            let xi = Ideal(Some(x));
            if partial_shadow_contains(m, &xi, &g, &params).unwrap() {
                prop_assert!(shadow_contains(m, &xi, &g, params.shadow_r).unwrap());
            }
        }

        #[test]
        fn busemann_is_a_cocycle(t in -2.0..2.0f64, p in prop::array::uniform6(0.1..3.0f64)) {
            let m = psl();
            let xi = Ideal(Some(t));
            let (x, y, z) = (Complex64::new(p[0] - 1.5, p[1]), Complex64::new(p[2] - 1.5, p[3]), Complex64::new(p[4] - 1.5, p[5]));
            let sum = busemann(m, &xi, &x, &y).unwrap() + busemann(m, &xi, &y, &z).unwrap();
            prop_assert!((sum - busemann(m, &xi, &x, &z).unwrap()).abs() < 1e-8);
            // horocycles at t: B_t(x, y) = ln(P(y) / P(x)), P the Poisson kernel
            let poisson = |w: Complex64| w.im / (w - t).norm_sqr();
            prop_assert!((busemann(m, &xi, &x, &y).unwrap() - (poisson(y) / poisson(x)).ln()).abs() < 1e-8);
        }
    }
}
