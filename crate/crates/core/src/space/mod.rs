//! Backend-agnostic metric layer.
//!
//! [`Space`] is the contract both model backends implement: a proper geodesic
//! hyperbolic space with a basepoint, an isometric group action and a
//! G-invariant horoball system, all truncated to a fixed radius. The free
//! functions here (Gromov products, thin-triangle estimates, projections) are
//! written once against that trait.

pub mod hyperbolic;

use std::fmt::{Debug, Display};
use std::hash::Hash;

use serde::Serialize;

use crate::boundary::TransitionParams;
use crate::enumeration::{HoroballEntry, OrbitBall};
use crate::error::{Error, Result};

/// Which concrete realization a model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    HalfPlane,
    CuspedCayley,
}

impl Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::HalfPlane => f.write_str("half_plane"),
            Backend::CuspedCayley => f.write_str("cusped_cayley"),
        }
    }
}

/// A sampled path with cumulative arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample<P> {
    pub points: Vec<P>,
    pub lengths: Vec<f64>,
    pub step: f64,
}

impl<P> PathSample<P> {
    pub fn new(points: Vec<P>, lengths: Vec<f64>, step: f64) -> Self {
        debug_assert_eq!(points.len(), lengths.len());
        debug_assert!(lengths.windows(2).all(|w| w[0] <= w[1]));
        PathSample { points, lengths, step }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.last().copied().unwrap_or(0.0)
    }

    /// Index of the sample closest in arc length to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        match self.lengths.binary_search_by(|l| l.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.lengths.len() => self.lengths.len() - 1,
            Err(i) => {
                if t - self.lengths[i - 1] <= self.lengths[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Sampled constants of a built model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConstants {
    /// Largest thin-triangle defect over `triangle_sample` triangles. A lower
    /// bound for the true constant, not a certificate.
    pub delta_hat: f64,
    pub triangle_sample: usize,
    /// Quasiconvexity constant observed for horoballs.
    pub quasiconvexity_eps: f64,
    /// `X \ U` lies in the `M`-neighborhood of the orbit.
    pub cocompactness_m: f64,
}

/// A proper geodesic hyperbolic space with a cusp-uniform group action.
pub trait Space: Send + Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync;
    type Element: Clone + Eq + Hash + Ord + Debug + Display + Send + Sync;
    type Horoball: Clone + Debug + Eq + Hash + Ord + Display + Send + Sync;
    type Boundary: Clone + Debug + Display + Send + Sync;

    fn backend(&self) -> Backend;
    fn basepoint(&self) -> &Self::Point;
    fn truncation(&self) -> f64;
    fn constants(&self) -> &ModelConstants;
    /// Sampling step for geodesics (step/2 is the slack of every neighborhood test).
    fn default_step(&self) -> f64;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> Result<f64>;
    /// One deterministic geodesic from `x` to `y`, sampled at `step`.
    fn geodesic(&self, x: &Self::Point, y: &Self::Point, step: f64) -> Result<PathSample<Self::Point>>;
    /// The point at arc length `t` along the computed geodesic `[x, y]`.
    fn point_along(&self, x: &Self::Point, y: &Self::Point, t: f64) -> Result<Self::Point>;

    fn identity(&self) -> Self::Element;
    fn compose(&self, g: &Self::Element, h: &Self::Element) -> Self::Element;
    fn inverse(&self, g: &Self::Element) -> Self::Element;
    fn apply(&self, g: &Self::Element, x: &Self::Point) -> Self::Point;
    /// Symmetric generating set.
    fn generators(&self) -> Vec<Self::Element>;
    /// Reads an element from its textual form.
    fn parse_element(&self, text: &str) -> Result<Self::Element>;
    /// Small fixed set of cone centers used by the default audits.
    fn sample_centers(&self) -> Vec<Self::Element>;

    fn orbit_point(&self, g: &Self::Element) -> Self::Point {
        self.apply(g, self.basepoint())
    }

    /// All elements with `d(o, g o)` at most the truncation radius, sorted by distance.
    fn orbit_ball(&self) -> Result<&OrbitBall<Self::Element>>;

    fn num_parabolic_classes(&self) -> usize;
    /// The representative horoball `U_k` of parabolic class `k`.
    fn class_horoball(&self, k: usize) -> Self::Horoball;
    fn horoball_class(&self, u: &Self::Horoball) -> usize;
    fn translate_horoball(&self, g: &Self::Element, u: &Self::Horoball) -> Self::Horoball;
    /// Horoballs within truncation of the basepoint, sorted by distance.
    fn horoball_table(&self) -> Result<&[HoroballEntry<Self::Horoball>]>;
    fn horoball_distance(&self, x: &Self::Point, u: &Self::Horoball) -> Result<f64>;
    /// Nearest point of the horosphere `∂U` to `x`.
    fn horoball_foot(&self, x: &Self::Point, u: &Self::Horoball) -> Result<Self::Point>;
    /// Horoballs whose `eps`-neighborhood contains `x`.
    fn horoballs_near(&self, x: &Self::Point, eps: f64) -> Result<Vec<Self::Horoball>>;
    /// Elements `h` of the stabilizer of `u` with `d(v, h v) <= radius`, sorted by distance.
    fn stabilizer_orbit(
        &self,
        u: &Self::Horoball,
        v: &Self::Point,
        radius: f64,
    ) -> Result<Vec<(Self::Element, f64)>>;

    /// Additive slack applied to every shadow and cone radius.
    fn shadow_slack(&self) -> f64;
    /// Distance from `p` to the computed geodesic `[x, y]`.
    fn segment_distance(&self, x: &Self::Point, y: &Self::Point, p: &Self::Point) -> Result<f64>;
    /// For each ball entry `h`: does the computed geodesic `[o, h o]` meet
    /// `B(p, r + slack)`?
    fn cone_mask(&self, ball: &OrbitBall<Self::Element>, p: &Self::Point, r: f64) -> Result<Vec<bool>> {
        let slack = self.shadow_slack();
        ball.entries
            .iter()
            .map(|e| {
                let q = self.orbit_point(&e.element);
                Ok(self.segment_distance(self.basepoint(), &q, p)? <= r + slack)
            })
            .collect()
    }
    /// Does the computed geodesic `[x, y]` contain an `(eps, R)`-transition
    /// point within `radius` of `p`?
    fn transition_near(
        &self,
        x: &Self::Point,
        y: &Self::Point,
        p: &Self::Point,
        radius: f64,
        params: &TransitionParams,
    ) -> Result<bool>;

    /// For each listed ball entry `h`: does `[o, h o]` contain a transition
    /// point within `radius` of `p`?
    fn transition_mask(
        &self,
        ball: &OrbitBall<Self::Element>,
        candidates: &[usize],
        p: &Self::Point,
        radius: f64,
        params: &TransitionParams,
    ) -> Result<Vec<bool>> {
        candidates
            .iter()
            .map(|&i| {
                let q = self.orbit_point(&ball.entries[i].element);
                self.transition_near(self.basepoint(), &q, p, radius, params)
            })
            .collect()
    }

    /// Is `xi` fixed by a parabolic element of the group?
    fn is_parabolic_point(&self, _xi: &Self::Boundary) -> bool {
        false
    }

    /// Distance from `p` to the computed ray `[o, xi)`.
    fn ray_distance(&self, xi: &Self::Boundary, p: &Self::Point) -> Result<f64>;
    /// Does the ray `[o, xi)` contain a transition point within `radius` of `p`?
    fn ray_transition_near(
        &self,
        xi: &Self::Boundary,
        p: &Self::Point,
        radius: f64,
        params: &TransitionParams,
    ) -> Result<bool>;
    /// The point at distance `t` along the ray `[o, xi)`.
    fn ray_point(&self, xi: &Self::Boundary, t: f64) -> Result<Self::Point>;
    /// `B_xi(x, y) = lim d(x, z) - d(y, z)` as `z -> xi`.
    fn busemann(&self, xi: &Self::Boundary, x: &Self::Point, y: &Self::Point) -> Result<f64>;
    /// Endpoint of the geodesic from the basepoint through `p`.
    fn boundary_through(&self, p: &Self::Point) -> Result<Self::Boundary>;
}

/// `(x, y)_z = (d(x, z) + d(y, z) - d(x, y)) / 2`.
pub fn gromov_product<S: Space>(space: &S, x: &S::Point, y: &S::Point, z: &S::Point) -> Result<f64> {
    let dxz = space.distance(x, z)?;
    let dyz = space.distance(y, z)?;
    let dxy = space.distance(x, y)?;
    Ok(((dxz + dyz - dxy) / 2.0).max(0.0))
}

/// Thin-triangle defect of one triangle: the largest distance between
/// congruent points on two sides meeting at a vertex.
pub fn triangle_defect<S: Space>(space: &S, x: &S::Point, y: &S::Point, z: &S::Point) -> Result<f64> {
    let mut worst = 0.0f64;
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y)] {
        let t = gromov_product(space, b, c, a)?;
        let dab = space.distance(a, b)?;
        let dac = space.distance(a, c)?;
        // sweep the shared stretch of both sides
        let stretch = t.min(dab).min(dac);
        let steps = (stretch / space.default_step()).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let s = stretch * i as f64 / steps as f64;
            let p = space.point_along(a, b, s)?;
            let q = space.point_along(a, c, s)?;
            worst = worst.max(space.distance(&p, &q)?);
        }
    }
    Ok(worst)
}

/// Maximum thin-triangle defect over every triple of the sample.
pub fn estimate_hyperbolicity<S: Space>(space: &S, sample: &[S::Point]) -> Result<f64> {
    if sample.len() < 3 {
        return Err(Error::Usage("hyperbolicity sample needs at least 3 points".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..sample.len() {
        for j in i + 1..sample.len() {
            for k in j + 1..sample.len() {
                worst = worst.max(triangle_defect(space, &sample[i], &sample[j], &sample[k])?);
            }
        }
    }
    Ok(worst)
}

/// Maximum defect over an explicit list of triangles.
pub fn triangles_delta<S: Space>(space: &S, triangles: &[[S::Point; 3]]) -> Result<f64> {
    triangles.iter().try_fold(0.0f64, |acc, [x, y, z]| Ok(acc.max(triangle_defect(space, x, y, z)?)))
}

/// Target of a projection.
pub enum ProjectionTarget<'a, S: Space> {
    Horoball(&'a S::Horoball),
    Points(&'a [S::Point]),
}

/// Nearest point of the target to `x`. Point-set ties go to the earliest
/// listed point; callers that want a canonical rule pass sorted sets.
pub fn project<S: Space>(space: &S, x: &S::Point, target: ProjectionTarget<'_, S>) -> Result<S::Point> {
    match target {
        ProjectionTarget::Horoball(u) => space.horoball_foot(x, u),
        ProjectionTarget::Points(points) => {
            let mut best: Option<(f64, &S::Point)> = None;
            for p in points {
                let d = space.distance(x, p)?;
                if best.map_or(true, |(bd, _)| d < bd - 1e-12) {
                    best = Some((d, p));
                }
            }
            best.map(|(_, p)| p.clone())
                .ok_or_else(|| Error::DomainTruncation("projection onto an empty set".into()))
        }
    }
}

/// `(d(x, U), d(x, U) <= eps)`.
pub fn dist_to_neighborhood<S: Space>(space: &S, x: &S::Point, u: &S::Horoball, eps: f64) -> Result<(f64, bool)> {
    let d = space.horoball_distance(x, u)?;
    Ok((d, d <= eps))
}
